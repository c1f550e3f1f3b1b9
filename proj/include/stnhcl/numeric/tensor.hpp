#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "stnhcl/error.hpp"

namespace stnhcl::numeric {

using Shape = std::vector<std::size_t>;

enum class DType { f32, f64 };

template <class T>
constexpr DType dtype_of() {
    static_assert(std::is_same_v<T, float> || std::is_same_v<T, double>,
                  "tensors hold float or double");
    return std::is_same_v<T, float> ? DType::f32 : DType::f64;
}

// Number of elements described by `shape`; the empty shape is a scalar (1).
std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Dense row-major array. Value type: copying copies the data.
template <class T>
class Tensor {
public:
    using value_type = T;

    Tensor() : shape_{0} {}
    explicit Tensor(Shape shape, T fill = T(0));
    Tensor(Shape shape, std::vector<T> data);

    static Tensor scalar(T value) { return Tensor(Shape{}, std::vector<T>{value}); }
    static Tensor zeros(Shape shape) { return Tensor(std::move(shape), T(0)); }
    static Tensor ones(Shape shape) { return Tensor(std::move(shape), T(1)); }
    static Tensor eye(std::size_t n);
    static Tensor uniform(Shape shape, std::mt19937_64& rng, double lo, double hi);
    static Tensor from_rows(std::initializer_list<std::initializer_list<T>> rows);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t axis) const;
    std::size_t numel() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }
    static constexpr DType dtype() { return dtype_of<T>(); }

    std::span<T> data() noexcept { return data_; }
    std::span<const T> data() const noexcept { return data_; }
    const std::vector<T>& vec() const noexcept { return data_; }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    T& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
    const T& at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
    T& at(std::size_t c, std::size_t i, std::size_t j) {
        return data_[(c * shape_[1] + i) * shape_[2] + j];
    }
    const T& at(std::size_t c, std::size_t i, std::size_t j) const {
        return data_[(c * shape_[1] + i) * shape_[2] + j];
    }

    T item() const;

    bool requires_grad() const noexcept { return requires_grad_; }
    Tensor& set_requires_grad(bool flag = true) noexcept {
        requires_grad_ = flag;
        return *this;
    }

    void fill(T value);
    Tensor reshaped(Shape shape) const;

    template <class U>
    Tensor<U> cast() const {
        std::vector<U> out(data_.begin(), data_.end());
        return Tensor<U>(shape_, std::move(out));
    }

    bool all_finite() const;

    friend bool operator==(const Tensor& a, const Tensor& b) {
        return a.shape_ == b.shape_ && a.data_ == b.data_;
    }

private:
    Shape shape_;
    std::vector<T> data_;
    bool requires_grad_ = false;
};

extern template class Tensor<float>;
extern template class Tensor<double>;

// Largest absolute elementwise difference; shapes must agree.
template <class T>
double max_abs_diff(const Tensor<T>& a, const Tensor<T>& b);

}  // namespace stnhcl::numeric
