#pragma once

#include <filesystem>
#include <string>

#include "stnhcl/numeric/tensor.hpp"

// Binary netpbm I/O. Colour images are [3, h, w] tensors with values in
// [0, 1]; masks and grey images are [h, w]. Values are quantised to 8 bits as
// round(255 * clamp(v, 0, 1)).
namespace stnhcl::io {

std::string encode_ppm(const numeric::Tensor<float>& rgb);
std::string encode_pgm(const numeric::Tensor<float>& grey);
numeric::Tensor<float> decode_ppm(const std::string& bytes);
numeric::Tensor<float> decode_pgm(const std::string& bytes);

void write_ppm(const std::filesystem::path& path, const numeric::Tensor<float>& rgb);
void write_pgm(const std::filesystem::path& path, const numeric::Tensor<float>& grey);
numeric::Tensor<float> read_ppm(const std::filesystem::path& path);
numeric::Tensor<float> read_pgm(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, const std::string& bytes);

}  // namespace stnhcl::io
