#include "stnhcl/checkpoint.hpp"

#include <bit>
#include <cstring>

#include "stnhcl/image_io.hpp"

namespace stnhcl::checkpoint {

namespace {

constexpr char kMagic[4] = {'S', 'T', 'N', 'H'};
constexpr std::uint32_t kMaxRank = 8;

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

class Reader {
public:
    explicit Reader(const std::string& bytes) : bytes_(bytes) {}

    std::uint32_t u32(const char* what) {
        need(4, what);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_++])) << (8 * i);
        return v;
    }

    std::string raw(std::size_t n, const char* what) {
        need(n, what);
        std::string s = bytes_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    bool done() const { return pos_ == bytes_.size(); }

private:
    void need(std::size_t n, const char* what) {
        if (bytes_.size() - pos_ < n) throw FormatError(std::string("checkpoint truncated while reading ") + what);
    }

    const std::string& bytes_;
    std::size_t pos_ = 0;
};

}  // namespace

std::string encode(const ParamStore<float>& params) {
    std::string out(kMagic, 4);
    put_u32(out, kVersion);
    put_u32(out, static_cast<std::uint32_t>(params.size()));
    for (const auto& [name, t] : params) {
        put_u32(out, static_cast<std::uint32_t>(name.size()));
        out += name;
        put_u32(out, static_cast<std::uint32_t>(t.rank()));
        for (auto d : t.shape()) put_u32(out, static_cast<std::uint32_t>(d));
        for (float v : t.data()) put_u32(out, std::bit_cast<std::uint32_t>(v));
    }
    return out;
}

ParamStore<float> decode(const std::string& bytes) {
    Reader r(bytes);
    if (r.raw(4, "magic") != std::string(kMagic, 4)) throw FormatError("not a checkpoint (bad magic)");
    const auto version = r.u32("version");
    if (version != kVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
    const auto count = r.u32("entry count");
    ParamStore<float> params;
    for (std::uint32_t e = 0; e < count; ++e) {
        const auto len = r.u32("name length");
        auto name = r.raw(len, "name");
        const auto rank = r.u32("rank");
        if (rank > kMaxRank) throw FormatError("checkpoint entry '" + name + "' has implausible rank");
        numeric::Shape shape;
        std::uint64_t numel = 1;
        for (std::uint32_t i = 0; i < rank; ++i) {
            shape.push_back(r.u32("extent"));
            numel *= shape.back();
            if (numel > bytes.size()) throw FormatError("checkpoint entry '" + name + "' larger than the file");
        }
        std::vector<float> data(static_cast<std::size_t>(numel));
        for (auto& v : data) v = std::bit_cast<float>(r.u32("payload"));
        if (!params.emplace(name, numeric::Tensor<float>(shape, std::move(data))).second)
            throw FormatError("duplicate checkpoint entry '" + name + "'");
    }
    if (!r.done()) throw FormatError("trailing bytes after the last checkpoint entry");
    return params;
}

void save(const std::filesystem::path& path, const ParamStore<float>& params) { io::write_file(path, encode(params)); }

ParamStore<float> load(const std::filesystem::path& path) { return decode(io::read_file(path)); }

}  // namespace stnhcl::checkpoint
