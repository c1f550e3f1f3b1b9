#include "stnhcl/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "stnhcl/error.hpp"

namespace stnhcl::io {

using numeric::Tensor;

namespace {

unsigned char quantise(float v) {
    const float c = std::clamp(v, 0.0f, 1.0f);
    return static_cast<unsigned char>(std::lround(c * 255.0f));
}

std::string header(const char* magic, std::size_t w, std::size_t h) {
    return std::string(magic) + "\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
}

struct Netpbm {
    std::size_t width = 0, height = 0;
    std::size_t offset = 0;  // first payload byte
};

// Parses "Px <ws> w <ws> h <ws> maxval <single ws>", skipping # comments.
Netpbm parse_header(const std::string& bytes, const char* magic) {
    if (bytes.size() < 2 || bytes.compare(0, 2, magic) != 0)
        throw FormatError(std::string("not a binary ") + magic + " image");
    std::size_t pos = 2;
    auto next_number = [&]() {
        for (;;) {
            while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) ++pos;
            if (pos < bytes.size() && bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
                continue;
            }
            break;
        }
        std::size_t start = pos;
        while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) ++pos;
        if (start == pos) throw FormatError("malformed netpbm header");
        return std::stoul(bytes.substr(start, pos - start));
    };
    Netpbm out;
    out.width = next_number();
    out.height = next_number();
    const auto maxval = next_number();
    if (maxval != 255) throw FormatError("only 8-bit netpbm images are supported");
    if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos])))
        throw FormatError("malformed netpbm header");
    out.offset = pos + 1;
    return out;
}

}  // namespace

std::string encode_ppm(const Tensor<float>& rgb) {
    if (rgb.rank() != 3 || rgb.dim(0) != 3) throw DimensionError("PPM needs a [3, h, w] image");
    const std::size_t h = rgb.dim(1), w = rgb.dim(2);
    std::string out = header("P6", w, h);
    out.reserve(out.size() + 3 * h * w);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t c = 0; c < 3; ++c) out.push_back(static_cast<char>(quantise(rgb.at(c, y, x))));
    return out;
}

std::string encode_pgm(const Tensor<float>& grey) {
    if (grey.rank() != 2) throw DimensionError("PGM needs an [h, w] image");
    const std::size_t h = grey.dim(0), w = grey.dim(1);
    std::string out = header("P5", w, h);
    for (auto v : grey.data()) out.push_back(static_cast<char>(quantise(v)));
    return out;
}

Tensor<float> decode_ppm(const std::string& bytes) {
    const auto hd = parse_header(bytes, "P6");
    if (bytes.size() - hd.offset != 3 * hd.width * hd.height) throw FormatError("PPM payload size mismatch");
    Tensor<float> img({3, hd.height, hd.width});
    std::size_t p = hd.offset;
    for (std::size_t y = 0; y < hd.height; ++y)
        for (std::size_t x = 0; x < hd.width; ++x)
            for (std::size_t c = 0; c < 3; ++c)
                img.at(c, y, x) = static_cast<float>(static_cast<unsigned char>(bytes[p++])) / 255.0f;
    return img;
}

Tensor<float> decode_pgm(const std::string& bytes) {
    const auto hd = parse_header(bytes, "P5");
    if (bytes.size() - hd.offset != hd.width * hd.height) throw FormatError("PGM payload size mismatch");
    Tensor<float> img({hd.height, hd.width});
    for (std::size_t i = 0; i < img.numel(); ++i)
        img[i] = static_cast<float>(static_cast<unsigned char>(bytes[hd.offset + i])) / 255.0f;
    return img;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write to '" + path.string() + "' failed");
}

void write_ppm(const std::filesystem::path& path, const Tensor<float>& rgb) { write_file(path, encode_ppm(rgb)); }
void write_pgm(const std::filesystem::path& path, const Tensor<float>& grey) { write_file(path, encode_pgm(grey)); }
Tensor<float> read_ppm(const std::filesystem::path& path) { return decode_ppm(read_file(path)); }
Tensor<float> read_pgm(const std::filesystem::path& path) { return decode_pgm(read_file(path)); }

}  // namespace stnhcl::io
