#include "stnhcl/data_synth.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "stnhcl/error.hpp"
#include "stnhcl/image_io.hpp"

namespace stnhcl::synth {

using numeric::Tensor;

namespace {

// Portable uniform draw in [lo, hi) from the engine's raw output.
double uniform(std::mt19937_64& rng, double lo, double hi) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

Tensor<float> render_mask(const TissueLayout& layout) {
    const std::size_t n = layout.size;
    Tensor<float> mask({n, n});
    for (std::size_t y = 0; y < n; ++y)
        for (std::size_t x = 0; x < n; ++x)
            for (const auto& b : layout.blobs)
                if (layout.inside(b, static_cast<double>(x) + 0.5, static_cast<double>(y) + 0.5)) {
                    mask.at(y, x) = 1.0f;
                    break;
                }
    return mask;
}

}  // namespace

std::string domain_name(Domain d) {
    switch (d) {
        case Domain::he: return "he";
        case Domain::mas: return "mas";
        case Domain::pas: return "pas";
        case Domain::pasm: return "pasm";
    }
    return "?";
}

Domain parse_domain(const std::string& name) {
    for (auto d : {Domain::he, Domain::mas, Domain::pas, Domain::pasm})
        if (domain_name(d) == name) return d;
    throw ConfigError("unknown domain '" + name + "' (expected he, mas, pas or pasm)");
}

std::vector<Domain> parse_domains(const std::string& list) {
    std::vector<Domain> out;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        auto d = parse_domain(item);
        for (auto seen : out)
            if (seen == d) throw ConfigError("domain '" + item + "' listed twice");
        out.push_back(d);
    }
    if (out.empty()) throw ConfigError("empty domain list");
    return out;
}

bool TissueLayout::inside(const Blob& b, double x, double y) const {
    const double dx = x - b.cx, dy = y - b.cy;
    const double c = std::cos(b.angle), s = std::sin(b.angle);
    const double u = (c * dx + s * dy) / b.ax;
    const double v = (-s * dx + c * dy) / b.ay;
    return u * u + v * v <= 1.0;
}

TissueLayout make_layout(std::uint64_t seed, std::size_t size) {
    if (size < 32) throw ConfigError("synthetic images need size >= 32");
    std::mt19937_64 rng(seed);
    const double n = static_cast<double>(size);
    for (int attempt = 0; attempt < 10000; ++attempt) {
        TissueLayout layout;
        layout.seed = seed;
        layout.size = size;
        layout.background = uniform(rng, 0.93, 0.97);
        const int blobs = 2 + static_cast<int>(uniform(rng, 0.0, 3.0));
        for (int i = 0; i < blobs; ++i) {
            Blob b;
            b.ax = uniform(rng, 0.12, 0.3) * n;
            b.ay = uniform(rng, 0.12, 0.3) * n;
            b.angle = uniform(rng, 0.0, std::numbers::pi);
            const double c = std::cos(b.angle), s = std::sin(b.angle);
            // Half extents of the rotated ellipse's bounding box, plus one pixel of margin.
            const double hx = std::sqrt(b.ax * b.ax * c * c + b.ay * b.ay * s * s) + 1.0;
            const double hy = std::sqrt(b.ax * b.ax * s * s + b.ay * b.ay * c * c) + 1.0;
            b.cx = uniform(rng, hx, n - hx);
            b.cy = uniform(rng, hy, n - hy);
            b.phase = uniform(rng, 0.0, 2.0 * std::numbers::pi);
            const double wavelength = uniform(rng, 0.25, 0.45) * n;
            const double dir = uniform(rng, 0.0, 2.0 * std::numbers::pi);
            b.freq_x = 2.0 * std::numbers::pi / wavelength * std::cos(dir);
            b.freq_y = 2.0 * std::numbers::pi / wavelength * std::sin(dir);
            layout.blobs.push_back(b);
        }
        const double cov = coverage(render_mask(layout));
        if (cov >= kMinCoverage && cov <= kMaxCoverage) return layout;
    }
    throw ContractError("could not draw a layout within the coverage bounds");
}

StainPalette palette(Domain d) {
    switch (d) {
        case Domain::he: return {d, {0.85f, 0.45f, 0.65f}, {0.45f, 0.25f, 0.60f}, 0.25f};
        case Domain::mas: return {d, {0.25f, 0.35f, 0.75f}, {0.75f, 0.25f, 0.30f}, 0.25f};
        case Domain::pas: return {d, {0.75f, 0.25f, 0.65f}, {0.90f, 0.55f, 0.65f}, 0.25f};
        case Domain::pasm: return {d, {0.12f, 0.12f, 0.12f}, {0.50f, 0.50f, 0.50f}, 0.25f};
    }
    throw ConfigError("unknown domain");
}

Sample synth_image(const TissueLayout& layout, const StainPalette& pal) {
    const std::size_t n = layout.size;
    if (n < 32) throw ConfigError("synthetic images need size >= 32");
    Sample out{Tensor<float>({3, n, n}), Tensor<float>({n, n})};
    const auto bg = static_cast<float>(layout.background);
    for (std::size_t y = 0; y < n; ++y)
        for (std::size_t x = 0; x < n; ++x) {
            const double px = static_cast<double>(x) + 0.5, py = static_cast<double>(y) + 0.5;
            const Blob* hit = nullptr;
            for (const auto& b : layout.blobs)
                if (layout.inside(b, px, py)) hit = &b;  // later blobs paint over earlier ones
            if (hit == nullptr) {
                for (std::size_t c = 0; c < 3; ++c) out.image.at(c, y, x) = bg;
                continue;
            }
            out.mask.at(y, x) = 1.0f;
            const double t = 0.5 + pal.contrast * std::sin(hit->freq_x * px + hit->freq_y * py + hit->phase);
            for (std::size_t c = 0; c < 3; ++c)
                out.image.at(c, y, x) =
                    static_cast<float>((1.0 - t) * pal.primary[c] + t * pal.secondary[c]);
        }
    return out;
}

double coverage(const Tensor<float>& mask) {
    double s = 0;
    for (auto v : mask.data()) s += v;
    return mask.numel() == 0 ? 0.0 : s / static_cast<double>(mask.numel());
}

std::filesystem::path Manifest::mask_path(const ManifestEntry& e) const {
    auto p = root / e.path;
    p.replace_filename(p.stem().string() + "_mask.pgm");
    return p;
}

std::uint64_t sample_seed(std::uint64_t seed, std::size_t index) {
    return splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(index));
}

Manifest make_dataset(std::size_t n, const std::vector<Domain>& domains, std::uint64_t seed,
                      const std::filesystem::path& out_dir, std::size_t size) {
    if (n < 1) throw ConfigError("dataset needs n >= 1");
    if (domains.empty()) throw ConfigError("dataset needs at least one domain");
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) throw IoError("cannot create '" + out_dir.string() + "': " + ec.message());

    Manifest manifest{out_dir, {}};
    std::ostringstream tsv;
    for (std::size_t i = 0; i < n; ++i) {
        const auto s = sample_seed(seed, i);
        const auto layout = make_layout(s, size);
        for (auto d : domains) {
            char name[64];
            std::snprintf(name, sizeof name, "%s_%05zu", domain_name(d).c_str(), i);
            const auto sample = synth_image(layout, palette(d));
            io::write_ppm(out_dir / (std::string(name) + ".ppm"), sample.image);
            io::write_pgm(out_dir / (std::string(name) + "_mask.pgm"), sample.mask);
            manifest.entries.push_back({std::string(name) + ".ppm", d, s});
            tsv << name << ".ppm\t" << domain_name(d) << '\t' << s << '\n';
        }
    }
    io::write_file(out_dir / kManifestName, tsv.str());
    return manifest;
}

Manifest read_manifest(const std::filesystem::path& manifest_or_dir) {
    auto path = manifest_or_dir;
    if (std::filesystem::is_directory(path)) path /= kManifestName;
    std::istringstream in(io::read_file(path));
    Manifest m{path.parent_path(), {}};
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream fields(line);
        std::string p, d, s;
        if (!std::getline(fields, p, '\t') || !std::getline(fields, d, '\t') || !std::getline(fields, s)) {
            throw FormatError(path.string() + ":" + std::to_string(lineno) + ": expected path<TAB>domain<TAB>seed");
        }
        std::uint64_t seed = 0;
        try {
            std::size_t used = 0;
            seed = std::stoull(s, &used);
            if (used != s.size()) throw std::invalid_argument(s);
        } catch (const std::exception&) {
            throw FormatError(path.string() + ":" + std::to_string(lineno) + ": bad seed '" + s + "'");
        }
        m.entries.push_back({p, parse_domain(d), seed});
    }
    if (m.entries.empty()) throw FormatError("manifest '" + path.string() + "' has no entries");
    return m;
}

const std::vector<Sample>& Dataset::of(Domain d) const {
    auto it = samples.find(d);
    if (it == samples.end() || it->second.empty())
        throw ConfigError("dataset has no images for domain '" + domain_name(d) + "'");
    return it->second;
}

std::size_t Dataset::image_size() const {
    if (samples.empty()) throw ContractError("empty dataset");
    return samples.begin()->second.front().image.dim(1);
}

Dataset load_dataset(const Manifest& manifest) {
    Dataset ds;
    std::size_t size = 0;
    for (const auto& e : manifest.entries) {
        Sample s{io::read_ppm(manifest.image_path(e)), io::read_pgm(manifest.mask_path(e))};
        if (s.image.dim(1) != s.image.dim(2)) throw FormatError(e.path + ": images must be square");
        if (size == 0) size = s.image.dim(1);
        if (s.image.dim(1) != size) throw FormatError(e.path + ": all images must share one size");
        if (s.mask.dim(0) != size || s.mask.dim(1) != size) throw FormatError(e.path + ": mask size mismatch");
        ds.samples[e.domain].push_back(std::move(s));
    }
    return ds;
}

}  // namespace stnhcl::synth
