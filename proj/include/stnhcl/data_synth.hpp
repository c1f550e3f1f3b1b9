#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "stnhcl/numeric/tensor.hpp"

// Procedural "stained tissue" images. A layout fixes the geometry (elliptical
// tissue blobs on a white background); a palette fixes the colours. Rendering
// one layout under several palettes gives pixel-aligned multi-domain samples.
namespace stnhcl::synth {

enum class Domain { he, mas, pas, pasm };

std::string domain_name(Domain d);
Domain parse_domain(const std::string& name);
// Comma-separated list, e.g. "he,mas,pas"; duplicates rejected.
std::vector<Domain> parse_domains(const std::string& list);

struct Blob {
    double cx = 0, cy = 0;  // centre in pixels
    double ax = 0, ay = 0;  // semi-axes in pixels
    double angle = 0;       // radians
    double phase = 0;       // texture phase
    double freq_x = 0, freq_y = 0;  // texture angular frequencies (rad / pixel)
};

struct TissueLayout {
    std::uint64_t seed = 0;
    std::size_t size = 0;
    std::vector<Blob> blobs;
    double background = 0.95;

    bool inside(const Blob& b, double x, double y) const;
};

inline constexpr double kMinCoverage = 0.2;
inline constexpr double kMaxCoverage = 0.7;

// Deterministic per (seed, size); every blob lies fully inside the canvas and
// the tissue covers between 20% and 70% of the pixels. size >= 32.
TissueLayout make_layout(std::uint64_t seed, std::size_t size);

struct StainPalette {
    Domain domain = Domain::he;
    std::array<float, 3> primary{};
    std::array<float, 3> secondary{};
    float contrast = 0.25f;  // texture mixing amplitude
};

StainPalette palette(Domain d);

struct Sample {
    numeric::Tensor<float> image;  // [3, n, n] in [0, 1]
    numeric::Tensor<float> mask;   // [n, n], 1 on tissue
};

Sample synth_image(const TissueLayout& layout, const StainPalette& palette);
double coverage(const numeric::Tensor<float>& mask);

struct ManifestEntry {
    std::string path;  // relative to the manifest directory
    Domain domain = Domain::he;
    std::uint64_t seed = 0;
};

struct Manifest {
    std::filesystem::path root;
    std::vector<ManifestEntry> entries;

    std::filesystem::path image_path(const ManifestEntry& e) const { return root / e.path; }
    std::filesystem::path mask_path(const ManifestEntry& e) const;
};

inline constexpr const char* kManifestName = "manifest.tsv";

// Layout seed of sample `index` in a dataset generated from `seed`.
std::uint64_t sample_seed(std::uint64_t seed, std::size_t index);

// Writes <domain>_<index>.ppm and <domain>_<index>_mask.pgm for every sample
// and domain plus manifest.tsv (path, domain, seed; tab separated).
Manifest make_dataset(std::size_t n, const std::vector<Domain>& domains, std::uint64_t seed,
                      const std::filesystem::path& out_dir, std::size_t size = 64);

Manifest read_manifest(const std::filesystem::path& manifest_or_dir);

/// Images and masks of one manifest, grouped by domain in manifest order.
struct Dataset {
    std::map<Domain, std::vector<Sample>> samples;

    const std::vector<Sample>& of(Domain d) const;
    std::size_t image_size() const;
};

Dataset load_dataset(const Manifest& manifest);

}  // namespace stnhcl::synth
