#include "stnhcl/config.hpp"

#include <algorithm>
#include <charconv>
#include <functional>
#include <sstream>

#include "stnhcl/image_io.hpp"

namespace stnhcl {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::uint64_t parse_u64(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size())
        throw ConfigError("'" + key + "' expects a non-negative integer, got '" + v + "'");
    return out;
}

double parse_double(const std::string& key, const std::string& v) {
    double out = 0;
    auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size())
        throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
    return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("'" + key + "' expects true or false, got '" + v + "'");
}

template <class E>
E parse_enum(const std::string& key, const std::string& v, std::initializer_list<std::pair<const char*, E>> names) {
    for (const auto& [n, e] : names)
        if (v == n) return e;
    std::string options;
    for (const auto& [n, e] : names) options += (options.empty() ? "" : ", ") + std::string(n);
    throw ConfigError("'" + key + "' must be one of " + options + ", got '" + v + "'");
}

template <class E>
std::string enum_name(E value, std::initializer_list<std::pair<const char*, E>> names) {
    for (const auto& [n, e] : names)
        if (e == value) return n;
    return "?";
}

using weighting::HeatmapMode;
using weighting::SimilarityDomain;
using weighting::Strategy;

const std::initializer_list<std::pair<const char*, SimilarityDomain>> kDomainNames = {
    {"cosine", SimilarityDomain::cosine}, {"logit", SimilarityDomain::logit}};
const std::initializer_list<std::pair<const char*, Strategy>> kStrategyNames = {
    {"dual_normal", Strategy::dual_normal},
    {"monce_hard", Strategy::monce_hard},
    {"monce_easy", Strategy::monce_easy},
    {"uniform", Strategy::uniform}};
const std::initializer_list<std::pair<const char*, HeatmapMode>> kHeatmapNames = {
    {"penultimate", HeatmapMode::penultimate}, {"output", HeatmapMode::output}};
const std::initializer_list<std::pair<const char*, hypergraph::Activation>> kActivationNames = {
    {"leaky_relu", hypergraph::Activation::leaky_relu}, {"identity", hypergraph::Activation::identity}};
const std::initializer_list<std::pair<const char*, losses::AdvMode>> kAdvNames = {
    {"standard", losses::AdvMode::standard}, {"verbatim", losses::AdvMode::verbatim}};

struct Field {
    const char* key;
    std::function<std::string()> get;
    std::function<void(const std::string&)> set;
};

std::vector<Field> fields(RunConfig& c) {
    std::vector<Field> f;
    auto str = [&](const char* k, std::string& v) {
        f.push_back({k, [&v] { return v; }, [&v](const std::string& s) { v = s; }});
    };
    auto size = [&](const char* k, std::size_t& v) {
        f.push_back({k, [&v] { return std::to_string(v); },
                     [&v, k](const std::string& s) { v = static_cast<std::size_t>(parse_u64(k, s)); }});
    };
    auto real = [&](const char* k, double& v) {
        f.push_back({k, [&v] { return fmt_double(v); }, [&v, k](const std::string& s) { v = parse_double(k, s); }});
    };
    auto flag = [&](const char* k, bool& v) {
        f.push_back({k, [&v] { return std::string(v ? "true" : "false"); },
                     [&v, k](const std::string& s) { v = parse_bool(k, s); }});
    };
    auto choice = [&]<class E>(const char* k, E& v, std::initializer_list<std::pair<const char*, E>> names) {
        f.push_back({k, [&v, names] { return enum_name(v, names); },
                     [&v, k, names](const std::string& s) { v = parse_enum(k, s, names); }});
    };

    str("data", c.data);
    str("eval_data", c.eval_data);
    size("eval_count", c.eval_count);
    size("image_size", c.image_size);
    f.push_back({"domains",
                 [&c] {
                     std::string s;
                     for (auto d : c.domains) s += (s.empty() ? "" : ",") + synth::domain_name(d);
                     return s;
                 },
                 [&c](const std::string& s) { c.domains = synth::parse_domains(s); }});
    f.push_back({"source", [&c] { return synth::domain_name(c.source); },
                 [&c](const std::string& s) { c.source = synth::parse_domain(s); }});
    size("iterations", c.iterations);
    size("checkpoint_every", c.checkpoint_every);
    size("css_probe_every", c.css_probe_every);
    f.push_back({"seed", [&c] { return std::to_string(c.seed); },
                 [&c](const std::string& s) { c.seed = parse_u64("seed", s); }});
    str("out", c.out);
    real("lr_g", c.lr_g);
    real("lr_d", c.lr_d);
    real("beta1", c.beta1);
    real("beta2", c.beta2);
    real("lambda1", c.lambda1);
    real("lambda2", c.lambda2);
    choice("adv", c.adv, kAdvNames);
    size("num_patches", c.num_patches);
    f.push_back({"layers",
                 [&c] {
                     std::string s;
                     for (auto l : c.layers) s += (s.empty() ? "" : ",") + std::to_string(l);
                     return s;
                 },
                 [&c](const std::string& s) {
                     std::vector<std::size_t> out;
                     std::stringstream ss(s);
                     std::string item;
                     while (std::getline(ss, item, ',')) out.push_back(parse_u64("layers", trim(item)));
                     c.layers = std::move(out);
                 }});
    size("proj_dim", c.proj_dim);
    size("hgnn_hidden", c.hgnn_hidden);
    size("hgnn_out", c.hgnn_out);
    size("hyperedges", c.hyperedges);
    real("membership_threshold", c.membership_threshold);
    real("kmeans_temperature", c.kmeans_temperature);
    size("kmeans_iters", c.kmeans_iters);
    real("mu1", c.mu1);
    real("sigma1", c.sigma1);
    real("mu2", c.mu2);
    real("sigma2", c.sigma2);
    real("tau", c.tau);
    choice("similarity_domain", c.similarity_domain, kDomainNames);
    choice("weight_strategy", c.weight_strategy, kStrategyNames);
    choice("heatmap", c.heatmap, kHeatmapNames);
    choice("hgnn_activation", c.hgnn_activation, kActivationNames);
    flag("share_topology", c.share_topology);
    flag("share_hgnn_params", c.share_hgnn_params);
    flag("detach_weights", c.detach_weights);
    flag("use_adv", c.use_adv);
    flag("use_patchnce", c.use_patchnce);
    flag("use_sthcl", c.use_sthcl);
    flag("use_stnhcl", c.use_stnhcl);
    return f;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
    for (auto& f : fields(*this))
        if (key == f.key) {
            f.set(trim(value));
            return;
        }
    throw ConfigError("unknown config key '" + key + "'");
}

void RunConfig::set_assignment(const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key=value, got '" + assignment + "'");
    set(trim(assignment.substr(0, eq)), assignment.substr(eq + 1));
}

std::vector<std::string> RunConfig::keys() {
    RunConfig c;
    std::vector<std::string> out;
    for (auto& f : fields(c)) out.emplace_back(f.key);
    return out;
}

std::string RunConfig::to_text() const {
    RunConfig c = *this;
    std::string out;
    for (auto& f : fields(c)) out += std::string(f.key) + " = " + f.get() + "\n";
    return out;
}

RunConfig RunConfig::parse(const std::string& text) {
    RunConfig c;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        try {
            c.set_assignment(line);
        } catch (const ConfigError& e) {
            throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) {
    std::string text;
    try {
        text = io::read_file(path);
    } catch (const IoError& e) {
        throw ConfigError(e.what());
    }
    try {
        return parse(text);
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void RunConfig::validate() const {
    if (image_size < 32 || image_size % 8 != 0) throw ConfigError("image_size must be a multiple of 8 and >= 32");
    if (std::find(domains.begin(), domains.end(), source) == domains.end())
        throw ConfigError("source domain '" + synth::domain_name(source) + "' is not among the domains");
    if (domains.size() < 2) throw ConfigError("need at least one target domain besides the source");
    if (eval_count < 1) throw ConfigError("eval_count must be >= 1");
    if (layers.empty()) throw ConfigError("at least one encoder layer must be tapped");
    for (std::size_t i = 0; i < layers.size(); ++i) {
        (void)models::encoder_layer_shape(model(), layers[i]);
        for (std::size_t j = 0; j < i; ++j)
            if (layers[i] == layers[j]) throw ConfigError("layer " + std::to_string(layers[i]) + " listed twice");
    }
    if (num_patches < 1) throw ConfigError("num_patches must be >= 1");
    const auto ccfg = contrastive();
    for (auto l : layers) {
        const auto shape = models::encoder_layer_shape(model(), l);
        const std::size_t cells = shape[1] * shape[2];
        if (use_stnhcl && ccfg.candidate_factor * num_patches > cells)
            throw ConfigError("layer " + std::to_string(l) + " has " + std::to_string(cells) +
                              " positions, fewer than the " + std::to_string(ccfg.candidate_factor * num_patches) +
                              " partition candidates");
        if (num_patches > cells)
            throw ConfigError("num_patches exceeds the positions of layer " + std::to_string(l));
    }
    if ((use_sthcl || use_stnhcl) && (hyperedges < 1 || hyperedges > num_patches))
        throw ConfigError("hyperedges must lie in [1, num_patches]");
    if (!(membership_threshold > 0.0 && membership_threshold < 1.0))
        throw ConfigError("membership_threshold must lie in (0, 1)");
    if (!(kmeans_temperature > 0.0)) throw ConfigError("kmeans_temperature must be positive");
    if (kmeans_iters < 1) throw ConfigError("kmeans_iters must be >= 1");
    if (proj_dim < 1 || hgnn_hidden < 1 || hgnn_out < 1) throw ConfigError("embedding sizes must be >= 1");
    if (lambda1 < 0.0 || lambda2 < 0.0) throw ConfigError("lambda1 and lambda2 must be non-negative");
    ccfg.weights.validate();
    adam_generator().validate();
    adam_discriminator().validate();
    if (!use_adv && !use_patchnce && !use_sthcl && !use_stnhcl) throw ConfigError("every loss term is disabled");
}

std::vector<synth::Domain> RunConfig::targets() const {
    std::vector<synth::Domain> out;
    for (auto d : domains)
        if (d != source) out.push_back(d);
    return out;
}

models::ModelConfig RunConfig::model() const {
    models::ModelConfig m;
    m.image_size = image_size;
    m.taps = layers;
    m.proj_dim = proj_dim;
    m.hgnn_hidden = hgnn_hidden;
    m.hgnn_out = hgnn_out;
    m.share_hgnn_params = share_hgnn_params;
    return m;
}

losses::ContrastiveConfig RunConfig::contrastive() const {
    losses::ContrastiveConfig c;
    c.num_patches = num_patches;
    c.tau = tau;
    c.use_patchnce = use_patchnce;
    c.use_sthcl = use_sthcl;
    c.use_stnhcl = use_stnhcl;
    c.hypergraph.hyperedges = hyperedges;
    c.hypergraph.threshold = membership_threshold;
    c.hypergraph.temperature = kmeans_temperature;
    c.hypergraph.iters = kmeans_iters;
    c.hypergraph.activation = hgnn_activation;
    c.hypergraph.share_topology = share_topology;
    c.hypergraph.share_params = share_hgnn_params;
    c.weights.mu1 = mu1;
    c.weights.sigma1 = sigma1;
    c.weights.mu2 = mu2;
    c.weights.sigma2 = sigma2;
    c.weights.tau = tau;
    c.weights.domain = similarity_domain;
    c.weights.strategy = weight_strategy;
    c.weights.detach = detach_weights;
    return c;
}

optim::AdamConfig RunConfig::adam_generator() const { return {lr_g, beta1, beta2, 1e-8}; }
optim::AdamConfig RunConfig::adam_discriminator() const { return {lr_d, beta1, beta2, 1e-8}; }

}  // namespace stnhcl
