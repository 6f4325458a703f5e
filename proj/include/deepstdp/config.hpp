#pragma once

// `key = value` configuration grammar: one pair per line, '#' comments,
// dotted keys namespaced by module. Parsing validates every key against a
// registry so typos fail loudly, and every registered key carries a default.

#include <cctype>
#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace deepstdp {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class KeyKind { Real, Count, Flag, Choice };

struct KeySpec {
    std::string name;
    KeyKind kind;
    std::string default_value;
    std::vector<std::string> choices;  // for Choice kind
};

using ConfigRegistry = std::vector<KeySpec>;

namespace detail {

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

inline void validate_value(const KeySpec& spec, const std::string& value) {
    switch (spec.kind) {
        case KeyKind::Real: {
            try {
                std::size_t used = 0;
                (void)std::stod(value, &used);
                if (used != value.size()) throw std::invalid_argument("");
            } catch (...) {
                throw ConfigError("config: key '" + spec.name + "' expects a number, got '" +
                                  value + "'");
            }
            return;
        }
        case KeyKind::Count: {
            std::uint64_t v = 0;
            auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), v);
            if (ec != std::errc() || p != value.data() + value.size())
                throw ConfigError("config: key '" + spec.name +
                                  "' expects a nonnegative integer, got '" + value + "'");
            return;
        }
        case KeyKind::Flag: {
            if (value != "true" && value != "false")
                throw ConfigError("config: key '" + spec.name + "' expects true or false, got '" +
                                  value + "'");
            return;
        }
        case KeyKind::Choice: {
            for (const auto& c : spec.choices)
                if (c == value) return;
            throw ConfigError("config: key '" + spec.name + "' has no choice '" + value + "'");
        }
    }
}

}  // namespace detail

class Config {
public:
    explicit Config(const ConfigRegistry* registry) : registry_(registry) {}

    static Config parse(std::string_view text, const ConfigRegistry& registry) {
        Config cfg(&registry);
        std::size_t line_no = 0;
        std::size_t start = 0;
        while (start <= text.size()) {
            std::size_t end = text.find('\n', start);
            if (end == std::string_view::npos) end = text.size();
            std::string_view line = text.substr(start, end - start);
            start = end + 1;
            ++line_no;

            std::size_t hash = line.find('#');
            if (hash != std::string_view::npos) line = line.substr(0, hash);
            std::string stripped = detail::trim(line);
            if (stripped.empty()) continue;

            std::size_t eq = stripped.find('=');
            if (eq == std::string::npos)
                throw ConfigError("config: line " + std::to_string(line_no) +
                                  " is not 'key = value'");
            std::string key = detail::trim(std::string_view(stripped).substr(0, eq));
            std::string value = detail::trim(std::string_view(stripped).substr(eq + 1));
            if (key.empty() || value.empty())
                throw ConfigError("config: line " + std::to_string(line_no) +
                                  " has an empty key or value");

            const KeySpec* spec = cfg.find_spec(key);
            if (!spec) throw ConfigError("config: unknown key '" + key + "'");
            if (cfg.values_.count(key))
                throw ConfigError("config: duplicate key '" + key + "'");
            detail::validate_value(*spec, value);
            cfg.values_[key] = value;
        }
        return cfg;
    }

    static Config parse_file(const std::filesystem::path& path, const ConfigRegistry& registry) {
        std::ifstream in(path);
        if (!in) throw ConfigError("config: cannot open " + path.string());
        std::ostringstream ss;
        ss << in.rdbuf();
        return parse(ss.str(), registry);
    }

    bool is_set(std::string_view key) const { return values_.count(std::string(key)) > 0; }

    const std::string& raw(std::string_view key) const {
        const KeySpec* spec = find_spec(key);
        if (!spec) throw ConfigError("config: unknown key '" + std::string(key) + "'");
        auto it = values_.find(std::string(key));
        return it == values_.end() ? spec->default_value : it->second;
    }

    double get_real(std::string_view key) const { return std::stod(raw(key)); }

    std::uint64_t get_count(std::string_view key) const {
        const std::string& v = raw(key);
        std::uint64_t out = 0;
        auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        (void)p;
        if (ec != std::errc()) throw ConfigError("config: bad count for '" + std::string(key) + "'");
        return out;
    }

    bool get_flag(std::string_view key) const { return raw(key) == "true"; }

    const std::string& get_choice(std::string_view key) const { return raw(key); }

    void set(std::string_view key, std::string value) {
        const KeySpec* spec = find_spec(key);
        if (!spec) throw ConfigError("config: unknown key '" + std::string(key) + "'");
        detail::validate_value(*spec, value);
        values_[std::string(key)] = std::move(value);
    }

    /// Canonical text form: every registered key in registry order with its
    /// effective value. parse(serialize(parse(x))) == parse(x).
    std::string serialize() const {
        std::string out;
        for (const KeySpec& spec : *registry_) {
            out += spec.name;
            out += " = ";
            out += raw(spec.name);
            out += '\n';
        }
        return out;
    }

    const ConfigRegistry& registry() const { return *registry_; }

private:
    const KeySpec* find_spec(std::string_view key) const {
        for (const KeySpec& s : *registry_)
            if (s.name == key) return &s;
        return nullptr;
    }

    const ConfigRegistry* registry_;
    std::map<std::string, std::string> values_;
};

/// Registry for pipeline/run configuration files. The snn.* defaults are the
/// stock STDP training hyper-parameters.
inline const ConfigRegistry& run_config_registry() {
    static const ConfigRegistry reg = {
        {"seed", KeyKind::Count, "42", {}},
        {"method", KeyKind::Choice, "stdp", {"stdp", "kmeans"}},
        {"epochs", KeyKind::Count, "20", {}},
        {"reassign_freq", KeyKind::Count, "0", {}},  // 0 = method default (stdp 1, kmeans 2)
        {"cluster_multiple", KeyKind::Count, "10", {}},
        {"d_pca", KeyKind::Count, "16", {}},
        {"whiten", KeyKind::Flag, "false", {}},
        {"gain", KeyKind::Real, "1.0", {}},
        {"snn.k", KeyKind::Count, "100", {}},
        {"snn.v_rest", KeyKind::Real, "-65", {}},
        {"snn.v_reset", KeyKind::Real, "-60", {}},
        {"snn.v_decay", KeyKind::Real, "20", {}},
        {"snn.v_thr", KeyKind::Real, "-52", {}},
        {"snn.refractory", KeyKind::Count, "5", {}},
        {"snn.trace_peak", KeyKind::Real, "1.0", {}},
        {"snn.trace_decay", KeyKind::Real, "100", {}},
        {"snn.thr_step", KeyKind::Real, "0.45", {}},
        {"snn.thr_decay", KeyKind::Real, "1e7", {}},
        {"snn.lr_pre", KeyKind::Real, "1e-3", {}},
        {"snn.lr_post", KeyKind::Real, "1e-6", {}},
        {"snn.w_inh", KeyKind::Real, "-1", {}},
        {"snn.timesteps", KeyKind::Count, "400", {}},
        {"snn.w_max", KeyKind::Real, "1.0", {}},
        {"snn.label_pass", KeyKind::Choice, "separate", {"separate", "inline"}},
        {"snn.normalize_weights", KeyKind::Flag, "false", {}},
        {"kmeans.it", KeyKind::Count, "20", {}},
        {"kmeans.tol", KeyKind::Real, "0", {}},
        {"train.lr", KeyKind::Real, "1e-2", {}},
        {"train.batch", KeyKind::Count, "32", {}},
        {"train.epochs_per_reassign", KeyKind::Count, "1", {}},
        {"train.head_reinit", KeyKind::Flag, "true", {}},
        {"net.c1", KeyKind::Count, "8", {}},
        {"net.c2", KeyKind::Count, "16", {}},
        {"net.d_feat", KeyKind::Count, "64", {}},
        {"probe.every", KeyKind::Count, "5", {}},
        {"probe.epochs", KeyKind::Count, "100", {}},
        {"probe.lr", KeyKind::Real, "0.01", {}},
        {"probe.batch", KeyKind::Count, "32", {}},
        {"probe.standardize", KeyKind::Flag, "true", {}},
        {"pipeline.balance_classes", KeyKind::Flag, "false", {}},
    };
    return reg;
}

/// Registry for dataset manifest files written by the synthetic generator.
inline const ConfigRegistry& manifest_registry() {
    static const ConfigRegistry reg = {
        {"kind", KeyKind::Choice, "blobs", {"blobs", "images"}},
        {"classes", KeyKind::Count, "3", {}},
        {"per_class", KeyKind::Count, "100", {}},
        {"d", KeyKind::Count, "16", {}},
        {"height", KeyKind::Count, "16", {}},
        {"width", KeyKind::Count, "16", {}},
        {"sigma", KeyKind::Real, "0.05", {}},
        {"seed", KeyKind::Count, "7", {}},
        {"features", KeyKind::Choice, "features.dstp", {"features.dstp"}},
        {"images", KeyKind::Choice, "images.dstp", {"images.dstp"}},
        {"labels", KeyKind::Choice, "labels.dstp", {"labels.dstp"}},
    };
    return reg;
}

}  // namespace deepstdp
