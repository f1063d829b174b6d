// config.hpp: sectioned key-value run configuration, validation and presets
//
// Grammar (one item per line, '#' starts a comment):
//   [section]            section header; species use [species.<name>]
//   key = value          scalar, or comma-separated list
// Every key is optional except model.kind, grid.t_M, grid.t_I and (outside oracle runs) one species; defaults are applied and
// echoed back by to_config_text(). Unknown sections and keys are rejected.
#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <cstdio>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "spinbath/bath_model.hpp"
#include "spinbath/oracles.hpp"
#include "spinbath/pulse_protocol.hpp"
#include "spinbath/uniaxial.hpp"

namespace spinbath {

struct Diagnostic {
    std::string source;   // file name or "preset:<name>"
    int line{0};          // 0 when the problem is not tied to one line
    std::string key_path; // e.g. "grid.t_M" or "species"
    std::string message;

    [[nodiscard]] std::string str() const {
        std::ostringstream os;
        os << source;
        if (line > 0) os << ':' << line;
        os << ": " << key_path << ": " << message;
        return os.str();
    }
};

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(std::vector<Diagnostic> diags)
        : std::runtime_error(join(diags)), diags_(std::move(diags)) {}

    [[nodiscard]] const std::vector<Diagnostic>& diagnostics() const { return diags_; }

private:
    static std::string join(const std::vector<Diagnostic>& d) {
        std::string s;
        for (const auto& x : d) s += x.str() + "\n";
        return s;
    }
    std::vector<Diagnostic> diags_;
};

enum class ModelKind { Uniaxial, Semiclassical, Oracle };
enum class Spacing { Linear, Log };

struct AxisGrid {
    double min{0.0};
    double max{0.0};
    std::size_t steps{1};
    Spacing spacing{Spacing::Linear};

    [[nodiscard]] std::vector<double> values() const {
        std::vector<double> v(steps);
        for (std::size_t i = 0; i < steps; ++i) {
            const double f = steps == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(steps - 1);
            v[i] = spacing == Spacing::Linear ? min + (max - min) * f
                                              : std::exp(std::log(min) + (std::log(max) - std::log(min)) * f);
        }
        if (steps > 1) {
            v.front() = min;
            v.back() = max;
        }
        return v;
    }
};

struct UniaxialSettings {
    std::size_t n_clusters{50};
    double polarization{0.5};
    DotMode dots{DotMode::Symmetric};
};

struct SemiclassicalSettings {
    double b_ext{0.04};
    double delta_b_rms{2e-4};
    std::size_t n_clusters{8};
    ProtocolSpec outer{ProtocolKind::SE, 1, {}};
    ProtocolSpec intermediate{ProtocolKind::SE, 1, {}};
    DotMode dots{DotMode::Symmetric};
    bool correlated_delta_b{false};
};

struct OracleSettings {
    std::vector<double> couplings{1.0e6, 1.3e6, 0.7e6, 1.9e6};
    Axis axis{Axis::X};
    std::uint64_t samples{512};
};

struct ExecutionSettings {
    unsigned threads{1};
    std::uint64_t seed{1};
    std::uint64_t mc_samples{200};
};

struct OutputSettings {
    std::string path{"correlation.csv"};
    std::string format{"csv"};
};

struct ScalingSettings {
    std::vector<std::uint64_t> n_values{250, 1000, 4000};
    std::size_t n_clusters{50};
};

struct RunConfig {
    ModelKind model{ModelKind::Uniaxial};
    std::string preset;
    AxisGrid t_M;
    AxisGrid t_I;
    PhysicalConstants constants;
    DotGeometry geometry;
    std::optional<DotGeometry> geometry_R;
    std::vector<NuclearSpecies> species;
    UniaxialSettings uniaxial;
    SemiclassicalSettings semiclassical;
    OracleSettings oracle;
    ExecutionSettings execution;
    OutputSettings output;
    ScalingSettings scaling;
};

// ---------------------------------------------------------------------------------------------
// Shipped presets

namespace presets {

inline std::string gaas_base(std::string_view intermediate, std::string_view output) {
    std::string s = R"(# GaAs singlet-triplet double dot, semiclassical Overhauser model.
# Isotope constants are literature inputs, not model outputs:
#   gyromagnetic ratios gamma/2pi = 10.2478 / 13.0208 / 7.3150 MHz/T
#   hyperfine constants 74 / 96 / 86 ueV (converted to rad/s), abundances 0.301 / 0.199 / 0.5
[model]
kind = semiclassical

[grid]
t_M = 1e-6, 1e-6, 1, linear
t_I = 0, 40e-6, 401, linear

[constants]
hbar = 1.054571817e-34
mu_B = 9.2740100783e-24
g_electron = -0.44

[geometry]
z0 = 8e-9
L = 20e-9
nu0 = 2.2584193555e-29
n_total = 1000000

[species.69Ga]
gamma = 64388826.39091496
total_hyperfine = 112425791211.90378
abundance = 0.301
spin = 1.5

[species.71Ga]
gamma = 81812099.24772395
total_hyperfine = 145849675085.713
abundance = 0.199
spin = 1.5

[species.75As]
gamma = 45961500.52201867
total_hyperfine = 130657000597.61787
abundance = 0.5
spin = 1.5

[semiclassical]
b_ext = 0.04
delta_b_rms = 2e-4
n_clusters = 8
outer = SE
)";
    s += "intermediate = ";
    s += intermediate;
    s += R"(
dots = symmetric

[execution]
seed = 2013
mc_samples = 200

[output]
)";
    s += "path = ";
    s += output;
    s += "\n";
    return s;
}

inline std::string toy_uniaxial() {
    return R"(# Switched uniaxial coupling, 10^3 spin-1/2 nuclei of one species per dot.
# Synthetic lattice: nu0 is scaled so that 1000 sites fill a GaAs-sized dot;
# mean coupling A = total_hyperfine / n_total = 1e6 rad/s, grid spans t*A in [1e-2, 1e2].
[model]
kind = uniaxial

[grid]
t_M = 1e-8, 1e-4, 41, log
t_I = 1e-8, 1e-4, 41, log

[geometry]
z0 = 8e-9
L = 20e-9
nu0 = 2.2584193555e-26
n_total = 1000

[species.toy]
gamma = 64388826.39091496
total_hyperfine = 1e9
abundance = 1
spin = 0.5

[uniaxial]
n_clusters = 50
polarization = 0.5
dots = symmetric

[scaling]
n_values = 250, 1000, 4000
n_clusters = 50

[output]
path = toy_uniaxial.csv
)";
}

struct Preset {
    std::string name;
    std::string description;
    std::string text;
};

inline std::vector<Preset> all() {
    return {
        {"gaas-se-se-se", "GaAs, 40 mT, t_M = 1 us, SE-SE-SE (backaction echoed away)",
         gaas_base("SE", "gaas_se_se_se.csv")},
        {"gaas-se-fid-se", "GaAs, 40 mT, t_M = 1 us, SE-FID-SE (backaction active)",
         gaas_base("FID", "gaas_se_fid_se.csv")},
        {"toy-uniaxial", "uniaxial model, 1000 nuclei per dot, log-log (t_M, t_I) grid", toy_uniaxial()},
    };
}

inline std::optional<Preset> find(std::string_view name) {
    for (auto& p : all()) {
        if (p.name == name) return p;
    }
    return std::nullopt;
}

} // namespace presets

// ---------------------------------------------------------------------------------------------
// Parsing

namespace detail {

struct Entry {
    std::string value;
    std::string source;
    int line{0};
};

// section -> key -> entry, in a stable (sorted) order.
using KeyValueDoc = std::map<std::string, std::map<std::string, Entry>>;

inline std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

inline std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream is(s);
    while (std::getline(is, cur, ',')) out.push_back(trim(cur));
    return out;
}

inline void parse_into(KeyValueDoc& doc, std::string_view text, const std::string& source,
                       std::vector<Diagnostic>& diags, std::vector<std::pair<std::string, int>>* sections_seen = nullptr) {
    std::string section;
    int line_no = 0;
    std::istringstream is{std::string(text)};
    std::string raw;
    std::map<std::string, std::map<std::string, int>> local;  // duplicate detection within this source
    while (std::getline(is, raw)) {
        ++line_no;
        std::string line = raw;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']' || line.size() < 3) {
                diags.push_back({source, line_no, line, "malformed section header"});
                continue;
            }
            section = trim(std::string_view(line).substr(1, line.size() - 2));
            doc[section];
            if (sections_seen) sections_seen->push_back({section, line_no});
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            diags.push_back({source, line_no, section.empty() ? line : section, "expected 'key = value'"});
            continue;
        }
        const std::string key = trim(std::string_view(line).substr(0, eq));
        const std::string value = trim(std::string_view(line).substr(eq + 1));
        if (section.empty()) {
            diags.push_back({source, line_no, key, "key outside of any [section]"});
            continue;
        }
        if (key.empty()) {
            diags.push_back({source, line_no, section, "empty key"});
            continue;
        }
        if (auto it = local[section].find(key); it != local[section].end()) {
            diags.push_back({source, line_no, section + "." + key,
                             "duplicate key (first set on line " + std::to_string(it->second) + ")"});
            continue;
        }
        local[section][key] = line_no;
        doc[section][key] = Entry{value, source, line_no};
    }
}

class Resolver {
public:
    Resolver(const KeyValueDoc& doc, std::vector<Diagnostic>& diags) : doc_(doc), diags_(diags) {}

    const Entry* find(const std::string& section, const std::string& key) {
        used_[section].insert(key);
        auto s = doc_.find(section);
        if (s == doc_.end()) return nullptr;
        auto k = s->second.find(key);
        return k == s->second.end() ? nullptr : &k->second;
    }

    void error(const Entry* e, const std::string& path, const std::string& msg) {
        diags_.push_back({e ? e->source : std::string("config"), e ? e->line : 0, path, msg});
    }

    template <typename T>
    bool number(const std::string& section, const std::string& key, T& out) {
        const Entry* e = find(section, key);
        if (!e) return false;
        if (!parse_number(e->value, out)) {
            error(e, section + "." + key, "cannot parse '" + e->value + "' as a number");
            return false;
        }
        return true;
    }

    bool text(const std::string& section, const std::string& key, std::string& out) {
        const Entry* e = find(section, key);
        if (!e) return false;
        out = e->value;
        return true;
    }

    bool boolean(const std::string& section, const std::string& key, bool& out) {
        const Entry* e = find(section, key);
        if (!e) return false;
        if (e->value == "true") out = true;
        else if (e->value == "false") out = false;
        else error(e, section + "." + key, "expected true or false");
        return true;
    }

    template <typename T>
    bool number_list(const std::string& section, const std::string& key, std::vector<T>& out) {
        const Entry* e = find(section, key);
        if (!e) return false;
        std::vector<T> v;
        for (const auto& item : split_list(e->value)) {
            T x{};
            if (!parse_number(item, x)) {
                error(e, section + "." + key, "cannot parse list item '" + item + "'");
                return false;
            }
            v.push_back(x);
        }
        out = std::move(v);
        return true;
    }

    // Reports every key present in the document but never looked up.
    void reject_unknown() {
        for (const auto& [section, keys] : doc_) {
            for (const auto& [key, entry] : keys) {
                if (!used_[section].contains(key)) {
                    diags_.push_back({entry.source, entry.line, section + "." + key, "unknown key"});
                }
            }
        }
    }

    template <typename T>
    static bool parse_number(const std::string& s, T& out) {
        const char* b = s.data();
        const char* e = s.data() + s.size();
        if (b != e && *b == '+') ++b;
        auto [p, ec] = std::from_chars(b, e, out);
        return ec == std::errc{} && p == e;
    }

private:
    const KeyValueDoc& doc_;
    std::vector<Diagnostic>& diags_;
    std::map<std::string, std::set<std::string>> used_;
};

inline std::optional<DotMode> parse_dots(const std::string& s) {
    if (s == "single") return DotMode::Single;
    if (s == "symmetric") return DotMode::Symmetric;
    if (s == "pair") return DotMode::Pair;
    return std::nullopt;
}

inline std::string dots_name(DotMode d) {
    switch (d) {
    case DotMode::Single: return "single";
    case DotMode::Symmetric: return "symmetric";
    case DotMode::Pair: return "pair";
    }
    return "symmetric";
}

inline std::optional<ProtocolSpec> parse_protocol(const std::string& s) {
    if (s == "FID") return ProtocolSpec{ProtocolKind::FID, 1, {}};
    if (s == "SE") return ProtocolSpec{ProtocolKind::SE, 1, {}};
    if (s == "custom") return ProtocolSpec{ProtocolKind::Custom, 1, {}};
    if (s.rfind("CPMG-", 0) == 0) {
        std::size_t n = 0;
        if (Resolver::parse_number(s.substr(5), n) && n >= 1) return ProtocolSpec{ProtocolKind::CPMG, n, {}};
    }
    return std::nullopt;
}

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace detail

inline std::string to_config_text(const RunConfig& c);

// Parses and validates; throws ConfigError listing every problem found.
inline RunConfig parse_config(std::string_view text, const std::string& source = "config") {
    using detail::Entry;
    std::vector<Diagnostic> diags;
    detail::KeyValueDoc user;
    detail::parse_into(user, text, source, diags);

    // A preset provides the base document; user keys override it key by key.
    detail::KeyValueDoc doc;
    std::string preset_name;
    if (auto m = user.find("model"); m != user.end()) {
        if (auto p = m->second.find("preset"); p != m->second.end()) {
            preset_name = p->second.value;
            if (auto preset = presets::find(preset_name)) {
                detail::parse_into(doc, preset->text, "preset:" + preset_name, diags);
            } else {
                diags.push_back({p->second.source, p->second.line, "model.preset", "unknown preset '" + preset_name + "'"});
            }
        }
    }
    for (const auto& [section, keys] : user) {
        auto& dst = doc[section];
        for (const auto& [k, e] : keys) dst[k] = e;
    }

    RunConfig cfg;
    cfg.preset = preset_name;
    detail::Resolver r(doc, diags);
    r.find("model", "preset");

    // model
    std::string kind;
    if (!r.text("model", "kind", kind)) {
        diags.push_back({source, 0, "model.kind", "required key missing (uniaxial | semiclassical | oracle)"});
    } else if (kind == "uniaxial") cfg.model = ModelKind::Uniaxial;
    else if (kind == "semiclassical") cfg.model = ModelKind::Semiclassical;
    else if (kind == "oracle") cfg.model = ModelKind::Oracle;
    else r.error(r.find("model", "kind"), "model.kind", "expected uniaxial, semiclassical or oracle");

    // grid
    auto grid_axis = [&](const std::string& key, AxisGrid& g) {
        const Entry* e = r.find("grid", key);
        const std::string path = "grid." + key;
        if (!e) {
            diags.push_back({source, 0, path, "required key missing (min, max, steps, linear|log)"});
            return;
        }
        const auto parts = detail::split_list(e->value);
        if (parts.size() != 4) {
            r.error(e, path, "expected 'min, max, steps, linear|log'");
            return;
        }
        if (!detail::Resolver::parse_number(parts[0], g.min) || !detail::Resolver::parse_number(parts[1], g.max) ||
            !detail::Resolver::parse_number(parts[2], g.steps)) {
            r.error(e, path, "cannot parse min, max or steps");
            return;
        }
        if (parts[3] == "linear") g.spacing = Spacing::Linear;
        else if (parts[3] == "log") g.spacing = Spacing::Log;
        else r.error(e, path, "spacing must be linear or log");
        if (g.steps < 1) r.error(e, path, "steps must be >= 1");
        if (!(g.min <= g.max)) r.error(e, path, "min must not exceed max");
        if (!(g.min >= 0.0)) r.error(e, path, "times must be >= 0");
        if (g.spacing == Spacing::Log && !(g.min > 0.0)) r.error(e, path, "log spacing needs min > 0");
    };
    grid_axis("t_M", cfg.t_M);
    grid_axis("t_I", cfg.t_I);

    // constants
    r.number("constants", "hbar", cfg.constants.hbar);
    r.number("constants", "mu_B", cfg.constants.mu_B);
    r.number("constants", "g_electron", cfg.constants.g_electron);
    if (!(cfg.constants.hbar > 0.0)) r.error(r.find("constants", "hbar"), "constants.hbar", "must be > 0");
    if (!(cfg.constants.mu_B > 0.0)) r.error(r.find("constants", "mu_B"), "constants.mu_B", "must be > 0");
    if (cfg.constants.g_electron == 0.0 || !std::isfinite(cfg.constants.g_electron)) {
        r.error(r.find("constants", "g_electron"), "constants.g_electron", "must be finite and nonzero");
    }

    // geometry
    auto read_geometry = [&](const std::string& sec, DotGeometry& g) {
        r.number(sec, "z0", g.z0);
        r.number(sec, "L", g.L);
        r.number(sec, "nu0", g.nu0);
        r.number(sec, "n_total", g.n_total);
        for (auto [key, v] : {std::pair{"z0", g.z0}, std::pair{"L", g.L}, std::pair{"nu0", g.nu0}}) {
            if (!(v > 0.0)) r.error(r.find(sec, key), sec + "." + key, "must be > 0");
        }
        if (g.n_total < 1) r.error(r.find(sec, "n_total"), sec + ".n_total", "must be >= 1");
    };
    read_geometry("geometry", cfg.geometry);
    if (doc.contains("geometry.R")) {
        cfg.geometry_R = cfg.geometry;
        read_geometry("geometry.R", *cfg.geometry_R);
    }

    // species
    std::vector<std::string> species_sections;
    for (const auto& [section, keys] : doc) {
        if (section.rfind("species.", 0) != 0) continue;
        species_sections.push_back(section);
        NuclearSpecies s;
        s.name = section.substr(8);
        const std::string p = section + ".";
        if (!r.number(section, "gamma", s.gamma)) diags.push_back({source, 0, p + "gamma", "required key missing"});
        if (!r.number(section, "total_hyperfine", s.total_hyperfine)) {
            diags.push_back({source, 0, p + "total_hyperfine", "required key missing"});
        }
        if (!r.number(section, "abundance", s.abundance)) diags.push_back({source, 0, p + "abundance", "required key missing"});
        r.number(section, "spin", s.spin);
        if (!std::isfinite(s.gamma)) r.error(r.find(section, "gamma"), p + "gamma", "must be finite");
        if (!(s.total_hyperfine >= 0.0)) r.error(r.find(section, "total_hyperfine"), p + "total_hyperfine", "must be >= 0");
        if (!(s.abundance >= 0.0 && s.abundance <= 1.0)) r.error(r.find(section, "abundance"), p + "abundance", "must lie in [0, 1]");
        if (!(s.spin > 0.0) || std::abs(2.0 * s.spin - std::round(2.0 * s.spin)) > 1e-12) {
            r.error(r.find(section, "spin"), p + "spin", "must be a positive half-integer");
        }
        cfg.species.push_back(s);
    }
    if (cfg.model != ModelKind::Oracle) {
        if (cfg.species.empty()) {
            diags.push_back({source, 0, "species", "at least one [species.<name>] section is required"});
        } else {
            double sum = 0.0;
            std::string names;
            for (const auto& s : cfg.species) {
                sum += s.abundance;
                names += (names.empty() ? "" : ", ") + ("species." + s.name);
            }
            if (std::abs(sum - 1.0) > 1e-12) {
                diags.push_back({source, 0, "species",
                                 "abundances of " + names + " sum to " + detail::format_double(sum) + ", expected 1"});
            }
        }
    }

    // uniaxial
    {
        auto& u = cfg.uniaxial;
        r.number("uniaxial", "n_clusters", u.n_clusters);
        r.number("uniaxial", "polarization", u.polarization);
        std::string dots;
        if (r.text("uniaxial", "dots", dots)) {
            if (auto d = detail::parse_dots(dots)) u.dots = *d;
            else r.error(r.find("uniaxial", "dots"), "uniaxial.dots", "expected single, symmetric or pair");
        }
        if (u.n_clusters < 1) r.error(r.find("uniaxial", "n_clusters"), "uniaxial.n_clusters", "must be >= 1");
        if (!(u.polarization >= 0.0 && u.polarization <= 1.0)) {
            r.error(r.find("uniaxial", "polarization"), "uniaxial.polarization", "must lie in [0, 1]");
        }
    }

    // semiclassical
    {
        auto& s = cfg.semiclassical;
        r.number("semiclassical", "b_ext", s.b_ext);
        r.number("semiclassical", "delta_b_rms", s.delta_b_rms);
        r.number("semiclassical", "n_clusters", s.n_clusters);
        r.boolean("semiclassical", "correlated_delta_b", s.correlated_delta_b);
        std::string dots;
        if (r.text("semiclassical", "dots", dots)) {
            if (auto d = detail::parse_dots(dots)) s.dots = *d;
            else r.error(r.find("semiclassical", "dots"), "semiclassical.dots", "expected single, symmetric or pair");
        }
        for (auto [key, spec] : {std::pair{"outer", &s.outer}, std::pair{"intermediate", &s.intermediate}}) {
            std::string name;
            const std::string k = key;
            if (r.text("semiclassical", k, name)) {
                if (auto p = detail::parse_protocol(name)) *spec = *p;
                else r.error(r.find("semiclassical", k), "semiclassical." + k, "expected FID, SE, CPMG-<n> or custom");
            }
            std::vector<double> flips;
            if (r.number_list("semiclassical", k + "_flips", flips)) {
                if (spec->kind != ProtocolKind::Custom) {
                    r.error(r.find("semiclassical", k + "_flips"), "semiclassical." + k + "_flips",
                            "only allowed with a custom protocol");
                }
                spec->custom_fractions = flips;
            }
            if (spec->kind == ProtocolKind::Custom) {
                try {
                    (void)spec->make(1.0);
                } catch (const std::exception& ex) {
                    r.error(r.find("semiclassical", k + "_flips"), "semiclassical." + k + "_flips", ex.what());
                }
            }
        }
        if (!(s.b_ext > 0.0)) r.error(r.find("semiclassical", "b_ext"), "semiclassical.b_ext", "must be > 0");
        if (!(s.delta_b_rms >= 0.0)) r.error(r.find("semiclassical", "delta_b_rms"), "semiclassical.delta_b_rms", "must be >= 0");
        if (s.n_clusters < 1) r.error(r.find("semiclassical", "n_clusters"), "semiclassical.n_clusters", "must be >= 1");
        if (s.outer.kind == ProtocolKind::FID ||
            (s.outer.kind == ProtocolKind::Custom && std::abs(s.outer.make(1.0).flip_integral(1.0)) > 1e-12)) {
            r.error(r.find("semiclassical", "outer"), "semiclassical.outer",
                    "outer windows must be echo-balanced (SE, CPMG-n, or a balanced custom sequence)");
        }
        if (cfg.model == ModelKind::Semiclassical && s.n_clusters * cfg.species.size() > 128) {
            r.error(r.find("semiclassical", "n_clusters"), "semiclassical.n_clusters",
                    "T-matrix dimension n_clusters * species exceeds 128");
        }
    }

    // oracle
    {
        auto& o = cfg.oracle;
        r.number_list("oracle", "couplings", o.couplings);
        r.number("oracle", "samples", o.samples);
        std::string axis;
        if (r.text("oracle", "axis", axis)) {
            if (axis == "x") o.axis = Axis::X;
            else if (axis == "z") o.axis = Axis::Z;
            else r.error(r.find("oracle", "axis"), "oracle.axis", "expected x or z");
        }
        if (o.couplings.empty() || o.couplings.size() > SmallBath::kMaxSpins) {
            r.error(r.find("oracle", "couplings"), "oracle.couplings", "need 1 to 12 couplings");
        }
    }

    // execution
    r.number("execution", "threads", cfg.execution.threads);
    r.number("execution", "seed", cfg.execution.seed);
    r.number("execution", "mc_samples", cfg.execution.mc_samples);
    if (cfg.execution.threads < 1) r.error(r.find("execution", "threads"), "execution.threads", "must be >= 1");
    if (cfg.execution.mc_samples < 1) r.error(r.find("execution", "mc_samples"), "execution.mc_samples", "must be >= 1");

    // output
    r.text("output", "path", cfg.output.path);
    r.text("output", "format", cfg.output.format);
    if (cfg.output.format != "csv") r.error(r.find("output", "format"), "output.format", "only csv is supported");
    if (cfg.output.path.empty()) r.error(r.find("output", "path"), "output.path", "must not be empty");

    // scaling
    r.number_list("scaling", "n_values", cfg.scaling.n_values);
    r.number("scaling", "n_clusters", cfg.scaling.n_clusters);
    if (cfg.scaling.n_values.size() < 2) r.error(r.find("scaling", "n_values"), "scaling.n_values", "need at least two values");

    // Known sections without keys are fine; unknown section names are not.
    for (const auto& [section, keys] : doc) {
        static const std::set<std::string> known{"model", "grid", "constants", "geometry", "geometry.R", "uniaxial",
                                                  "semiclassical", "oracle", "execution", "output", "scaling"};
        if (!known.contains(section) && section.rfind("species.", 0) != 0) {
            const Entry* first = keys.empty() ? nullptr : &keys.begin()->second;
            diags.push_back({first ? first->source : source, first ? first->line : 0, section, "unknown section"});
        }
    }
    r.reject_unknown();

    // Cluster counts need per-species populations; only checked once the rest is sane.
    if (diags.empty() && cfg.model != ModelKind::Oracle) {
        const auto counts = species_counts(cfg.species, cfg.geometry.n_total);
        const std::size_t need = cfg.model == ModelKind::Uniaxial ? cfg.uniaxial.n_clusters : cfg.semiclassical.n_clusters;
        for (std::size_t k = 0; k < counts.size(); ++k) {
            if (counts[k] > 0 && counts[k] < need) {
                diags.push_back({source, 0, "species." + cfg.species[k].name,
                                 std::to_string(counts[k]) + " nuclei cannot fill " + std::to_string(need) + " clusters"});
            }
        }
    }

    if (!diags.empty()) throw ConfigError(std::move(diags));
    return cfg;
}

// Canonical, fully resolved text; parse_config(to_config_text(c)) reproduces c.
inline std::string to_config_text(const RunConfig& c) {
    using detail::format_double;
    std::ostringstream os;
    auto axis = [](const AxisGrid& g) {
        return format_double(g.min) + ", " + format_double(g.max) + ", " + std::to_string(g.steps) + ", " +
               (g.spacing == Spacing::Linear ? "linear" : "log");
    };
    const char* kind = c.model == ModelKind::Uniaxial ? "uniaxial" : c.model == ModelKind::Semiclassical ? "semiclassical" : "oracle";
    os << "[model]\nkind = " << kind << "\n\n";
    os << "[grid]\nt_M = " << axis(c.t_M) << "\nt_I = " << axis(c.t_I) << "\n\n";
    os << "[constants]\nhbar = " << format_double(c.constants.hbar) << "\nmu_B = " << format_double(c.constants.mu_B)
       << "\ng_electron = " << format_double(c.constants.g_electron) << "\n\n";
    auto geometry = [&](const std::string& name, const DotGeometry& g) {
        os << "[" << name << "]\nz0 = " << format_double(g.z0) << "\nL = " << format_double(g.L)
           << "\nnu0 = " << format_double(g.nu0) << "\nn_total = " << g.n_total << "\n\n";
    };
    geometry("geometry", c.geometry);
    if (c.geometry_R) geometry("geometry.R", *c.geometry_R);
    for (const auto& s : c.species) {
        os << "[species." << s.name << "]\ngamma = " << format_double(s.gamma)
           << "\ntotal_hyperfine = " << format_double(s.total_hyperfine) << "\nabundance = " << format_double(s.abundance)
           << "\nspin = " << format_double(s.spin) << "\n\n";
    }
    os << "[uniaxial]\nn_clusters = " << c.uniaxial.n_clusters << "\npolarization = " << format_double(c.uniaxial.polarization)
       << "\ndots = " << detail::dots_name(c.uniaxial.dots) << "\n\n";
    const auto& s = c.semiclassical;
    auto flips = [](const std::vector<double>& v) {
        std::string out;
        for (double x : v) out += (out.empty() ? "" : ", ") + format_double(x);
        return out;
    };
    os << "[semiclassical]\nb_ext = " << format_double(s.b_ext) << "\ndelta_b_rms = " << format_double(s.delta_b_rms)
       << "\nn_clusters = " << s.n_clusters << "\nouter = " << s.outer.name() << "\n";
    if (s.outer.kind == ProtocolKind::Custom) os << "outer_flips = " << flips(s.outer.custom_fractions) << "\n";
    os << "intermediate = " << s.intermediate.name() << "\n";
    if (s.intermediate.kind == ProtocolKind::Custom) os << "intermediate_flips = " << flips(s.intermediate.custom_fractions) << "\n";
    os << "dots = " << detail::dots_name(s.dots) << "\ncorrelated_delta_b = " << (s.correlated_delta_b ? "true" : "false") << "\n\n";
    os << "[oracle]\ncouplings = " << flips(c.oracle.couplings) << "\naxis = " << (c.oracle.axis == Axis::X ? "x" : "z")
       << "\nsamples = " << c.oracle.samples << "\n\n";
    os << "[execution]\nthreads = " << c.execution.threads << "\nseed = " << c.execution.seed
       << "\nmc_samples = " << c.execution.mc_samples << "\n\n";
    os << "[output]\npath = " << c.output.path << "\nformat = " << c.output.format << "\n\n";
    os << "[scaling]\nn_values = ";
    for (std::size_t i = 0; i < c.scaling.n_values.size(); ++i) os << (i ? ", " : "") << c.scaling.n_values[i];
    os << "\nn_clusters = " << c.scaling.n_clusters << "\n";
    return os.str();
}

} // namespace spinbath
