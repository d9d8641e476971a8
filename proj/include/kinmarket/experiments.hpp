#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "kinmarket/error.hpp"
#include "kinmarket/fokker_planck.hpp"
#include "kinmarket/io.hpp"
#include "kinmarket/kinetic.hpp"
#include "kinmarket/stats.hpp"

namespace kinmarket {

struct ExperimentConfig {
    SimConfig sim;
    std::string preset = "custom";
    std::filesystem::path out_dir = "out";
    bool overlay_chartist = false;
    bool overlay_lognormal = false;
    bool overlay_pareto = false;
    double hill_k_frac = 0.05; ///< default Hill k as a fraction of N_s
    double hill_scan_lo = 0.01;
    double hill_scan_hi = 0.10;
    std::size_t y_bins = 100;
    std::size_t s_bins = 100;

    void validate() const {
        sim.validate();
        if (!(hill_k_frac > 0.0 && hill_k_frac < 1.0)) throw ConfigError("hill_k_frac must lie in (0,1)");
        if (!(hill_scan_lo > 0.0 && hill_scan_lo < hill_scan_hi && hill_scan_hi < 1.0))
            throw ConfigError("hill scan window must satisfy 0 < lo < hi < 1");
        if (y_bins == 0 || s_bins == 0) throw ConfigError("histogram bin counts must be > 0");
    }
};

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{"test1", "test2", "test3a", "test3b", "test3c"};
    return names;
}

namespace detail {

inline ExperimentConfig base_single_population() {
    ExperimentConfig c;
    auto& p = c.sim.params;
    p.alpha1 = 0.01;
    p.alpha2 = 0.01;
    p.sigma2_opinion = 0.02;
    p.beta = 0.1;
    p.t_C = 1.0;
    p.herding_a = 1.0;
    p.herding_b = 0.0;
    p.gamma_diff = 1.0;
    c.sim.n_agents = 50000;
    c.sim.n_price_samples = 50000;
    c.sim.dt = 1.0;
    c.sim.n_iters = 1500;
    c.sim.pin_mean = true;
    c.overlay_chartist = true;
    return c;
}

inline ExperimentConfig base_switching(double alpha1, double alpha2) {
    ExperimentConfig c;
    auto& p = c.sim.params;
    p.alpha1 = alpha1;
    p.alpha2 = alpha2;
    p.sigma2_opinion = 5e-4;
    p.beta = 6.0;
    p.t_C = 0.02;
    p.gamma_f = 0.1;
    p.S_F = 20.0;
    p.dividend = 0.004;
    p.k_discount = 0.75;
    p.mu_freq = 0.2;
    p.sigma_switch = 0.8;
    p.herding_a = 0.0;
    p.herding_b = 1.0;
    p.gamma_diff = 1.0;
    p.zeta2_price = 1e-2;
    c.sim.n_agents = 50000;
    c.sim.n_price_samples = 50000;
    c.sim.dt = 1.0;
    c.sim.n_iters = 2000;
    c.sim.enable_switching = true;
    c.sim.S0 = 30.0;
    c.sim.rho_C0 = 0.5;
    c.sim.init = InitialOpinion::uniform;
    return c;
}

} // namespace detail

/// Complete, validated configuration for a named preset.
inline ExperimentConfig preset(const std::string& name) {
    ExperimentConfig c;
    if (name == "test1") {
        c = detail::base_single_population();
        c.sim.params.zeta2_price = 1e-4;
        c.sim.S0 = 10.0;
        c.sim.rho_C0 = 1.0;
        c.sim.init = InitialOpinion::uniform;
        c.overlay_lognormal = true;
    } else if (name == "test2") {
        c = detail::base_single_population();
        c.sim.params.zeta2_price = 0.13;
        c.sim.params.gamma_f = 1.3;
        c.sim.params.S_F = 20.0;
        c.sim.S0 = 20.0;
        c.sim.rho_C0 = 0.5;
        c.sim.init = InitialOpinion::equilibrium;
        c.sim.init_Ystar = 0.0;
        c.sim.init_kappa = 1.0;
        c.overlay_pareto = true;
        c.hill_scan_lo = 0.02;
        c.hill_scan_hi = 0.08;
    } else if (name == "test3a") {
        c = detail::base_switching(0.2, 0.55);
    } else if (name == "test3b") {
        c = detail::base_switching(0.2, 0.7);
    } else if (name == "test3c") {
        c = detail::base_switching(0.5, 0.4);
    } else if (name == "custom") {
        throw ConfigError("preset 'custom' has no defaults; supply every field in a config file");
    } else {
        throw ConfigError("unknown preset '" + name + "'");
    }
    c.preset = name;
    c.validate();
    return c;
}

// ---------------------------------------------------------------------------
// Flat key=value configuration
// ---------------------------------------------------------------------------

namespace detail {

inline bool parse_bool(const std::string& key, const std::string& v) {
    if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "off" || v == "no") return false;
    throw ConfigError("key '" + key + "': expected a boolean, got '" + v + "'");
}

inline double parse_real(const std::string& key, const std::string& v) {
    try {
        return io::parse_double(v);
    } catch (const Error&) {
        throw ConfigError("key '" + key + "': expected a number, got '" + v + "'");
    }
}

inline std::uint64_t parse_uint(const std::string& key, const std::string& v) {
    std::uint64_t out = 0;
    const auto* end = v.data() + v.size();
    auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end || v.empty())
        throw ConfigError("key '" + key + "': expected a non-negative integer, got '" + v + "'");
    return out;
}

inline std::string init_name(InitialOpinion i) {
    switch (i) {
    case InitialOpinion::uniform: return "uniform";
    case InitialOpinion::equilibrium: return "equilibrium";
    case InitialOpinion::point: return "point";
    }
    return "uniform";
}

inline InitialOpinion parse_init(const std::string& v) {
    if (v == "uniform") return InitialOpinion::uniform;
    if (v == "equilibrium") return InitialOpinion::equilibrium;
    if (v == "point") return InitialOpinion::point;
    throw ConfigError("key 'init': expected uniform|equilibrium|point, got '" + v + "'");
}

struct Field {
    const char* key;
    bool required_for_custom;
    std::function<std::string(const ExperimentConfig&)> get;
    std::function<void(ExperimentConfig&, const std::string&)> set;
};

#define KINMARKET_REAL(name, req, expr)                                                        \
    Field{name, req, [](const ExperimentConfig& c) { return io::format_double(c.expr); },      \
          [](ExperimentConfig& c, const std::string& v) { c.expr = parse_real(name, v); }}
#define KINMARKET_UINT(name, req, expr, type)                                                  \
    Field{name, req, [](const ExperimentConfig& c) { return std::to_string(c.expr); },         \
          [](ExperimentConfig& c, const std::string& v) {                                      \
              c.expr = static_cast<type>(parse_uint(name, v));                                 \
          }}
#define KINMARKET_BOOL(name, req, expr)                                                        \
    Field{name, req, [](const ExperimentConfig& c) { return std::string(c.expr ? "1" : "0"); }, \
          [](ExperimentConfig& c, const std::string& v) { c.expr = parse_bool(name, v); }}

inline const std::vector<Field>& fields() {
    static const std::vector<Field> table{
        Field{"preset", false, [](const ExperimentConfig& c) { return c.preset; },
              [](ExperimentConfig& c, const std::string& v) { c.preset = v; }},
        Field{"out", false, [](const ExperimentConfig& c) { return c.out_dir.string(); },
              [](ExperimentConfig& c, const std::string& v) { c.out_dir = v; }},
        KINMARKET_UINT("seed", true, sim.seed, std::uint64_t),
        KINMARKET_UINT("iters", true, sim.n_iters, std::size_t),
        KINMARKET_UINT("n_agents", true, sim.n_agents, std::size_t),
        KINMARKET_UINT("n_price_samples", true, sim.n_price_samples, std::size_t),
        KINMARKET_UINT("parallel", false, sim.threads, unsigned),
        KINMARKET_BOOL("pin_mean", true, sim.pin_mean),
        KINMARKET_BOOL("switching", true, sim.enable_switching),
        KINMARKET_REAL("dt", true, sim.dt),
        KINMARKET_REAL("S0", true, sim.S0),
        KINMARKET_REAL("rho_C0", true, sim.rho_C0),
        Field{"init", true, [](const ExperimentConfig& c) { return init_name(c.sim.init); },
              [](ExperimentConfig& c, const std::string& v) { c.sim.init = parse_init(v); }},
        KINMARKET_REAL("init_Ystar", true, sim.init_Ystar),
        KINMARKET_REAL("init_kappa", true, sim.init_kappa),
        KINMARKET_REAL("init_point", true, sim.init_point),
        KINMARKET_REAL("alpha1", true, sim.params.alpha1),
        KINMARKET_REAL("alpha2", true, sim.params.alpha2),
        KINMARKET_REAL("sigma2", true, sim.params.sigma2_opinion),
        KINMARKET_REAL("beta", true, sim.params.beta),
        KINMARKET_REAL("zeta2", true, sim.params.zeta2_price),
        KINMARKET_REAL("t_C", true, sim.params.t_C),
        KINMARKET_REAL("gamma_f", true, sim.params.gamma_f),
        KINMARKET_REAL("S_F", true, sim.params.S_F),
        KINMARKET_REAL("dividend", true, sim.params.dividend),
        KINMARKET_REAL("k_discount", true, sim.params.k_discount),
        KINMARKET_REAL("mu_freq", true, sim.params.mu_freq),
        KINMARKET_REAL("sigma_switch", true, sim.params.sigma_switch),
        KINMARKET_REAL("herding_a", true, sim.params.herding_a),
        KINMARKET_REAL("herding_b", true, sim.params.herding_b),
        KINMARKET_REAL("gamma_diff", true, sim.params.gamma_diff),
        Field{"value_L", true, [](const ExperimentConfig& c) { return io::format_double(c.sim.value_spec.L()); },
              [](ExperimentConfig&, const std::string&) {}},
        Field{"value_R0", true, [](const ExperimentConfig& c) { return io::format_double(c.sim.value_spec.R0()); },
              [](ExperimentConfig&, const std::string&) {}},
        Field{"value_r", true, [](const ExperimentConfig& c) { return io::format_double(c.sim.value_spec.r_exp()); },
              [](ExperimentConfig&, const std::string&) {}},
        Field{"value_l", true, [](const ExperimentConfig& c) { return io::format_double(c.sim.value_spec.l_exp()); },
              [](ExperimentConfig&, const std::string&) {}},
        KINMARKET_BOOL("overlay_chartist", true, overlay_chartist),
        KINMARKET_BOOL("overlay_lognormal", true, overlay_lognormal),
        KINMARKET_BOOL("overlay_pareto", true, overlay_pareto),
        KINMARKET_REAL("hill_k_frac", true, hill_k_frac),
        KINMARKET_REAL("hill_scan_lo", true, hill_scan_lo),
        KINMARKET_REAL("hill_scan_hi", true, hill_scan_hi),
        KINMARKET_UINT("y_bins", true, y_bins, std::size_t),
        KINMARKET_UINT("s_bins", true, s_bins, std::size_t),
    };
    return table;
}

#undef KINMARKET_REAL
#undef KINMARKET_UINT
#undef KINMARKET_BOOL

inline const Field* find_field(const std::string& key) {
    for (const auto& f : fields())
        if (key == f.key) return &f;
    return nullptr;
}

inline bool is_value_key(const std::string& k) {
    return k == "value_L" || k == "value_R0" || k == "value_r" || k == "value_l";
}

} // namespace detail

/// Parses `key = value` lines. Blank lines and `#` comments are skipped.
/// Duplicate or unknown keys are configuration errors.
inline std::map<std::string, std::string> parse_key_values(std::istream& is) {
    std::map<std::string, std::string> kv;
    std::string line;
    std::size_t lineno = 0;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        if (b == std::string::npos) return std::string();
        const auto e = s.find_last_not_of(" \t\r");
        return s.substr(b, e - b + 1);
    };
    while (std::getline(is, line)) {
        ++lineno;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key=value");
        auto key = trim(line.substr(0, eq));
        auto value = trim(line.substr(eq + 1));
        if (key.empty()) throw ConfigError("config line " + std::to_string(lineno) + ": empty key");
        if (!kv.emplace(key, value).second)
            throw ConfigError("config line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
    return kv;
}

/// Applies overrides on top of `base`. Every key must be known.
inline void apply_key_values(ExperimentConfig& cfg, const std::map<std::string, std::string>& kv) {
    std::optional<double> L, R0, r, l;
    for (const auto& [key, value] : kv) {
        const auto* f = detail::find_field(key);
        if (!f) throw ConfigError("unknown config key '" + key + "'");
        if (detail::is_value_key(key)) {
            const double x = detail::parse_real(key, value);
            (key == "value_L" ? L : key == "value_R0" ? R0 : key == "value_r" ? r : l) = x;
            continue;
        }
        f->set(cfg, value);
    }
    if (L || R0 || r || l) {
        const auto& v = cfg.sim.value_spec;
        cfg.sim.value_spec = ValueFunctionSpec(L.value_or(v.L()), R0.value_or(v.R0()),
                                               r.value_or(v.r_exp()), l.value_or(v.l_exp()));
    }
}

/// Builds a configuration from key=value pairs: a named preset is the base
/// and the remaining keys override it; `custom` (or no preset) requires
/// every experiment field.
inline ExperimentConfig config_from_key_values(const std::map<std::string, std::string>& kv) {
    const auto it = kv.find("preset");
    const std::string name = it == kv.end() ? "custom" : it->second;
    ExperimentConfig cfg;
    if (name == "custom") {
        std::vector<std::string> missing;
        for (const auto& f : detail::fields())
            if (f.required_for_custom && !kv.count(f.key)) missing.emplace_back(f.key);
        if (!missing.empty()) {
            std::string msg = "custom configuration is missing:";
            for (const auto& m : missing) msg += " " + m;
            throw ConfigError(msg);
        }
    } else {
        cfg = preset(name);
    }
    apply_key_values(cfg, kv);
    cfg.preset = name;
    cfg.validate();
    return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    auto is = io::open_in(path);
    return config_from_key_values(parse_key_values(is));
}

inline void write_config(std::ostream& os, const ExperimentConfig& cfg) {
    for (const auto& f : detail::fields()) os << f.key << '=' << f.get(cfg) << '\n';
}

// ---------------------------------------------------------------------------
// Regime classification
// ---------------------------------------------------------------------------

enum class Regime { crash, boom, damped_to_SF, oscillatory, stationary, unclassified };

inline std::string to_string(Regime r) {
    switch (r) {
    case Regime::crash: return "crash";
    case Regime::boom: return "boom";
    case Regime::damped_to_SF: return "damped_to_SF";
    case Regime::oscillatory: return "oscillatory";
    case Regime::stationary: return "stationary";
    case Regime::unclassified: return "unclassified";
    }
    return "unclassified";
}

namespace detail {

/// Least-squares slope of v[b, e) against its index.
inline double slope(const std::vector<double>& v, std::size_t b, std::size_t e) {
    const double n = static_cast<double>(e - b);
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = b; i < e; ++i) {
        const double x = static_cast<double>(i - b);
        sx += x;
        sy += v[i];
        sxx += x * x;
        sxy += x * v[i];
    }
    const double den = n * sxx - sx * sx;
    return den > 0.0 ? (n * sxy - sx * sy) / den : 0.0;
}

inline std::size_t crossings(const std::vector<double>& S, double level, std::size_t b) {
    std::size_t n = 0;
    int prev = 0;
    for (std::size_t i = b; i < S.size(); ++i) {
        const int s = S[i] > level ? 1 : S[i] < level ? -1 : 0;
        if (s == 0) continue;
        if (prev != 0 && s != prev) ++n;
        prev = s;
    }
    return n;
}

} // namespace detail

/// Classifies a mean-price path. Rules are tried in the order crash, boom,
/// damped_to_SF, oscillatory, stationary; the first match wins.
inline Regime classify_regime(const std::vector<double>& S, double S_F) {
    if (S.size() < 201)
        throw ConfigError("classify_regime: need at least 200 iterations, got " +
                          std::to_string(S.empty() ? 0 : S.size() - 1));
    if (!(S_F > 0.0)) throw DomainError("classify_regime: S_F must be > 0");
    const std::size_t n = S.size();
    const double last = S.back();
    const std::size_t q4 = n - n / 4;

    if (last < 0.05 * S_F && S.back() < S[q4] && detail::slope(S, q4, n) < 0.0) return Regime::crash;
    if (last > 3.0 * S_F && S.back() > S[q4] && detail::slope(S, q4, n) > 0.0) return Regime::boom;

    const std::size_t d10 = n - n / 10;
    const bool settled = std::all_of(S.begin() + static_cast<std::ptrdiff_t>(d10), S.end(),
                                     [&](double s) { return std::abs(s - S_F) < 0.02 * S_F; });
    if (settled && detail::crossings(S, S_F, 0) >= 1) return Regime::damped_to_SF;

    const std::size_t half = n / 2;
    double amp = 0.0;
    for (std::size_t i = half; i < n; ++i) amp = std::max(amp, std::abs(S[i] - S_F));
    if (detail::crossings(S, S_F, half) >= 4 && amp >= 0.05 * S_F) return Regime::oscillatory;

    const double S0 = S.front();
    if (S0 > 0.0 && std::all_of(S.begin(), S.end(),
                                [&](double s) { return std::abs(s - S0) < 0.01 * S0; }))
        return Regime::stationary;
    return Regime::unclassified;
}

inline Regime classify_regime(const std::vector<TrajectoryRecord>& records, double S_F) {
    std::vector<double> S;
    S.reserve(records.size());
    for (const auto& r : records) S.push_back(r.S);
    return classify_regime(S, S_F);
}

// ---------------------------------------------------------------------------
// Running and analysis
// ---------------------------------------------------------------------------

/// Ordered key=value report.
struct Summary {
    std::vector<std::pair<std::string, std::string>> entries;

    void add(const std::string& k, const std::string& v) { entries.emplace_back(k, v); }
    void add(const std::string& k, double v) { add(k, io::format_double(v)); }
    void add_count(const std::string& k, std::uint64_t v) { add(k, std::to_string(v)); }

    std::optional<std::string> get(const std::string& k) const {
        for (const auto& [key, v] : entries)
            if (key == k) return v;
        return std::nullopt;
    }
    double number(const std::string& k) const {
        auto v = get(k);
        if (!v) throw ConfigError("summary has no key '" + k + "'");
        return io::parse_double(*v);
    }
    void write(std::ostream& os) const {
        for (const auto& [k, v] : entries) os << k << '=' << v << '\n';
    }
};

namespace detail {

inline double chartist_kappa(const ModelParams& p) {
    // constant herding only: alpha1 H + alpha2 with H = a
    return p.sigma2_opinion / (p.alpha1 * p.herding_a + p.alpha2);
}

inline bool chartist_overlay_defined(const ModelParams& p) {
    return p.herding_b == 0.0 && p.gamma_diff == 1.0 && p.sigma2_opinion > 0.0;
}

inline stats::Histogram price_histogram(const std::vector<double>& s, std::size_t bins) {
    double hi = *std::max_element(s.begin(), s.end());
    if (!(hi > 0.0)) hi = 1.0;
    return stats::Histogram::from_samples(s, 0.0, hi, bins);
}

} // namespace detail

/// Statistics and overlay tabulations computed from terminal samples.
/// Files are written only when `out` is set.
inline Summary analyze_samples(const ExperimentConfig& cfg, const std::vector<TrajectoryRecord>& records,
                               const std::vector<double>& y, const std::vector<double>& s,
                               const std::filesystem::path* out) {
    const auto& p = cfg.sim.params;
    Summary sum;
    if (records.empty()) throw ConfigError("analyze: empty trajectory");
    const auto& last = records.back();
    sum.add("preset", cfg.preset);
    sum.add_count("seed", cfg.sim.seed);
    sum.add_count("iters", records.back().iter);
    sum.add("zeta2", p.zeta2_price);
    sum.add("sigma2", p.sigma2_opinion);
    sum.add("final_S", last.S);
    sum.add("final_Y", last.Y);
    sum.add("final_rho_C", last.rho_C);
    sum.add("final_rho_F", last.rho_F);
    sum.add("final_E", last.E);
    if (records.size() >= 201) sum.add("regime", to_string(classify_regime(records, p.S_F)));
    else sum.add("regime", "too_short");

    if (!y.empty()) {
        auto hy = stats::Histogram::from_samples(y, -1.0, 1.0, cfg.y_bins);
        sum.add_count("n_chartists", y.size());
        sum.add("y_mean", stats::moment(y, 1));
        if (out) {
            auto os = io::open_out(*out / "y_histogram.csv");
            io::write_histogram_csv(os, hy);
        }
        if (cfg.overlay_chartist && detail::chartist_overlay_defined(p) && std::abs(last.Y) < 1.0) {
            const double kappa = detail::chartist_kappa(p);
            const ChartistEquilibrium eq(cfg.sim.pin_mean ? 0.0 : last.Y, kappa);
            sum.add("chartist_kappa", kappa);
            sum.add("chartist_l1", stats::l1_density_distance(hy, eq));
            if (out) {
                auto os = io::open_out(*out / "overlay_chartist.csv");
                io::write_tabulation_csv(os, tabulate(eq, linear_grid(-0.999, 0.999, 401)), "y");
            }
        }
    }

    if (!s.empty()) {
        sum.add("s_mean", stats::moment(s, 1));
        sum.add("s_second_moment", stats::moment(s, 2));
        sum.add("s_min", *std::min_element(s.begin(), s.end()));
        const auto hs = detail::price_histogram(s, cfg.s_bins);
        if (out) {
            auto os = io::open_out(*out / "s_histogram.csv");
            io::write_histogram_csv(os, hs);
        }
        const bool positive = *std::min_element(s.begin(), s.end()) > 0.0;
        if (positive) {
            const auto fit = stats::lognormal_fit(s);
            sum.add("lognormal_fit_log_mean", fit.log_mean);
            sum.add("lognormal_fit_log_variance", fit.log_variance);
        }
        if (cfg.overlay_lognormal && last.E > cfg.sim.S0 * cfg.sim.S0) {
            const LognormalPriceLaw law(cfg.sim.S0, last.E);
            sum.add("lognormal_log_mean", law.log_mean());
            sum.add("lognormal_log_variance", law.log_variance());
            sum.add("lognormal_ks", stats::ks_statistic(s, [&](double x) { return law.cdf(x); }));
            if (out) {
                auto os = io::open_out(*out / "overlay_lognormal.csv");
                io::write_tabulation_csv(os, tabulate(law, linear_grid(hs.left(0), hs.right(hs.bins() - 1), 401)), "s");
            }
        }
        const auto n = static_cast<double>(s.size());
        if (positive && n * cfg.hill_scan_lo >= 10.0 && n * cfg.hill_k_frac >= 10.0) {
            const auto k = static_cast<std::size_t>(cfg.hill_k_frac * n);
            sum.add("hill_k", static_cast<double>(k));
            sum.add("hill_index", stats::hill_tail_index(s, k));
            const auto scan = stats::hill_scan(s, cfg.hill_scan_lo, cfg.hill_scan_hi);
            sum.add("hill_scan_median", scan.median);
            sum.add("hill_scan_min", scan.min);
            sum.add("hill_scan_max", scan.max);
            sum.add("hill_power_tail", stats::has_power_tail(scan) ? "1" : "0");
            if (out) {
                auto os = io::open_out(*out / "hill_scan.csv");
                os << "k,estimate\n";
                for (const auto& pt : scan.points) os << pt.k << ',' << io::format_double(pt.estimate) << '\n';
            }
        }
        if (cfg.overlay_pareto) {
            const auto fp = FokkerPlanckParams::from_model(p, cfg.sim.dt);
            const double rho_F = last.rho_F;
            if (fp.nu > 0.0 && rho_F > 0.0) {
                const auto ps = pareto_steady_state(fp, rho_F, p.gamma_f, p.S_F);
                sum.add("pareto_exponent", ps.mu_exp());
                sum.add("pareto_mean", ps.mean());
                if (positive)
                    sum.add("pareto_ks", stats::ks_statistic(s, [&](double x) { return ps.cdf(x); }));
                if (out) {
                    auto os = io::open_out(*out / "overlay_pareto.csv");
                    io::write_tabulation_csv(os, tabulate(ps, linear_grid(hs.left(0), hs.right(hs.bins() - 1), 401)), "s");
                }
            }
        }
    }
    return sum;
}

struct ExperimentResult {
    Trajectory trajectory;
    Summary summary;
};

/// Runs one experiment. When `write` is set every artifact goes to
/// cfg.out_dir: config.txt, trajectory.csv, y_samples.txt, s_samples.txt,
/// histograms, overlays and summary.txt.
inline ExperimentResult run_experiment(const ExperimentConfig& cfg, bool write = true) {
    cfg.validate();
    ExperimentResult res;
    res.trajectory = run(cfg.sim);
    const auto& t = res.trajectory;
    std::filesystem::path out = cfg.out_dir;
    if (write) {
        std::error_code ec;
        std::filesystem::create_directories(out, ec);
        if (ec) throw Error("io", "cannot create output directory " + out.string() + ": " + ec.message());
        {
            auto os = io::open_out(out / "config.txt");
            write_config(os, cfg);
        }
        {
            auto os = io::open_out(out / "trajectory.csv");
            io::write_trajectory_csv(os, t);
        }
        {
            auto os = io::open_out(out / "y_samples.txt");
            io::write_samples(os, t.y_samples);
        }
        {
            auto os = io::open_out(out / "s_samples.txt");
            io::write_samples(os, t.s_samples);
        }
    }
    res.summary = analyze_samples(cfg, t.records, t.y_samples, t.s_samples, write ? &out : nullptr);
    const auto& d = t.diagnostics;
    res.summary.add_count("interactions", d.interactions);
    res.summary.add_count("rejections", d.rejections);
    res.summary.add_count("switches_to_fundamentalist", d.switches_to_fundamentalist);
    res.summary.add_count("switches_to_chartist", d.switches_to_chartist);
    res.summary.add("max_abs_y", d.max_abs_y);
    res.summary.add("min_price", d.min_price);
    res.summary.add_count("conservation_violations", d.conservation_violations);
    if (d.conservation_violations != 0)
        throw InvariantError("conservation violated in " + std::to_string(d.conservation_violations) + " iterations");
    if (write) {
        auto os = io::open_out(out / "summary.txt");
        res.summary.write(os);
    }
    return res;
}

/// Recomputes the statistics of a saved run directory and rewrites
/// summary.txt (diagnostic counters from the original run are kept).
inline Summary analyze(const std::filesystem::path& dir) {
    const auto cfg = load_config(dir / "config.txt");
    std::vector<TrajectoryRecord> records;
    {
        auto is = io::open_in(dir / "trajectory.csv");
        records = io::read_trajectory_csv(is);
    }
    std::vector<double> y, s;
    {
        auto is = io::open_in(dir / "y_samples.txt");
        y = io::read_samples(is);
    }
    {
        auto is = io::open_in(dir / "s_samples.txt");
        s = io::read_samples(is);
    }
    auto sum = analyze_samples(cfg, records, y, s, &dir);
    std::map<std::string, std::string> old;
    if (std::filesystem::exists(dir / "summary.txt")) {
        auto is = io::open_in(dir / "summary.txt");
        old = parse_key_values(is);
    }
    for (const char* k : {"interactions", "rejections", "switches_to_fundamentalist",
                          "switches_to_chartist", "max_abs_y", "min_price", "conservation_violations"})
        if (auto it = old.find(k); it != old.end()) sum.add(k, it->second);
    auto os = io::open_out(dir / "summary.txt");
    sum.write(os);
    return sum;
}

} // namespace kinmarket
