#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>
#include <thread>
#include <vector>

#include "kinmarket/error.hpp"
#include "kinmarket/fokker_planck.hpp"
#include "kinmarket/model.hpp"
#include "kinmarket/params.hpp"

namespace kinmarket {

using Rng = std::mt19937_64;

enum class Strategy : std::uint8_t { chartist, fundamentalist };

struct Agent {
    Strategy strategy = Strategy::chartist;
    double y = 0.0; ///< investment propensity, meaningful for chartists only
};

/// Fixed-size population of chartists and fundamentalists.
struct AgentEnsemble {
    std::vector<Agent> agents;

    std::size_t size() const { return agents.size(); }

    std::size_t chartist_count() const {
        return static_cast<std::size_t>(std::count_if(
            agents.begin(), agents.end(),
            [](const Agent& a) { return a.strategy == Strategy::chartist; }));
    }
    std::size_t fundamentalist_count() const { return size() - chartist_count(); }

    double rho_C() const {
        return agents.empty() ? 0.0
                              : static_cast<double>(chartist_count()) / static_cast<double>(size());
    }
    double rho_F() const {
        return agents.empty()
                   ? 0.0
                   : static_cast<double>(fundamentalist_count()) / static_cast<double>(size());
    }

    /// Mean propensity Y over chartists (0 when there are none).
    double mean_propensity() const {
        double sum = 0.0;
        std::size_t n = 0;
        for (const auto& a : agents)
            if (a.strategy == Strategy::chartist) {
                sum += a.y;
                ++n;
            }
        return n == 0 ? 0.0 : sum / static_cast<double>(n);
    }

    std::vector<double> chartist_propensities() const {
        std::vector<double> ys;
        ys.reserve(agents.size());
        for (const auto& a : agents)
            if (a.strategy == Strategy::chartist) ys.push_back(a.y);
        return ys;
    }
};

/// Price realizations plus the mean price at the last two iterations.
struct PriceEnsemble {
    std::vector<double> samples;
    double S_prev = 0.0;
    double S_curr = 0.0;
    double trend = 0.0; ///< relative trend estimate (S_curr - S_prev) / (dt S_curr)

    PriceEnsemble() = default;
    PriceEnsemble(std::size_t n, double S0) : samples(n, S0), S_prev(S0), S_curr(S0) {}

    double mean() const {
        if (samples.empty()) return 0.0;
        return std::accumulate(samples.begin(), samples.end(), 0.0) /
               static_cast<double>(samples.size());
    }
    double second_moment() const {
        if (samples.empty()) return 0.0;
        double acc = 0.0;
        for (double s : samples) acc += s * s;
        return acc / static_cast<double>(samples.size());
    }
    double min() const {
        return samples.empty() ? 0.0 : *std::min_element(samples.begin(), samples.end());
    }
};

/// Counters accumulated over a run.
struct Diagnostics {
    std::uint64_t interactions = 0;
    std::uint64_t rejections = 0; ///< interactions voided by |y'| > 1
    std::uint64_t switches_to_fundamentalist = 0;
    std::uint64_t switches_to_chartist = 0;
    double max_abs_y = 0.0;
    double min_price = std::numeric_limits<double>::infinity();
    std::uint64_t conservation_violations = 0; ///< iterations with N_C + N_F != N or rho sum != 1
};

namespace detail {
template <class URBG>
double uniform_symmetric(URBG& rng, double halfwidth) {
    if (halfwidth == 0.0) return 0.0;
    return std::uniform_real_distribution<double>(-halfwidth, halfwidth)(rng);
}

inline unsigned worker_count(unsigned threads, std::size_t work) {
    if (threads <= 1 || work < 2) return 1;
    return static_cast<unsigned>(std::min<std::size_t>(threads, work));
}

/// Runs body(worker, begin, end, rng) on `workers` contiguous chunks; every
/// chunk gets its own generator seeded from `master`.
template <class Body>
void parallel_chunks(Rng& master, unsigned workers, std::size_t n, Body&& body) {
    std::vector<std::uint64_t> seeds(workers);
    for (auto& s : seeds) s = master();
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t b = n * w / workers;
        const std::size_t e = n * (w + 1) / workers;
        pool.emplace_back([&, w, b, e] {
            Rng local(seeds[w]);
            body(w, b, e, local);
        });
    }
    for (auto& t : pool) t.join();
}
} // namespace detail

struct InteractionResult {
    double y;
    double y_star;
    bool accepted;
};

/// Binary exchange of propensities
///   y'  = (1 - a1 H(y)  - a2) y  + a1 H(y)  y* + a2 phi + D(y)  eta
///   y*' = (1 - a1 H(y*) - a2) y* + a1 H(y*) y  + a2 phi + D(y*) eta*
/// The interaction is void (inputs returned) if either output leaves [-1, 1].
inline InteractionResult binary_interact(double y, double y_star, double phi, double eta,
                                         double eta_star, const ModelParams& p) {
    const double hy = herding(p, y);
    const double hs = herding(p, y_star);
    const double y1 = (1.0 - p.alpha1 * hy - p.alpha2) * y + p.alpha1 * hy * y_star +
                      p.alpha2 * phi + diffusion(p, y) * eta;
    const double y2 = (1.0 - p.alpha1 * hs - p.alpha2) * y_star + p.alpha1 * hs * y +
                      p.alpha2 * phi + diffusion(p, y_star) * eta_star;
    if (std::abs(y1) > 1.0 || std::abs(y2) > 1.0) return {y, y_star, false};
    return {y1, y2, true};
}

/// One collision step of the chartist population: the chartists are split
/// into floor(N_C / 2) disjoint random pairs and each pair interacts with
/// probability rho_C dt (constant Maxwellian kernel).
template <class URBG>
void step_chartists(AgentEnsemble& ens, double phi, const ModelParams& p, double dt, URBG& rng,
                    Diagnostics* diag = nullptr, unsigned threads = 0) {
    const double rho_C = ens.rho_C();
    const double prob = rho_C * dt;
    if (prob > 1.0) {
        std::ostringstream os;
        os << "interaction probability rho_C*dt = " << prob << " exceeds 1";
        throw ConfigError(os.str());
    }
    std::vector<std::size_t> idx;
    idx.reserve(ens.size());
    for (std::size_t i = 0; i < ens.size(); ++i)
        if (ens.agents[i].strategy == Strategy::chartist) idx.push_back(i);
    if (idx.size() < 2) return;
    std::shuffle(idx.begin(), idx.end(), rng);

    const double c = uniform_halfwidth(p.sigma2_opinion);
    const std::size_t pairs = idx.size() / 2;
    auto do_pairs = [&](std::size_t b, std::size_t e, auto& g, std::uint64_t& n_int,
                        std::uint64_t& n_rej) {
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        for (std::size_t k = b; k < e; ++k) {
            if (u01(g) >= prob) continue;
            Agent& a = ens.agents[idx[2 * k]];
            Agent& b2 = ens.agents[idx[2 * k + 1]];
            const double eta = detail::uniform_symmetric(g, c);
            const double eta_s = detail::uniform_symmetric(g, c);
            const auto r = binary_interact(a.y, b2.y, phi, eta, eta_s, p);
            ++n_int;
            if (!r.accepted) {
                ++n_rej;
                continue;
            }
            a.y = r.y;
            b2.y = r.y_star;
        }
    };

    std::uint64_t n_int = 0, n_rej = 0;
    const unsigned workers = detail::worker_count(threads, pairs);
    if (workers == 1) {
        do_pairs(0, pairs, rng, n_int, n_rej);
    } else {
        std::vector<std::uint64_t> wi(workers, 0), wr(workers, 0);
        Rng master(rng());
        detail::parallel_chunks(master, workers, pairs,
                                [&](unsigned w, std::size_t b, std::size_t e, Rng& g) {
                                    do_pairs(b, e, g, wi[w], wr[w]);
                                });
        for (unsigned w = 0; w < workers; ++w) {
            n_int += wi[w];
            n_rej += wr[w];
        }
    }
    if (diag) {
        diag->interactions += n_int;
        diag->rejections += n_rej;
    }
}

/// Updates every price sample independently:
///   s' = s + beta dt (rho_C t_C Y s + rho_F gamma_f (S_F - s)) + eta s,
/// eta uniform with variance zeta^2 dt. Refreshes S_prev, S_curr and the
/// relative trend (S_curr - S_prev) / (dt S_curr).
template <class URBG>
void step_price(PriceEnsemble& prices, double Y, double rho_C, double rho_F, const ModelParams& p,
                double dt, URBG& rng, unsigned threads = 0) {
    check_price_noise(p, rho_C, rho_F, dt);
    const double c = uniform_halfwidth(p.zeta2_price * dt);
    const double growth = 1.0 + p.beta * dt * (rho_C * p.t_C * Y - rho_F * p.gamma_f);
    const double pull = p.beta * dt * rho_F * p.gamma_f * p.S_F;
    auto body = [&](std::size_t b, std::size_t e, auto& g) {
        for (std::size_t i = b; i < e; ++i) {
            double& s = prices.samples[i];
            s = s * (growth + detail::uniform_symmetric(g, c)) + pull;
        }
    };
    const std::size_t n = prices.samples.size();
    const unsigned workers = detail::worker_count(threads, n);
    if (workers == 1) {
        body(0, n, rng);
    } else {
        Rng master(rng());
        detail::parallel_chunks(master, workers, n,
                                [&](unsigned, std::size_t b, std::size_t e, Rng& g) {
                                    body(b, e, g);
                                });
    }
    const double lowest = prices.min();
    if (lowest < 0.0) {
        std::ostringstream os;
        os << "negative price sample " << lowest << " (Y=" << Y << ", rho_C=" << rho_C
           << ", rho_F=" << rho_F << ")";
        throw InvariantError(os.str());
    }
    prices.S_prev = prices.S_curr;
    prices.S_curr = prices.mean();
    prices.trend = prices.S_curr > 0.0 ? (prices.S_curr - prices.S_prev) / (dt * prices.S_curr)
                                       : 0.0;
}

/// Stochastic strategy exchange. A chartist with propensity y becomes a
/// fundamentalist with probability min(1, dt mu rho_F B(X_F - X_C(y))); a
/// fundamentalist meets a chartist with propensity y drawn from the current
/// chartists and adopts it with probability min(1, dt mu rho_C B(X_C(y) - X_F)).
/// All decisions use the state at the start of the step.
template <class URBG>
void step_strategy_exchange(AgentEnsemble& ens, double S, double trend, const ModelParams& p,
                            double dt, URBG& rng, Diagnostics* diag = nullptr) {
    if (!(S > 0.0)) throw DomainError("strategy exchange: price must be positive");
    const double rho_C = ens.rho_C();
    const double rho_F = ens.rho_F();
    const double S_dot = trend * S;
    const double X_F = fundamentalist_profit(p, S);
    auto prob = [&](double rho, double diff) {
        if (rho == 0.0 || dt * p.mu_freq == 0.0) return 0.0;
        return std::min(1.0, dt * p.mu_freq * rho * switch_rate(p, diff));
    };
    // X_C depends on y only through psi(y) = sgn(y).
    auto X_C = [&](double y) { return chartist_profit(p, y, S, S_dot); };
    const double c_to_f[3] = {prob(rho_F, X_F - X_C(-1.0)), prob(rho_F, X_F - X_C(0.0)),
                              prob(rho_F, X_F - X_C(1.0))};
    const double f_to_c[3] = {prob(rho_C, X_C(-1.0) - X_F), prob(rho_C, X_C(0.0) - X_F),
                              prob(rho_C, X_C(1.0) - X_F)};
    auto slot = [](double y) { return static_cast<int>(psi(y)) + 1; };

    const auto ys = ens.chartist_propensities();
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::uniform_int_distribution<std::size_t> pick(0, ys.empty() ? 0 : ys.size() - 1);
    std::vector<std::pair<std::size_t, double>> to_chartist;
    std::vector<std::size_t> to_fund;
    for (std::size_t i = 0; i < ens.size(); ++i) {
        const Agent& a = ens.agents[i];
        if (a.strategy == Strategy::chartist) {
            if (u01(rng) < c_to_f[slot(a.y)]) to_fund.push_back(i);
        } else {
            const double y = ys.empty() ? 0.0 : ys[pick(rng)];
            if (u01(rng) < f_to_c[slot(y)]) to_chartist.emplace_back(i, y);
        }
    }
    for (std::size_t i : to_fund) ens.agents[i].strategy = Strategy::fundamentalist;
    for (auto [i, y] : to_chartist) ens.agents[i] = {Strategy::chartist, y};
    if (diag) {
        diag->switches_to_fundamentalist += to_fund.size();
        diag->switches_to_chartist += to_chartist.size();
    }
}

/// Shifts chartist propensities so that their mean is 0, then clamps to
/// [-1, 1].
inline void recenter_propensities(AgentEnsemble& ens) {
    const double m = ens.mean_propensity();
    for (auto& a : ens.agents)
        if (a.strategy == Strategy::chartist) a.y = std::clamp(a.y - m, -1.0, 1.0);
}

// ---------------------------------------------------------------------------
// Full simulation
// ---------------------------------------------------------------------------

enum class InitialOpinion {
    uniform,     ///< mirrored uniform samples on [-1, 1] (mean exactly 0)
    equilibrium, ///< samples of the chartist equilibrium density
    point,       ///< every chartist at init_point
};

struct SimConfig {
    ModelParams params;
    ValueFunctionSpec value_spec = ValueFunctionSpec::standard();
    std::size_t n_agents = 50000;
    std::size_t n_price_samples = 50000;
    double dt = 1.0;
    std::size_t n_iters = 1500;
    std::uint64_t seed = 0;
    bool enable_switching = false;
    double S0 = 10.0;
    double rho_C0 = 1.0;
    InitialOpinion init = InitialOpinion::uniform;
    double init_Ystar = 0.0; ///< equilibrium init: Y*
    double init_kappa = 1.0; ///< equilibrium init: lambda / (alpha1_t + alpha2_t)
    double init_point = 0.0;
    bool pin_mean = false;
    unsigned threads = 0; ///< 0 or 1: sequential reference mode

    void validate() const {
        params.validate();
        if (!(dt > 0.0)) throw ConfigError("dt must be > 0");
        if (n_agents == 0) throw ConfigError("n_agents must be > 0");
        if (n_price_samples == 0) throw ConfigError("n_price_samples must be > 0");
        if (!(S0 > 0.0)) throw ConfigError("S0 must be > 0");
        if (!(rho_C0 >= 0.0 && rho_C0 <= 1.0)) throw ConfigError("rho_C0 must lie in [0,1]");
        if (dt > 1.0) throw ConfigError("interaction probability rho_C*dt may exceed 1 (dt > 1)");
        if (init == InitialOpinion::point && !(std::abs(init_point) <= 1.0))
            throw ConfigError("init_point must lie in [-1,1]");
        check_opinion_noise(params);
        // The price-noise support must hold for every fraction the run can visit.
        if (enable_switching) {
            check_price_noise(params, 1.0, 0.0, dt);
            check_price_noise(params, 0.0, 1.0, dt);
        } else {
            check_price_noise(params, rho_C0, 1.0 - rho_C0, dt);
        }
    }
};

struct TrajectoryRecord {
    std::size_t iter;
    double t, S, Y, rho_C, rho_F, E;
};

struct Trajectory {
    std::vector<TrajectoryRecord> records;
    std::vector<double> y_samples; ///< terminal chartist propensities
    std::vector<double> s_samples; ///< terminal price samples
    Diagnostics diagnostics;
};

/// Builds the initial population: round(rho_C0 N) chartists.
inline AgentEnsemble initial_agents(const SimConfig& cfg, Rng& rng) {
    AgentEnsemble ens;
    ens.agents.resize(cfg.n_agents, Agent{Strategy::fundamentalist, 0.0});
    const auto n_c = static_cast<std::size_t>(
        std::llround(cfg.rho_C0 * static_cast<double>(cfg.n_agents)));
    std::vector<double> ys(n_c, 0.0);
    switch (cfg.init) {
    case InitialOpinion::uniform: {
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (std::size_t i = 0; i + 1 < n_c; i += 2) {
            ys[i] = u(rng);
            ys[i + 1] = -ys[i];
        }
        break;
    }
    case InitialOpinion::equilibrium: {
        const ChartistEquilibrium eq(cfg.init_Ystar, cfg.init_kappa);
        const bool mirror = cfg.init_Ystar == 0.0;
        for (std::size_t i = 0; i < n_c; ++i) {
            if (mirror && i % 2 == 1) {
                ys[i] = -ys[i - 1];
                continue;
            }
            ys[i] = eq.sample(rng);
        }
        if (mirror && n_c % 2 == 1) ys.back() = 0.0;
        break;
    }
    case InitialOpinion::point:
        std::fill(ys.begin(), ys.end(), cfg.init_point);
        break;
    }
    for (std::size_t i = 0; i < n_c; ++i) ens.agents[i] = {Strategy::chartist, ys[i]};
    return ens;
}

namespace detail {
inline TrajectoryRecord make_record(std::size_t iter, double dt, const AgentEnsemble& ens,
                                    const PriceEnsemble& prices) {
    return {iter,
            static_cast<double>(iter) * dt,
            prices.S_curr,
            ens.mean_propensity(),
            ens.rho_C(),
            ens.rho_F(),
            prices.second_moment()};
}

inline void audit(const AgentEnsemble& ens, const PriceEnsemble& prices, std::size_t n_agents,
                  Diagnostics& d) {
    std::size_t n_c = 0;
    for (const auto& a : ens.agents)
        if (a.strategy == Strategy::chartist) {
            ++n_c;
            d.max_abs_y = std::max(d.max_abs_y, std::abs(a.y));
        }
    const std::size_t n_f = ens.size() - n_c;
    const double rc = static_cast<double>(n_c) / static_cast<double>(ens.size());
    const double rf = static_cast<double>(n_f) / static_cast<double>(ens.size());
    if (ens.size() != n_agents || n_c + n_f != n_agents || rc + rf != 1.0)
        ++d.conservation_violations;
    d.min_price = std::min(d.min_price, prices.min());
}
} // namespace detail

/// Runs the kinetic Monte Carlo scheme. Each iteration: (1) read Y, rho,
/// S and the trend; (2) chartist collisions with phi = Phi(trend);
/// (3) strategy exchange if enabled; (4) price update with the values read
/// in (1); then a record is appended. Deterministic for a fixed seed and
/// thread count.
inline Trajectory run(const SimConfig& cfg) {
    cfg.validate();
    Rng rng(cfg.seed);
    AgentEnsemble ens = initial_agents(cfg, rng);
    PriceEnsemble prices(cfg.n_price_samples, cfg.S0);
    const ModelParams& p = cfg.params;

    Trajectory traj;
    traj.records.reserve(cfg.n_iters + 1);
    traj.records.push_back(detail::make_record(0, cfg.dt, ens, prices));
    detail::audit(ens, prices, cfg.n_agents, traj.diagnostics);

    for (std::size_t it = 1; it <= cfg.n_iters; ++it) {
        const double Y = ens.mean_propensity();
        const double rho_C = ens.rho_C();
        const double rho_F = ens.rho_F();
        const double S = prices.S_curr;
        const double trend = prices.trend;
        const double phi = value_function(cfg.value_spec, trend);

        step_chartists(ens, phi, p, cfg.dt, rng, &traj.diagnostics, cfg.threads);
        if (cfg.enable_switching && S > 0.0)
            step_strategy_exchange(ens, S, trend, p, cfg.dt, rng, &traj.diagnostics);
        if (cfg.pin_mean) recenter_propensities(ens);
        step_price(prices, Y, rho_C, rho_F, p, cfg.dt, rng, cfg.threads);

        traj.records.push_back(detail::make_record(it, cfg.dt, ens, prices));
        detail::audit(ens, prices, cfg.n_agents, traj.diagnostics);
    }
    traj.y_samples = ens.chartist_propensities();
    traj.s_samples = std::move(prices.samples);
    return traj;
}

} // namespace kinmarket
