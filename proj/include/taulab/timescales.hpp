#pragma once

// Autocorrelation-based timescale estimation.
//
// Autocorrelations are fitted with one or two decaying exponentials. Fitted
// timescales are reported in leak units: a component with timescale tau decays
// by a factor (1 - 1/tau) per time step, so an isolated linear neuron with leak
// tau yields exactly tau. The plain exponential decay constant of a component
// is -1/ln(1 - 1/tau).

#include "taulab/error.hpp"
#include "taulab/net.hpp"
#include "taulab/rng.hpp"
#include "taulab/stats.hpp"
#include "taulab/tasks.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace taulab {

struct AcCurve {
    /// values[l] is the autocorrelation at lag l, l = 0..max_lag.
    std::vector<double> values;
    int n_trials = 1;
    long steps = 0;

    int max_lag() const { return static_cast<int>(values.size()) - 1; }
};

inline constexpr double dead_variance = 1e-12;

/// Sample autocorrelation of one trace, normalized by the population variance
/// and by the number of overlapping pairs at each lag.
inline AcCurve autocorrelation(std::span<const double> trace, int max_lag) {
    const long T = static_cast<long>(trace.size());
    if (max_lag < 1) throw structural_error("max_lag must be >= 1");
    if (T < 10L * max_lag)
        throw precondition_error("trace of length " + std::to_string(T) + " is shorter than 10 * max_lag");
    const double mu = mean(trace);
    double var = 0.0;
    for (double v : trace) var += (v - mu) * (v - mu);
    var /= static_cast<double>(T);
    if (var < dead_variance) throw precondition_error("zero-variance trace (dead neuron)");
    std::vector<double> centered(trace.size());
    for (std::size_t t = 0; t < trace.size(); ++t) centered[t] = trace[t] - mu;
    AcCurve ac;
    ac.steps = T;
    ac.values.resize(static_cast<std::size_t>(max_lag) + 1);
    for (int lag = 0; lag <= max_lag; ++lag) {
        double s = 0.0;
        for (long t = lag; t < T; ++t) s += centered[static_cast<std::size_t>(t)] * centered[static_cast<std::size_t>(t - lag)];
        ac.values[static_cast<std::size_t>(lag)] = s / (var * static_cast<double>(T - lag));
    }
    return ac;
}

/// Column-wise autocorrelation of an activity matrix (rows = time, cols = neurons).
/// Dead columns come back empty.
inline std::vector<std::optional<std::vector<double>>> autocorrelation_columns(const Eigen::MatrixXd& activity,
                                                                               int max_lag) {
    const Eigen::Index T = activity.rows();
    if (T < 10L * max_lag)
        throw precondition_error("trace of length " + std::to_string(T) + " is shorter than 10 * max_lag");
    const Eigen::RowVectorXd mu = activity.colwise().mean();
    const Eigen::MatrixXd x = activity.rowwise() - mu;
    const Eigen::RowVectorXd var = x.colwise().squaredNorm() / static_cast<double>(T);
    const Eigen::Index n = activity.cols();
    Eigen::MatrixXd ac(max_lag + 1, n);
    for (int lag = 0; lag <= max_lag; ++lag) {
        const Eigen::Index m = T - lag;
        ac.row(lag) = (x.bottomRows(m).array() * x.topRows(m).array()).colwise().sum().matrix() /
                      static_cast<double>(m);
    }
    std::vector<std::optional<std::vector<double>>> out(static_cast<std::size_t>(n));
    for (Eigen::Index c = 0; c < n; ++c) {
        if (var(c) < dead_variance) continue;
        std::vector<double> v(static_cast<std::size_t>(max_lag) + 1);
        for (int l = 0; l <= max_lag; ++l) v[static_cast<std::size_t>(l)] = ac(l, c) / var(c);
        out[static_cast<std::size_t>(c)] = std::move(v);
    }
    return out;
}

// --- exponential fits -------------------------------------------------------

enum class ac_model { single, double_exp };

inline std::string_view to_string(ac_model m) {
    return m == ac_model::single ? "single" : "double";
}

struct ExpFit {
    /// Pairs (amplitude, timescale), sorted by increasing timescale.
    std::vector<std::pair<double, double>> components;
    double rss = std::numeric_limits<double>::infinity();
    bool converged = false;

    double slowest() const { return components.empty() ? 0.0 : components.back().second; }
};

struct AcFitReport {
    ac_model model = ac_model::single;
    double tau1 = 0.0;
    std::optional<double> tau2;
    double tau_net = 0.0;
    std::vector<double> amplitudes;
    double aic_single = 0.0;
    double aic_double = 0.0;
    double r_squared = 0.0;
    int fitted_lags = 0;
    bool converged_single = false;
    bool converged_double = false;
    ExpFit single;
    ExpFit dual;

    bool converged() const { return model == ac_model::single ? converged_single : converged_double; }
};

struct FitOptions {
    /// Number of log-spaced starting timescales.
    int starts = 8;
    int max_iterations = 400;
    /// Relative noise floor (times max |y|) below which residuals count as exact.
    double precision_floor = 1e-10;
    /// When the curve knows its sample count, lags past the first one whose value
    /// falls below noise_sigmas / sqrt(trials * steps) are not fitted: that tail
    /// is estimator noise, correlated across lags.
    bool truncate_at_noise = true;
    double noise_sigmas = 3.0;
    int min_lags = 10;
};

/// Autocorrelation magnitude indistinguishable from estimator noise; 0 when the
/// curve does not know its sample count or truncation is off.
inline double noise_level(const AcCurve& curve, const FitOptions& opt) {
    if (!opt.truncate_at_noise || curve.steps <= 0) return 0.0;
    return opt.noise_sigmas / std::sqrt(static_cast<double>(curve.steps) * std::max(1, curve.n_trials));
}

/// Last lag used by the fit.
inline int fit_lag_limit(const AcCurve& curve, const FitOptions& opt) {
    const int max_lag = curve.max_lag();
    if (!opt.truncate_at_noise || curve.steps <= 0) return max_lag;
    const double level = noise_level(curve, opt);
    for (int l = 1; l <= max_lag; ++l)
        if (curve.values[static_cast<std::size_t>(l)] < level) return std::min(max_lag, std::max(l, opt.min_lags));
    return max_lag;
}

namespace detail {

/// Model: sum_k a_k^2 * rho_k^lag with rho_k = 1 - 1/tau_k and
/// tau_k = 1 + (cap - 1) s_k^2 / (1 + s_k^2), which keeps tau in [1, cap).
/// u = (a_1, s_1, a_2, s_2, ...).
struct ExpModel {
    std::span<const double> lags;
    std::span<const double> y;
    int components = 1;
    double tau_cap = 1e6;

    double tau_of(double s) const { return 1.0 + (tau_cap - 1.0) * s * s / (1.0 + s * s); }
    double s_of(double tau) const {
        const double q = std::clamp((tau - 1.0) / (tau_cap - 1.0), 0.0, 0.99);
        return std::sqrt(q / (1.0 - q));
    }

    void residuals(const Eigen::VectorXd& u, Eigen::VectorXd& r, Eigen::MatrixXd* jac) const {
        const Eigen::Index m = static_cast<Eigen::Index>(y.size());
        r.resize(m);
        if (jac) jac->resize(m, 2 * components);
        for (Eigen::Index j = 0; j < m; ++j) r(j) = -y[static_cast<std::size_t>(j)];
        for (int k = 0; k < components; ++k) {
            const double a = u(2 * k), s = u(2 * k + 1);
            const double tau = tau_of(s);
            const double rho = 1.0 - 1.0 / tau;
            const double drho = (tau_cap - 1.0) * 2.0 * s / ((1.0 + s * s) * (1.0 + s * s)) / (tau * tau);
            for (Eigen::Index j = 0; j < m; ++j) {
                const double l = lags[static_cast<std::size_t>(j)];
                const double g = rho > 0.0 ? std::pow(rho, l) : (l == 0.0 ? 1.0 : 0.0);
                r(j) += a * a * g;
                if (jac) {
                    (*jac)(j, 2 * k) = 2.0 * a * g;
                    const double dg = rho > 0.0 ? l * std::pow(rho, l - 1.0) * drho : 0.0;
                    (*jac)(j, 2 * k + 1) = a * a * dg;
                }
            }
        }
    }
};

/// Damped Gauss-Newton (Levenberg-Marquardt with Marquardt diagonal scaling).
inline ExpFit levenberg_marquardt(const ExpModel& model, Eigen::VectorXd u, int max_iterations) {
    Eigen::VectorXd r, r_try;
    Eigen::MatrixXd J;
    model.residuals(u, r, &J);
    double rss = r.squaredNorm();
    double lambda = 1e-3;
    bool converged = false;
    for (int it = 0; it < max_iterations && !converged; ++it) {
        const Eigen::MatrixXd JtJ = J.transpose() * J;
        const Eigen::VectorXd g = J.transpose() * r;
        Eigen::VectorXd d = JtJ.diagonal().cwiseMax(1e-30);
        bool accepted = false;
        for (int tries = 0; tries < 30; ++tries) {
            Eigen::MatrixXd A = JtJ;
            A.diagonal() += lambda * d;
            const Eigen::VectorXd step = A.ldlt().solve(-g);
            if (!step.allFinite()) {
                lambda *= 10.0;
                continue;
            }
            const Eigen::VectorXd u_try = u + step;
            model.residuals(u_try, r_try, nullptr);
            const double rss_try = r_try.squaredNorm();
            if (std::isfinite(rss_try) && rss_try <= rss) {
                const double gain = rss - rss_try;
                const double rel_step = step.norm() / (u.norm() + 1e-12);
                u = u_try;
                lambda = std::max(lambda * 0.3, 1e-12);
                accepted = true;
                if (gain <= 1e-14 * rss || rel_step < 1e-12) converged = true;
                rss = rss_try;
                break;
            }
            lambda *= 10.0;
        }
        if (!accepted) {
            // No downhill step at any damping: a stationary point.
            converged = true;
            break;
        }
        model.residuals(u, r, &J);
    }
    ExpFit fit;
    fit.rss = rss;
    fit.converged = converged;
    for (int k = 0; k < model.components; ++k)
        fit.components.emplace_back(u(2 * k) * u(2 * k), model.tau_of(u(2 * k + 1)));
    std::sort(fit.components.begin(), fit.components.end(),
              [](const auto& a, const auto& b) { return a.second < b.second; });
    return fit;
}

inline std::vector<double> start_grid(int starts, double max_tau) {
    std::vector<double> g;
    const double lo = 1.5, hi = std::max(max_tau, 2.0);
    for (int i = 0; i < starts; ++i) {
        const double f = starts == 1 ? 0.0 : static_cast<double>(i) / (starts - 1);
        g.push_back(lo * std::pow(hi / lo, f));
    }
    return g;
}

/// Best non-negative amplitudes for fixed timescales.
inline Eigen::VectorXd amplitudes_for(std::span<const double> lags, std::span<const double> y,
                                      std::span<const double> taus) {
    const Eigen::Index m = static_cast<Eigen::Index>(y.size());
    const Eigen::Index k = static_cast<Eigen::Index>(taus.size());
    Eigen::MatrixXd G(m, k);
    Eigen::VectorXd Y(m);
    for (Eigen::Index j = 0; j < m; ++j) {
        Y(j) = y[static_cast<std::size_t>(j)];
        for (Eigen::Index c = 0; c < k; ++c)
            G(j, c) = std::pow(1.0 - 1.0 / taus[static_cast<std::size_t>(c)], lags[static_cast<std::size_t>(j)]);
    }
    Eigen::VectorXd a = G.colPivHouseholderQr().solve(Y);
    for (Eigen::Index c = 0; c < k; ++c)
        if (!(a(c) > 0.0)) a(c) = 1e-3 * std::max(1e-12, Y.cwiseAbs().maxCoeff());
    return a;
}

inline ExpFit fit_components(std::span<const double> lags, std::span<const double> y, int components,
                             const FitOptions& opt) {
    const double max_lag = lags.empty() ? 2.0 : lags.back();
    const auto grid = start_grid(opt.starts, max_lag);
    ExpModel model{lags, y, components, std::max(max_lag, 2.0)};
    ExpFit best;
    auto try_start = [&](std::span<const double> taus) {
        const Eigen::VectorXd amp = amplitudes_for(lags, y, taus);
        Eigen::VectorXd u(2 * components);
        for (int c = 0; c < components; ++c) {
            u(2 * c) = std::sqrt(amp(c));
            u(2 * c + 1) = model.s_of(taus[static_cast<std::size_t>(c)]);
        }
        ExpFit f = levenberg_marquardt(model, u, opt.max_iterations);
        if (f.rss < best.rss) best = std::move(f);
    };
    if (components == 1) {
        for (double t : grid) {
            const double taus[] = {t};
            try_start(taus);
        }
    } else {
        for (std::size_t i = 0; i < grid.size(); ++i)
            for (std::size_t j = i + 1; j < grid.size(); ++j) {
                const double taus[] = {grid[i], grid[j]};
                try_start(taus);
            }
    }
    return best;
}

}  // namespace detail

/// Least-squares Akaike criterion: m ln(RSS/m) + 2p.
inline double aic_least_squares(double rss, long m, int p) {
    return static_cast<double>(m) * std::log(rss / static_cast<double>(m)) + 2.0 * p;
}

/// Fits lags 1..L with one and two exponentials and keeps the model with the
/// lower AIC. tau_net is the slowest timescale of the selected model.
/// Against the noise level of the estimate: a curve already below it at lag 1
/// has no resolvable decay and reports the white limit tau = 1, and the double
/// model is only eligible when both amplitudes exceed it. Timescales are bounded
/// by the fitted window: a slower decay is indistinguishable from a constant.
inline AcFitReport fit_timescales(const AcCurve& curve, FitOptions opt = {}) {
    if (curve.max_lag() < 10) throw precondition_error("fit needs at least 10 usable lags");
    const int last = fit_lag_limit(curve, opt);
    std::vector<double> lags, y;
    for (int l = 1; l <= last; ++l) {
        const double v = curve.values[static_cast<std::size_t>(l)];
        if (!std::isfinite(v)) throw precondition_error("autocorrelation contains non-finite values");
        lags.push_back(l);
        y.push_back(v);
    }
    const long m = static_cast<long>(y.size());
    double ymax = 0.0;
    for (double v : y) ymax = std::max(ymax, std::abs(v));
    const double rss_floor = static_cast<double>(m) * std::pow(opt.precision_floor * std::max(ymax, 1e-300), 2);

    AcFitReport rep;
    rep.fitted_lags = static_cast<int>(m);
    rep.single = detail::fit_components(lags, y, 1, opt);
    rep.dual = detail::fit_components(lags, y, 2, opt);
    rep.converged_single = rep.single.converged;
    rep.converged_double = rep.dual.converged;
    rep.aic_single = aic_least_squares(std::max(rep.single.rss, rss_floor), m, 2);
    rep.aic_double = aic_least_squares(std::max(rep.dual.rss, rss_floor), m, 4);
    const double level = noise_level(curve, opt);
    const bool white = y.front() < level;
    if (white) {
        rep.single.components = {{0.0, 1.0}};
        rep.single.rss = 0.0;
        for (double v : y) rep.single.rss += v * v;
        rep.aic_single = aic_least_squares(std::max(rep.single.rss, rss_floor), m, 2);
    }
    bool resolved = true;
    for (const auto& c : rep.dual.components) resolved = resolved && c.first > level;
    const bool pick_double = !white && resolved && rep.aic_double < rep.aic_single;
    const ExpFit& chosen = pick_double ? rep.dual : rep.single;
    rep.model = pick_double ? ac_model::double_exp : ac_model::single;
    rep.tau1 = chosen.components.front().second;
    if (pick_double) rep.tau2 = chosen.components.back().second;
    rep.tau_net = chosen.slowest();
    for (const auto& c : chosen.components) rep.amplitudes.push_back(c.first);
    const double ybar = mean(y);
    double tss = 0.0;
    for (double v : y) tss += (v - ybar) * (v - ybar);
    rep.r_squared = tss > 0.0 ? 1.0 - chosen.rss / tss : (chosen.rss == 0.0 ? 1.0 : 0.0);
    return rep;
}

// --- network report ---------------------------------------------------------

struct NeuronTimescale {
    int neuron = 0;
    bool dead = false;
    std::optional<AcFitReport> fit;
    std::vector<double> ac;
};

struct TimescaleReport {
    std::vector<NeuronTimescale> neurons;
    int live = 0;
    std::optional<double> mean_tau_net;
    std::optional<double> std_tau_net;
    int max_lag = 0;
    int trials = 0;
    long steps = 0;
};

struct DriveProtocol {
    int trials = 10;
    long steps = 100000;
    int burn_in = 100;
    /// 0 selects min(200 k, steps / 100).
    int max_lag = 0;
};

/// Activity of the network under i.i.d. fair-bit input held for k steps.
/// Rows are time steps after the burn-in, columns neurons.
inline Eigen::MatrixXd simulate_activity(const NetworkParams& params, const NetConfig& cfg, int k, long steps,
                                         int burn_in, rng_engine& rng) {
    check_params(params, cfg);
    const int n = cfg.n;
    Eigen::MatrixXd activity(steps, n);
    Eigen::MatrixXd r = Eigen::MatrixXd::Zero(n, 1), drive, pre, next;
    Eigen::RowVectorXd input(1);
    const Eigen::VectorXd bias = params.total_bias();
    int bit = 0;
    const long total = steps + burn_in;
    for (long t = 0; t < total; ++t) {
        if (t % k == 0) bit = fair_bit(rng);
        input(0) = bit;
        step_batch(params, cfg, r, input, bias, drive, pre, next);
        r.swap(next);
        if (t >= burn_in) activity.row(t - burn_in) = r.col(0).transpose();
    }
    if (!activity.allFinite()) throw numeric_overflow_error("non-finite activity during simulation", -1);
    return activity;
}

/// Per-neuron trial-averaged autocorrelation, fits, and population statistics of
/// tau_net over live neurons.
inline TimescaleReport network_timescale_report(const NetworkParams& params, const NetConfig& cfg, int k,
                                                std::uint64_t seed, DriveProtocol protocol = {},
                                                FitOptions fit_opt = {}) {
    const int n = cfg.n;
    const int max_lag = protocol.max_lag > 0
                            ? protocol.max_lag
                            : static_cast<int>(std::min<long>(200L * k, protocol.steps / 100));
    std::vector<std::vector<double>> sum(static_cast<std::size_t>(n), std::vector<double>(max_lag + 1, 0.0));
    std::vector<int> live_trials(static_cast<std::size_t>(n), 0);
    for (int trial = 0; trial < protocol.trials; ++trial) {
        rng_engine rng = make_stream(seed, "drive", static_cast<std::uint64_t>(trial));
        const Eigen::MatrixXd act = simulate_activity(params, cfg, k, protocol.steps, protocol.burn_in, rng);
        const auto acs = autocorrelation_columns(act, max_lag);
        for (int i = 0; i < n; ++i) {
            const auto& a = acs[static_cast<std::size_t>(i)];
            if (!a) continue;
            ++live_trials[static_cast<std::size_t>(i)];
            for (int l = 0; l <= max_lag; ++l) sum[static_cast<std::size_t>(i)][static_cast<std::size_t>(l)] += (*a)[static_cast<std::size_t>(l)];
        }
    }
    TimescaleReport rep;
    rep.max_lag = max_lag;
    rep.trials = protocol.trials;
    rep.steps = protocol.steps;
    std::vector<double> taus;
    for (int i = 0; i < n; ++i) {
        NeuronTimescale nt;
        nt.neuron = i;
        const int lt = live_trials[static_cast<std::size_t>(i)];
        if (lt == 0) {
            nt.dead = true;
        } else {
            AcCurve curve;
            curve.n_trials = lt;
            curve.steps = protocol.steps;
            curve.values = sum[static_cast<std::size_t>(i)];
            for (auto& v : curve.values) v /= lt;
            nt.ac = curve.values;
            nt.fit = fit_timescales(curve, fit_opt);
            taus.push_back(nt.fit->tau_net);
            ++rep.live;
        }
        rep.neurons.push_back(std::move(nt));
    }
    if (rep.live >= 10) {
        rep.mean_tau_net = mean(taus);
        rep.std_tau_net = stddev(taus);
    }
    return rep;
}

inline void write_timescale_csv(std::ostream& os, const TimescaleReport& rep) {
    os << "neuron_id,model,tau1,tau2,tau_net,aic_single,aic_double,r2,converged,dead\n";
    for (const auto& nt : rep.neurons) {
        os << nt.neuron << ',';
        if (!nt.fit) {
            os << ",,,,,,,0,1\n";
            continue;
        }
        const auto& f = *nt.fit;
        os << to_string(f.model) << ',' << f.tau1 << ',' ;
        if (f.tau2) os << *f.tau2;
        os << ','
           << f.tau_net << ',' << f.aic_single << ',' << f.aic_double << ',' << f.r_squared << ','
           << (f.converged() ? 1 : 0) << ",0\n";
    }
}

}  // namespace taulab
