#pragma once

// Ablation, perturbation and re-training protocols scored by relative accuracy
// (acc - 0.5) / (acc_base - 0.5) on long random input streams.

#include "taulab/curricula.hpp"
#include "taulab/error.hpp"
#include "taulab/net.hpp"
#include "taulab/rng.hpp"
#include "taulab/stats.hpp"
#include "taulab/tasks.hpp"
#include "taulab/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

namespace taulab {

enum class intervention_kind { ablate, perturb_w, perturb_tau, retrain };

inline std::string_view to_string(intervention_kind k) {
    switch (k) {
    case intervention_kind::ablate: return "ablate";
    case intervention_kind::perturb_w: return "perturb_w";
    case intervention_kind::perturb_tau: return "perturb_tau";
    case intervention_kind::retrain: return "retrain";
    }
    return "?";
}

struct InterventionResult {
    intervention_kind kind = intervention_kind::ablate;
    std::string param;
    double acc_base = 0.0;
    std::vector<double> trial_acc;
    std::vector<double> trial_rel;
    double mean_rel = 0.0;
    double std_rel = 0.0;
};

inline double relative_accuracy(double acc, double acc_base) {
    return (acc - 0.5) / (acc_base - 0.5);
}

/// Minimum base accuracy for which relative accuracy is reported.
inline constexpr double min_base_accuracy = 0.55;

// --- ablation ---------------------------------------------------------------

/// Zeroes all incoming and outgoing weights of each listed neuron (recurrent
/// row and column, input weight, readout column of every head). Biases stay.
inline NetworkParams ablate(const NetworkParams& params, std::span<const int> neurons) {
    NetworkParams p = params;
    const int n = p.size();
    for (int i : neurons) {
        if (i < 0 || i >= n) throw structural_error("ablation index " + std::to_string(i) + " out of range");
        p.w_rec.row(i).setZero();
        p.w_rec.col(i).setZero();
        p.w_in(i) = 0.0;
        for (auto& h : p.heads) h.w_out.col(i).setZero();
    }
    return p;
}

enum class tau_rank { longest, shortest };

/// `count` neurons with the longest or shortest tau; equal taus rank by index.
inline std::vector<int> select_by_tau(const NetworkParams& params, int count, tau_rank which) {
    const int n = params.size();
    if (count < 0 || count > n) throw structural_error("selection count exceeds network size");
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        return which == tau_rank::longest ? params.tau(a) > params.tau(b) : params.tau(a) < params.tau(b);
    });
    idx.resize(static_cast<std::size_t>(count));
    std::sort(idx.begin(), idx.end());
    return idx;
}

/// Ablation group size: 4% of the network, rounded up.
inline int default_ablation_count(int n, double fraction = 0.04) {
    return static_cast<int>(std::ceil(fraction * n - 1e-9));
}

// --- perturbation -----------------------------------------------------------

enum class perturb_target { weights, tau };

/// Random-direction perturbation of relative size epsilon. Recurrent weights get
/// W + eps * (xi / |xi|_F) * |W|_F (xi off-diagonal, so the self-weight stays 0);
/// timescales get tau + eps * |xi / |xi| * |tau||, which never decreases tau.
inline NetworkParams perturb(const NetworkParams& params, perturb_target target, double epsilon, rng_engine& rng) {
    if (!(epsilon >= 0.0)) throw structural_error("perturbation strength must be >= 0");
    NetworkParams p = params;
    const int n = p.size();
    if (target == perturb_target::weights) {
        Eigen::MatrixXd xi(n, n);
        for (int c = 0; c < n; ++c)
            for (int r = 0; r < n; ++r) xi(r, c) = standard_normal(rng);
        mask_diagonal(xi);
        if (epsilon == 0.0) return p;
        p.w_rec += epsilon * (xi / xi.norm()) * params.w_rec.norm();
    } else {
        Eigen::VectorXd xi(n);
        for (int i = 0; i < n; ++i) xi(i) = standard_normal(rng);
        if (epsilon == 0.0) return p;
        p.tau += (epsilon * (xi / xi.norm()) * params.tau.norm()).cwiseAbs();
    }
    return p;
}

inline std::vector<double> default_epsilon_grid() {
    return {0.01, 0.02, 0.05, 0.1, 0.2, 0.5};
}

// --- scoring ----------------------------------------------------------------

struct EvalSetup {
    task_kind kind = task_kind::parity;
    int k = 1;
    int head = 0;
    int trials = 10;
    std::uint64_t seed = 0;
    StreamProtocol protocol{};
};

/// Per-trial stream accuracies. Trial t always sees the same input stream for a
/// given seed, so base and intervened networks are compared on identical inputs.
inline std::vector<double> stream_accuracies(const NetworkParams& params, const NetConfig& cfg, const EvalSetup& s,
                                             const std::function<NetworkParams(int)>& variant = {}) {
    std::vector<double> acc;
    for (int t = 0; t < s.trials; ++t) {
        rng_engine rng = make_stream(s.seed, "trial", static_cast<std::uint64_t>(t));
        if (variant)
            acc.push_back(evaluate_stream(variant(t), cfg, s.kind, s.k, s.head, 1, rng, s.protocol)[0]);
        else
            acc.push_back(evaluate_stream(params, cfg, s.kind, s.k, s.head, 1, rng, s.protocol)[0]);
    }
    return acc;
}

inline double base_accuracy(const NetworkParams& base, const NetConfig& cfg, const EvalSetup& s) {
    const auto acc = stream_accuracies(base, cfg, s);
    return mean(acc);
}

inline InterventionResult score_trials(intervention_kind kind, std::string param, double acc_base,
                                       std::vector<double> trial_acc) {
    if (!(acc_base > min_base_accuracy))
        throw precondition_error("base accuracy " + std::to_string(acc_base) +
                                 " is too close to chance for relative accuracy (needs > 0.55)");
    InterventionResult r;
    r.kind = kind;
    r.param = std::move(param);
    r.acc_base = acc_base;
    r.trial_acc = std::move(trial_acc);
    for (double a : r.trial_acc) r.trial_rel.push_back(relative_accuracy(a, acc_base));
    r.mean_rel = mean(r.trial_rel);
    r.std_rel = stddev(r.trial_rel);
    return r;
}

/// Relative accuracy of a fixed intervened network against its base.
inline InterventionResult relative_accuracy(const NetworkParams& base, const NetworkParams& intervened,
                                            const NetConfig& cfg, const EvalSetup& setup,
                                            intervention_kind kind = intervention_kind::ablate,
                                            std::string param = {}) {
    const double acc_base = base_accuracy(base, cfg, setup);
    if (!(acc_base > min_base_accuracy)) return score_trials(kind, std::move(param), acc_base, {});
    return score_trials(kind, std::move(param), acc_base, stream_accuracies(intervened, cfg, setup));
}

inline InterventionResult ablation_experiment(const NetworkParams& base, const NetConfig& cfg,
                                              const EvalSetup& setup, tau_rank which, int count) {
    const auto set = select_by_tau(base, count, which);
    const auto ablated = ablate(base, set);
    return relative_accuracy(base, ablated, cfg, setup, intervention_kind::ablate,
                             std::string(which == tau_rank::longest ? "longest:" : "shortest:") +
                                 std::to_string(count));
}

/// A fresh xi per trial; trial t uses the t-th input stream.
inline InterventionResult perturbation_experiment(const NetworkParams& base, const NetConfig& cfg,
                                                  const EvalSetup& setup, perturb_target target, double epsilon) {
    const double acc_base = base_accuracy(base, cfg, setup);
    const auto kind = target == perturb_target::weights ? intervention_kind::perturb_w : intervention_kind::perturb_tau;
    std::ostringstream label;
    label << epsilon;
    if (!(acc_base > min_base_accuracy)) return score_trials(kind, label.str(), acc_base, {});
    auto variant = [&](int trial) {
        rng_engine rng = make_stream(setup.seed, target == perturb_target::weights ? "perturb_w" : "perturb_tau",
                                     static_cast<std::uint64_t>(trial));
        return perturb(base, target, epsilon, rng);
    };
    return score_trials(kind, label.str(), acc_base, stream_accuracies(base, cfg, setup, variant));
}

struct RetrainOutcome {
    InterventionResult result;
    NetworkParams params;
};

/// Re-trains every parameter on depth `new_n` for exactly `epochs` epochs with a
/// single head (the existing head for new_n if present, else a fresh one).
/// Relative accuracy is taken against the original network at its own head.
inline RetrainOutcome retrain_to_higher_n(const NetworkParams& trained, const NetConfig& ncfg, const TrainConfig& tcfg,
                                          const TaskSpec& task, const EvalSetup& base_setup, int new_n, int epochs) {
    const double acc_base = base_accuracy(trained, ncfg, base_setup);
    if (!(acc_base > min_base_accuracy))
        throw precondition_error("base accuracy " + std::to_string(acc_base) +
                                 " is too close to chance for relative accuracy (needs > 0.55)");
    NetworkParams p = trained;
    rng_engine rng = make_stream(base_setup.seed, "retrain", static_cast<std::uint64_t>(new_n));
    const int existing = p.head_index_for(new_n);
    p.heads = {existing >= 0 ? p.heads[static_cast<std::size_t>(existing)] : make_head(p.size(), new_n, rng)};
    TaskSpec spec = task;
    spec.n = new_n;
    spec.len_min = spec.len_max = 0;
    auto opt = OptimizerState::for_params(p);
    for (int e = 0; e < epochs; ++e) train_epoch(p, opt, ncfg, tcfg, spec, rng, e);
    EvalSetup s = base_setup;
    s.head = 0;
    auto acc = stream_accuracies(p, ncfg, s);
    return {score_trials(intervention_kind::retrain, std::to_string(new_n), acc_base, std::move(acc)), std::move(p)};
}

/// run_id,kind,param,trial,acc_base,acc,acc_rel
inline void write_intervention_rows(std::ostream& os, const std::string& run_id, const InterventionResult& r) {
    for (std::size_t t = 0; t < r.trial_acc.size(); ++t)
        os << run_id << ',' << to_string(r.kind) << ',' << r.param << ',' << t << ',' << r.acc_base << ','
           << r.trial_acc[t] << ',' << r.trial_rel[t] << '\n';
}

}  // namespace taulab
