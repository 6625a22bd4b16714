#pragma once

// Training curricula: none, single-head, multi-head, multi-head-sliding and
// all-heads-at-once.

#include "taulab/error.hpp"
#include "taulab/net.hpp"
#include "taulab/rng.hpp"
#include "taulab/tasks.hpp"
#include "taulab/trainer.hpp"

#include <chrono>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace taulab {

enum class curriculum_mode { none, single, multi, sliding, all_at_once };

inline std::string_view to_string(curriculum_mode m) {
    switch (m) {
    case curriculum_mode::none: return "none";
    case curriculum_mode::single: return "single";
    case curriculum_mode::multi: return "multi";
    case curriculum_mode::sliding: return "sliding";
    case curriculum_mode::all_at_once: return "all_at_once";
    }
    return "?";
}

struct CurriculumConfig {
    curriculum_mode mode = curriculum_mode::multi;
    /// Target depth for mode none.
    int fixed_n = 10;
    int sliding_heads = 10;
    int sliding_shift = 5;
    int all_max_n = 20;

    bool operator==(const CurriculumConfig&) const = default;

    void validate() const {
        if (mode == curriculum_mode::none && fixed_n < 2) throw config_error("curriculum.fixed_n", "must be >= 2");
        if (mode == curriculum_mode::sliding) {
            if (sliding_heads < 1) throw config_error("curriculum.sliding_heads", "sliding mode requires H >= 1");
            if (sliding_shift < 1) throw config_error("curriculum.sliding_shift", "sliding mode requires w >= 1");
        }
        if (mode == curriculum_mode::all_at_once && all_max_n < 2)
            throw config_error("curriculum.all_max_n", "must be >= 2");
    }

    std::vector<int> initial_targets() const {
        std::vector<int> t;
        switch (mode) {
        case curriculum_mode::none: t = {fixed_n}; break;
        case curriculum_mode::single:
        case curriculum_mode::multi: t = {2}; break;
        case curriculum_mode::sliding:
            for (int i = 0; i < sliding_heads; ++i) t.push_back(2 + i);
            break;
        case curriculum_mode::all_at_once:
            for (int i = 2; i <= all_max_n; ++i) t.push_back(i);
            break;
        }
        return t;
    }
};

struct Budget {
    long max_epochs = 300;
    /// 0 disables the wall-clock limit.
    double max_wall_seconds = 0.0;
    int max_n = 30;

    bool operator==(const Budget&) const = default;
};

struct StepRecord {
    int step = 0;
    std::vector<int> targets;
    long epochs_used = 0;
    long epoch = 0;
    std::vector<double> accuracies;
    double mean_tau = 0.0;
    double std_tau = 0.0;
    double wall_seconds = 0.0;
    bool solved = false;
    std::vector<int> newly_solved;
};

struct CurriculumState {
    CurriculumConfig config;
    Budget budget;
    int step = 0;
    std::vector<int> targets;
    long epochs_total = 0;
    long epochs_in_step = 0;
    std::vector<StepRecord> history;
    /// First epoch (1-based) at which each depth reached the threshold.
    std::map<int, long> solve_epoch;
    std::optional<int> max_solved_n;
    bool terminal = false;
    std::string stop_reason;

    static CurriculumState start(const CurriculumConfig& cfg, const Budget& budget) {
        cfg.validate();
        CurriculumState s;
        s.config = cfg;
        s.budget = budget;
        s.targets = cfg.initial_targets();
        return s;
    }
};

/// Applies the advancement rule once the active heads have been evaluated.
/// Only head structure changes; recurrent/input weights, biases and tau are
/// carried over untouched. Momentum is not part of this state; callers reset it.
inline std::pair<CurriculumState, NetworkParams> advance(const CurriculumState& state, const NetworkParams& params,
                                                         std::span<const double> accuracies, double threshold,
                                                         rng_engine& init_rng) {
    if (accuracies.size() != state.targets.size())
        throw structural_error("advance needs one accuracy per active head");
    CurriculumState s = state;
    NetworkParams p = params;
    if (s.terminal) return {s, p};
    bool all_ok = true;
    for (double a : accuracies) all_ok = all_ok && a >= threshold;
    if (!all_ok) return {s, p};

    const int n = p.size();
    const int deepest = s.targets.back();
    s.max_solved_n = s.max_solved_n ? std::max(*s.max_solved_n, deepest) : deepest;

    auto past_budget = [&](int next_deepest) {
        if (next_deepest > s.budget.max_n) {
            s.terminal = true;
            s.stop_reason = "max_n";
            return true;
        }
        return false;
    };

    switch (s.config.mode) {
    case curriculum_mode::none:
    case curriculum_mode::all_at_once:
        s.terminal = true;
        s.stop_reason = "solved";
        break;
    case curriculum_mode::single:
        if (past_budget(deepest + 1)) break;
        p.heads.clear();
        p.heads.push_back(make_head(n, deepest + 1, init_rng));
        s.targets = {deepest + 1};
        break;
    case curriculum_mode::multi:
        if (past_budget(deepest + 1)) break;
        p.heads.push_back(make_head(n, deepest + 1, init_rng));
        s.targets.push_back(deepest + 1);
        break;
    case curriculum_mode::sliding: {
        const int w = s.config.sliding_shift;
        if (past_budget(deepest + w)) break;
        std::vector<ReadoutHead> heads;
        std::vector<int> targets;
        for (int t : s.targets) {
            const int nt = t + w;
            const int existing = p.head_index_for(nt);
            heads.push_back(existing >= 0 ? p.heads[static_cast<std::size_t>(existing)]
                                          : make_head(n, nt, init_rng));
            targets.push_back(nt);
        }
        p.heads = std::move(heads);
        s.targets = std::move(targets);
        break;
    }
    }
    if (!s.terminal) {
        ++s.step;
        s.epochs_in_step = 0;
    }
    return {s, p};
}

// --- full run ---------------------------------------------------------------

/// Everything needed to continue a run: checkpointing this is a resume point.
struct RunState {
    NetConfig net;
    TrainConfig train;
    TaskSpec task;
    std::uint64_t seed = 0;
    NetworkParams params;
    OptimizerState opt;
    CurriculumState curriculum;
    rng_engine init_rng;
    rng_engine data_rng;
    rng_engine eval_rng;
    std::vector<EpochRecord> log;
    std::optional<std::string> failure;
};

struct RunHooks {
    /// Called with the solved network right before its heads change.
    std::function<void(const RunState&, int solved_n)> on_solved;
    /// Called after every epoch (checkpointing point).
    std::function<void(const RunState&)> on_epoch;
    bool record_wall_time = false;
};

inline RunState start_run(const CurriculumConfig& ccfg, const NetConfig& ncfg, const TrainConfig& tcfg,
                          const TaskSpec& task, std::uint64_t seed, const Budget& budget) {
    ncfg.validate();
    tcfg.validate();
    task.validate();
    RunState run;
    run.net = ncfg;
    run.train = tcfg;
    run.task = task;
    run.seed = seed;
    run.init_rng = make_stream(seed, "init");
    run.data_rng = make_stream(seed, "data");
    run.eval_rng = make_stream(seed, "eval");
    run.curriculum = CurriculumState::start(ccfg, budget);
    run.params = init_params(ncfg, run.curriculum.targets, run.init_rng);
    if (tcfg.fixed_tau_value) run.params.tau.setConstant(*tcfg.fixed_tau_value);
    project(run.params, ncfg);
    run.opt = OptimizerState::for_params(run.params);
    return run;
}

inline bool run_finished(const RunState& run) {
    const auto& c = run.curriculum;
    return c.terminal || run.failure.has_value() || c.epochs_total >= c.budget.max_epochs;
}

/// One epoch of training, evaluation, bookkeeping and (if earned) advancement.
inline void run_epoch(RunState& run, const RunHooks& hooks = {}, double wall_seconds = 0.0) {
    auto& c = run.curriculum;
    const TaskSpec spec = task_for_heads(run.task, run.params);
    double loss = 0.0;
    try {
        loss = train_epoch(run.params, run.opt, run.net, run.train, spec, run.data_rng, c.epochs_total);
    } catch (const diverged_error& e) {
        run.failure = e.what();
        c.terminal = true;
        c.stop_reason = "diverged";
        return;
    }
    ++c.epochs_total;
    ++c.epochs_in_step;
    const auto heads = all_heads(run.params);
    const auto acc = evaluate_heads(run.params, run.net, spec, heads, run.train.eval_sequences, run.eval_rng);
    const auto [mt, st] = tau_moments(run.params);
    const double wall = hooks.record_wall_time ? wall_seconds : 0.0;
    run.log.push_back({c.epochs_total, c.targets, loss, acc, mt, st, wall});

    const double thr = run.train.accuracy_threshold;
    std::vector<int> newly;
    for (std::size_t i = 0; i < acc.size(); ++i) {
        if (acc[i] >= thr && !c.solve_epoch.count(c.targets[i])) {
            c.solve_epoch[c.targets[i]] = c.epochs_total;
            newly.push_back(c.targets[i]);
        }
    }
    bool all_ok = true;
    for (double a : acc) all_ok = all_ok && a >= thr;

    if (c.config.mode == curriculum_mode::all_at_once && !newly.empty()) {
        int solved_max = 0;
        for (const auto& [n, e] : c.solve_epoch) solved_max = std::max(solved_max, n);
        c.max_solved_n = solved_max;
        if (!all_ok)
            c.history.push_back({c.step, c.targets, c.epochs_in_step, c.epochs_total, acc, mt, st, wall, false, newly});
    }

    if (all_ok) {
        c.history.push_back({c.step, c.targets, c.epochs_in_step, c.epochs_total, acc, mt, st, wall, true, newly});
        if (hooks.on_solved) hooks.on_solved(run, c.targets.back());
        auto [next_state, next_params] = advance(c, run.params, acc, thr, run.init_rng);
        c = std::move(next_state);
        run.params = std::move(next_params);
        run.opt = OptimizerState::for_params(run.params);
    } else if (c.epochs_total >= c.budget.max_epochs) {
        c.history.push_back({c.step, c.targets, c.epochs_in_step, c.epochs_total, acc, mt, st, wall, false, newly});
        c.stop_reason = "max_epochs";
    }
    if (hooks.on_epoch) hooks.on_epoch(run);
}

/// Trains until the budget is exhausted, the run diverges or max_n is solved.
inline RunState continue_run(RunState run, const RunHooks& hooks = {}) {
    const auto t0 = std::chrono::steady_clock::now();
    auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
    while (!run_finished(run)) {
        if (run.curriculum.budget.max_wall_seconds > 0.0 && elapsed() >= run.curriculum.budget.max_wall_seconds) {
            run.curriculum.stop_reason = "max_wall_seconds";
            break;
        }
        run_epoch(run, hooks, elapsed());
    }
    return run;
}

inline RunState run_curriculum(const CurriculumConfig& ccfg, const NetConfig& ncfg, const TrainConfig& tcfg,
                               const TaskSpec& task, std::uint64_t seed, const Budget& budget,
                               const RunHooks& hooks = {}) {
    return continue_run(start_run(ccfg, ncfg, tcfg, task, seed, budget), hooks);
}

// --- forgetting probe -------------------------------------------------------

struct ProbeOptions {
    int max_epochs = 50;
    int eval_sequences = 500;
};

/// Accuracy of the trained network at an earlier depth. With an existing head
/// for that depth and no retraining, the existing head is scored. Otherwise a
/// fresh head is attached and, if requested, only its readout is trained.
inline double forgetting_probe(const RunState& run, int earlier_n, bool retrain_readout_only, ProbeOptions opt = {}) {
    NetworkParams p = run.params;
    rng_engine rng = make_stream(run.seed, "probe", static_cast<std::uint64_t>(earlier_n));
    int head = p.head_index_for(earlier_n);
    if (head < 0 || retrain_readout_only) {
        p.heads = {make_head(p.size(), earlier_n, rng)};
        head = 0;
    } else {
        p.heads = {p.heads[static_cast<std::size_t>(head)]};
        head = 0;
    }
    TaskSpec spec = run.task;
    spec.n = earlier_n;
    spec.len_min = spec.len_max = 0;
    if (retrain_readout_only) {
        TrainConfig tc = run.train;
        auto state = OptimizerState::for_params(p);
        const int heads[] = {0};
        for (int e = 0; e < opt.max_epochs; ++e) {
            for (int b = 0; b < tc.batches_per_epoch; ++b) {
                const Batch batch = sample_batch(spec, tc.batch_size, rng);
                const NetworkParams ahead = lookahead(p, state, tc, run.net);
                LossResult lr = loss_and_grads(ahead, run.net, batch, heads, false);
                GradientSet g = GradientSet::zeros_like(p);
                g.heads = lr.grads.heads;
                sgd_nesterov_step(p, g, state, tc, run.net);
            }
            if (evaluate_accuracy(p, run.net, spec, head, opt.eval_sequences, rng) >= tc.accuracy_threshold) break;
        }
    }
    return evaluate_accuracy(p, run.net, spec, head, opt.eval_sequences, rng);
}

}  // namespace taulab
