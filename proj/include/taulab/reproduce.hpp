#pragma once

// Desk-scale experiment pipelines: a fixed family of run variants trained (or
// reloaded) under one root directory, and the per-figure measurements taken on
// them.

#include "taulab/config.hpp"
#include "taulab/experiments.hpp"
#include "taulab/interventions.hpp"
#include "taulab/io.hpp"
#include "taulab/popdyn.hpp"
#include "taulab/stats.hpp"
#include "taulab/timescales.hpp"

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace taulab {

struct DeskSettings {
    std::filesystem::path root = "runs";
    int neurons = 64;
    std::vector<std::uint64_t> seeds{0, 1, 2, 3};
    long max_epochs = 300;
    int max_n = 30;
    std::optional<double> grad_clip_norm = 10.0;
    int workers = 1;
    /// When false, missing runs are an error naming the train command to run.
    bool train_missing = true;
    DriveProtocol drive{10, 20000, 100, 200};
    int trials = 10;
    std::uint64_t analysis_seed = 1000;
};

struct Variant {
    std::string name;
    curriculum_mode mode = curriculum_mode::multi;
    std::optional<double> fixed_tau;
    nonlinearity phi = nonlinearity::leaky_relu;
    tau_placement placement = tau_placement::inside;
    int fixed_n = 10;
    int all_max_n = 20;
    std::optional<long> max_epochs;
};

inline Variant variant(std::string name, curriculum_mode mode) {
    Variant v;
    v.name = std::move(name);
    v.mode = mode;
    return v;
}

inline ExperimentConfig desk_config(const DeskSettings& s, const Variant& v) {
    ExperimentConfig c;
    c.net.n = s.neurons;
    c.net.phi = v.phi;
    c.net.placement = v.placement;
    c.train.grad_clip_norm = s.grad_clip_norm;
    c.train.fixed_tau_value = v.fixed_tau;
    c.curriculum.mode = v.mode;
    c.curriculum.fixed_n = v.fixed_n;
    c.curriculum.all_max_n = v.all_max_n;
    c.budget.max_epochs = v.max_epochs.value_or(s.max_epochs);
    c.budget.max_n = s.max_n;
    c.seeds = s.seeds;
    c.output_dir = (s.root / v.name).string();
    c.validate();
    return c;
}

/// Trains the variant's seeds or reloads finished ones.
inline std::vector<RunState> ensure_runs(const DeskSettings& s, const Variant& v) {
    const ExperimentConfig cfg = desk_config(s, v);
    const std::filesystem::path dir = s.root / v.name;
    const auto cfg_path = dir / "config.cfg";
    if (!s.train_missing) {
        for (auto seed : cfg.seeds)
            if (!std::filesystem::exists(seed_paths(dir, seed).history()))
                throw io_error("missing trained run " + seed_paths(dir, seed).dir.string() + "; run: taulab train --config " +
                               cfg_path.string() + " --out " + dir.string());
    }
    write_file(cfg_path, serialize_config(cfg));
    return execute_seeds(cfg, dir, true, s.workers);
}

inline int max_solved(const RunState& r) { return r.curriculum.max_solved_n.value_or(0); }

/// Depths solved, in order, with the tau moments recorded when each was solved.
struct TauPoint {
    int n = 0;
    double mean_tau = 0.0;
    double std_tau = 0.0;
    long epoch = 0;
};

inline std::vector<TauPoint> tau_trajectory(const RunState& r) {
    std::vector<TauPoint> out;
    for (const auto& h : r.curriculum.history)
        if (h.solved) out.push_back({h.targets.back(), h.mean_tau, h.std_tau, h.epoch});
    return out;
}

/// Largest depth a fresh network solves with no curriculum: trains N = 2, 3, ...
/// each from scratch and stops at the first failure.
inline int no_curriculum_scan(const DeskSettings& s, std::uint64_t seed, int up_to) {
    int best = 0;
    for (int n = 2; n <= up_to; ++n) {
        Variant v = variant("none_N" + std::to_string(n), curriculum_mode::none);
        v.fixed_n = n;
        DeskSettings one = s;
        one.seeds = {seed};
        const auto runs = ensure_runs(one, v);
        if (!runs[0].curriculum.solve_epoch.count(n)) break;
        best = n;
    }
    return best;
}

inline Checkpoint load_snapshot(const DeskSettings& s, const Variant& v, std::uint64_t seed, int n) {
    const auto path = seed_paths(s.root / v.name, seed).snapshot(n);
    if (!std::filesystem::exists(path)) throw io_error("no snapshot for N=" + std::to_string(n) + " at " + path.string());
    return load_checkpoint(path);
}

struct TimescalePoint {
    int n = 0;
    double mean_tau_net = 0.0;
    double std_tau_net = 0.0;
    int live = 0;
    double frac_r2 = 0.0;        ///< fraction of live neurons with r2 >= 0.95
    double min_r2 = 0.0;
    double frac_double = 0.0;    ///< fraction selecting the double-exponential model
};

inline TimescalePoint timescale_point(const DeskSettings& s, const Checkpoint& ck, int n) {
    const auto rep = network_timescale_report(ck.run.params, ck.run.net, ck.run.task.k, s.analysis_seed, s.drive);
    TimescalePoint p;
    p.n = n;
    p.live = rep.live;
    p.mean_tau_net = rep.mean_tau_net.value_or(0.0);
    p.std_tau_net = rep.std_tau_net.value_or(0.0);
    int good = 0, dbl = 0;
    p.min_r2 = 1.0;
    for (const auto& nt : rep.neurons) {
        if (!nt.fit) continue;
        good += nt.fit->r_squared >= 0.95;
        dbl += nt.fit->model == ac_model::double_exp;
        p.min_r2 = std::min(p.min_r2, nt.fit->r_squared);
    }
    if (rep.live) {
        p.frac_r2 = static_cast<double>(good) / rep.live;
        p.frac_double = static_cast<double>(dbl) / rep.live;
    }
    return p;
}

inline EvalSetup eval_setup_for(const DeskSettings& s, const Checkpoint& ck, int n) {
    EvalSetup e;
    e.kind = ck.run.task.kind;
    e.k = ck.run.task.k;
    e.head = ck.run.params.head_index_for(n);
    if (e.head < 0) throw structural_error("snapshot has no head for N=" + std::to_string(n));
    e.trials = s.trials;
    e.seed = s.analysis_seed;
    return e;
}

struct AblationPair {
    InterventionResult longest;
    InterventionResult shortest;
};

inline AblationPair ablation_pair(const DeskSettings& s, const Checkpoint& ck, int n, double fraction = 0.04) {
    const auto setup = eval_setup_for(s, ck, n);
    const int count = default_ablation_count(ck.run.net.n, fraction);
    return {ablation_experiment(ck.run.params, ck.run.net, setup, tau_rank::longest, count),
            ablation_experiment(ck.run.params, ck.run.net, setup, tau_rank::shortest, count)};
}

inline std::vector<InterventionResult> perturbation_sweep(const DeskSettings& s, const Checkpoint& ck, int n,
                                                          perturb_target target,
                                                          const std::vector<double>& grid = default_epsilon_grid()) {
    const auto setup = eval_setup_for(s, ck, n);
    std::vector<InterventionResult> out;
    for (double eps : grid) out.push_back(perturbation_experiment(ck.run.params, ck.run.net, setup, target, eps));
    return out;
}

struct PopulationPoint {
    int n = 0;
    int dimensionality = 0;
    double balance_mean = 0.0;
    double balance_std = 0.0;
};

inline PopulationPoint population_point(const DeskSettings& s, const Checkpoint& ck, int n) {
    PopulationPoint p;
    p.n = n;
    p.dimensionality = network_dimensionality(ck.run.params, ck.run.net, ck.run.task.k, s.analysis_seed);
    const auto wb = weight_balance(ck.run.params);
    p.balance_mean = wb.mean;
    p.balance_std = wb.std;
    return p;
}

}  // namespace taulab
