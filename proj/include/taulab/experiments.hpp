#pragma once

// Run orchestration on disk: one directory per seed holding the latest
// checkpoint, a snapshot per solved depth, the history JSON and the training log.

#include "taulab/config.hpp"
#include "taulab/curricula.hpp"
#include "taulab/io.hpp"

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace taulab {

struct RunPaths {
    std::filesystem::path dir;

    std::filesystem::path checkpoint() const { return dir / "checkpoint.bin"; }
    std::filesystem::path snapshot(int n) const { return dir / ("solved_N" + std::to_string(n) + ".bin"); }
    std::filesystem::path history() const { return dir / "history.json"; }
    std::filesystem::path log() const { return dir / "train_log.csv"; }
};

inline RunPaths seed_paths(const std::filesystem::path& root, std::uint64_t seed) {
    return {root / ("seed_" + std::to_string(seed))};
}

inline RunState start_run(const ExperimentConfig& cfg, std::uint64_t seed) {
    return start_run(cfg.curriculum, cfg.net, cfg.train, cfg.task, seed, cfg.budget);
}

inline void write_run_outputs(const ExperimentConfig& cfg, const RunState& run, const RunPaths& paths) {
    write_file(paths.history(), history_json(cfg, run).dump(2) + "\n");
    write_file(paths.log(), training_log_csv(cfg, run));
}

/// Trains one seed to completion. With `resume`, continues from the stored
/// checkpoint when its config matches; a finished run is returned as is.
inline RunState execute_run(const ExperimentConfig& cfg, std::uint64_t seed, const RunPaths& paths, bool resume,
                            RunHooks extra = {}) {
    RunState run;
    bool loaded = false;
    if (resume && std::filesystem::exists(paths.checkpoint())) {
        Checkpoint ck = load_checkpoint(paths.checkpoint());
        if (!ck.config.same_experiment(cfg) || ck.run.seed != seed)
            throw config_error("run.output_dir", "checkpoint in " + paths.dir.string() +
                                                     " was written with a different config or seed");
        run = std::move(ck.run);
        loaded = true;
    }
    if (!loaded) run = start_run(cfg, seed);
    RunHooks hooks;
    hooks.record_wall_time = cfg.record_wall_time;
    hooks.on_solved = [&](const RunState& r, int n) {
        save_checkpoint(paths.snapshot(n), {cfg, r});
        if (extra.on_solved) extra.on_solved(r, n);
    };
    hooks.on_epoch = [&](const RunState& r) {
        save_checkpoint(paths.checkpoint(), {cfg, r});
        if (extra.on_epoch) extra.on_epoch(r);
    };
    run = continue_run(std::move(run), hooks);
    save_checkpoint(paths.checkpoint(), {cfg, run});
    write_run_outputs(cfg, run, paths);
    return run;
}

/// Worker count: TAULAB_WORKERS if set, else `requested`, at least 1.
inline int worker_count(int requested) {
    if (const char* env = std::getenv("TAULAB_WORKERS")) {
        const int w = std::atoi(env);
        if (w >= 1) return w;
    }
    return std::max(1, requested);
}

/// Runs every seed of `cfg` under `root`, up to `workers` at a time. Each seed
/// writes only to its own directory and uses only its own RNG streams.
inline std::vector<RunState> execute_seeds(const ExperimentConfig& cfg, const std::filesystem::path& root, bool resume,
                                           int workers) {
    std::vector<RunState> runs(cfg.seeds.size());
    std::vector<std::exception_ptr> errors(cfg.seeds.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i = next++; i < cfg.seeds.size(); i = next++) {
            try {
                runs[i] = execute_run(cfg, cfg.seeds[i], seed_paths(root, cfg.seeds[i]), resume);
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const int w = std::min<int>(worker_count(workers), static_cast<int>(cfg.seeds.size()));
    std::vector<std::thread> pool;
    for (int t = 1; t < w; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    return runs;
}

/// Solved-depth snapshots of a seed directory, keyed by depth.
inline std::map<int, std::filesystem::path> list_snapshots(const RunPaths& paths) {
    std::map<int, std::filesystem::path> out;
    if (!std::filesystem::exists(paths.dir)) return out;
    for (const auto& e : std::filesystem::directory_iterator(paths.dir)) {
        const std::string name = e.path().filename().string();
        if (name.rfind("solved_N", 0) == 0 && e.path().extension() == ".bin")
            out[std::stoi(name.substr(8))] = e.path();
    }
    return out;
}

}  // namespace taulab
