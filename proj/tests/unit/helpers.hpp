#pragma once

#include "taulab/taulab.hpp"

#include <cstdint>
#include <vector>

namespace taulab::testing {

inline NetConfig small_config(int n, nonlinearity phi = nonlinearity::leaky_relu,
                              tau_placement placement = tau_placement::inside) {
    NetConfig c;
    c.n = n;
    c.phi = phi;
    c.placement = placement;
    return c;
}

/// Random parameters with tau spread over [1, 4] and nonzero biases, so both
/// leak terms and both nonlinearity branches are exercised.
inline NetworkParams random_params(const NetConfig& cfg, std::vector<int> heads, rng_engine& rng,
                                   double gain = 1.0) {
    NetConfig c = cfg;
    c.init_gain = gain;
    NetworkParams p = init_params(c, heads, rng);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int i = 0; i < cfg.n; ++i) p.tau(i) = 1.0 + 3.0 * u(rng);
    for (int i = 0; i < p.b_rec.size(); ++i) {
        p.b_rec(i) = 0.3 * standard_normal(rng);
        p.b_in(i) = 0.3 * standard_normal(rng);
    }
    for (auto& h : p.heads) h.b_out = Eigen::Vector2d(0.2 * standard_normal(rng), 0.2 * standard_normal(rng));
    return p;
}

inline std::vector<std::vector<std::uint8_t>> random_digits(int count, int length, rng_engine& rng) {
    std::vector<std::vector<std::uint8_t>> d(static_cast<std::size_t>(count));
    for (auto& s : d) s = sample_digits(static_cast<std::size_t>(length), rng);
    return d;
}

inline double uniform(rng_engine& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
inline int uniform_int(rng_engine& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

inline ExperimentConfig random_config(rng_engine& rng) {
    ExperimentConfig c;
    c.net.n = uniform_int(rng, 2, 300);
    c.net.alpha = uniform(rng, 0.0, 0.9);
    c.net.phi = static_cast<nonlinearity>(uniform_int(rng, 0, 2));
    c.net.placement = static_cast<tau_placement>(uniform_int(rng, 0, 1));
    c.net.tau_max = uniform(rng, 1.5, 1000.0);
    c.net.biases = static_cast<bias_mode>(uniform_int(rng, 0, 1));
    c.net.init_gain = uniform(rng, 0.01, 3.0);
    c.train.learning_rate = uniform(rng, 1e-5, 1.0);
    c.train.momentum = uniform(rng, 0.0, 0.99);
    c.train.batch_size = uniform_int(rng, 1, 512);
    c.train.batches_per_epoch = uniform_int(rng, 1, 1000);
    c.train.accuracy_threshold = uniform(rng, 0.5, 0.999);
    c.train.train_tau = uniform_int(rng, 0, 1);
    if (uniform_int(rng, 0, 1)) c.train.fixed_tau_value = uniform(rng, 1.0, 10.0);
    if (uniform_int(rng, 0, 1)) c.train.grad_clip_norm = uniform(rng, 0.1, 100.0);
    c.train.eval_sequences = uniform_int(rng, 1, 5000);
    c.task.kind = static_cast<task_kind>(uniform_int(rng, 0, 1));
    c.task.k = uniform_int(rng, 1, 8);
    c.curriculum.mode = static_cast<curriculum_mode>(uniform_int(rng, 0, 4));
    c.curriculum.fixed_n = uniform_int(rng, 2, 40);
    c.curriculum.sliding_heads = uniform_int(rng, 1, 20);
    c.curriculum.sliding_shift = uniform_int(rng, 1, 10);
    c.curriculum.all_max_n = uniform_int(rng, 2, 40);
    c.budget.max_epochs = uniform_int(rng, 1, 5000);
    c.budget.max_wall_seconds = uniform(rng, 0.0, 1e5);
    c.budget.max_n = uniform_int(rng, 2, 100);
    c.seeds.clear();
    for (int i = uniform_int(rng, 1, 5); i > 0; --i) c.seeds.push_back(rng() % 1000);
    c.output_dir = "out_" + std::to_string(rng() % 100);
    c.record_wall_time = uniform_int(rng, 0, 1);
    return c;
}

inline Checkpoint random_checkpoint(rng_engine& rng) {
    Checkpoint ck;
    ck.config = random_config(rng);
    ck.config.net.n = uniform_int(rng, 2, 12);
    const auto& c = ck.config;
    ck.run = start_run(c, c.seeds[0]);
    std::vector<int> heads;
    for (int h = 0, n = 2; h < uniform_int(rng, 1, 4); ++h, n += uniform_int(rng, 1, 3)) heads.push_back(n);
    ck.run.params = random_params(c.net, heads, rng);
    ck.run.opt = OptimizerState::for_params(ck.run.params);
    ck.run.opt.velocity.w_rec.setRandom();
    ck.run.opt.velocity.tau.setRandom();
    ck.run.opt.steps = rng() % 10000;
    ck.run.curriculum.targets = heads;
    ck.run.curriculum.epochs_total = rng() % 100;
    ck.run.curriculum.solve_epoch[2] = 3;
    ck.run.curriculum.max_solved_n = 2;
    StepRecord sr;
    sr.targets = heads;
    sr.accuracies = {uniform(rng, 0, 1), 1.0 / 3.0};
    sr.mean_tau = uniform(rng, 1, 3);
    sr.solved = true;
    sr.newly_solved = {2};
    ck.run.curriculum.history.push_back(sr);
    for (int e = 0; e < 3; ++e)
        ck.run.log.push_back({e + 1, heads, uniform(rng, 0, 1), {uniform(rng, 0, 1)}, 1.0 + e * 0.1, 0.1, 0.0});
    for (int i = 0; i < uniform_int(rng, 0, 50); ++i) ck.run.data_rng();
    if (uniform_int(rng, 0, 1)) ck.run.failure = "non-finite loss";
    return ck;
}

/// Three relu units that solve 2-parity exactly: the current digit, the previous
/// digit, and their conjunction.
inline NetworkParams xor_network() {
    NetworkParams p;
    p.w_rec = Eigen::MatrixXd::Zero(3, 3);
    p.w_rec(1, 0) = 1.0;
    p.w_rec(2, 0) = 1.0;
    p.w_in = Eigen::Vector3d(1.0, 0.0, 1.0);
    p.b_rec = Eigen::Vector3d(0.0, 0.0, -1.0);
    p.b_in = Eigen::VectorXd::Zero(3);
    p.tau = Eigen::VectorXd::Ones(3);
    ReadoutHead h;
    h.target_n = 2;
    h.w_out = ReadoutMatrix::Zero(2, 3);
    h.w_out.row(1) << 1.0, 1.0, -2.0;
    h.b_out = Eigen::Vector2d(0.5, 0.0);
    p.heads.push_back(h);
    return p;
}

}  // namespace taulab::testing
