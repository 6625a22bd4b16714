#pragma once

// Backpropagation through time, multi-head cross-entropy, SGD with Nesterov
// momentum, and accuracy evaluation.

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

struct TrainConfig {
    double learning_rate = 0.01;
    double momentum = 0.9;
    int batch_size = 64;
    int batches_per_epoch = 100;
    double accuracy_threshold = 0.98;
    bool train_tau = true;
    std::optional<double> fixed_tau_value;
    std::optional<double> grad_clip_norm;
    int eval_sequences = 500;

    bool operator==(const TrainConfig&) const = default;

    void validate() const {
        if (!(learning_rate > 0.0)) throw config_error("train.learning_rate", "must be > 0");
        if (!(momentum >= 0.0 && momentum < 1.0)) throw config_error("train.momentum", "must lie in [0, 1)");
        if (batch_size < 1) throw config_error("train.batch_size", "must be >= 1");
        if (batches_per_epoch < 1) throw config_error("train.batches_per_epoch", "must be >= 1");
        if (!(accuracy_threshold > 0.0 && accuracy_threshold < 1.0))
            throw config_error("train.accuracy_threshold", "must lie in (0, 1)");
        if (fixed_tau_value && !(*fixed_tau_value >= 1.0))
            throw config_error("train.fixed_tau", "must be >= 1");
        if (grad_clip_norm && !(*grad_clip_norm > 0.0))
            throw config_error("train.grad_clip_norm", "must be > 0");
        if (eval_sequences < 1) throw config_error("train.eval_sequences", "must be >= 1");
    }

    bool tau_trainable() const { return train_tau && !fixed_tau_value; }
};

struct HeadGradient {
    ReadoutMatrix w_out;
    Eigen::Vector2d b_out = Eigen::Vector2d::Zero();
};

/// Same layout as NetworkParams; also used for optimizer velocity.
struct GradientSet {
    Eigen::MatrixXd w_rec;
    Eigen::VectorXd w_in;
    Eigen::VectorXd b_rec;
    Eigen::VectorXd b_in;
    Eigen::VectorXd tau;
    std::vector<HeadGradient> heads;

    static GradientSet zeros_like(const NetworkParams& p) {
        GradientSet g;
        g.w_rec = Eigen::MatrixXd::Zero(p.w_rec.rows(), p.w_rec.cols());
        g.w_in = Eigen::VectorXd::Zero(p.w_in.size());
        g.b_rec = Eigen::VectorXd::Zero(p.b_rec.size());
        g.b_in = Eigen::VectorXd::Zero(p.b_in.size());
        g.tau = Eigen::VectorXd::Zero(p.tau.size());
        for (const auto& h : p.heads) g.heads.push_back({ReadoutMatrix::Zero(2, h.w_out.cols()), {0.0, 0.0}});
        return g;
    }

    double squared_norm() const {
        double s = w_rec.squaredNorm() + w_in.squaredNorm() + b_rec.squaredNorm() + b_in.squaredNorm() +
                   tau.squaredNorm();
        for (const auto& h : heads) s += h.w_out.squaredNorm() + h.b_out.squaredNorm();
        return s;
    }

    void scale(double c) {
        w_rec *= c;
        w_in *= c;
        b_rec *= c;
        b_in *= c;
        tau *= c;
        for (auto& h : heads) {
            h.w_out *= c;
            h.b_out *= c;
        }
    }

    bool all_finite() const {
        bool ok = w_rec.allFinite() && w_in.allFinite() && b_rec.allFinite() && b_in.allFinite() &&
                  tau.allFinite();
        for (const auto& h : heads) ok = ok && h.w_out.allFinite() && h.b_out.allFinite();
        return ok;
    }
};

struct LossResult {
    double loss = 0.0;
    std::vector<double> head_losses;
    GradientSet grads;
};

namespace detail {

struct Trajectory {
    std::vector<Eigen::MatrixXd> r;      // T+1 entries, r[0] = 0
    std::vector<Eigen::MatrixXd> drive;  // T entries
    std::vector<Eigen::MatrixXd> pre;    // T entries
};

inline Trajectory forward(const NetworkParams& params, const NetConfig& cfg, const Batch& batch,
                          bool keep_intermediates) {
    const int n = params.size();
    const int B = batch.batch_size;
    const int T = batch.steps;
    const Eigen::VectorXd bias = params.total_bias();
    Trajectory tr;
    tr.r.reserve(static_cast<std::size_t>(T) + 1);
    tr.r.emplace_back(Eigen::MatrixXd::Zero(n, B));
    if (keep_intermediates) {
        tr.drive.resize(static_cast<std::size_t>(T));
        tr.pre.resize(static_cast<std::size_t>(T));
    }
    Eigen::MatrixXd drive, pre, next;
    Eigen::RowVectorXd input(B);
    for (int t = 0; t < T; ++t) {
        for (int b = 0; b < B; ++b) input(b) = batch.input(b, t);
        step_batch(params, cfg, tr.r.back(), input, bias, drive, pre, next);
        tr.r.push_back(next);
        if (keep_intermediates) {
            tr.drive[static_cast<std::size_t>(t)] = drive;
            tr.pre[static_cast<std::size_t>(t)] = pre;
        }
    }
    return tr;
}

inline std::vector<std::int8_t> head_targets(const Batch& batch, int target_n) {
    return target_n == batch.n ? batch.targets : batch.targets_for(target_n);
}

}  // namespace detail

/// Summed multi-head loss and its exact gradient by reverse accumulation.
/// Each head's loss is the mean cross-entropy over the steps valid for its own depth.
inline LossResult loss_and_grads(const NetworkParams& params, const NetConfig& cfg, const Batch& batch,
                                 std::span<const int> active_heads, bool train_tau = true) {
    check_params(params, cfg);
    const int n = params.size();
    const int B = batch.batch_size;
    const int T = batch.steps;
    for (int h : active_heads)
        if (h < 0 || h >= static_cast<int>(params.heads.size()))
            throw structural_error("invalid active head index " + std::to_string(h));

    const auto tr = detail::forward(params, cfg, batch, true);

    LossResult out;
    out.grads = GradientSet::zeros_like(params);
    out.head_losses.assign(active_heads.size(), 0.0);

    // dL/dlogits for every head and step, scaled by 1/count.
    std::vector<std::vector<Eigen::MatrixXd>> dlogits(active_heads.size());
    for (std::size_t hi = 0; hi < active_heads.size(); ++hi) {
        const auto& head = params.heads[static_cast<std::size_t>(active_heads[hi])];
        const auto targets = detail::head_targets(batch, head.target_n);
        long count = 0;
        for (auto v : targets) count += v != invalid_target;
        auto& dl = dlogits[hi];
        dl.assign(static_cast<std::size_t>(T), Eigen::MatrixXd());
        if (count == 0) continue;
        const double inv = 1.0 / static_cast<double>(count);
        double loss = 0.0;
        Eigen::MatrixXd logits;
        for (int t = 0; t < T; ++t) {
            logits.noalias() = head.w_out * tr.r[static_cast<std::size_t>(t) + 1];
            logits.colwise() += head.b_out;
            Eigen::MatrixXd g = Eigen::MatrixXd::Zero(2, B);
            for (int b = 0; b < B; ++b) {
                const auto y = targets[static_cast<std::size_t>(b) * T + t];
                if (y == invalid_target) continue;
                const double l0 = logits(0, b), l1 = logits(1, b);
                const double m = std::max(l0, l1);
                const double lse = m + std::log(std::exp(l0 - m) + std::exp(l1 - m));
                loss += lse - (y ? l1 : l0);
                const double p1 = std::exp(l1 - lse);
                g(0, b) = ((1.0 - p1) - (y == 0 ? 1.0 : 0.0)) * inv;
                g(1, b) = (p1 - (y == 1 ? 1.0 : 0.0)) * inv;
            }
            dl[static_cast<std::size_t>(t)] = std::move(g);
        }
        out.head_losses[hi] = loss * inv;
        out.loss += loss * inv;
    }

    const Eigen::ArrayXd a = params.tau.array().inverse();
    const Eigen::ArrayXd keep = 1.0 - a;
    const Eigen::ArrayXd dadtau = -a * a;
    Eigen::MatrixXd grad_r = Eigen::MatrixXd::Zero(n, B);
    Eigen::VectorXd db = Eigen::VectorXd::Zero(n);
    Eigen::MatrixXd d_drive;
    Eigen::RowVectorXd input(B);

    for (int t = T - 1; t >= 0; --t) {
        const auto ts = static_cast<std::size_t>(t);
        const Eigen::MatrixXd& r_prev = tr.r[ts];
        const Eigen::MatrixXd& r_now = tr.r[ts + 1];
        for (std::size_t hi = 0; hi < active_heads.size(); ++hi) {
            const auto& g = dlogits[hi][ts];
            if (g.size() == 0) continue;
            auto& hg = out.grads.heads[static_cast<std::size_t>(active_heads[hi])];
            const auto& head = params.heads[static_cast<std::size_t>(active_heads[hi])];
            hg.w_out.noalias() += g * r_now.transpose();
            hg.b_out += g.rowwise().sum();
            grad_r.noalias() += head.w_out.transpose() * g;
        }
        for (int b = 0; b < B; ++b) input(b) = batch.input(b, t);
        const Eigen::MatrixXd slope = activate_slope(tr.pre[ts], cfg);
        const Eigen::MatrixXd& drive = tr.drive[ts];
        Eigen::ArrayXd d_a;
        if (cfg.placement == tau_placement::inside) {
            const Eigen::MatrixXd d_pre = grad_r.cwiseProduct(slope);
            d_a = (d_pre.array() * (drive - r_prev).array()).rowwise().sum();
            d_drive = a.matrix().asDiagonal() * d_pre;
            grad_r = keep.matrix().asDiagonal() * d_pre;
        } else {
            const Eigen::MatrixXd d_pre = grad_r.cwiseProduct(slope);
            d_a = (d_pre.array() * drive.array() - grad_r.array() * r_prev.array()).rowwise().sum();
            d_drive = a.matrix().asDiagonal() * d_pre;
            grad_r = keep.matrix().asDiagonal() * grad_r;
        }
        out.grads.tau.array() += d_a * dadtau;
        out.grads.w_rec.noalias() += d_drive * r_prev.transpose();
        out.grads.w_in.noalias() += d_drive * input.transpose();
        db += d_drive.rowwise().sum();
        grad_r.noalias() += params.w_rec.transpose() * d_drive;
    }
    mask_diagonal(out.grads.w_rec);
    if (params.b_rec.size() == 1) {
        out.grads.b_rec(0) = db.sum();
        out.grads.b_in(0) = db.sum();
    } else {
        out.grads.b_rec = db;
        out.grads.b_in = db;
    }
    if (!train_tau) out.grads.tau.setZero();
    return out;
}

// --- optimizer --------------------------------------------------------------

struct OptimizerState {
    GradientSet velocity;
    long steps = 0;

    static OptimizerState for_params(const NetworkParams& p) {
        return OptimizerState{GradientSet::zeros_like(p), 0};
    }
};

inline void project(NetworkParams& p, const NetConfig& cfg) {
    p.tau = p.tau.cwiseMax(1.0).cwiseMin(cfg.tau_max);
    mask_diagonal(p.w_rec);
}

namespace detail {

template <typename F>
void zip_params(NetworkParams& p, const GradientSet& g, F&& f) {
    f(p.w_rec, g.w_rec);
    f(p.w_in, g.w_in);
    f(p.b_rec, g.b_rec);
    f(p.b_in, g.b_in);
    f(p.tau, g.tau);
    for (std::size_t h = 0; h < p.heads.size(); ++h) {
        f(p.heads[h].w_out, g.heads[h].w_out);
        f(p.heads[h].b_out, g.heads[h].b_out);
    }
}

template <typename F>
void zip_grads(GradientSet& v, const GradientSet& g, F&& f) {
    f(v.w_rec, g.w_rec);
    f(v.w_in, g.w_in);
    f(v.b_rec, g.b_rec);
    f(v.b_in, g.b_in);
    f(v.tau, g.tau);
    for (std::size_t h = 0; h < v.heads.size(); ++h) {
        f(v.heads[h].w_out, g.heads[h].w_out);
        f(v.heads[h].b_out, g.heads[h].b_out);
    }
}

}  // namespace detail

/// Point at which the Nesterov gradient is taken: params + momentum * velocity.
inline NetworkParams lookahead(const NetworkParams& params, const OptimizerState& opt, const TrainConfig& tcfg,
                               const NetConfig& ncfg) {
    NetworkParams p = params;
    if (tcfg.momentum == 0.0 || opt.steps == 0) return p;
    const double mu = tcfg.momentum;
    detail::zip_params(p, opt.velocity, [mu](auto& x, const auto& v) { x += mu * v; });
    project(p, ncfg);
    return p;
}

/// v <- mu v - lr g (g taken at the lookahead point); params <- params + v; then
/// tau is clamped to [1, tau_max] and the recurrent diagonal re-zeroed.
inline void sgd_nesterov_step(NetworkParams& params, const GradientSet& grads, OptimizerState& opt,
                              const TrainConfig& tcfg, const NetConfig& ncfg) {
    const double mu = tcfg.momentum;
    const double lr = tcfg.learning_rate;
    detail::zip_grads(opt.velocity, grads, [mu, lr](auto& v, const auto& g) { v = mu * v - lr * g; });
    detail::zip_params(params, opt.velocity, [](auto& x, const auto& v) { x += v; });
    project(params, ncfg);
    ++opt.steps;
}

inline void clip_gradients(GradientSet& g, double max_norm) {
    const double norm = std::sqrt(g.squared_norm());
    if (norm > max_norm) g.scale(max_norm / norm);
}

/// Heads used in the loss: all of them.
inline std::vector<int> all_heads(const NetworkParams& p) {
    std::vector<int> h(p.heads.size());
    for (std::size_t i = 0; i < h.size(); ++i) h[i] = static_cast<int>(i);
    return h;
}

/// Task for training the current heads: depth of the deepest head.
inline TaskSpec task_for_heads(const TaskSpec& base, const NetworkParams& p) {
    TaskSpec s = base;
    int deepest = 2;
    for (const auto& h : p.heads) deepest = std::max(deepest, h.target_n);
    s.n = deepest;
    s.len_min = 0;
    s.len_max = 0;
    return s;
}

/// Runs `batches_per_epoch` optimizer steps; returns the mean loss.
inline double train_epoch(NetworkParams& params, OptimizerState& opt, const NetConfig& ncfg,
                          const TrainConfig& tcfg, const TaskSpec& spec, rng_engine& data_rng, long epoch) {
    const auto heads = all_heads(params);
    const bool train_tau = tcfg.tau_trainable();
    double total = 0.0;
    for (int b = 0; b < tcfg.batches_per_epoch; ++b) {
        const Batch batch = sample_batch(spec, tcfg.batch_size, data_rng);
        const NetworkParams ahead = lookahead(params, opt, tcfg, ncfg);
        LossResult lr = loss_and_grads(ahead, ncfg, batch, heads, train_tau);
        if (!std::isfinite(lr.loss) || !lr.grads.all_finite())
            throw diverged_error("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                                     std::to_string(b),
                                 epoch, b);
        if (tcfg.grad_clip_norm) clip_gradients(lr.grads, *tcfg.grad_clip_norm);
        sgd_nesterov_step(params, lr.grads, opt, tcfg, ncfg);
        total += lr.loss;
    }
    return total / tcfg.batches_per_epoch;
}

// --- evaluation -------------------------------------------------------------

/// Accuracy of each listed head over fresh sequences of `spec`, scored on every
/// step valid for the head's own depth.
inline std::vector<double> evaluate_heads(const NetworkParams& params, const NetConfig& cfg, const TaskSpec& spec,
                                          std::span<const int> heads, int n_sequences, rng_engine& rng) {
    check_params(params, cfg);
    std::vector<long> correct(heads.size(), 0), total(heads.size(), 0);
    constexpr int chunk = 250;
    for (int done = 0; done < n_sequences; done += chunk) {
        const int B = std::min(chunk, n_sequences - done);
        const Batch batch = sample_batch(spec, B, rng);
        const auto tr = detail::forward(params, cfg, batch, false);
        for (std::size_t hi = 0; hi < heads.size(); ++hi) {
            const auto& head = params.heads.at(static_cast<std::size_t>(heads[hi]));
            const auto targets = detail::head_targets(batch, head.target_n);
            Eigen::MatrixXd logits;
            for (int t = 0; t < batch.steps; ++t) {
                logits.noalias() = head.w_out * tr.r[static_cast<std::size_t>(t) + 1];
                logits.colwise() += head.b_out;
                for (int b = 0; b < B; ++b) {
                    const auto y = targets[static_cast<std::size_t>(b) * batch.steps + t];
                    if (y == invalid_target) continue;
                    const int pred = logits(1, b) > logits(0, b) ? 1 : 0;
                    correct[hi] += pred == y;
                    ++total[hi];
                }
            }
        }
    }
    std::vector<double> acc(heads.size(), 0.0);
    for (std::size_t hi = 0; hi < heads.size(); ++hi)
        acc[hi] = total[hi] ? static_cast<double>(correct[hi]) / static_cast<double>(total[hi]) : 0.0;
    return acc;
}

inline double evaluate_accuracy(const NetworkParams& params, const NetConfig& cfg, const TaskSpec& spec,
                                int head_index, int n_sequences, rng_engine& rng) {
    if (head_index < 0 || head_index >= static_cast<int>(params.heads.size()))
        throw structural_error("invalid head index " + std::to_string(head_index));
    const int h[] = {head_index};
    return evaluate_heads(params, cfg, spec, h, n_sequences, rng)[0];
}

struct StreamProtocol {
    int burn_in = 100;
    int scored = 1000;
};

/// Long-rollout accuracy: each trial is one continuous random input stream,
/// scored after the burn-in. Returns one accuracy per trial.
inline std::vector<double> evaluate_stream(const NetworkParams& params, const NetConfig& cfg, task_kind kind,
                                           int k, int head_index, int n_trials, rng_engine& rng,
                                           StreamProtocol protocol = {}) {
    check_params(params, cfg);
    if (head_index < 0 || head_index >= static_cast<int>(params.heads.size()))
        throw structural_error("invalid head index " + std::to_string(head_index));
    const auto& head = params.heads[static_cast<std::size_t>(head_index)];
    const int steps = protocol.burn_in + protocol.scored;
    const int digits_needed = (steps + k - 1) / k;
    std::vector<std::vector<std::uint8_t>> digits(static_cast<std::size_t>(n_trials));
    for (auto& d : digits) d = sample_digits(static_cast<std::size_t>(digits_needed), rng);
    const Batch batch = make_batch(kind, head.target_n, k, std::move(digits));
    const auto tr = detail::forward(params, cfg, batch, false);
    std::vector<double> acc(static_cast<std::size_t>(n_trials), 0.0);
    std::vector<long> correct(static_cast<std::size_t>(n_trials), 0), total(static_cast<std::size_t>(n_trials), 0);
    Eigen::MatrixXd logits;
    for (int t = protocol.burn_in; t < steps; ++t) {
        logits.noalias() = head.w_out * tr.r[static_cast<std::size_t>(t) + 1];
        logits.colwise() += head.b_out;
        for (int b = 0; b < n_trials; ++b) {
            const auto y = batch.target(b, t);
            if (y == invalid_target) continue;
            correct[static_cast<std::size_t>(b)] += (logits(1, b) > logits(0, b) ? 1 : 0) == y;
            ++total[static_cast<std::size_t>(b)];
        }
    }
    for (std::size_t b = 0; b < acc.size(); ++b)
        acc[b] = total[b] ? static_cast<double>(correct[b]) / static_cast<double>(total[b]) : 0.0;
    return acc;
}

// --- gradient check ---------------------------------------------------------

struct GroupError {
    std::string group;
    double max_rel_error = 0.0;
    long compared = 0;
    long excluded = 0;
    long violations = 0;
    bool identically_zero = true;
};

struct GradientCheckReport {
    std::vector<GroupError> groups;
    double tolerance = 0.0;

    double max_rel_error() const {
        double m = 0.0;
        for (const auto& g : groups) m = std::max(m, g.max_rel_error);
        return m;
    }
    bool passed() const {
        for (const auto& g : groups)
            if (g.violations) return false;
        return true;
    }
    const GroupError* find(const std::string& name) const {
        for (const auto& g : groups)
            if (g.group == name) return &g;
        return nullptr;
    }
};

namespace detail {

/// Which side of the nonlinearity's kink each pre-activation sits on.
inline std::vector<bool> kink_sides(const NetworkParams& p, const NetConfig& cfg, const Batch& batch) {
    std::vector<bool> sides;
    if (cfg.phi == nonlinearity::tanh) return sides;
    const auto tr = forward(p, cfg, batch, true);
    for (const auto& m : tr.pre)
        for (Eigen::Index i = 0; i < m.size(); ++i) sides.push_back(m.data()[i] >= 0.0);
    return sides;
}

inline double summed_loss(const NetworkParams& p, const NetConfig& cfg, const Batch& batch,
                          std::span<const int> heads) {
    return loss_and_grads(p, cfg, batch, heads).loss;
}

}  // namespace detail

/// Compares analytic gradients with central finite differences, coordinate by
/// coordinate. Coordinates whose probes land on different sides of a ReLU kink
/// are excluded. Relative error uses a magnitude floor of `floor`. `points` is 2
/// for the (f(x+h) - f(x-h)) / 2h stencil or 4 for the fourth-order one.
inline GradientCheckReport gradient_check(const NetworkParams& params, const NetConfig& cfg, const Batch& batch,
                                          double tolerance, bool train_tau = true, double h = 1e-6,
                                          double floor = 1e-6, int points = 2) {
    if (points != 2 && points != 4) throw structural_error("finite-difference stencil must use 2 or 4 points");
    const auto heads = all_heads(params);
    const LossResult analytic = loss_and_grads(params, cfg, batch, heads, train_tau);
    GradientCheckReport report;
    report.tolerance = tolerance;

    auto check = [&](const std::string& name, auto param_of, auto grad_of) {
        GroupError ge;
        ge.group = name;
        NetworkParams probe = params;
        auto& x = param_of(probe);
        const auto& g = grad_of(analytic.grads);
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const double a = g.data()[i];
            if (a != 0.0) ge.identically_zero = false;
            if (name == "tau" && !train_tau) continue;
            if (name == "w_rec" && (i % x.rows()) == (i / x.rows())) continue;
            const double orig = x.data()[i];
            std::vector<bool> side;
            bool crosses = false;
            auto probe_at = [&](double offset) {
                x.data()[i] = orig + offset;
                auto s = detail::kink_sides(probe, cfg, batch);
                if (side.empty()) side = std::move(s);
                else crosses = crosses || s != side;
                return detail::summed_loss(probe, cfg, batch, heads);
            };
            double numeric;
            if (points == 2) {
                const double fp = probe_at(h), fm = probe_at(-h);
                numeric = (fp - fm) / (2.0 * h);
            } else {
                const double f2 = probe_at(2 * h), f1 = probe_at(h), m1 = probe_at(-h), m2 = probe_at(-2 * h);
                numeric = (-f2 + 8.0 * f1 - 8.0 * m1 + m2) / (12.0 * h);
            }
            x.data()[i] = orig;
            if (crosses) {
                ++ge.excluded;
                continue;
            }
            const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
            ge.max_rel_error = std::max(ge.max_rel_error, rel);
            ++ge.compared;
            if (rel >= tolerance) ++ge.violations;
        }
        report.groups.push_back(ge);
    };

    check("w_rec", [](NetworkParams& p) -> Eigen::MatrixXd& { return p.w_rec; },
          [](const GradientSet& g) -> const Eigen::MatrixXd& { return g.w_rec; });
    check("w_in", [](NetworkParams& p) -> Eigen::VectorXd& { return p.w_in; },
          [](const GradientSet& g) -> const Eigen::VectorXd& { return g.w_in; });
    check("b_rec", [](NetworkParams& p) -> Eigen::VectorXd& { return p.b_rec; },
          [](const GradientSet& g) -> const Eigen::VectorXd& { return g.b_rec; });
    check("b_in", [](NetworkParams& p) -> Eigen::VectorXd& { return p.b_in; },
          [](const GradientSet& g) -> const Eigen::VectorXd& { return g.b_in; });
    check("tau", [](NetworkParams& p) -> Eigen::VectorXd& { return p.tau; },
          [](const GradientSet& g) -> const Eigen::VectorXd& { return g.tau; });
    for (std::size_t hh = 0; hh < params.heads.size(); ++hh) {
        const std::string suffix = "[" + std::to_string(hh) + "]";
        check("w_out" + suffix, [hh](NetworkParams& p) -> ReadoutMatrix& { return p.heads[hh].w_out; },
              [hh](const GradientSet& g) -> const ReadoutMatrix& { return g.heads[hh].w_out; });
        check("b_out" + suffix, [hh](NetworkParams& p) -> Eigen::Vector2d& { return p.heads[hh].b_out; },
              [hh](const GradientSet& g) -> const Eigen::Vector2d& { return g.heads[hh].b_out; });
    }
    return report;
}

// --- training log -----------------------------------------------------------

struct EpochRecord {
    long epoch = 0;
    std::vector<int> targets;
    double loss = 0.0;
    std::vector<double> accuracies;
    double mean_tau = 0.0;
    double std_tau = 0.0;
    double wall_seconds = 0.0;
};

inline std::pair<double, double> tau_moments(const NetworkParams& p) {
    std::vector<double> t(p.tau.data(), p.tau.data() + p.tau.size());
    return {mean(t), stddev(t)};
}

}  // namespace taulab
