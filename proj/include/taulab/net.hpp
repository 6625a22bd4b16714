#pragma once

// Leaky recurrent network with one trainable timescale per neuron.
//
//   inside : r_i(t) = phi((1 - 1/tau_i) r_i(t-1) + (1/tau_i) z_i(t))
//   outside: r_i(t) = (1 - 1/tau_i) r_i(t-1) + phi((1/tau_i) z_i(t))
//
// with drive z_i(t) = sum_{j != i} W_ij r_j(t-1) + Win_i S(t) + bR_i + bI_i.

#include "taulab/error.hpp"
#include "taulab/rng.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace taulab {

enum class nonlinearity { leaky_relu, relu, tanh };
enum class tau_placement { inside, outside };
enum class bias_mode { vector, scalar };

inline std::string_view to_string(nonlinearity f) {
    switch (f) {
    case nonlinearity::leaky_relu: return "leaky-relu";
    case nonlinearity::relu: return "relu";
    case nonlinearity::tanh: return "tanh";
    }
    return "?";
}

inline std::string_view to_string(tau_placement p) {
    return p == tau_placement::inside ? "inside" : "outside";
}

inline std::string_view to_string(bias_mode b) {
    return b == bias_mode::vector ? "vector" : "scalar";
}

struct NetConfig {
    int n = 64;
    double alpha = 0.1;
    nonlinearity phi = nonlinearity::leaky_relu;
    tau_placement placement = tau_placement::inside;
    double tau_max = 200.0;
    bias_mode biases = bias_mode::vector;
    /// Recurrent init std is init_gain / sqrt(n).
    double init_gain = 0.5;

    bool operator==(const NetConfig&) const = default;

    void validate() const {
        if (n < 2) throw config_error("net.neurons", "must be >= 2");
        if (!(alpha >= 0.0 && alpha < 1.0)) throw config_error("net.alpha", "must lie in [0, 1)");
        if (!(tau_max > 1.0)) throw config_error("net.tau_max", "must be > 1");
        if (!(init_gain >= 0.0)) throw config_error("net.init_gain", "must be >= 0");
    }
};

using ReadoutMatrix = Eigen::Matrix<double, 2, Eigen::Dynamic>;

struct ReadoutHead {
    ReadoutMatrix w_out;
    Eigen::Vector2d b_out = Eigen::Vector2d::Zero();
    int target_n = 2;
};

struct NetworkParams {
    Eigen::MatrixXd w_rec;
    Eigen::VectorXd w_in;
    Eigen::VectorXd b_rec;  // size n, or size 1 in scalar bias mode
    Eigen::VectorXd b_in;
    Eigen::VectorXd tau;
    std::vector<ReadoutHead> heads;

    int size() const { return static_cast<int>(tau.size()); }

    /// Combined bias b^R + b^I broadcast to n entries.
    Eigen::VectorXd total_bias() const {
        const int n = size();
        Eigen::VectorXd b(n);
        if (b_rec.size() == 1) {
            b.setConstant(b_rec(0) + b_in(0));
        } else {
            b = b_rec + b_in;
        }
        return b;
    }

    int head_index_for(int target_n) const {
        for (std::size_t h = 0; h < heads.size(); ++h) {
            if (heads[h].target_n == target_n) return static_cast<int>(h);
        }
        return -1;
    }

    bool operator==(const NetworkParams& o) const {
        if (heads.size() != o.heads.size()) return false;
        for (std::size_t h = 0; h < heads.size(); ++h) {
            const auto& a = heads[h];
            const auto& b = o.heads[h];
            if (a.target_n != b.target_n || a.w_out.cols() != b.w_out.cols() || a.w_out != b.w_out ||
                a.b_out != b.b_out)
                return false;
        }
        auto same = [](const auto& x, const auto& y) {
            return x.rows() == y.rows() && x.cols() == y.cols() && x == y;
        };
        return same(w_rec, o.w_rec) && same(w_in, o.w_in) && same(b_rec, o.b_rec) &&
               same(b_in, o.b_in) && same(tau, o.tau);
    }
};

struct NetState {
    Eigen::VectorXd r;
};

inline NetState zero_state(const NetConfig& cfg) {
    return NetState{Eigen::VectorXd::Zero(cfg.n)};
}

// --- nonlinearity -----------------------------------------------------------

inline double activate(double x, const NetConfig& cfg) {
    switch (cfg.phi) {
    case nonlinearity::leaky_relu: return x >= 0.0 ? x : cfg.alpha * x;
    case nonlinearity::relu: return x >= 0.0 ? x : 0.0;
    case nonlinearity::tanh: return std::tanh(x);
    }
    return x;
}

/// Derivative; the kink at 0 takes the positive-branch slope.
inline double activate_slope(double x, const NetConfig& cfg) {
    switch (cfg.phi) {
    case nonlinearity::leaky_relu: return x >= 0.0 ? 1.0 : cfg.alpha;
    case nonlinearity::relu: return x >= 0.0 ? 1.0 : 0.0;
    case nonlinearity::tanh: {
        const double t = std::tanh(x);
        return 1.0 - t * t;
    }
    }
    return 1.0;
}

template <typename Derived>
Eigen::MatrixXd activate(const Eigen::MatrixBase<Derived>& x, const NetConfig& cfg) {
    switch (cfg.phi) {
    case nonlinearity::leaky_relu: {
        const double a = cfg.alpha;
        return x.unaryExpr([a](double v) { return v >= 0.0 ? v : a * v; });
    }
    case nonlinearity::relu: return x.cwiseMax(0.0);
    case nonlinearity::tanh: return x.array().tanh().matrix();
    }
    return x;
}

template <typename Derived>
Eigen::MatrixXd activate_slope(const Eigen::MatrixBase<Derived>& x, const NetConfig& cfg) {
    switch (cfg.phi) {
    case nonlinearity::leaky_relu: {
        const double a = cfg.alpha;
        return x.unaryExpr([a](double v) { return v >= 0.0 ? 1.0 : a; });
    }
    case nonlinearity::relu: return x.unaryExpr([](double v) { return v >= 0.0 ? 1.0 : 0.0; });
    case nonlinearity::tanh: return (1.0 - x.array().tanh().square()).matrix();
    }
    return Eigen::MatrixXd::Ones(x.rows(), x.cols());
}

// --- initialization ---------------------------------------------------------

inline ReadoutHead make_head(int n, int target_n, rng_engine& rng) {
    if (target_n < 2) throw structural_error("readout head target_n must be >= 2");
    ReadoutHead h;
    h.target_n = target_n;
    h.w_out.resize(2, n);
    const double std = 1.0 / std::sqrt(static_cast<double>(n));
    for (int c = 0; c < n; ++c)
        for (int r = 0; r < 2; ++r) h.w_out(r, c) = std * standard_normal(rng);
    h.b_out.setZero();
    return h;
}

inline void mask_diagonal(Eigen::MatrixXd& w) {
    w.diagonal().setZero();
}

/// Random network with one head per entry of `head_targets`.
inline NetworkParams init_params(const NetConfig& cfg, std::span<const int> head_targets,
                                 rng_engine& rng) {
    cfg.validate();
    const int n = cfg.n;
    const double sn = std::sqrt(static_cast<double>(n));
    NetworkParams p;
    p.w_rec.resize(n, n);
    for (int c = 0; c < n; ++c)
        for (int r = 0; r < n; ++r) p.w_rec(r, c) = cfg.init_gain / sn * standard_normal(rng);
    mask_diagonal(p.w_rec);
    p.w_in.resize(n);
    for (int i = 0; i < n; ++i) p.w_in(i) = standard_normal(rng) / sn;
    const int nb = cfg.biases == bias_mode::vector ? n : 1;
    p.b_rec = Eigen::VectorXd::Zero(nb);
    p.b_in = Eigen::VectorXd::Zero(nb);
    p.tau.resize(n);
    for (int i = 0; i < n; ++i)
        p.tau(i) = std::min(cfg.tau_max, 1.0 + std::abs(0.1 * standard_normal(rng)));
    int prev = 1;
    for (int t : head_targets) {
        if (t <= prev) throw structural_error("head targets must be strictly increasing and >= 2");
        p.heads.push_back(make_head(n, t, rng));
        prev = t;
    }
    return p;
}

inline void check_params(const NetworkParams& p, const NetConfig& cfg) {
    const int n = cfg.n;
    if (p.w_rec.rows() != n || p.w_rec.cols() != n || p.w_in.size() != n || p.tau.size() != n)
        throw structural_error("network parameter shapes do not match net.neurons=" + std::to_string(n));
    const long nb = p.b_rec.size();
    if ((nb != n && nb != 1) || p.b_in.size() != nb)
        throw structural_error("bias vectors must both have size n or both size 1");
    for (const auto& h : p.heads)
        if (h.w_out.cols() != n) throw structural_error("readout head width does not match n");
}

// --- dynamics ---------------------------------------------------------------

/// One network update with a scalar input.
inline NetState step(const NetworkParams& params, const NetConfig& cfg, const NetState& state,
                     int input_bit) {
    const int n = cfg.n;
    if (state.r.size() != n || params.tau.size() != n || params.w_rec.rows() != n)
        throw structural_error("state dimension " + std::to_string(state.r.size()) +
                               " does not match net.neurons=" + std::to_string(n));
    const Eigen::VectorXd z = params.w_rec * state.r + params.w_in * static_cast<double>(input_bit) +
                              params.total_bias();
    NetState next{Eigen::VectorXd(n)};
    for (int i = 0; i < n; ++i) {
        const double a = 1.0 / params.tau(i);
        const double leak = (1.0 - a) * state.r(i);
        double r;
        if (cfg.placement == tau_placement::inside) {
            r = activate(leak + a * z(i), cfg);
        } else {
            r = leak + activate(a * z(i), cfg);
        }
        if (!std::isfinite(r))
            throw numeric_overflow_error("non-finite activity at neuron " + std::to_string(i), i);
        next.r(i) = r;
    }
    return next;
}

/// Iterates `step` over the input sequence starting from `initial`.
inline std::vector<NetState> rollout(const NetworkParams& params, const NetConfig& cfg,
                                     const NetState& initial, std::span<const std::uint8_t> inputs) {
    if (inputs.empty()) throw structural_error("rollout requires a non-empty input sequence");
    std::vector<NetState> out;
    out.reserve(inputs.size());
    const NetState* prev = &initial;
    for (std::size_t t = 0; t < inputs.size(); ++t) {
        try {
            out.push_back(step(params, cfg, *prev, inputs[t]));
        } catch (const numeric_overflow_error& e) {
            throw numeric_overflow_error(std::string(e.what()) + " at time index " + std::to_string(t),
                                         e.neuron(), static_cast<long>(t));
        }
        prev = &out.back();
    }
    return out;
}

inline Eigen::Vector2d readout(const NetworkParams& params, const NetState& state, int head_index) {
    if (head_index < 0 || head_index >= static_cast<int>(params.heads.size()))
        throw structural_error("invalid head index " + std::to_string(head_index));
    const auto& h = params.heads[static_cast<std::size_t>(head_index)];
    if (h.w_out.cols() != state.r.size()) throw structural_error("readout width does not match state");
    return h.w_out * state.r + h.b_out;
}

/// Class decision; ties go to class 0.
inline int predict(const Eigen::Vector2d& logits) {
    return logits(1) > logits(0) ? 1 : 0;
}

/// Batched update: columns of `r_prev` are independent sequences.
/// Writes the drive z and the nonlinearity argument into the out-parameters.
inline void step_batch(const NetworkParams& params, const NetConfig& cfg, const Eigen::MatrixXd& r_prev,
                       const Eigen::RowVectorXd& input, const Eigen::VectorXd& bias,
                       Eigen::MatrixXd& drive, Eigen::MatrixXd& pre, Eigen::MatrixXd& r_next) {
    const Eigen::ArrayXd a = params.tau.array().inverse();
    drive.noalias() = params.w_rec * r_prev;
    drive += params.w_in * input;
    drive.colwise() += bias;
    if (cfg.placement == tau_placement::inside) {
        pre = ((1.0 - a).matrix().asDiagonal() * r_prev) + a.matrix().asDiagonal() * drive;
        r_next = activate(pre, cfg);
    } else {
        pre = a.matrix().asDiagonal() * drive;
        r_next = ((1.0 - a).matrix().asDiagonal() * r_prev) + activate(pre, cfg);
    }
}

}  // namespace taulab
