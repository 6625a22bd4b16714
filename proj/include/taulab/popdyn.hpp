#pragma once

// Population-level statistics: activity dimensionality and recurrent weight balance.

#include "taulab/error.hpp"
#include "taulab/net.hpp"
#include "taulab/rng.hpp"
#include "taulab/stats.hpp"
#include "taulab/timescales.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <ostream>
#include <vector>

namespace taulab {

/// Smallest number of principal components whose variance reaches `fraction`
/// of the total. Eigenvalues below 1e-10 of the trace count as zero, so the
/// result at fraction 1 is the numerical rank. Rows are time, columns neurons.
inline int dimensionality(const Eigen::MatrixXd& activity, double fraction = 0.9) {
    if (!(fraction > 0.0 && fraction <= 1.0)) throw structural_error("variance fraction must be in (0, 1]");
    if (activity.rows() < 2) throw precondition_error("dimensionality needs at least two time steps");
    const Eigen::MatrixXd x = activity.rowwise() - activity.colwise().mean();
    const Eigen::MatrixXd cov = (x.transpose() * x) / static_cast<double>(activity.rows() - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov, Eigen::EigenvaluesOnly);
    std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
    std::sort(ev.begin(), ev.end(), std::greater<>());
    double trace = 0.0;
    for (double v : ev) trace += std::max(v, 0.0);
    if (!(trace > 0.0)) return 0;
    double total = 0.0;
    for (double& v : ev) {
        if (v < 1e-10 * trace) v = 0.0;
        total += v;
    }
    double acc = 0.0;
    for (std::size_t m = 0; m < ev.size(); ++m) {
        if (ev[m] == 0.0) return static_cast<int>(m);
        acc += ev[m];
        if (acc >= fraction * total * (1.0 - 1e-12)) return static_cast<int>(m) + 1;
    }
    return static_cast<int>(ev.size());
}

struct WeightBalance {
    std::vector<double> per_neuron;  ///< mean incoming recurrent weight of each neuron
    double mean = 0.0;
    double std = 0.0;
};

/// Mean over j of W_ij for each neuron i (the zero self-weight included),
/// then the population mean and STD of those means.
inline WeightBalance weight_balance(const NetworkParams& params) {
    WeightBalance wb;
    const int n = params.size();
    wb.per_neuron.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) wb.per_neuron[static_cast<std::size_t>(i)] = params.w_rec.row(i).mean();
    wb.mean = taulab::mean(wb.per_neuron);
    wb.std = stddev(wb.per_neuron);
    return wb;
}

struct PopulationProtocol {
    long steps = 10000;
    int burn_in = 100;
    double fraction = 0.9;
};

inline int network_dimensionality(const NetworkParams& params, const NetConfig& cfg, int k, std::uint64_t seed,
                                  PopulationProtocol protocol = {}) {
    rng_engine rng = make_stream(seed, "popdyn");
    const Eigen::MatrixXd act = simulate_activity(params, cfg, k, protocol.steps, protocol.burn_in, rng);
    return dimensionality(act, protocol.fraction);
}

/// neuron_id,mean_incoming_weight
inline void write_balance_csv(std::ostream& os, const WeightBalance& wb) {
    os << "neuron_id,mean_incoming_weight\n";
    os.precision(17);
    for (std::size_t i = 0; i < wb.per_neuron.size(); ++i) os << i << ',' << wb.per_neuron[i] << '\n';
}

}  // namespace taulab
