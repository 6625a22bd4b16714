#include "helpers.hpp"

#include <gtest/gtest.h>

using namespace taulab;
using taulab::testing::random_params;
using taulab::testing::small_config;
using taulab::testing::xor_network;

namespace {

EvalSetup xor_setup() {
    EvalSetup s;
    s.trials = 5;
    s.seed = 3;
    s.protocol.scored = 300;
    return s;
}

}  // namespace

TEST(RelativeAccuracy, Examples) {
    EXPECT_DOUBLE_EQ(relative_accuracy(0.9, 0.9), 1.0);
    EXPECT_DOUBLE_EQ(relative_accuracy(0.5, 0.9), 0.0);
    EXPECT_DOUBLE_EQ(relative_accuracy(0.7, 0.9), 0.5);
    EXPECT_LT(relative_accuracy(0.4, 0.9), 0.0);
}

TEST(RelativeAccuracy, UnmodifiedNetworkScoresExactlyOne) {
    const std::vector<double> trials{0.9, 0.8, 0.95, 0.7};
    const double base = mean(trials);
    const auto r = score_trials(intervention_kind::ablate, "", base, trials);
    EXPECT_NEAR(r.mean_rel, 1.0, 1e-14);
    for (double a : trials) EXPECT_EQ(relative_accuracy(a, a), 1.0);
    EXPECT_EQ(relative_accuracy(0.5, base), 0.0);

    const auto xr = relative_accuracy(xor_network(), xor_network(), small_config(3, nonlinearity::relu), xor_setup());
    EXPECT_EQ(xr.mean_rel, 1.0);
    EXPECT_EQ(xr.std_rel, 0.0);
}

TEST(RelativeAccuracy, RefusesNearChance) {
    EXPECT_THROW(score_trials(intervention_kind::ablate, "", 0.55, {0.6}), precondition_error);
    EXPECT_NO_THROW(score_trials(intervention_kind::ablate, "", 0.56, {0.6}));
    rng_engine rng = make_stream(2, "test");
    auto cfg = small_config(16);
    const int heads[] = {6};
    const auto untrained = init_params(cfg, heads, rng);
    EvalSetup s;
    s.trials = 4;
    EXPECT_THROW(relative_accuracy(untrained, untrained, cfg, s), precondition_error);
    EXPECT_THROW(ablation_experiment(untrained, cfg, s, tau_rank::longest, 2), precondition_error);
}

TEST(Ablation, ZeroesConnectionsOnly) {
    rng_engine rng = make_stream(3, "test");
    auto cfg = small_config(8);
    const auto p = random_params(cfg, {2, 3}, rng);
    const int idx[] = {1, 5};
    const auto a = ablate(p, idx);
    for (int i : idx) {
        EXPECT_EQ(a.w_rec.row(i).cwiseAbs().sum(), 0.0);
        EXPECT_EQ(a.w_rec.col(i).cwiseAbs().sum(), 0.0);
        EXPECT_EQ(a.w_in(i), 0.0);
        for (const auto& h : a.heads) EXPECT_EQ(h.w_out.col(i).cwiseAbs().sum(), 0.0);
    }
    EXPECT_EQ(a.tau, p.tau);
    EXPECT_EQ(a.b_rec, p.b_rec);
    EXPECT_EQ(a.w_rec(0, 2), p.w_rec(0, 2));
    EXPECT_TRUE(ablate(a, idx) == a);
    const int bad[] = {8};
    EXPECT_THROW(ablate(p, bad), structural_error);
}

TEST(Ablation, DisconnectedNeuronIsNoOp) {
    rng_engine rng = make_stream(4, "test");
    auto cfg = small_config(6);
    auto p = random_params(cfg, {2}, rng);
    p.w_rec.row(3).setZero();
    p.w_rec.col(3).setZero();
    p.w_in(3) = 0.0;
    p.heads[0].w_out.col(3).setZero();
    const int idx[] = {3};
    EXPECT_TRUE(ablate(p, idx) == p);
}

TEST(Ablation, SelectByTau) {
    NetworkParams p;
    p.tau = Eigen::VectorXd(5);
    p.tau << 1, 2, 3, 4, 5;
    EXPECT_EQ(select_by_tau(p, 2, tau_rank::longest), (std::vector<int>{3, 4}));
    EXPECT_EQ(select_by_tau(p, 2, tau_rank::shortest), (std::vector<int>{0, 1}));
    p.tau.setConstant(2.0);
    EXPECT_EQ(select_by_tau(p, 3, tau_rank::longest), (std::vector<int>{0, 1, 2}));
    EXPECT_EQ(select_by_tau(p, 3, tau_rank::shortest), (std::vector<int>{0, 1, 2}));
    EXPECT_THROW(select_by_tau(p, 6, tau_rank::longest), structural_error);
    EXPECT_EQ(default_ablation_count(100), 4);
    EXPECT_EQ(default_ablation_count(64), 3);
    EXPECT_EQ(default_ablation_count(500), 20);
}

TEST(Perturbation, ZeroEpsilonIsIdentity) {
    rng_engine rng = make_stream(5, "test");
    auto cfg = small_config(8);
    const auto p = random_params(cfg, {2}, rng);
    EXPECT_TRUE(perturb(p, perturb_target::weights, 0.0, rng) == p);
    EXPECT_TRUE(perturb(p, perturb_target::tau, 0.0, rng) == p);
    EXPECT_THROW(perturb(p, perturb_target::tau, -0.1, rng), structural_error);
}

TEST(Perturbation, WeightNormScalesWithEpsilon) {
    rng_engine rng = make_stream(6, "test");
    for (int trial = 0; trial < 30; ++trial) {
        auto cfg = small_config(5 + trial % 7);
        const auto p = random_params(cfg, {2}, rng);
        const double eps = 0.01 + 0.05 * trial;
        const auto q = perturb(p, perturb_target::weights, eps, rng);
        const double d = (q.w_rec - p.w_rec).norm();
        EXPECT_NEAR(d / p.w_rec.norm(), eps, 1e-10 * eps);
        EXPECT_EQ(q.w_rec.diagonal().cwiseAbs().maxCoeff(), 0.0);
        EXPECT_EQ(q.tau, p.tau);
    }
}

TEST(Perturbation, TauNeverDecreases) {
    rng_engine rng = make_stream(7, "test");
    for (int trial = 0; trial < 30; ++trial) {
        auto cfg = small_config(9);
        const auto p = random_params(cfg, {2}, rng);
        const double eps = 0.02 * (trial + 1);
        const auto q = perturb(p, perturb_target::tau, eps, rng);
        for (int i = 0; i < 9; ++i) EXPECT_GE(q.tau(i), p.tau(i));
        EXPECT_GE(q.tau.minCoeff(), p.tau.minCoeff());
        EXPECT_NEAR((q.tau - p.tau).norm(), eps * p.tau.norm(), 1e-10);
        EXPECT_EQ(q.w_rec, p.w_rec);
    }
}

TEST(Perturbation, SameStreamSameResult) {
    rng_engine rng = make_stream(8, "test");
    auto cfg = small_config(7);
    const auto p = random_params(cfg, {2}, rng);
    rng_engine a = make_stream(1, "perturb_w", 0), b = make_stream(1, "perturb_w", 0);
    EXPECT_TRUE(perturb(p, perturb_target::weights, 0.1, a) == perturb(p, perturb_target::weights, 0.1, b));
}

TEST(Experiments, BaseIsNotMutated) {
    const auto cfg = small_config(3, nonlinearity::relu);
    const auto p = xor_network();
    const auto copy = p;
    const auto r = perturbation_experiment(p, cfg, xor_setup(), perturb_target::weights, 0.2);
    EXPECT_TRUE(p == copy);
    EXPECT_EQ(r.trial_rel.size(), 5u);
    EXPECT_EQ(r.kind, intervention_kind::perturb_w);
    const auto zero = perturbation_experiment(p, cfg, xor_setup(), perturb_target::tau, 0.0);
    EXPECT_EQ(zero.mean_rel, 1.0);
}

TEST(Experiments, AblatingTheConjunctionBreaksXor) {
    const auto cfg = small_config(3, nonlinearity::relu);
    const auto p = xor_network();
    const int idx[] = {2};
    const auto r = relative_accuracy(p, ablate(p, idx), cfg, xor_setup());
    EXPECT_LT(r.mean_rel, 0.9);
    EXPECT_EQ(r.acc_base, 1.0);
}

TEST(Experiments, CsvRows) {
    const auto r = score_trials(intervention_kind::perturb_tau, "0.1", 0.9, {0.9, 0.7});
    std::ostringstream os;
    write_intervention_rows(os, "run", r);
    EXPECT_EQ(os.str(), "run,perturb_tau,0.1,0,0.9,0.9,1\nrun,perturb_tau,0.1,1,0.9,0.7,0.5\n");
}
