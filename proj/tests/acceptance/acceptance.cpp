// Desk-scale acceptance suite. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails. Trained runs are cached under
// --cache and reused on later invocations.

#include "../unit/helpers.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>

using namespace taulab;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

struct Suite {
    fs::path cache;
    std::vector<std::uint64_t> seeds{0, 1, 2, 3};
    int workers = 1;
};

std::string fmt(double x, int digits = 3) {
    std::ostringstream os;
    os.precision(digits);
    os << x;
    return os.str();
}

template <typename T>
std::string list(const std::vector<T>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt(static_cast<double>(v[i]));
    return s + "]";
}

double median_of(const std::vector<int>& v) {
    return median(std::vector<double>(v.begin(), v.end()));
}

DeskSettings desk(const Suite& s, const std::string& sub = "desk") {
    DeskSettings d;
    d.root = s.cache / sub;
    d.seeds = s.seeds;
    d.workers = s.workers;
    return d;
}

// --- 1. gradients ---------------------------------------------------------------

Outcome gradients() {
    rng_engine rng = make_stream(11, "acceptance-grad");
    double worst = 0.0;
    long compared = 0, excluded = 0, failed = 0;
    for (auto phi : {nonlinearity::leaky_relu, nonlinearity::relu, nonlinearity::tanh})
        for (auto placement : {tau_placement::inside, tau_placement::outside})
            for (int inst = 0; inst < 20; ++inst) {
                const int n = testing::uniform_int(rng, 3, 10);
                const int depth = testing::uniform_int(rng, 2, 5);
                const int len = testing::uniform_int(rng, depth + 2, 20);
                auto cfg = testing::small_config(n, phi, placement);
                auto p = depth > 2 ? testing::random_params(cfg, {depth - 1, depth}, rng)
                                   : testing::random_params(cfg, {depth}, rng);
                const Batch batch = make_batch(task_kind::parity, depth, 1, testing::random_digits(3, len, rng));
                const auto rep = gradient_check(p, cfg, batch, 1e-4, true, 1e-5);
                worst = std::max(worst, rep.max_rel_error());
                for (const auto& g : rep.groups) {
                    compared += g.compared;
                    excluded += g.excluded;
                }
                failed += !rep.passed();
            }
    return {failed == 0, "120 instances, central differences h=1e-5, max rel error " + fmt(worst) + ", " + std::to_string(compared) +
                             " coordinates compared, " + std::to_string(excluded) + " kink-adjacent excluded, " +
                             std::to_string(failed) + " failing instances"};
}

// --- 2. task oracles ------------------------------------------------------------

Outcome task_oracles() {
    long checked = 0, mismatches = 0;
    for (auto kind : {task_kind::parity, task_kind::dms})
        for (int n = 2; n <= 6; ++n)
            for (int len = 1; len <= 10; ++len)
                for (unsigned code = 0; code < (1u << len); ++code) {
                    std::vector<std::uint8_t> d(static_cast<std::size_t>(len));
                    for (int i = 0; i < len; ++i) d[static_cast<std::size_t>(i)] = (code >> i) & 1u;
                    const Batch b = make_batch(kind, n, 1, {d});
                    for (int i = 0; i < len; ++i) {
                        int expect = -1;
                        if (i >= n - 1) {
                            if (kind == task_kind::parity) {
                                expect = 0;
                                for (int j = i - n + 1; j <= i; ++j) expect ^= d[static_cast<std::size_t>(j)];
                            } else {
                                expect = d[static_cast<std::size_t>(i)] == d[static_cast<std::size_t>(i - n + 1)];
                            }
                        }
                        mismatches += b.target(0, i) != expect;
                        ++checked;
                    }
                }
    return {mismatches == 0, std::to_string(checked) + " targets checked, " + std::to_string(mismatches) + " mismatches"};
}

// --- 3. timescale estimator -----------------------------------------------------

Outcome timescale_estimator() {
    const int n = 64;
    rng_engine rng = make_stream(3, "acceptance-decoupled");
    NetConfig cfg;
    cfg.n = n;
    NetworkParams p;
    p.w_rec = Eigen::MatrixXd::Zero(n, n);
    p.w_in = Eigen::VectorXd(n);
    p.b_rec = Eigen::VectorXd(n);
    p.b_in = Eigen::VectorXd::Zero(n);
    p.tau = Eigen::VectorXd(n);
    for (int i = 0; i < n; ++i) {
        p.tau(i) = testing::uniform(rng, 2.0, 10.0);
        p.w_in(i) = testing::uniform(rng, 0.5, 1.5);
        p.b_rec(i) = testing::uniform(rng, 0.2, 1.0);
    }
    ReadoutHead h;
    h.w_out = ReadoutMatrix::Zero(2, n);
    p.heads.push_back(h);
    const auto rep = network_timescale_report(p, cfg, 1, 5, DriveProtocol{10, 100000, 100, 0});
    int within = 0, single = 0;
    for (const auto& nt : rep.neurons) {
        if (!nt.fit) continue;
        within += std::abs(nt.fit->tau_net - p.tau(nt.neuron)) <= 0.1 * p.tau(nt.neuron);
        single += nt.fit->model == ac_model::single;
    }
    const double f_within = static_cast<double>(within) / n, f_single = static_cast<double>(single) / n;
    return {rep.live == n && f_within >= 0.9 && f_single >= 0.9,
            "tau_net within 10%: " + fmt(f_within) + " (need 0.9), single model selected: " + fmt(f_single) +
                " (need 0.9), live " + std::to_string(rep.live) + "/" + std::to_string(n)};
}

// --- shared run sets ------------------------------------------------------------

struct CurriculumRuns {
    std::vector<RunState> multi, single;
    std::vector<int> none_max;
    std::vector<double> none_at_10;  ///< final accuracy of the N = 10 run per seed
    std::vector<bool> none_solved_10;
};

Variant styled(std::string name, curriculum_mode mode, nonlinearity phi, tau_placement placement) {
    Variant v = variant(std::move(name), mode);
    v.phi = phi;
    v.placement = placement;
    return v;
}

RunState none_run(const DeskSettings& d, std::uint64_t seed, int n, nonlinearity phi, tau_placement placement) {
    Variant v = styled("none_N" + std::to_string(n), curriculum_mode::none, phi, placement);
    v.fixed_n = n;
    DeskSettings one = d;
    one.seeds = {seed};
    return ensure_runs(one, v)[0];
}

int none_scan(const DeskSettings& d, std::uint64_t seed, nonlinearity phi, tau_placement placement) {
    int best = 0;
    for (int n = 2; n <= d.max_n; ++n) {
        if (!none_run(d, seed, n, phi, placement).curriculum.solve_epoch.count(n)) break;
        best = n;
    }
    return best;
}

CurriculumRuns curriculum_runs(const DeskSettings& d, nonlinearity phi = nonlinearity::leaky_relu,
                               tau_placement placement = tau_placement::inside) {
    CurriculumRuns r;
    r.multi = ensure_runs(d, styled("multi", curriculum_mode::multi, phi, placement));
    r.single = ensure_runs(d, styled("single", curriculum_mode::single, phi, placement));
    for (auto seed : d.seeds) {
        r.none_max.push_back(none_scan(d, seed, phi, placement));
        const auto run = none_run(d, seed, 10, phi, placement);
        r.none_at_10.push_back(run.log.empty() ? 0.0 : run.log.back().accuracies.front());
        r.none_solved_10.push_back(run.curriculum.solve_epoch.count(10) > 0);
    }
    return r;
}

std::vector<int> maxima(const std::vector<RunState>& runs) {
    std::vector<int> m;
    for (const auto& r : runs) m.push_back(max_solved(r));
    return m;
}

// --- 4. curriculum effect -------------------------------------------------------

Outcome ordering(const CurriculumRuns& r, bool absolute_levels) {
    const auto mm = maxima(r.multi), ms = maxima(r.single);
    const double med_m = median_of(mm), med_s = median_of(ms), med_n = median_of(r.none_max);
    bool pass = med_m > med_s && med_s > med_n;
    bool none_fails = true;
    for (bool s : r.none_solved_10) none_fails = none_fails && !s;
    if (absolute_levels) pass = pass && med_m >= 10 && none_fails;
    std::string detail = "median max N multi " + fmt(med_m) + " " + list(mm) + ", single " + fmt(med_s) + " " +
                         list(ms) + ", none " + fmt(med_n) + " " + list(r.none_max);
    if (absolute_levels) detail += "; none at N=10 final accuracy " + list(r.none_at_10);
    return {pass, detail};
}

// --- 5. tau trajectories --------------------------------------------------------

struct TauTrend {
    std::vector<double> single_rho;
    std::vector<double> multi_final;
    std::vector<double> multi_slope;
};

TauTrend tau_trends(const CurriculumRuns& r) {
    TauTrend t;
    for (const auto& run : r.single) {
        std::vector<double> ns, taus;
        for (const auto& pt : tau_trajectory(run)) {
            ns.push_back(pt.n);
            taus.push_back(pt.mean_tau);
        }
        t.single_rho.push_back(ns.size() >= 3 ? spearman(ns, taus) : 0.0);
    }
    for (const auto& run : r.multi) {
        std::vector<double> ns, taus;
        for (const auto& pt : tau_trajectory(run)) {
            ns.push_back(pt.n);
            taus.push_back(pt.mean_tau);
        }
        t.multi_final.push_back(run.log.empty() ? 0.0 : run.log.back().mean_tau);
        t.multi_slope.push_back(ns.size() >= 3 ? slope(ns, taus) : 0.0);
    }
    return t;
}

/// Slopes up to this many tau units per unit of N count as a near-zero trend.
constexpr double flat_slope = 0.01;

Outcome tau_outcome(const CurriculumRuns& r) {
    const auto t = tau_trends(r);
    const double rho = median(t.single_rho), fin = median(t.multi_final), sl = median(t.multi_slope);
    const bool pass = rho > 0.5 && fin <= 1.3 && sl <= flat_slope && t.single_rho.size() >= 2;
    return {pass, "single Spearman(mean tau, N) median " + fmt(rho) + " " + list(t.single_rho) +
                      "; multi final mean tau median " + fmt(fin) + " " + list(t.multi_final) +
                      ", slope median " + fmt(sl) + " " + list(t.multi_slope)};
}

// --- 6. fixed tau ---------------------------------------------------------------

Outcome fixed_tau(const DeskSettings& d, const CurriculumRuns& r) {
    auto fixed = [&](curriculum_mode mode, double tau) {
        Variant v = variant(std::string(to_string(mode)) + "_tau" + fmt(tau), mode);
        v.fixed_tau = tau;
        return median_of(maxima(ensure_runs(d, v)));
    };
    const double multi = median_of(maxima(r.multi)), single = median_of(maxima(r.single));
    const double m1 = fixed(curriculum_mode::multi, 1.0), m3 = fixed(curriculum_mode::multi, 3.0);
    const double s1 = fixed(curriculum_mode::single, 1.0), s2 = fixed(curriculum_mode::single, 2.0),
                 s3 = fixed(curriculum_mode::single, 3.0);
    const bool pass = std::abs(m1 - multi) <= 2 && m3 < multi && s1 < single && s2 < single && s3 < single;
    return {pass, "median max N multi trained " + fmt(multi) + ", tau=1 " + fmt(m1) + ", tau=3 " + fmt(m3) +
                      "; single trained " + fmt(single) + ", tau=1 " + fmt(s1) + ", tau=2 " + fmt(s2) + ", tau=3 " +
                      fmt(s3)};
}

// --- 7. tau_net growth ----------------------------------------------------------

Outcome tau_net_growth(const DeskSettings& d, const CurriculumRuns& r) {
    bool pass = true;
    std::string detail;
    double min_r2 = 1.0;
    long fits = 0, below = 0;
    for (const auto& [label, runs] : {std::pair{"multi", &r.multi}, std::pair{"single", &r.single}}) {
        std::vector<double> at3, at_max;
        for (const auto& run : *runs) {
            const int top = max_solved(run);
            if (top < 4) continue;
            const Variant v = variant(label, run.curriculum.config.mode);
            for (int n : {3, top}) {
                const auto pt = timescale_point(d, load_snapshot(d, v, run.seed, n), n);
                (n == 3 ? at3 : at_max).push_back(pt.mean_tau_net);
                min_r2 = std::min(min_r2, pt.min_r2);
                fits += pt.live;
                below += std::lround((1.0 - pt.frac_r2) * pt.live);
            }
        }
        const double ratio = at3.empty() ? 0.0 : mean(at_max) / mean(at3);
        pass = pass && ratio >= 1.5;
        detail += std::string(label) + " mean tau_net N=3 " + fmt(at3.empty() ? 0.0 : mean(at3)) + ", largest N " +
                  fmt(at_max.empty() ? 0.0 : mean(at_max)) + ", ratio " + fmt(ratio) + " (need 1.5); ";
    }
    pass = pass && below == 0;
    detail += "fits with r2 < 0.95: " + std::to_string(below) + "/" + std::to_string(fits) + ", min r2 " + fmt(min_r2);
    return {pass, detail};
}

// --- 8. ablation ----------------------------------------------------------------

Outcome ablation(const DeskSettings& d, const CurriculumRuns& r) {
    struct Acc {
        std::vector<double> longest, shortest, longest3, shortest3;
    };
    std::map<std::string, Acc> acc;
    for (const auto& [label, runs] : {std::pair{"multi", &r.multi}, std::pair{"single", &r.single}}) {
        for (const auto& run : *runs) {
            const int top = max_solved(run);
            if (top < 3) continue;
            const Variant v = variant(label, run.curriculum.config.mode);
            const auto big = ablation_pair(d, load_snapshot(d, v, run.seed, top), top);
            const auto small = ablation_pair(d, load_snapshot(d, v, run.seed, 3), 3);
            acc[label].longest.push_back(big.longest.mean_rel);
            acc[label].shortest.push_back(big.shortest.mean_rel);
            acc[label].longest3.push_back(small.longest.mean_rel);
            acc[label].shortest3.push_back(small.shortest.mean_rel);
        }
    }
    auto m = [](const std::vector<double>& v) { return v.empty() ? 0.0 : mean(v); };
    const auto& s = acc["single"];
    const auto& mu = acc["multi"];
    const bool asym = m(s.longest) < m(s.shortest) && m(mu.longest) > m(mu.shortest);
    const bool small_ok = m(s.longest3) > 0.9 && m(s.shortest3) > 0.9 && m(mu.longest3) > 0.9 && m(mu.shortest3) > 0.9;
    return {asym && small_ok && !s.longest.empty() && !mu.longest.empty(),
            "largest N acc_rel single longest " + fmt(m(s.longest)) + " vs shortest " + fmt(m(s.shortest)) +
                ", multi longest " + fmt(m(mu.longest)) + " vs shortest " + fmt(m(mu.shortest)) +
                "; N=3 single " + fmt(m(s.longest3)) + "/" + fmt(m(s.shortest3)) + ", multi " + fmt(m(mu.longest3)) +
                "/" + fmt(m(mu.shortest3))};
}

// --- 9. perturbation ------------------------------------------------------------

Outcome perturbation(const DeskSettings& d, const CurriculumRuns& r) {
    const auto grid = default_epsilon_grid();
    bool pass = true;
    std::string detail;
    for (auto target : {perturb_target::weights, perturb_target::tau}) {
        std::vector<double> multi(grid.size(), 0.0), single(grid.size(), 0.0);
        int used = 0;
        for (std::size_t i = 0; i < r.multi.size(); ++i) {
            const int n = std::min(max_solved(r.multi[i]), max_solved(r.single[i]));
            if (n < 2) continue;
            ++used;
            const auto seed = r.multi[i].seed;
            const auto pm = perturbation_sweep(d, load_snapshot(d, variant("multi", curriculum_mode::multi), seed, n), n, target, grid);
            const auto ps = perturbation_sweep(d, load_snapshot(d, variant("single", curriculum_mode::single), seed, n), n, target, grid);
            for (std::size_t e = 0; e < grid.size(); ++e) {
                multi[e] += pm[e].mean_rel;
                single[e] += ps[e].mean_rel;
            }
        }
        detail += target == perturb_target::weights ? "weights" : "; tau";
        for (std::size_t e = 0; e < grid.size(); ++e) {
            multi[e] /= std::max(used, 1);
            single[e] /= std::max(used, 1);
            pass = pass && multi[e] >= single[e] && used > 0;
            detail += " eps=" + fmt(grid[e]) + ": " + fmt(multi[e]) + " vs " + fmt(single[e]);
        }
    }
    return {pass, "multi vs single mean acc_rel at the largest N solved by both; " + detail};
}

// --- 10. relative accuracy ------------------------------------------------------

Outcome relative_metric() {
    bool pass = true;
    for (int i = 56; i <= 100; ++i) {
        const double base = i / 100.0;
        pass = pass && relative_accuracy(base, base) == 1.0 && relative_accuracy(0.5, base) == 0.0;
    }
    const auto p = testing::xor_network();
    EvalSetup s;
    s.trials = 10;
    const auto same = relative_accuracy(p, p, testing::small_config(3, nonlinearity::relu), s);
    pass = pass && same.mean_rel == 1.0;
    bool refused = false;
    try {
        score_trials(intervention_kind::ablate, "", 0.55, {0.6});
    } catch (const precondition_error&) {
        refused = true;
    }
    return {pass && refused, "acc = acc_base gives 1 and acc = 0.5 gives 0 exactly for 45 base values; unmodified "
                             "network mean acc_rel " + fmt(same.mean_rel, 17) +
                                 (refused ? "; refuses base 0.55" : "; did not refuse base 0.55")};
}

// --- 11. emergent curriculum ----------------------------------------------------

Outcome emergent(const DeskSettings& d) {
    auto all = [&](const std::string& name, int max_n) {
        Variant v = variant(name, curriculum_mode::all_at_once);
        v.all_max_n = max_n;
        return ensure_runs(d, v);
    };
    const auto a12 = all("all12", 12), a20 = all("all20", 20);
    const long never = d.max_epochs + 1;
    auto epochs = [&](const RunState& r, int n) {
        const auto it = r.curriculum.solve_epoch.find(n);
        return it == r.curriculum.solve_epoch.end() ? never : it->second;
    };
    bool pass = true;
    std::string detail = "inversions per seed";
    for (const auto& r : a12) {
        int inversions = 0;
        for (int n = 3; n <= 12; ++n) inversions += epochs(r, n) < epochs(r, n - 1);
        pass = pass && inversions <= 1;
        detail += " " + std::to_string(inversions);
    }
    detail += "; median epochs to 98% (11 heads vs 19 heads):";
    for (int n = 2; n <= 12; ++n) {
        std::vector<double> e12, e20;
        for (const auto& r : a12) e12.push_back(static_cast<double>(epochs(r, n)));
        for (const auto& r : a20) e20.push_back(static_cast<double>(epochs(r, n)));
        const double m12 = median(e12), m20 = median(e20);
        pass = pass && m12 <= m20;
        detail += " N" + std::to_string(n) + " " + (m12 >= never ? "-" : fmt(m12)) + "/" + (m20 >= never ? "-" : fmt(m20));
    }
    return {pass, detail};
}

// --- 12. determinism and persistence --------------------------------------------

Outcome determinism(const Suite& s) {
    ExperimentConfig cfg;
    cfg.net.n = 24;
    cfg.train.batches_per_epoch = 20;
    cfg.train.eval_sequences = 200;
    cfg.budget.max_epochs = 5;
    const fs::path a = s.cache / "determinism" / "a", b = s.cache / "determinism" / "b";
    fs::remove_all(s.cache / "determinism");
    execute_run(cfg, 7, {a}, false);
    execute_run(cfg, 7, {b}, false);
    bool same = true;
    for (const char* f : {"history.json", "train_log.csv", "checkpoint.bin"}) same = same && read_file(a / f) == read_file(b / f);

    rng_engine rng = make_stream(12, "acceptance-checkpoint");
    int exact = 0;
    for (int i = 0; i < 100; ++i) {
        const auto ck = testing::random_checkpoint(rng);
        const auto bytes = encode_checkpoint(ck);
        const auto back = decode_checkpoint(bytes);
        exact += back.run.params == ck.run.params && back.config == ck.config && encode_checkpoint(back) == bytes;
    }
    return {same && exact == 100, std::string("repeat run files ") + (same ? "byte-identical" : "differ") +
                                      "; checkpoint round trips bit-exact " + std::to_string(exact) + "/100"};
}

// --- 13. nonlinearity and placement ---------------------------------------------

Outcome robustness(const Suite& s) {
    bool pass = true;
    std::string detail;
    for (const auto& [label, phi, placement] :
         {std::tuple{"tanh", nonlinearity::tanh, tau_placement::inside},
          std::tuple{"outside", nonlinearity::leaky_relu, tau_placement::outside}}) {
        DeskSettings d = desk(s, label);
        d.seeds = {0, 1};
        d.max_epochs = 150;
        const auto runs = curriculum_runs(d, phi, placement);
        const auto o = ordering(runs, false);
        const auto t = tau_outcome(runs);
        pass = pass && o.pass && t.pass;
        detail += std::string(label) + ": " + o.detail + "; " + t.detail + ". ";
    }
    return {pass, detail};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"taulab acceptance suite"};
    Suite suite;
    std::string cache = "acceptance_runs";
    std::vector<int> only;
    app.add_option("--cache", cache, "directory for cached training runs");
    app.add_option("--only", only, "criteria to run (default: all)")->delimiter(',');
    app.add_option("--workers", suite.workers, "parallel training runs");
    CLI11_PARSE(app, argc, argv);
    suite.cache = cache;
    fs::create_directories(suite.cache);

    const DeskSettings d = desk(suite);
    std::optional<CurriculumRuns> main_runs;
    auto runs = [&]() -> const CurriculumRuns& {
        if (!main_runs) main_runs = curriculum_runs(d);
        return *main_runs;
    };

    const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
        {"gradient correctness", gradients},
        {"task oracles", task_oracles},
        {"timescale estimator", timescale_estimator},
        {"curriculum effect", [&] { return ordering(runs(), true); }},
        {"tau trajectories", [&] { return tau_outcome(runs()); }},
        {"fixed tau comparison", [&] { return fixed_tau(d, runs()); }},
        {"tau_net growth", [&] { return tau_net_growth(d, runs()); }},
        {"ablation asymmetry", [&] { return ablation(d, runs()); }},
        {"perturbation robustness", [&] { return perturbation(d, runs()); }},
        {"relative accuracy metric", relative_metric},
        {"emergent curriculum", [&] { return emergent(d); }},
        {"determinism and persistence", [&] { return determinism(suite); }},
        {"nonlinearity and placement robustness", [&] { return robustness(suite); }},
    };
    const std::set<int> selected(only.begin(), only.end());
    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!selected.empty() && !selected.count(id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failures += !o.pass;
        std::printf("criterion %2d %s: %s (%.1f s) %s\n", id, o.pass ? "PASS" : "FAIL", criteria[i].first.c_str(), secs,
                    o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
