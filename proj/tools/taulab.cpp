// taulab command-line interface: train, analyze, intervene, reproduce,
// grad-check, info.

#include "taulab/experiments.hpp"
#include "taulab/reproduce.hpp"
#include "taulab/svg.hpp"
#include "taulab/taulab.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <iostream>
#include <set>
#include <sstream>

namespace fs = std::filesystem;
using namespace taulab;

namespace {

enum exit_code : int { ok = 0, test_failed = 1, bad_config = 2, diverged = 3, io_failure = 4 };

std::vector<double> parse_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(detail::parse_double("--eps", detail::trim(item)));
    return out;
}

int deepest_head(const NetworkParams& p) {
    int n = 0;
    for (const auto& h : p.heads) n = std::max(n, h.target_n);
    return n;
}

std::string csv_row(std::initializer_list<std::string> cells) {
    std::string s;
    for (const auto& c : cells) s += (s.empty() ? "" : ",") + c;
    return s + "\n";
}

std::string num(double x) { return format_double(x); }

// --- train -------------------------------------------------------------------

struct TrainArgs {
    std::string config;
    int seeds = 0;
    std::string out;
    std::optional<double> fixed_tau;
    bool resume = false;
    int workers = 1;
};

int cmd_train(const TrainArgs& a) {
    ExperimentConfig cfg = load_config(a.config);
    if (a.seeds > 0) {
        cfg.seeds.clear();
        for (int s = 0; s < a.seeds; ++s) cfg.seeds.push_back(static_cast<std::uint64_t>(s));
    }
    if (!a.out.empty()) cfg.output_dir = a.out;
    if (a.fixed_tau) cfg.train.fixed_tau_value = a.fixed_tau;
    cfg.validate();
    const fs::path root = cfg.output_dir;
    write_file(root / "config.cfg", serialize_config(cfg));
    const auto runs = execute_seeds(cfg, root, a.resume, a.workers);
    bool any_failed = false;
    for (const auto& r : runs) {
        std::cout << "seed " << r.seed << ": max solved N = "
                  << (r.curriculum.max_solved_n ? std::to_string(*r.curriculum.max_solved_n) : "none")
                  << ", epochs = " << r.curriculum.epochs_total << ", stop = "
                  << (r.curriculum.stop_reason.empty() ? "-" : r.curriculum.stop_reason);
        if (r.failure) {
            std::cout << " (" << *r.failure << ")";
            any_failed = true;
        }
        std::cout << "\n";
    }
    return any_failed ? diverged : ok;
}

// --- analyze -----------------------------------------------------------------

struct AnalyzeArgs {
    std::string checkpoint;
    std::string run_dir;
    std::string analysis;
    std::string out = ".";
    std::uint64_t seed = 0;
    int trials = 10;
    long steps = 100000;
    int max_lag = 0;
    bool svg = false;
};

struct AnalysisInput {
    int n = 0;
    std::string id;
    Checkpoint ck;
};

std::vector<AnalysisInput> analysis_inputs(const AnalyzeArgs& a) {
    std::vector<AnalysisInput> in;
    if (!a.checkpoint.empty()) {
        Checkpoint ck = load_checkpoint(a.checkpoint);
        const int n = deepest_head(ck.run.params);
        in.push_back({n, fs::path(a.checkpoint).stem().string(), std::move(ck)});
    } else {
        for (const auto& [n, path] : list_snapshots({a.run_dir}))
            in.push_back({n, path.stem().string(), load_checkpoint(path)});
        if (in.empty()) throw io_error("no solved_N*.bin snapshots in " + a.run_dir);
    }
    return in;
}

int cmd_analyze(const AnalyzeArgs& a) {
    if (a.checkpoint.empty() == a.run_dir.empty())
        throw config_error("--checkpoint/--run-dir", "give exactly one of them");
    const auto inputs = analysis_inputs(a);
    const fs::path out = a.out;
    const ExperimentConfig& cfg = inputs.front().ck.config;
    const std::string meta = metadata_line(cfg, a.seed);

    if (a.analysis == "timescales") {
        DriveProtocol proto{a.trials, a.steps, 100, a.max_lag};
        std::ostringstream summary;
        summary << meta << "N,live,mean_tau_net,std_tau_net,max_lag\n";
        svg::Series tau_net{"tau_net", {}, {}, {}};
        for (const auto& [n, id, ck] : inputs) {
            const auto rep = network_timescale_report(ck.run.params, ck.run.net, ck.run.task.k, a.seed, proto);
            std::ostringstream per;
            per.precision(17);
            per << meta;
            write_timescale_csv(per, rep);
            write_file(out / ("timescales_N" + std::to_string(n) + ".csv"), per.str());
            summary << csv_row({std::to_string(n), std::to_string(rep.live),
                                rep.mean_tau_net ? num(*rep.mean_tau_net) : "", rep.std_tau_net ? num(*rep.std_tau_net) : "",
                                std::to_string(rep.max_lag)});
            if (rep.mean_tau_net) {
                tau_net.x.push_back(n);
                tau_net.mean.push_back(*rep.mean_tau_net);
                tau_net.std.push_back(*rep.std_tau_net);
            }
            if (a.svg && inputs.size() == 1) {
                svg::Series ac{"autocorrelation", {}, {}, {}};
                for (int l = 0; l <= rep.max_lag; ++l) {
                    std::vector<double> v;
                    for (const auto& nt : rep.neurons)
                        if (!nt.dead) v.push_back(nt.ac[static_cast<std::size_t>(l)]);
                    if (v.empty()) break;
                    ac.x.push_back(l);
                    ac.mean.push_back(mean(v));
                    ac.std.push_back(stddev(v));
                }
                write_file(out / "autocorrelation.svg",
                           svg::line_plot("Population autocorrelation", "lag (steps)", "AC", {ac}));
            }
        }
        write_file(out / "timescales_summary.csv", summary.str());
        if (a.svg && inputs.size() > 1)
            write_file(out / "tau_net.svg", svg::line_plot("Network timescales", "N", "tau_net", {tau_net}));
        return ok;
    }
    if (a.analysis == "dimensionality" || a.analysis == "balance") {
        const bool dim = a.analysis == "dimensionality";
        std::map<int, StepRecord> steps;
        for (const auto& in : inputs)
            for (const auto& h : in.ck.run.curriculum.history)
                if (h.solved) steps[h.targets.back()] = h;
        std::ostringstream csv;
        csv << meta
            << "network_id,N,dimensionality,mean_incoming_weight,std_incoming_weight,mean_tau,std_tau,epoch\n";
        svg::Series s{a.analysis, {}, {}, {}};
        for (const auto& in : inputs) {
            const auto it = steps.find(in.n);
            const std::string tail = it == steps.end() ? ",," : num(it->second.mean_tau) + "," + num(it->second.std_tau) +
                                                                   "," + std::to_string(it->second.epoch);
            const int d = network_dimensionality(in.ck.run.params, in.ck.run.net, in.ck.run.task.k, a.seed);
            const auto wb = weight_balance(in.ck.run.params);
            csv << in.id << ',' << in.n << ',' << d << ',' << num(wb.mean) << ',' << num(wb.std) << ',' << tail << '\n';
            s.x.push_back(in.n);
            s.mean.push_back(dim ? d : wb.mean);
            if (!dim) s.std.push_back(wb.std);
            if (!dim && inputs.size() == 1) {
                std::ostringstream per;
                per << meta;
                write_balance_csv(per, wb);
                write_file(out / "balance_per_neuron.csv", per.str());
            }
        }
        write_file(out / (a.analysis + ".csv"), csv.str());
        if (a.svg)
            write_file(out / (a.analysis + ".svg"),
                       svg::line_plot(dim ? "Dimensionality of activity" : "Mean incoming recurrent weight", "N",
                                      dim ? "PCs for 90% variance" : "mean W_ij", {s}));
        return ok;
    }
    throw config_error("--analysis", "unknown analysis '" + a.analysis + "' (timescales, dimensionality, balance)");
}

// --- intervene ---------------------------------------------------------------

struct InterveneArgs {
    std::string kind;
    std::string checkpoint;
    std::string out = "interventions.csv";
    std::string checkpoint_out;
    std::uint64_t seed = 0;
    int trials = 10;
    int head_n = 0;
    std::string which = "longest";
    double frac = 0.04;
    std::string target = "weights";
    std::string eps;
    int new_n = 0;
    int epochs = 20;
};

int cmd_intervene(const InterveneArgs& a) {
    const Checkpoint ck = load_checkpoint(a.checkpoint);
    const int n = a.head_n > 0 ? a.head_n : deepest_head(ck.run.params);
    EvalSetup setup;
    setup.kind = ck.run.task.kind;
    setup.k = ck.run.task.k;
    setup.head = ck.run.params.head_index_for(n);
    if (setup.head < 0) throw config_error("--head-n", "checkpoint has no head for N=" + std::to_string(n));
    setup.trials = a.trials;
    setup.seed = a.seed;
    const std::string run_id = fs::path(a.checkpoint).stem().string();
    std::vector<InterventionResult> results;

    if (a.kind == "ablate") {
        tau_rank which;
        if (a.which == "longest") which = tau_rank::longest;
        else if (a.which == "shortest") which = tau_rank::shortest;
        else throw config_error("--which", "expected longest or shortest");
        const int count = default_ablation_count(ck.run.net.n, a.frac);
        results.push_back(ablation_experiment(ck.run.params, ck.run.net, setup, which, count));
    } else if (a.kind == "perturb") {
        perturb_target target;
        if (a.target == "weights") target = perturb_target::weights;
        else if (a.target == "tau") target = perturb_target::tau;
        else throw config_error("--target", "expected weights or tau");
        const auto grid = a.eps.empty() ? default_epsilon_grid() : parse_list(a.eps);
        for (double e : grid) results.push_back(perturbation_experiment(ck.run.params, ck.run.net, setup, target, e));
    } else if (a.kind == "retrain") {
        if (a.new_n < 2) throw config_error("--new-n", "must be >= 2");
        auto outcome = retrain_to_higher_n(ck.run.params, ck.run.net, ck.run.train, ck.run.task, setup, a.new_n,
                                           a.epochs);
        // One row: the mean over trials.
        InterventionResult r = outcome.result;
        r.trial_acc = {mean(r.trial_acc)};
        r.trial_rel = {r.mean_rel};
        results.push_back(r);
        Checkpoint copy = ck;
        copy.run.params = std::move(outcome.params);
        copy.run.opt = OptimizerState::for_params(copy.run.params);
        const fs::path dest = a.checkpoint_out.empty()
                                  ? fs::path(a.checkpoint).parent_path() /
                                        (run_id + "_retrained_N" + std::to_string(a.new_n) + ".bin")
                                  : fs::path(a.checkpoint_out);
        save_checkpoint(dest, copy);
        std::cout << "retrained checkpoint: " << dest.string() << "\n";
    } else {
        throw config_error("kind", "expected ablate, perturb or retrain");
    }

    std::ostringstream csv;
    csv.precision(17);
    csv << metadata_line(ck.config, a.seed);
    if (a.kind == "perturb") csv << "# xi=fresh_per_trial\n";
    csv << "run_id,kind,param,trial,acc_base,acc,acc_rel\n";
    for (const auto& r : results) {
        write_intervention_rows(csv, run_id, r);
        std::cout << to_string(r.kind) << " " << r.param << ": acc_base = " << r.acc_base
                  << ", acc_rel = " << r.mean_rel << " +- " << r.std_rel << "\n";
    }
    write_file(a.out, csv.str());
    return ok;
}

// --- reproduce ---------------------------------------------------------------

struct ReproduceArgs {
    std::string figure;
    std::string out = "figures";
    std::string from;
    int seeds = 4;
    int neurons = 64;
    long max_epochs = 300;
    int workers = 1;
};

double median_of(const std::vector<int>& v) {
    std::vector<double> d(v.begin(), v.end());
    return median(d);
}

/// Mean and STD across seeds of per-seed series keyed by N.
svg::Series across_seeds(const std::string& label, const std::map<int, std::vector<double>>& values,
                         const std::map<int, std::vector<double>>* band = nullptr) {
    svg::Series s{label, {}, {}, {}};
    for (const auto& [n, v] : values) {
        s.x.push_back(n);
        s.mean.push_back(mean(v));
        s.std.push_back(band ? mean(band->at(n)) : stddev(v));
    }
    return s;
}

const char* figure_notes(const std::string& fig) {
    if (fig == "fig3") return "Largest N solved within the epoch budget for no curriculum, single-head and multi-head training.";
    if (fig == "fig4") return "Mean and STD of trained tau at each solved N (4b) and max solved N with fixed tau (4a).";
    if (fig == "fig6") return "Population mean and STD of the network-mediated timescale tau_net at each solved N.";
    if (fig == "fig7") return "Dimensionality of activity (PCs for 90% variance) and mean incoming recurrent weight vs N.";
    if (fig == "fig8") return "Relative accuracy after ablating the 4% longest- or shortest-tau neurons at N=3 and at the largest solved N.";
    if (fig == "fig9") return "Relative accuracy under random perturbations of recurrent weights and of tau.";
    return "Epoch at which each head reached the accuracy threshold when all heads train at once (heads 2..12 and 2..20).";
}

int cmd_reproduce(const ReproduceArgs& a) {
    static const std::set<std::string> figs{"fig3", "fig4", "fig6", "fig7", "fig8", "fig9", "s5"};
    if (!figs.count(a.figure)) throw config_error("figure", "expected one of fig3 fig4 fig6 fig7 fig8 fig9 s5");
    DeskSettings s;
    s.neurons = a.neurons;
    s.max_epochs = a.max_epochs;
    s.workers = a.workers;
    s.seeds.clear();
    for (int i = 0; i < a.seeds; ++i) s.seeds.push_back(static_cast<std::uint64_t>(i));
    const fs::path out = fs::path(a.out) / a.figure;
    s.root = a.from.empty() ? fs::path(a.out) / "runs" : fs::path(a.from);
    s.train_missing = a.from.empty();
    const ExperimentConfig meta_cfg = desk_config(s, variant("multi", curriculum_mode::multi));
    const std::string meta = metadata_line(meta_cfg, s.analysis_seed);
    const Variant single = variant("single", curriculum_mode::single);
    const Variant multi = variant("multi", curriculum_mode::multi);

    std::ostringstream readme;
    readme << "# " << a.figure << "\n\n" << figure_notes(a.figure) << "\n\n"
           << "Desk scale: " << s.neurons << " neurons, " << s.seeds.size() << " seeds, " << s.max_epochs
           << " epochs of " << meta_cfg.train.batches_per_epoch << " batches, N capped at " << s.max_n
           << ", gradient-norm clipping " << (s.grad_clip_norm ? num(*s.grad_clip_norm) : "off") << ".\n"
           << "The original experiments use 500 neurons and reach N >= 100 after days of GPU training; "
           << "these panels show the same quantities at a scale that trains in minutes on one CPU core, "
           << "so absolute N values and timescales are smaller.\n";

    if (a.figure == "fig3") {
        std::ostringstream csv;
        csv << meta << "curriculum,seed,max_solved_n\n";
        std::map<std::string, std::vector<double>> per;
        for (const auto& v : {single, multi})
            for (const auto& r : ensure_runs(s, v)) {
                csv << v.name << ',' << r.seed << ',' << max_solved(r) << '\n';
                per[v.name].push_back(max_solved(r));
            }
        for (auto seed : s.seeds) {
            const int best = no_curriculum_scan(s, seed, s.max_n);
            csv << "none," << seed << ',' << best << '\n';
            per["none"].push_back(best);
        }
        write_file(out / "fig3.csv", csv.str());
        std::vector<svg::BarGroup> groups;
        for (const char* name : {"none", "single", "multi"})
            groups.push_back({name, {mean(per[name])}, {stddev(per[name])}});
        write_file(out / "fig3.svg", svg::bar_chart("Max solved N", "N", {"mean over seeds"}, groups));
    } else if (a.figure == "fig4") {
        std::ostringstream a_csv, b_csv;
        a_csv << meta << "variant,seed,max_solved_n\n";
        b_csv << meta << "curriculum,seed,N,mean_tau,std_tau,epoch\n";
        std::vector<Variant> fixed;
        for (double t : {1.0, 2.0, 3.0})
            for (const auto& base : {single, multi}) {
                Variant v = base;
                v.name = base.name + "_tau" + num(t);
                v.fixed_tau = t;
                fixed.push_back(v);
            }
        std::vector<svg::Series> lines;
        for (const auto& v : {single, multi}) {
            std::map<int, std::vector<double>> mt, st;
            for (const auto& r : ensure_runs(s, v)) {
                a_csv << v.name << ',' << r.seed << ',' << max_solved(r) << '\n';
                for (const auto& p : tau_trajectory(r)) {
                    b_csv << v.name << ',' << r.seed << ',' << p.n << ',' << num(p.mean_tau) << ',' << num(p.std_tau)
                          << ',' << p.epoch << '\n';
                    mt[p.n].push_back(p.mean_tau);
                    st[p.n].push_back(p.std_tau);
                }
            }
            lines.push_back(across_seeds(v.name, mt, &st));
        }
        std::vector<svg::BarGroup> groups;
        for (const auto& v : fixed) {
            std::vector<double> m;
            for (const auto& r : ensure_runs(s, v)) {
                a_csv << v.name << ',' << r.seed << ',' << max_solved(r) << '\n';
                m.push_back(max_solved(r));
            }
            groups.push_back({v.name, {mean(m)}, {stddev(m)}});
        }
        write_file(out / "fig4a.csv", a_csv.str());
        write_file(out / "fig4b.csv", b_csv.str());
        write_file(out / "fig4a.svg", svg::bar_chart("Max solved N with fixed tau", "N", {"mean over seeds"}, groups));
        write_file(out / "fig4b.svg", svg::line_plot("Trained tau (mean, STD band)", "N", "tau", lines));
    } else if (a.figure == "fig6" || a.figure == "fig7") {
        const bool six = a.figure == "fig6";
        std::ostringstream csv;
        csv << meta
            << (six ? "curriculum,seed,N,mean_tau_net,std_tau_net,live,frac_r2_ge_0.95,min_r2,frac_double\n"
                    : "curriculum,seed,N,dimensionality,balance_mean,balance_std\n");
        std::vector<svg::Series> main_lines, balance_lines;
        for (const auto& v : {single, multi}) {
            std::map<int, std::vector<double>> y, b;
            for (const auto& r : ensure_runs(s, v)) {
                for (const auto& [n, path] : list_snapshots(seed_paths(s.root / v.name, r.seed))) {
                    if (n < 3) continue;
                    const Checkpoint ck = load_checkpoint(path);
                    if (six) {
                        const auto p = timescale_point(s, ck, n);
                        csv << v.name << ',' << r.seed << ',' << n << ',' << num(p.mean_tau_net) << ','
                            << num(p.std_tau_net) << ',' << p.live << ',' << num(p.frac_r2) << ',' << num(p.min_r2)
                            << ',' << num(p.frac_double) << '\n';
                        y[n].push_back(p.mean_tau_net);
                    } else {
                        const auto p = population_point(s, ck, n);
                        csv << v.name << ',' << r.seed << ',' << n << ',' << p.dimensionality << ','
                            << num(p.balance_mean) << ',' << num(p.balance_std) << '\n';
                        y[n].push_back(p.dimensionality);
                        b[n].push_back(p.balance_mean);
                    }
                }
            }
            main_lines.push_back(across_seeds(v.name, y));
            if (!six) balance_lines.push_back(across_seeds(v.name, b));
        }
        write_file(out / (a.figure + ".csv"), csv.str());
        if (six) {
            write_file(out / "fig6.svg", svg::line_plot("Network-mediated timescale", "N", "tau_net", main_lines));
        } else {
            write_file(out / "fig7_dimensionality.svg",
                       svg::line_plot("Dimensionality of activity", "N", "PCs for 90% variance", main_lines));
            write_file(out / "fig7_balance.svg",
                       svg::line_plot("Mean incoming recurrent weight", "N", "mean W_ij", balance_lines));
        }
    } else if (a.figure == "fig8") {
        std::ostringstream csv;
        csv << meta << "curriculum,seed,N,ablated,mean_acc_rel,std_acc_rel\n";
        std::vector<svg::BarGroup> groups;
        for (const auto& v : {single, multi}) {
            std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> agg;
            for (const auto& r : ensure_runs(s, v)) {
                const int top = max_solved(r);
                for (int n : {3, top}) {
                    if (n < 3) continue;
                    const auto pair = ablation_pair(s, load_snapshot(s, v, r.seed, n), n);
                    csv << v.name << ',' << r.seed << ',' << n << ",longest," << num(pair.longest.mean_rel) << ','
                        << num(pair.longest.std_rel) << '\n';
                    csv << v.name << ',' << r.seed << ',' << n << ",shortest," << num(pair.shortest.mean_rel) << ','
                        << num(pair.shortest.std_rel) << '\n';
                    const std::string key = n == 3 ? "N=3" : "max N";
                    agg[key].first.push_back(pair.longest.mean_rel);
                    agg[key].second.push_back(pair.shortest.mean_rel);
                }
            }
            for (const auto& key : {"N=3", "max N"}) {
                const auto& [lo, sh] = agg[key];
                groups.push_back({v.name + " " + key, {mean(lo), mean(sh)}, {stddev(lo), stddev(sh)}});
            }
        }
        write_file(out / "fig8.csv", csv.str());
        write_file(out / "fig8.svg",
                   svg::bar_chart("Ablation of 4% of neurons", "relative accuracy", {"longest tau", "shortest tau"},
                                  groups));
    } else if (a.figure == "fig9") {
        std::ostringstream csv;
        csv << meta << "# xi=fresh_per_trial\n" << "curriculum,seed,N,target,epsilon,mean_acc_rel,std_acc_rel\n";
        const auto grid = default_epsilon_grid();
        for (auto target : {perturb_target::weights, perturb_target::tau}) {
            const std::string tname = target == perturb_target::weights ? "weights" : "tau";
            std::vector<svg::Series> lines;
            for (const auto& v : {single, multi}) {
                std::map<int, std::vector<double>> by_eps;
                for (const auto& r : ensure_runs(s, v)) {
                    const int top = max_solved(r);
                    if (top < 2) continue;
                    const auto res = perturbation_sweep(s, load_snapshot(s, v, r.seed, top), top, target, grid);
                    for (std::size_t i = 0; i < grid.size(); ++i) {
                        csv << v.name << ',' << r.seed << ',' << top << ',' << tname << ',' << num(grid[i]) << ','
                            << num(res[i].mean_rel) << ',' << num(res[i].std_rel) << '\n';
                        by_eps[static_cast<int>(i)].push_back(res[i].mean_rel);
                    }
                }
                svg::Series line{v.name, {}, {}, {}};
                for (const auto& [i, vals] : by_eps) {
                    line.x.push_back(grid[static_cast<std::size_t>(i)]);
                    line.mean.push_back(mean(vals));
                    line.std.push_back(stddev(vals));
                }
                lines.push_back(line);
            }
            write_file(out / ("fig9_" + tname + ".svg"),
                       svg::line_plot("Perturbation of " + tname, "epsilon", "relative accuracy", lines));
        }
        write_file(out / "fig9.csv", csv.str());
    } else {
        std::ostringstream csv;
        csv << meta << "run,seed,N,solve_epoch\n";
        std::vector<svg::Series> lines;
        for (int top : {12, 20}) {
            Variant v = variant("all" + std::to_string(top), curriculum_mode::all_at_once);
            v.all_max_n = top;
            std::map<int, std::vector<double>> ep;
            for (const auto& r : ensure_runs(s, v)) {
                for (int n = 2; n <= top; ++n) {
                    const auto it = r.curriculum.solve_epoch.find(n);
                    csv << v.name << ',' << r.seed << ',' << n << ','
                        << (it == r.curriculum.solve_epoch.end() ? std::string() : std::to_string(it->second)) << '\n';
                    if (it != r.curriculum.solve_epoch.end()) ep[n].push_back(static_cast<double>(it->second));
                }
            }
            lines.push_back(across_seeds(std::to_string(top - 1) + " heads", ep));
        }
        write_file(out / "s5.csv", csv.str());
        write_file(out / "s5.svg", svg::line_plot("Epochs to reach threshold per head", "N", "epoch", lines));
    }
    write_file(out / "README.md", readme.str());
    std::cout << "wrote " << out.string() << "\n";
    return ok;
}

// --- grad-check ----------------------------------------------------------------

struct GradCheckArgs {
    int neurons = 6;
    int steps = 12;
    int depth = 3;
    int instances = 1;
    std::string phi = "leaky-relu";
    std::string placement = "inside";
    std::uint64_t seed = 0;
    double tolerance = 1e-4;
};

int cmd_grad_check(const GradCheckArgs& a) {
    const std::string text = "[net]\nneurons = " + std::to_string(a.neurons) + "\nnonlinearity = " + a.phi +
                             "\ntau_placement = " + a.placement + "\n";
    const NetConfig cfg = parse_config(text).net;
    if (a.steps < a.depth + 2) throw config_error("--steps", "must be at least depth + 2");
    bool all = true;
    for (int i = 0; i < a.instances; ++i) {
        rng_engine rng = make_stream(a.seed, "grad-check", static_cast<std::uint64_t>(i));
        const int heads[] = {a.depth};
        NetworkParams p = init_params(cfg, heads, rng);
        for (int j = 0; j < cfg.n; ++j) p.tau(j) = 1.0 + 2.0 * std::uniform_real_distribution<double>()(rng);
        std::vector<std::vector<std::uint8_t>> digits(3);
        for (auto& d : digits) d = sample_digits(static_cast<std::size_t>(a.steps), rng);
        const Batch batch = make_batch(task_kind::parity, a.depth, 1, digits);
        // The smooth nonlinearity gets the fourth-order stencil.
        const auto rep = cfg.phi == nonlinearity::tanh ? gradient_check(p, cfg, batch, a.tolerance, true, 1e-3, 1e-6, 4)
                                                       : gradient_check(p, cfg, batch, a.tolerance);
        std::cout << "instance " << i << ":";
        for (const auto& g : rep.groups) std::cout << " " << g.group << "=" << g.max_rel_error;
        std::cout << (rep.passed() ? "  PASS" : "  FAIL") << "\n";
        all = all && rep.passed();
    }
    return all ? ok : test_failed;
}

// --- info ----------------------------------------------------------------------

int cmd_info(const std::string& checkpoint) {
    std::cout << "taulab " << version() << "\n";
    if (checkpoint.empty()) return ok;
    const Checkpoint ck = load_checkpoint(checkpoint);
    const auto& r = ck.run;
    const auto [mt, st] = tau_moments(r.params);
    std::cout << "seed: " << r.seed << "\n"
              << "neurons: " << r.params.size() << "\n"
              << "heads:";
    for (const auto& h : r.params.heads) std::cout << " " << h.target_n;
    std::cout << "\nepochs: " << r.curriculum.epochs_total << "\n"
              << "max solved N: "
              << (r.curriculum.max_solved_n ? std::to_string(*r.curriculum.max_solved_n) : "none") << "\n"
              << "tau: mean " << mt << ", std " << st << "\n"
              << "stop: " << (r.curriculum.stop_reason.empty() ? "-" : r.curriculum.stop_reason) << "\n"
              << "config hash: " << config_hash(ck.config) << "\n\n"
              << serialize_config(ck.config);
    return ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"taulab: leaky RNNs with trainable timescales on N-parity and N-DMS"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(version()));

    TrainArgs ta;
    auto* train = app.add_subcommand("train", "train one run per seed");
    train->add_option("--config", ta.config, "experiment config file")->required();
    train->add_option("--seeds", ta.seeds, "train seeds 0..K-1 instead of run.seeds");
    train->add_option("--out", ta.out, "output directory (overrides run.output_dir)");
    train->add_option("--fixed-tau", ta.fixed_tau, "freeze every tau at this value");
    train->add_flag("--resume", ta.resume, "continue from existing checkpoints");
    train->add_option("--workers", ta.workers, "parallel runs (TAULAB_WORKERS overrides)");

    AnalyzeArgs aa;
    auto* analyze = app.add_subcommand("analyze", "timescales, dimensionality or weight balance of trained networks");
    analyze->add_option("--checkpoint", aa.checkpoint, "checkpoint file");
    analyze->add_option("--run-dir", aa.run_dir, "seed directory; analyzes every solved_N snapshot");
    analyze->add_option("--analysis", aa.analysis, "timescales | dimensionality | balance")->required();
    analyze->add_option("--out", aa.out, "output directory");
    analyze->add_option("--seed", aa.seed, "seed for the input drive");
    analyze->add_option("--trials", aa.trials, "independent input streams (timescales)");
    analyze->add_option("--steps", aa.steps, "time steps per stream (timescales)");
    analyze->add_option("--max-lag", aa.max_lag, "largest autocorrelation lag; 0 = automatic");
    analyze->add_flag("--svg", aa.svg, "also write an SVG plot");

    InterveneArgs ia;
    auto* intervene = app.add_subcommand("intervene", "ablate, perturb or retrain a trained network");
    intervene->add_option("kind", ia.kind, "ablate | perturb | retrain")->required();
    intervene->add_option("--checkpoint", ia.checkpoint, "checkpoint file")->required();
    intervene->add_option("--out", ia.out, "results CSV");
    intervene->add_option("--seed", ia.seed, "seed for input streams and perturbation directions");
    intervene->add_option("--trials", ia.trials, "trials per condition");
    intervene->add_option("--head-n", ia.head_n, "head to score (default: deepest)");
    intervene->add_option("--which", ia.which, "longest | shortest (ablate)");
    intervene->add_option("--frac", ia.frac, "fraction of neurons to ablate");
    intervene->add_option("--target", ia.target, "weights | tau (perturb)");
    intervene->add_option("--eps", ia.eps, "comma-separated perturbation strengths");
    intervene->add_option("--new-n", ia.new_n, "depth to retrain on (retrain)");
    intervene->add_option("--epochs", ia.epochs, "retraining epochs");
    intervene->add_option("--checkpoint-out", ia.checkpoint_out, "where to write the retrained checkpoint");

    ReproduceArgs ra;
    auto* reproduce = app.add_subcommand("reproduce", "desk-scale pipeline for one figure");
    reproduce->add_option("figure", ra.figure, "fig3 | fig4 | fig6 | fig7 | fig8 | fig9 | s5")->required();
    reproduce->add_option("--out", ra.out, "output directory");
    reproduce->add_option("--from", ra.from, "directory of pre-trained runs (no training)");
    reproduce->add_option("--seeds", ra.seeds, "seeds per variant");
    reproduce->add_option("--neurons", ra.neurons, "network size");
    reproduce->add_option("--max-epochs", ra.max_epochs, "epoch budget per run");
    reproduce->add_option("--workers", ra.workers, "parallel runs (TAULAB_WORKERS overrides)");

    GradCheckArgs ga;
    auto* grad = app.add_subcommand("grad-check", "compare backpropagation against finite differences");
    grad->add_option("--neurons", ga.neurons);
    grad->add_option("--steps", ga.steps, "digits per sequence");
    grad->add_option("--n", ga.depth, "task depth N");
    grad->add_option("--instances", ga.instances);
    grad->add_option("--nonlinearity", ga.phi);
    grad->add_option("--placement", ga.placement);
    grad->add_option("--seed", ga.seed);
    grad->add_option("--tolerance", ga.tolerance);

    std::string info_ckpt;
    auto* info = app.add_subcommand("info", "version and checkpoint summary");
    info->add_option("--checkpoint", info_ckpt);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? ok : bad_config;
    }

    try {
        if (*train) return cmd_train(ta);
        if (*analyze) return cmd_analyze(aa);
        if (*intervene) return cmd_intervene(ia);
        if (*reproduce) return cmd_reproduce(ra);
        if (*grad) return cmd_grad_check(ga);
        if (*info) return cmd_info(info_ckpt);
    } catch (const config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return bad_config;
    } catch (const precondition_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return bad_config;
    } catch (const structural_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return bad_config;
    } catch (const diverged_error& e) {
        std::cerr << "diverged: " << e.what() << "\n";
        return diverged;
    } catch (const numeric_overflow_error& e) {
        std::cerr << "numeric overflow: " << e.what() << "\n";
        return diverged;
    } catch (const io_error& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return io_failure;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "I/O error: " << e.what() << "\n";
        return io_failure;
    }
    return ok;
}
