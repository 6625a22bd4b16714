#pragma once

// Experiment configuration: a sectioned key-value text format.
//
//   [net]
//   neurons = 64
//   # comments start with '#'
//
// Unknown sections or keys are errors. Every field is written back by
// `serialize`, doubles in shortest round-trip form, so parse(serialize(c)) == c.

#include "taulab/curricula.hpp"
#include "taulab/error.hpp"
#include "taulab/net.hpp"
#include "taulab/rng.hpp"
#include "taulab/tasks.hpp"
#include "taulab/trainer.hpp"

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace taulab {

struct ExperimentConfig {
    NetConfig net;
    TrainConfig train;
    TaskSpec task;
    CurriculumConfig curriculum;
    Budget budget;
    std::vector<std::uint64_t> seeds{0};
    std::string output_dir = "runs";
    bool record_wall_time = false;

    bool operator==(const ExperimentConfig&) const = default;

    /// Equal up to where runs are written and which seeds are listed.
    bool same_experiment(const ExperimentConfig& o) const {
        ExperimentConfig a = *this, b = o;
        a.output_dir = b.output_dir = "";
        a.seeds = b.seeds = {};
        return a == b;
    }

    void validate() const {
        net.validate();
        train.validate();
        task.validate();
        curriculum.validate();
        if (budget.max_epochs < 1) throw config_error("budget.max_epochs", "must be >= 1");
        if (budget.max_wall_seconds < 0.0) throw config_error("budget.max_wall_seconds", "must be >= 0");
        if (budget.max_n < 2) throw config_error("budget.max_n", "must be >= 2");
        if (seeds.empty()) throw config_error("run.seeds", "needs at least one seed");
        if (output_dir.empty()) throw config_error("run.output_dir", "must not be empty");
    }
};

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string_view::npos) return {};
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline double parse_double(const std::string& field, std::string_view v) {
    double x = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size())
        throw config_error(field, "expected a number, got '" + std::string(v) + "'");
    return x;
}

template <typename Int>
Int parse_int(const std::string& field, std::string_view v) {
    Int x = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), x);
    if (res.ec != std::errc() || res.ptr != v.data() + v.size())
        throw config_error(field, "expected an integer, got '" + std::string(v) + "'");
    return x;
}

inline bool parse_bool(const std::string& field, std::string_view v) {
    if (v == "true") return true;
    if (v == "false") return false;
    throw config_error(field, "expected true or false, got '" + std::string(v) + "'");
}

inline std::optional<double> parse_optional(const std::string& field, std::string_view v) {
    if (v == "none") return std::nullopt;
    return parse_double(field, v);
}

template <typename E, std::size_t M>
E parse_enum(const std::string& field, std::string_view v, const E (&values)[M]) {
    std::string allowed;
    for (E e : values) {
        if (to_string(e) == v) return e;
        allowed += (allowed.empty() ? "" : ", ") + std::string(to_string(e));
    }
    throw config_error(field, "unknown value '" + std::string(v) + "' (expected one of " + allowed + ")");
}

struct Field {
    std::function<void(ExperimentConfig&, std::string_view)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

/// Keys in canonical order; section is the text before the dot.
inline const std::vector<std::pair<std::string, Field>>& fields() {
    using C = ExperimentConfig;
    static const std::vector<std::pair<std::string, Field>> f = [] {
        std::vector<std::pair<std::string, Field>> v;
        auto add = [&v](std::string key, auto set, auto get) {
            v.emplace_back(key, Field{[key, set](C& c, std::string_view s) { set(c, key, s); },
                                      [get](const C& c) { return get(c); }});
        };
        auto opt_text = [](const std::optional<double>& x) { return x ? format_double(*x) : std::string("none"); };

        add("net.neurons", [](C& c, const std::string& k, std::string_view s) { c.net.n = parse_int<int>(k, s); },
            [](const C& c) { return std::to_string(c.net.n); });
        add("net.alpha", [](C& c, const std::string& k, std::string_view s) { c.net.alpha = parse_double(k, s); },
            [](const C& c) { return format_double(c.net.alpha); });
        add("net.nonlinearity",
            [](C& c, const std::string& k, std::string_view s) {
                static const nonlinearity all[] = {nonlinearity::leaky_relu, nonlinearity::relu, nonlinearity::tanh};
                c.net.phi = parse_enum(k, s, all);
            },
            [](const C& c) { return std::string(to_string(c.net.phi)); });
        add("net.tau_placement",
            [](C& c, const std::string& k, std::string_view s) {
                static const tau_placement all[] = {tau_placement::inside, tau_placement::outside};
                c.net.placement = parse_enum(k, s, all);
            },
            [](const C& c) { return std::string(to_string(c.net.placement)); });
        add("net.tau_max", [](C& c, const std::string& k, std::string_view s) { c.net.tau_max = parse_double(k, s); },
            [](const C& c) { return format_double(c.net.tau_max); });
        add("net.bias_mode",
            [](C& c, const std::string& k, std::string_view s) {
                static const bias_mode all[] = {bias_mode::vector, bias_mode::scalar};
                c.net.biases = parse_enum(k, s, all);
            },
            [](const C& c) { return std::string(to_string(c.net.biases)); });
        add("net.init_gain",
            [](C& c, const std::string& k, std::string_view s) { c.net.init_gain = parse_double(k, s); },
            [](const C& c) { return format_double(c.net.init_gain); });

        add("train.learning_rate",
            [](C& c, const std::string& k, std::string_view s) { c.train.learning_rate = parse_double(k, s); },
            [](const C& c) { return format_double(c.train.learning_rate); });
        add("train.momentum",
            [](C& c, const std::string& k, std::string_view s) { c.train.momentum = parse_double(k, s); },
            [](const C& c) { return format_double(c.train.momentum); });
        add("train.batch_size",
            [](C& c, const std::string& k, std::string_view s) { c.train.batch_size = parse_int<int>(k, s); },
            [](const C& c) { return std::to_string(c.train.batch_size); });
        add("train.batches_per_epoch",
            [](C& c, const std::string& k, std::string_view s) { c.train.batches_per_epoch = parse_int<int>(k, s); },
            [](const C& c) { return std::to_string(c.train.batches_per_epoch); });
        add("train.accuracy_threshold",
            [](C& c, const std::string& k, std::string_view s) { c.train.accuracy_threshold = parse_double(k, s); },
            [](const C& c) { return format_double(c.train.accuracy_threshold); });
        add("train.train_tau",
            [](C& c, const std::string& k, std::string_view s) { c.train.train_tau = parse_bool(k, s); },
            [](const C& c) { return std::string(c.train.train_tau ? "true" : "false"); });
        add("train.fixed_tau",
            [](C& c, const std::string& k, std::string_view s) { c.train.fixed_tau_value = parse_optional(k, s); },
            [opt_text](const C& c) { return opt_text(c.train.fixed_tau_value); });
        add("train.grad_clip_norm",
            [](C& c, const std::string& k, std::string_view s) { c.train.grad_clip_norm = parse_optional(k, s); },
            [opt_text](const C& c) { return opt_text(c.train.grad_clip_norm); });
        add("train.eval_sequences",
            [](C& c, const std::string& k, std::string_view s) { c.train.eval_sequences = parse_int<int>(k, s); },
            [](const C& c) { return std::to_string(c.train.eval_sequences); });

        add("task.kind",
            [](C& c, const std::string& k, std::string_view s) {
                static const task_kind all[] = {task_kind::parity, task_kind::dms};
                c.task.kind = parse_enum(k, s, all);
            },
            [](const C& c) { return std::string(to_string(c.task.kind)); });
        add("task.hold_steps",
            [](C& c, const std::string& k, std::string_view s) { c.task.k = parse_int<int>(k, s); },
            [](const C& c) { return std::to_string(c.task.k); });

        add("curriculum.mode",
            [](C& c, const std::string& k, std::string_view s) {
                static const curriculum_mode all[] = {curriculum_mode::none, curriculum_mode::single,
                                                      curriculum_mode::multi, curriculum_mode::sliding,
                                                      curriculum_mode::all_at_once};
                c.curriculum.mode = parse_enum(k, s, all);
            },
            [](const C& c) { return std::string(to_string(c.curriculum.mode)); });
        add("curriculum.fixed_n",
            [](C& c, const std::string& k, std::string_view s) { c.curriculum.fixed_n = parse_int<int>(k, s); },
            [](const C& c) { return std::to_string(c.curriculum.fixed_n); });
        add("curriculum.sliding_heads",
            [](C& c, const std::string& k, std::string_view s) { c.curriculum.sliding_heads = parse_int<int>(k, s); },
            [](const C& c) { return std::to_string(c.curriculum.sliding_heads); });
        add("curriculum.sliding_shift",
            [](C& c, const std::string& k, std::string_view s) { c.curriculum.sliding_shift = parse_int<int>(k, s); },
            [](const C& c) { return std::to_string(c.curriculum.sliding_shift); });
        add("curriculum.all_max_n",
            [](C& c, const std::string& k, std::string_view s) { c.curriculum.all_max_n = parse_int<int>(k, s); },
            [](const C& c) { return std::to_string(c.curriculum.all_max_n); });

        add("budget.max_epochs",
            [](C& c, const std::string& k, std::string_view s) { c.budget.max_epochs = parse_int<long>(k, s); },
            [](const C& c) { return std::to_string(c.budget.max_epochs); });
        add("budget.max_wall_seconds",
            [](C& c, const std::string& k, std::string_view s) { c.budget.max_wall_seconds = parse_double(k, s); },
            [](const C& c) { return format_double(c.budget.max_wall_seconds); });
        add("budget.max_n",
            [](C& c, const std::string& k, std::string_view s) { c.budget.max_n = parse_int<int>(k, s); },
            [](const C& c) { return std::to_string(c.budget.max_n); });

        add("run.seeds",
            [](C& c, const std::string& k, std::string_view s) {
                c.seeds.clear();
                while (!s.empty()) {
                    const auto comma = s.find(',');
                    c.seeds.push_back(parse_int<std::uint64_t>(k, trim(s.substr(0, comma))));
                    if (comma == std::string_view::npos) break;
                    s.remove_prefix(comma + 1);
                }
            },
            [](const C& c) {
                std::string out;
                for (std::size_t i = 0; i < c.seeds.size(); ++i) out += (i ? "," : "") + std::to_string(c.seeds[i]);
                return out;
            });
        add("run.output_dir", [](C& c, const std::string&, std::string_view s) { c.output_dir = std::string(s); },
            [](const C& c) { return c.output_dir; });
        add("run.record_wall_time",
            [](C& c, const std::string& k, std::string_view s) { c.record_wall_time = parse_bool(k, s); },
            [](const C& c) { return std::string(c.record_wall_time ? "true" : "false"); });
        return v;
    }();
    return f;
}

}  // namespace detail

/// Parses config text. Missing keys keep their defaults; the result is validated.
inline ExperimentConfig parse_config(std::string_view text) {
    ExperimentConfig c;
    std::map<std::string, const detail::Field*> index;
    std::map<std::string, bool> sections;
    for (const auto& [key, field] : detail::fields()) {
        index[key] = &field;
        sections[key.substr(0, key.find('.'))] = true;
    }
    std::string section;
    std::map<std::string, bool> seen;
    int line_no = 0;
    std::istringstream in{std::string(text)};
    std::string raw;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = detail::trim(raw);
        if (line.empty() || line.front() == '#') continue;
        const std::string where = "line " + std::to_string(line_no);
        if (line.front() == '[') {
            if (line.back() != ']') throw config_error(where, "unterminated section header");
            section = std::string(detail::trim(line.substr(1, line.size() - 2)));
            if (!sections.count(section)) throw config_error(section, "unknown section (" + where + ")");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw config_error(where, "expected 'key = value'");
        if (section.empty()) throw config_error(where, "key outside of a section");
        const std::string key = section + "." + std::string(detail::trim(line.substr(0, eq)));
        const auto it = index.find(key);
        if (it == index.end()) throw config_error(key, "unknown key (" + where + ")");
        if (seen[key]) throw config_error(key, "given twice (" + where + ")");
        seen[key] = true;
        it->second->set(c, detail::trim(line.substr(eq + 1)));
    }
    c.validate();
    return c;
}

inline std::string serialize_config(const ExperimentConfig& c) {
    std::string out;
    std::string section;
    for (const auto& [key, field] : detail::fields()) {
        const std::string s = key.substr(0, key.find('.'));
        if (s != section) {
            out += (section.empty() ? "[" : "\n[") + s + "]\n";
            section = s;
        }
        out += key.substr(key.find('.') + 1) + " = " + field.get(c) + "\n";
    }
    return out;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot read config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

/// 16 hex digits identifying a configuration (hash of its canonical text).
/// Hash of the experiment identity: every field except the output directory and
/// the seed list.
inline std::string config_hash(const ExperimentConfig& c) {
    ExperimentConfig id = c;
    id.output_dir = "";
    id.seeds = {};
    const std::uint64_t h = detail::fnv1a(serialize_config(id));
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace taulab
