#pragma once

// Checkpoints, history JSON and training-log CSV.
//
// Checkpoint layout (little-endian):
//   "TAULAB01" | u32 version | str config | u64 seed
//   arrays w_rec, w_in, b_rec, b_in, tau | u32 heads | per head: i32 target_n, w_out, b_out
//   u64 optimizer steps | velocity arrays in the same order
//   str curriculum (JSON) | str rng init, data, eval | str log (JSON) | str failure
//   u64 FNV-1a checksum of everything before it
// An array is u32 rank, u64 extents, then row-major f64 values; a string is
// u64 length then bytes.

#include "taulab/config.hpp"
#include "taulab/curricula.hpp"
#include "taulab/error.hpp"
#include "taulab/net.hpp"
#include "taulab/rng.hpp"
#include "taulab/trainer.hpp"

#include "json.hpp"

#include <Eigen/Dense>

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#ifndef TAULAB_VERSION
#define TAULAB_VERSION "0.1.0"
#endif

namespace taulab {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

inline constexpr char checkpoint_magic[8] = {'T', 'A', 'U', 'L', 'A', 'B', '0', '1'};
inline constexpr std::uint32_t checkpoint_version = 1;

inline std::string_view version() { return TAULAB_VERSION; }

struct Checkpoint {
    ExperimentConfig config;
    RunState run;
};

// --- JSON views of run records ---------------------------------------------

inline nlohmann::json to_json(const StepRecord& r) {
    return {{"step", r.step},
            {"targets", r.targets},
            {"epochs_used", r.epochs_used},
            {"epoch", r.epoch},
            {"accuracies", r.accuracies},
            {"mean_tau", r.mean_tau},
            {"std_tau", r.std_tau},
            {"wall_seconds", r.wall_seconds},
            {"solved", r.solved},
            {"newly_solved", r.newly_solved}};
}

inline StepRecord step_from_json(const nlohmann::json& j) {
    StepRecord r;
    r.step = j.at("step");
    r.targets = j.at("targets").get<std::vector<int>>();
    r.epochs_used = j.at("epochs_used");
    r.epoch = j.at("epoch");
    r.accuracies = j.at("accuracies").get<std::vector<double>>();
    r.mean_tau = j.at("mean_tau");
    r.std_tau = j.at("std_tau");
    r.wall_seconds = j.at("wall_seconds");
    r.solved = j.at("solved");
    r.newly_solved = j.at("newly_solved").get<std::vector<int>>();
    return r;
}

inline nlohmann::json to_json(const CurriculumState& s) {
    nlohmann::json history = nlohmann::json::array();
    for (const auto& r : s.history) history.push_back(to_json(r));
    nlohmann::json solve = nlohmann::json::array();
    for (const auto& [n, e] : s.solve_epoch) solve.push_back({n, e});
    return {{"mode", to_string(s.config.mode)},
            {"fixed_n", s.config.fixed_n},
            {"sliding_heads", s.config.sliding_heads},
            {"sliding_shift", s.config.sliding_shift},
            {"all_max_n", s.config.all_max_n},
            {"max_epochs", s.budget.max_epochs},
            {"max_wall_seconds", s.budget.max_wall_seconds},
            {"max_n", s.budget.max_n},
            {"step", s.step},
            {"targets", s.targets},
            {"epochs_total", s.epochs_total},
            {"epochs_in_step", s.epochs_in_step},
            {"history", history},
            {"solve_epoch", solve},
            {"max_solved_n", s.max_solved_n ? nlohmann::json(*s.max_solved_n) : nlohmann::json()},
            {"terminal", s.terminal},
            {"stop_reason", s.stop_reason}};
}

inline CurriculumState curriculum_from_json(const nlohmann::json& j) {
    CurriculumState s;
    static const curriculum_mode modes[] = {curriculum_mode::none, curriculum_mode::single, curriculum_mode::multi,
                                            curriculum_mode::sliding, curriculum_mode::all_at_once};
    s.config.mode = detail::parse_enum("curriculum.mode", j.at("mode").get<std::string>(), modes);
    s.config.fixed_n = j.at("fixed_n");
    s.config.sliding_heads = j.at("sliding_heads");
    s.config.sliding_shift = j.at("sliding_shift");
    s.config.all_max_n = j.at("all_max_n");
    s.budget.max_epochs = j.at("max_epochs");
    s.budget.max_wall_seconds = j.at("max_wall_seconds");
    s.budget.max_n = j.at("max_n");
    s.step = j.at("step");
    s.targets = j.at("targets").get<std::vector<int>>();
    s.epochs_total = j.at("epochs_total");
    s.epochs_in_step = j.at("epochs_in_step");
    for (const auto& r : j.at("history")) s.history.push_back(step_from_json(r));
    for (const auto& p : j.at("solve_epoch")) s.solve_epoch[p.at(0).get<int>()] = p.at(1).get<long>();
    if (!j.at("max_solved_n").is_null()) s.max_solved_n = j.at("max_solved_n").get<int>();
    s.terminal = j.at("terminal");
    s.stop_reason = j.at("stop_reason");
    return s;
}

inline nlohmann::json to_json(const EpochRecord& r) {
    return {{"epoch", r.epoch},       {"targets", r.targets}, {"loss", r.loss},
            {"accuracies", r.accuracies}, {"mean_tau", r.mean_tau}, {"std_tau", r.std_tau},
            {"wall_seconds", r.wall_seconds}};
}

inline EpochRecord epoch_from_json(const nlohmann::json& j) {
    EpochRecord r;
    r.epoch = j.at("epoch");
    r.targets = j.at("targets").get<std::vector<int>>();
    r.loss = j.at("loss");
    r.accuracies = j.at("accuracies").get<std::vector<double>>();
    r.mean_tau = j.at("mean_tau");
    r.std_tau = j.at("std_tau");
    r.wall_seconds = j.at("wall_seconds");
    return r;
}

// --- binary encoding --------------------------------------------------------

namespace detail {

class Writer {
public:
    void raw(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
    template <typename T>
    void pod(T v) { raw(&v, sizeof v); }
    void str(std::string_view s) {
        pod<std::uint64_t>(s.size());
        raw(s.data(), s.size());
    }
    template <typename Derived>
    void array(const Eigen::DenseBase<Derived>& a, bool vector) {
        if (vector) {
            pod<std::uint32_t>(1);
            pod<std::uint64_t>(static_cast<std::uint64_t>(a.size()));
        } else {
            pod<std::uint32_t>(2);
            pod<std::uint64_t>(static_cast<std::uint64_t>(a.rows()));
            pod<std::uint64_t>(static_cast<std::uint64_t>(a.cols()));
        }
        for (Eigen::Index r = 0; r < a.rows(); ++r)
            for (Eigen::Index c = 0; c < a.cols(); ++c) pod<double>(a(r, c));
    }
    const std::string& bytes() const { return buf_; }

private:
    std::string buf_;
};

class Reader {
public:
    explicit Reader(std::string_view b) : b_(b) {}

    void raw(void* p, std::size_t n) {
        if (n > b_.size() - pos_) throw io_error("checkpoint is truncated");
        std::memcpy(p, b_.data() + pos_, n);
        pos_ += n;
    }
    template <typename T>
    T pod() {
        T v;
        raw(&v, sizeof v);
        return v;
    }
    std::string str() {
        const auto n = pod<std::uint64_t>();
        if (n > b_.size() - pos_) throw io_error("checkpoint is truncated");
        std::string s(b_.substr(pos_, n));
        pos_ += n;
        return s;
    }
    Eigen::MatrixXd matrix() {
        const auto rank = pod<std::uint32_t>();
        if (rank != 2) throw io_error("checkpoint: expected a rank-2 array");
        const auto rows = pod<std::uint64_t>();
        const auto cols = pod<std::uint64_t>();
        if (rows * cols > (b_.size() - pos_) / 8) throw io_error("checkpoint is truncated");
        Eigen::MatrixXd m(rows, cols);
        for (std::uint64_t r = 0; r < rows; ++r)
            for (std::uint64_t c = 0; c < cols; ++c) m(r, c) = pod<double>();
        return m;
    }
    Eigen::VectorXd vector() {
        const auto rank = pod<std::uint32_t>();
        if (rank != 1) throw io_error("checkpoint: expected a rank-1 array");
        const auto n = pod<std::uint64_t>();
        if (n > (b_.size() - pos_) / 8) throw io_error("checkpoint is truncated");
        Eigen::VectorXd v(n);
        for (std::uint64_t i = 0; i < n; ++i) v(i) = pod<double>();
        return v;
    }
    std::size_t position() const { return pos_; }

private:
    std::string_view b_;
    std::size_t pos_ = 0;
};

template <typename P, typename H, typename Emit>
void emit_layout(const P& p, const std::vector<H>& heads, Emit&& emit) {
    emit(p.w_rec, false);
    emit(p.w_in, true);
    emit(p.b_rec, true);
    emit(p.b_in, true);
    emit(p.tau, true);
    for (const auto& h : heads) {
        emit(h.w_out, false);
        emit(h.b_out, true);
    }
}

}  // namespace detail

inline std::string encode_checkpoint(const Checkpoint& ck) {
    detail::Writer w;
    w.raw(checkpoint_magic, sizeof checkpoint_magic);
    w.pod<std::uint32_t>(checkpoint_version);
    w.str(serialize_config(ck.config));
    w.pod<std::uint64_t>(ck.run.seed);
    const auto& p = ck.run.params;
    auto emit = [&w](const auto& a, bool vec) { w.array(a, vec); };
    detail::emit_layout(p, std::vector<ReadoutHead>{}, emit);
    w.pod<std::uint32_t>(static_cast<std::uint32_t>(p.heads.size()));
    for (const auto& h : p.heads) {
        w.pod<std::int32_t>(h.target_n);
        w.array(h.w_out, false);
        w.array(h.b_out, true);
    }
    w.pod<std::uint64_t>(static_cast<std::uint64_t>(ck.run.opt.steps));
    detail::emit_layout(ck.run.opt.velocity, ck.run.opt.velocity.heads, emit);
    w.str(to_json(ck.run.curriculum).dump());
    w.str(save_engine(ck.run.init_rng));
    w.str(save_engine(ck.run.data_rng));
    w.str(save_engine(ck.run.eval_rng));
    nlohmann::json log = nlohmann::json::array();
    for (const auto& r : ck.run.log) log.push_back(to_json(r));
    w.str(log.dump());
    w.pod<std::uint8_t>(ck.run.failure ? 1 : 0);
    w.str(ck.run.failure.value_or(""));
    std::string out = w.bytes();
    const std::uint64_t sum = detail::fnv1a(out);
    out.append(reinterpret_cast<const char*>(&sum), sizeof sum);
    return out;
}

inline Checkpoint decode_checkpoint(std::string_view bytes) {
    if (bytes.size() < sizeof checkpoint_magic + 4 + 8 ||
        std::memcmp(bytes.data(), checkpoint_magic, sizeof checkpoint_magic) != 0)
        throw io_error("not a taulab checkpoint (bad magic)");
    std::uint32_t ver = 0;
    std::memcpy(&ver, bytes.data() + sizeof checkpoint_magic, 4);
    if (ver != checkpoint_version)
        throw io_error("checkpoint format version " + std::to_string(ver) + " is not supported (expected " +
                       std::to_string(checkpoint_version) + ")");
    const std::string_view body = bytes.substr(0, bytes.size() - 8);
    std::uint64_t stored = 0;
    std::memcpy(&stored, bytes.data() + body.size(), 8);
    if (detail::fnv1a(body) != stored) throw checksum_error("checkpoint checksum mismatch (file is corrupt)");

    detail::Reader r(body);
    char magic[8];
    r.raw(magic, 8);
    r.pod<std::uint32_t>();
    Checkpoint ck;
    try {
        ck.config = parse_config(r.str());
    } catch (const config_error& e) {
        throw io_error(std::string("checkpoint holds an invalid config: ") + e.what());
    }
    RunState& run = ck.run;
    run.net = ck.config.net;
    run.train = ck.config.train;
    run.task = ck.config.task;
    run.seed = r.pod<std::uint64_t>();
    auto& p = run.params;
    p.w_rec = r.matrix();
    p.w_in = r.vector();
    p.b_rec = r.vector();
    p.b_in = r.vector();
    p.tau = r.vector();
    const auto heads = r.pod<std::uint32_t>();
    for (std::uint32_t h = 0; h < heads; ++h) {
        ReadoutHead head;
        head.target_n = r.pod<std::int32_t>();
        const Eigen::MatrixXd w = r.matrix();
        if (w.rows() != 2) throw io_error("checkpoint: readout must have two rows");
        head.w_out = w;
        const Eigen::VectorXd b = r.vector();
        if (b.size() != 2) throw io_error("checkpoint: readout bias must have two entries");
        head.b_out = b;
        p.heads.push_back(std::move(head));
    }
    run.opt.steps = static_cast<long>(r.pod<std::uint64_t>());
    auto& v = run.opt.velocity;
    v.w_rec = r.matrix();
    v.w_in = r.vector();
    v.b_rec = r.vector();
    v.b_in = r.vector();
    v.tau = r.vector();
    v.heads.resize(p.heads.size());
    for (auto& h : v.heads) {
        const Eigen::MatrixXd w = r.matrix();
        if (w.rows() != 2) throw io_error("checkpoint: velocity readout must have two rows");
        h.w_out = w;
        h.b_out = r.vector();
    }
    try {
        run.curriculum = curriculum_from_json(nlohmann::json::parse(r.str()));
        run.init_rng = load_engine(r.str());
        run.data_rng = load_engine(r.str());
        run.eval_rng = load_engine(r.str());
        for (const auto& e : nlohmann::json::parse(r.str())) run.log.push_back(epoch_from_json(e));
    } catch (const nlohmann::json::exception& e) {
        throw io_error(std::string("checkpoint holds malformed run state: ") + e.what());
    }
    const bool failed = r.pod<std::uint8_t>() != 0;
    std::string failure = r.str();
    if (failed) run.failure = std::move(failure);
    if (r.position() != body.size()) throw io_error("checkpoint has trailing bytes");
    try {
        check_params(p, run.net);
    } catch (const structural_error& e) {
        throw io_error(std::string("checkpoint parameters are inconsistent: ") + e.what());
    }
    return ck;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw io_error("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Writes via a temporary file and rename, so readers never see partial files.
inline void write_file(const std::filesystem::path& path, std::string_view bytes) {
    std::error_code ec;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw io_error("cannot write " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw io_error("write failed for " + tmp.string());
    }
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw io_error("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
}

inline void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ck) {
    write_file(path, encode_checkpoint(ck));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
    return decode_checkpoint(read_file(path));
}

// --- run outputs ------------------------------------------------------------

inline std::string metadata_line(const ExperimentConfig& cfg, std::uint64_t seed) {
    return "# taulab " + std::string(version()) + " config_hash=" + config_hash(cfg) + " seed=" +
           std::to_string(seed) + "\n";
}

namespace detail {

template <typename T, typename F>
std::string joined(const std::vector<T>& v, F&& fmt) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ";" : "") + fmt(v[i]);
    return s;
}

}  // namespace detail

/// One row per epoch; per-head columns hold ';'-separated lists in head order.
inline std::string training_log_csv(const ExperimentConfig& cfg, const RunState& run) {
    std::string out = metadata_line(cfg, run.seed);
    out += "epoch,head_target_n,loss,accuracy_per_head,mean_tau,std_tau,wall_seconds\n";
    for (const auto& r : run.log) {
        out += std::to_string(r.epoch) + ',' + detail::joined(r.targets, [](int n) { return std::to_string(n); }) +
               ',' + format_double(r.loss) + ',' + detail::joined(r.accuracies, format_double) + ',' +
               format_double(r.mean_tau) + ',' + format_double(r.std_tau) + ',' + format_double(r.wall_seconds) +
               '\n';
    }
    return out;
}

inline nlohmann::json history_json(const ExperimentConfig& cfg, const RunState& run) {
    const auto& c = run.curriculum;
    nlohmann::json steps = nlohmann::json::array();
    for (const auto& r : c.history) steps.push_back(to_json(r));
    nlohmann::json solve = nlohmann::json::object();
    for (const auto& [n, e] : c.solve_epoch) solve[std::to_string(n)] = e;
    return {{"version", version()},
            {"config_hash", config_hash(cfg)},
            {"seed", run.seed},
            {"mode", to_string(c.config.mode)},
            {"task", to_string(run.task.kind)},
            {"hold_steps", run.task.k},
            {"epochs_total", c.epochs_total},
            {"max_solved_n", c.max_solved_n ? nlohmann::json(*c.max_solved_n) : nlohmann::json()},
            {"stop_reason", c.stop_reason},
            {"failure", run.failure ? nlohmann::json(*run.failure) : nlohmann::json()},
            {"solve_epoch", solve},
            {"steps", steps}};
}

}  // namespace taulab
