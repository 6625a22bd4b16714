#include "helpers.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace taulab;
using taulab::testing::random_checkpoint;
using taulab::testing::random_config;

namespace {

namespace fs = std::filesystem;

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / ("taulab_test_" + name)) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST(Config, RoundTripProperty) {
    rng_engine rng = make_stream(1, "test");
    for (int i = 0; i < 200; ++i) {
        const auto c = random_config(rng);
        const auto text = serialize_config(c);
        const auto back = parse_config(text);
        ASSERT_TRUE(back == c) << text;
        EXPECT_EQ(serialize_config(back), text);
        EXPECT_EQ(config_hash(back), config_hash(c));
    }
}

TEST(Config, UnknownKeyNamesField) {
    try {
        parse_config("[net]\nneurons = 8\nnuerons = 9\n");
        FAIL();
    } catch (const config_error& e) {
        EXPECT_NE(std::string(e.what()).find("nuerons"), std::string::npos);
    }
    EXPECT_THROW(parse_config("[bogus]\nx = 1\n"), config_error);
    EXPECT_THROW(parse_config("[net]\nneurons = 8\nneurons = 9\n"), config_error);
    EXPECT_THROW(parse_config("[net]\nneurons = eight\n"), config_error);
    EXPECT_THROW(parse_config("[net]\nnonlinearity = sigmoid\n"), config_error);
    EXPECT_THROW(parse_config("[train]\nmomentum = 1.5\n"), config_error);
}

TEST(Config, DefaultsAndComments) {
    const auto c = parse_config("# comment\n\n[net]\nneurons = 32\ntau_placement = outside\n[train]\nfixed_tau = none\n");
    EXPECT_EQ(c.net.n, 32);
    EXPECT_EQ(c.net.placement, tau_placement::outside);
    EXPECT_FALSE(c.train.fixed_tau_value.has_value());
    EXPECT_EQ(c.net.phi, nonlinearity::leaky_relu);
    EXPECT_EQ(c.train.learning_rate, 0.01);
    EXPECT_EQ(c.train.momentum, 0.9);
    EXPECT_EQ(c.budget.max_n, 30);
}

TEST(Checkpoint, RoundTripIsBitExact) {
    rng_engine rng = make_stream(2, "test");
    for (int i = 0; i < 100; ++i) {
        const auto ck = random_checkpoint(rng);
        const auto bytes = encode_checkpoint(ck);
        const auto back = decode_checkpoint(bytes);
        ASSERT_TRUE(back.run.params == ck.run.params);
        EXPECT_TRUE(back.config == ck.config);
        EXPECT_EQ(back.run.opt.velocity.w_rec, ck.run.opt.velocity.w_rec);
        EXPECT_EQ(back.run.opt.steps, ck.run.opt.steps);
        EXPECT_EQ(back.run.data_rng, ck.run.data_rng);
        EXPECT_EQ(back.run.failure, ck.run.failure);
        EXPECT_EQ(back.run.curriculum.history.size(), 1u);
        EXPECT_EQ(back.run.curriculum.history[0].accuracies, ck.run.curriculum.history[0].accuracies);
        EXPECT_EQ(back.run.log.size(), ck.run.log.size());
        EXPECT_EQ(encode_checkpoint(back), bytes);
    }
}

TEST(Checkpoint, DetectsCorruptionAndVersion) {
    rng_engine rng = make_stream(3, "test");
    const auto bytes = encode_checkpoint(random_checkpoint(rng));
    for (std::size_t pos : {std::size_t{20}, bytes.size() / 2, bytes.size() - 20}) {
        auto bad = bytes;
        bad[pos] ^= 0x10;
        EXPECT_THROW(decode_checkpoint(bad), checksum_error) << pos;
    }
    auto wrong_version = bytes;
    wrong_version[8] = 2;
    EXPECT_THROW(decode_checkpoint(wrong_version), io_error);
    EXPECT_THROW(decode_checkpoint(bytes.substr(0, 30)), io_error);
    EXPECT_THROW(decode_checkpoint("NOTACHKP" + bytes.substr(8)), io_error);
    EXPECT_THROW(load_checkpoint("/nonexistent/taulab.bin"), io_error);
}

namespace {

ExperimentConfig tiny_config() {
    ExperimentConfig c;
    c.net.n = 10;
    c.train.batches_per_epoch = 8;
    c.train.batch_size = 16;
    c.train.eval_sequences = 100;
    c.train.accuracy_threshold = 0.9;
    c.budget.max_epochs = 6;
    return c;
}

}  // namespace

TEST(RunOutputs, SameSeedByteIdentical) {
    TempDir a("same_a"), b("same_b");
    const auto cfg = tiny_config();
    execute_run(cfg, 4, {a.path}, false);
    execute_run(cfg, 4, {b.path}, false);
    EXPECT_EQ(read_file(a.path / "history.json"), read_file(b.path / "history.json"));
    EXPECT_EQ(read_file(a.path / "train_log.csv"), read_file(b.path / "train_log.csv"));
    const auto log = read_file(a.path / "train_log.csv");
    EXPECT_EQ(log.rfind("# taulab ", 0), 0u);
    EXPECT_NE(log.find("epoch,head_target_n,loss,accuracy_per_head,mean_tau,std_tau,wall_seconds"), std::string::npos);
}

TEST(RunOutputs, InterruptedResumeMatchesUninterrupted) {
    TempDir full("resume_full"), part("resume_part");
    const auto cfg = tiny_config();
    const auto reference = execute_run(cfg, 2, {full.path}, false);

    struct Interrupt {};
    RunHooks stop;
    stop.on_epoch = [](const RunState& r) {
        if (r.curriculum.epochs_total == 3) throw Interrupt{};
    };
    EXPECT_THROW(execute_run(cfg, 2, {part.path}, false, stop), Interrupt);
    EXPECT_EQ(load_checkpoint(part.path / "checkpoint.bin").run.curriculum.epochs_total, 3);
    const auto resumed = execute_run(cfg, 2, {part.path}, true);

    EXPECT_TRUE(resumed.params == reference.params);
    EXPECT_EQ(read_file(full.path / "history.json"), read_file(part.path / "history.json"));
    EXPECT_EQ(read_file(full.path / "train_log.csv"), read_file(part.path / "train_log.csv"));
    EXPECT_EQ(read_file(full.path / "checkpoint.bin"), read_file(part.path / "checkpoint.bin"));
}

TEST(RunOutputs, ResumeRejectsDifferentConfig) {
    TempDir d("resume_mismatch");
    auto cfg = tiny_config();
    cfg.budget.max_epochs = 1;
    execute_run(cfg, 0, {d.path}, false);
    cfg.train.learning_rate = 0.02;
    EXPECT_THROW(execute_run(cfg, 0, {d.path}, true), config_error);
}

TEST(RunOutputs, ResumeFollowsRelocatedDirectory) {
    TempDir a("relocate_a"), b("relocate_b");
    auto cfg = tiny_config();
    cfg.output_dir = a.path.string();
    const auto first = execute_run(cfg, 1, {a.path}, false);
    fs::remove_all(b.path);
    fs::copy(a.path, b.path, fs::copy_options::recursive);
    auto moved = cfg;
    moved.output_dir = b.path.string();
    moved.seeds = {0, 1, 2};
    const auto again = execute_run(moved, 1, {b.path}, true);
    EXPECT_TRUE(again.params == first.params);
    EXPECT_EQ(read_file(a.path / "history.json"), read_file(b.path / "history.json"));
}
