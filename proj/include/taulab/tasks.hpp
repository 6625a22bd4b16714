#pragma once

// N-parity and N-delayed-match-to-sample sequence generation.

#include "taulab/error.hpp"
#include "taulab/rng.hpp"

#include <algorithm>
#include <cstdint>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace taulab {

enum class task_kind { parity, dms };

inline std::string_view to_string(task_kind k) {
    return k == task_kind::parity ? "parity" : "dms";
}

struct TaskSpec {
    task_kind kind = task_kind::parity;
    int n = 2;
    /// Time steps each digit is held.
    int k = 1;
    /// Digit-count interval [len_min, len_max]; 0 means the default [n+2, 4n].
    int len_min = 0;
    int len_max = 0;

    int min_length() const { return len_min > 0 ? len_min : n + 2; }
    int max_length() const { return len_max > 0 ? len_max : 4 * n; }

    bool operator==(const TaskSpec&) const = default;

    void validate() const {
        if (n < 2) throw config_error("task.n", "memory depth must be >= 2");
        if (k < 1) throw config_error("task.hold_steps", "must be >= 1");
        if (min_length() < 1 || min_length() > max_length())
            throw config_error("task.length", "empty sequence-length range");
    }
};

inline constexpr std::int8_t invalid_target = -1;

/// Target for digit `index`: 0/1, or invalid_target while fewer than n digits were shown.
inline std::int8_t target_at(task_kind kind, std::span<const std::uint8_t> digits, std::size_t index,
                             int n) {
    if (index + 1 < static_cast<std::size_t>(n)) return invalid_target;
    const std::size_t first = index + 1 - static_cast<std::size_t>(n);
    if (kind == task_kind::parity) {
        int x = 0;
        for (std::size_t i = first; i <= index; ++i) x ^= digits[i];
        return static_cast<std::int8_t>(x);
    }
    return static_cast<std::int8_t>(digits[index] == digits[first] ? 1 : 0);
}

/// B sequences laid out on a common time grid of T = max(L) * k steps.
struct Batch {
    task_kind kind = task_kind::parity;
    int n = 2;
    int k = 1;
    int batch_size = 0;
    int steps = 0;
    std::vector<std::vector<std::uint8_t>> digits;
    /// Row-major B x T. Steps past a sequence's end carry input 0.
    std::vector<std::uint8_t> inputs;
    /// Row-major B x T targets for depth `n`; invalid_target where undefined.
    std::vector<std::int8_t> targets;
    std::vector<std::uint8_t> valid_mask;

    std::uint8_t input(int b, int t) const { return inputs[static_cast<std::size_t>(b) * steps + t]; }
    std::int8_t target(int b, int t) const { return targets[static_cast<std::size_t>(b) * steps + t]; }

    /// Targets for another memory depth on the same digits (multi-head training).
    std::vector<std::int8_t> targets_for(int depth) const {
        std::vector<std::int8_t> out(static_cast<std::size_t>(batch_size) * steps, invalid_target);
        for (int b = 0; b < batch_size; ++b) {
            const auto& d = digits[static_cast<std::size_t>(b)];
            const int len_steps = static_cast<int>(d.size()) * k;
            for (int t = 0; t < len_steps; ++t)
                out[static_cast<std::size_t>(b) * steps + t] =
                    target_at(kind, d, static_cast<std::size_t>(t / k), depth);
        }
        return out;
    }
};

/// Builds a batch from explicit digit sequences.
inline Batch make_batch(task_kind kind, int n, int k, std::vector<std::vector<std::uint8_t>> digits) {
    if (digits.empty()) throw structural_error("batch needs at least one sequence");
    Batch b;
    b.kind = kind;
    b.n = n;
    b.k = k;
    b.batch_size = static_cast<int>(digits.size());
    std::size_t max_len = 0;
    for (const auto& d : digits) max_len = std::max(max_len, d.size());
    b.steps = static_cast<int>(max_len) * k;
    b.digits = std::move(digits);
    const std::size_t cells = static_cast<std::size_t>(b.batch_size) * b.steps;
    b.inputs.assign(cells, 0);
    for (int s = 0; s < b.batch_size; ++s) {
        const auto& d = b.digits[static_cast<std::size_t>(s)];
        for (std::size_t i = 0; i < d.size(); ++i)
            for (int h = 0; h < k; ++h)
                b.inputs[static_cast<std::size_t>(s) * b.steps + i * k + h] = d[i];
    }
    b.targets = b.targets_for(n);
    b.valid_mask.resize(cells);
    for (std::size_t c = 0; c < cells; ++c) b.valid_mask[c] = b.targets[c] != invalid_target;
    return b;
}

inline std::vector<std::uint8_t> sample_digits(std::size_t length, rng_engine& rng) {
    std::vector<std::uint8_t> d(length);
    for (auto& x : d) x = static_cast<std::uint8_t>(fair_bit(rng));
    return d;
}

/// Random batch: each sequence draws its digit count uniformly from the spec's range.
inline Batch sample_batch(const TaskSpec& spec, int batch_size, rng_engine& rng) {
    spec.validate();
    if (batch_size < 1) throw structural_error("batch_size must be >= 1");
    std::uniform_int_distribution<int> len(spec.min_length(), spec.max_length());
    std::vector<std::vector<std::uint8_t>> digits(static_cast<std::size_t>(batch_size));
    for (auto& d : digits) d = sample_digits(static_cast<std::size_t>(len(rng)), rng);
    return make_batch(spec.kind, spec.n, spec.k, std::move(digits));
}

/// One row per (sequence, step): sequence,step,input,target,valid.
inline void write_batch_csv(std::ostream& os, const Batch& b) {
    os << "sequence,step,input,target,valid\n";
    for (int s = 0; s < b.batch_size; ++s) {
        for (int t = 0; t < b.steps; ++t) {
            const auto tg = b.target(s, t);
            os << s << ',' << t << ',' << int(b.input(s, t)) << ','
               << (tg == invalid_target ? std::string("") : std::to_string(int(tg))) << ','
               << int(b.valid_mask[static_cast<std::size_t>(s) * b.steps + t]) << '\n';
        }
    }
}

}  // namespace taulab
