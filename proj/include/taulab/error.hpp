#pragma once

#include <stdexcept>
#include <string>

namespace taulab {

/// Base class for every error raised by the library.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Shapes or indices do not agree (dimension mismatch, bad head index).
class structural_error : public error {
public:
    using error::error;
};

/// A forward step produced NaN or Inf.
class numeric_overflow_error : public error {
public:
    numeric_overflow_error(const std::string& what, long neuron, long time_index = -1)
        : error(what), neuron_(neuron), time_index_(time_index) {}

    long neuron() const noexcept { return neuron_; }
    long time_index() const noexcept { return time_index_; }

private:
    long neuron_;
    long time_index_;
};

/// Training produced a non-finite loss.
class diverged_error : public error {
public:
    diverged_error(const std::string& what, long epoch, long batch)
        : error(what), epoch_(epoch), batch_(batch) {}

    long epoch() const noexcept { return epoch_; }
    long batch() const noexcept { return batch_; }

private:
    long epoch_;
    long batch_;
};

/// Invalid configuration value; `field` names the offending key.
class config_error : public error {
public:
    config_error(std::string field, const std::string& what)
        : error(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class io_error : public error {
public:
    using error::error;
};

class checksum_error : public io_error {
public:
    using io_error::io_error;
};

/// Input violates an operation's guard (e.g. relative accuracy near chance).
class precondition_error : public error {
public:
    using error::error;
};

}  // namespace taulab
