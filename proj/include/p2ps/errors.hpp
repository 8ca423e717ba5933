#pragma once

#include <stdexcept>
#include <string>

namespace p2ps {

/// Bad run configuration (invalid flag values, malformed config file,
/// architecture constraint violations).
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Missing or malformed input data (empty dataset, unpairable files,
/// undecodable image).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// File I/O failure outside of decoding (unwritable path, truncated
/// checkpoint, magic/version mismatch).
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Training produced a non-finite loss. Carries the step index and the
/// loss values observed at the point of failure.
class DivergenceError : public std::runtime_error {
public:
    DivergenceError(long long step, double g_total, double g_adv, double g_l1, double d_loss)
        : std::runtime_error("non-finite loss at step " + std::to_string(step) +
                             ": g_total=" + std::to_string(g_total) +
                             " g_adv=" + std::to_string(g_adv) + " g_l1=" + std::to_string(g_l1) +
                             " d_loss=" + std::to_string(d_loss)),
          step(step),
          g_total(g_total),
          g_adv(g_adv),
          g_l1(g_l1),
          d_loss(d_loss) {}

    long long step;
    double g_total;
    double g_adv;
    double g_l1;
    double d_loss;
};

}  // namespace p2ps
