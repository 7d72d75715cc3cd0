#pragma once

#include <stdexcept>
#include <string>

#include "coexsim/experiments.hpp"

namespace coexsim {

// Configuration or schema violation; `line` is 0 when no source line applies.
class ConfigError : public std::runtime_error {
public:
    ConfigError(int line, const std::string& msg)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
          line_(line) {}
    int line() const { return line_; }

private:
    int line_ = 0;
};

// Strict key = value configuration: every key must be known, every value in
// range. Unset keys fall back to the built-in defaults. The empty string
// yields the default experiment.
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

// Canonical resolved form; parsing it again reproduces the same config.
// The config hash is the FNV-1a of this text.
std::string print_config(const ExperimentConfig& cfg);

// Calibration sidecar written by the calibrate subcommand.
struct CalibrationRecord {
    double calibration = 0.0;
    double alpha = 0.0;
    double sensor_offset_m = 0.0;
    double rel_error = 0.0;
};

void write_calibration_file(const std::string& path, const CalibrationRecord& rec);
CalibrationRecord read_calibration_file(const std::string& path);

}  // namespace coexsim
