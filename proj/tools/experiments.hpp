#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace eigerr::cli {

struct ExperimentConfig {
    std::string experiment;
    int p = 1000;
    int k = 20;
    std::vector<double> n{1e10};
    std::size_t R = 10;
    std::size_t M = 50;
    double lambda0 = 20.0;
    double delta = 1.0;
    std::uint64_t seed = 7;
    std::filesystem::path out = "out";
    unsigned threads = 1;
    std::string density = "empirical";  // "empirical" or "mckay"
    std::optional<double> bin_width;    // histogram width for the empirical density
};

const std::vector<std::string>& experiment_names();

// Defaults reproducing each experiment at desk scale. Throws config_error for
// an unknown name.
ExperimentConfig default_config(const std::string& experiment);

// Converts a sample size to an exact integer; rejects fractional or huge values.
std::uint64_t as_count(double n);

// Throws config_error on the first violated invariant.
void check_config(const ExperimentConfig& cfg);

nlohmann::ordered_json to_json(const ExperimentConfig& cfg);

struct Warning {
    std::string code;
    std::string message;
};

struct ValidationReport {
    std::vector<Warning> warnings;
    double pilot_h_hat_q90 = 0.0;  // 90th percentile of pilot h_hat in the window
    std::size_t pilot_records = 0;
    double records_per_width = 0.0;
    double records_per_width_half = 0.0;
    double records_per_width_double = 0.0;

    nlohmann::ordered_json to_json() const;
};

// Config check plus pilot-matrix diagnostics (regime bound, window sensitivity).
ValidationReport validate(const ExperimentConfig& cfg);

struct RunResult {
    std::filesystem::path manifest;
    nlohmann::ordered_json summary;
    ValidationReport report;
};

RunResult run(const ExperimentConfig& cfg);

std::string sha256_file(const std::filesystem::path& path);

}  // namespace eigerr::cli
