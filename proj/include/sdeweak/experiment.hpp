#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sdeweak/convergence.hpp"
#include "sdeweak/monte_carlo.hpp"

namespace sdeweak {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Flat experiment description; parsed from a TOML-style key/value file or
// produced by a built-in preset.
struct ExperimentConfig {
    std::string model = "quintic";
    std::optional<std::vector<double>> x0;  // initial-state override
    double rate = 2.0;     // ou model
    double vol = 1.0;      // ou model
    double horizon = 1.0;  // ou model

    std::vector<std::string> schemes;
    double alpha1 = 0.5;
    double alpha2 = 0.5;
    double vartheta = 0.5;
    double newton_tol = 1e-6;
    int newton_max_iter = 50;

    std::vector<std::string> phis;
    std::vector<double> h_ladder;  // strictly decreasing after validation

    long M = 100000;
    double h_ref = 0.000244140625;  // 2^-12, desk-scale default
    long M_ref = 100000;
    std::uint32_t seed = 100;
    std::string output_dir = "out";

    double tolerance_order1 = 0.25;
    double tolerance_order_half = 0.20;
    int threads = 0;  // 0 = hardware concurrency

    // explosion-probe settings (explode subcommand)
    std::string probe_scheme = "em";
    double probe_x0 = 8.0;
    double probe_h = 0.0009765625;  // 2^-10
    long probe_M = 10000;
};

ExperimentConfig parse_config_file(const std::string& path);
ExperimentConfig parse_config_text(const std::string& text);  // exposed for tests

// Built-in presets: paper-fig1..fig4 pin the full-scale protocol, desk-fig1..
// fig4 the reduced desk-scale ladders, smoke a seconds-scale sanity run.
const std::vector<std::string>& preset_names();
bool is_preset(const std::string& name);
ExperimentConfig preset_config(const std::string& name);

// Throws ConfigError when ids are unknown, lists are empty, a ladder step
// does not divide the horizon, or h < 4 h_ref.
void validate_config(const ExperimentConfig& config);

// Runs reference + scheme ladder for each (scheme, phi), writes
// weak_errors.csv, convergence.json and plotdata/<scheme>_<phi>.dat under
// output_dir, prints a summary table. Returns 0 when all gated fits pass
// tolerance, 1 otherwise.
int run_experiment(const ExperimentConfig& config);

struct ExplosionReport {
    std::string scheme_id;
    double x0 = 0.0;
    double h = 0.0;
    long n_trajectories = 0;
    long n_exploded = 0;
    double explosion_fraction = 0.0;
    int max_newton_iterations = 0;
};

// Runs probe_M trajectories of the probe scheme on the configured model at
// probe_x0, probe_h and reports the explosion fraction.
ExplosionReport run_explosion_probe(const ExperimentConfig& config);

}  // namespace sdeweak
