// Flat key = value experiment configuration, with '#' comments. Unknown keys
// are rejected; range violations name the offending key. Angles are given in
// degrees (lab convention) and converted to radians internally.

#pragma once

#include <optional>
#include <string>

#include "entconc/protocols.hpp"
#include "entconc/stochastics.hpp"

namespace entconc {

enum class Command {
    Concentrate,
    Repeater,
    RepeaterFiltered,
    BellSwap,
    Chsh,
    DelayScan,
    Table1,
};

std::string to_string(Command c);
std::optional<Command> command_from_string(const std::string& s);

// Per-pair preparation: either a window count (partial polarizer stack on the
// pair's first photon) or explicit amplitudes.
struct PairConfig {
    int windows = 1;
    double phase_deg = 0.0;              // compensator phase on the V component
    std::optional<cdouble> alpha;        // explicit state overrides the windows
    std::optional<cdouble> beta;
};

struct ExperimentConfig {
    Command protocol = Command::Concentrate;
    Branch branch = Branch::PP;

    double t_h = 0.98;  // per-window transmissions
    double t_v = 0.73;
    PairConfig pair1;
    PairConfig pair2;

    NoiseParams noise;       // gamma defaults to 1 (ideal optics)
    SamplingConfig sampling; // rate 8/s, 1000 s per outcome, seed 1
    bool ideal = false;      // emit expected counts instead of sampling

    // CHSH analyzer angles, degrees.
    double a_deg = 0.0;
    double a_prime_deg = 45.0;
    double b_deg = 67.5;
    double b_prime_deg = 22.5;

    // Delay scan grid.
    double scan_min_um = -200.0;
    double scan_max_um = 200.0;
    int scan_points = 41;
    std::optional<double> scan_time_s;  // defaults to sampling.time_s

    ChshSettings chsh_settings() const;
    double scan_time() const { return scan_time_s.value_or(sampling.time_s); }
};

// Parses configuration text; `pair2` keys default to the pair-1 values when
// absent. Throws ConfigError with a line number (syntax) or key name (range).
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig parse_config_file(const std::string& path);

// Serializes every key with full (17 significant digit) precision so that a
// written config re-parses to a bit-identical run.
std::string write_config(const ExperimentConfig& cfg);

}  // namespace entconc
