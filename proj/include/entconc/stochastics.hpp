// Imperfection model and Monte Carlo coincidence counting.
//
// The single imperfection is partial distinguishability of the two photons
// meeting at the PBS: the coherence between the two kept amplitude
// components (both-H and both-V) survives only with weight gamma. gamma = 1
// gives the ideal post-selected state, gamma = 0 the classical mixture.
// A uniform accidental-background fraction eps is added at counting time.
//
// Determinism contract: every sampled quantity draws from an engine seeded
// by a sub-seed derived from the master seed and the point's coordinates
// (replication index, setting, outcome, scan point), so any evaluation
// order or thread count produces bit-identical output. The Monte Carlo
// loops exist in a serial reference form and an OpenMP form; tests compare
// them element for element.

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "entconc/metrics.hpp"
#include "entconc/protocols.hpp"

namespace entconc {

struct NoiseParams {
    double overlap_gamma = 1.0;        // temporal-mode overlap at zero delay
    double background_eps = 0.004;     // accidental fraction, spread over outcomes
    double coherence_length_um = 76.0; // 1/e half-width of the overlap vs delay
};

enum class TimeAccounting { PerOutcome, PerSetting };

struct SamplingConfig {
    double rate_hz = 8.0;   // raw four-photon coincidence rate
    double time_s = 1000.0; // integration time (per outcome or per setting)
    TimeAccounting accounting = TimeAccounting::PerOutcome;
    std::uint64_t seed = 1;
};

enum class Exec { Serial, Parallel };

// Overlap after a pump-delay displacement d: gamma0 * exp(-(d/L_c)^2).
double overlap_from_delay(double delay_um, double coherence_length_um, double gamma0);

// Combine the two kept amplitude components into the partially coherent
// mixture gamma*|a+b><a+b| + (1-gamma)*(|a><a|+|b><b|), normalized.
// The branches are unnormalized; their combined weight becomes the trace.
DensityOperator apply_distinguishability(const PureState& branch_a,
                                         const PureState& branch_b, double gamma);

// ---- experiment chains -------------------------------------------------------

enum class Scheme { Concentrate, Repeater, RepeaterFiltered, BellSwap };

// A prepared pair plus the composite filter element sitting on its `first`
// mode (window stacks, equalizing filters). The element is applied without
// renormalizing, so all downstream probabilities are absolute.
struct PreparedPair {
    Pair pair;
    Eigen::Matrix2cd element = Eigen::Matrix2cd::Identity();
};

// Post-PBS state of a concentration- or repeater-style run, kept as the two
// unnormalized interference branches.
struct NoisyChain {
    PbsBranches branches;
    ModeId out_first;    // surviving photon of the first party
    ModeId out_second;   // surviving photon of the second party
    ModeId cond_first;   // +/- measured mode closing the protocol
    ModeId cond_second;
    double input_norm_sq;  // squared norm in front of the PBS (pair transmissions)
};

// Builds the chain for Concentrate or Repeater/RepeaterFiltered schemes
// (BellSwap has no PBS interference step and is evaluated ideally).
NoisyChain build_chain(Scheme scheme, const PreparedPair& p12, const PreparedPair& p34);

// Absolute probability of the conditioning outcome `branch`.
double branch_probability(const NoisyChain& chain, Branch branch, double gamma);

// Normalized output state on (out_first, out_second), conditional on the
// branch outcome, at overlap gamma.
DensityOperator conditional_output(const NoisyChain& chain, Branch branch, double gamma);

// Absolute probability that the conditioning succeeds AND the two output
// analyzers at (theta1, theta2) fire with outcomes o1, o2 (+1 transmitted,
// -1 orthogonal port).
double outcome_probability(const NoisyChain& chain, Branch branch, double theta1,
                           int o1, double theta2, int o2, double gamma);

// ---- counting ----------------------------------------------------------------

inline constexpr std::array<const char*, 4> kOutcomeNames{"pp", "pm", "mp", "mm"};

struct SettingProbs {
    double theta1;
    double theta2;
    std::array<double, 4> p;  // ++, +-, -+, -- (absolute probabilities)
};

using ProbabilityTable = std::vector<SettingProbs>;

// The four CHSH settings (a,b), (a,b'), (a',b), (a',b') of the chain output.
ProbabilityTable chsh_probability_table(const NoisyChain& chain, Branch branch,
                                        const ChshSettings& s, double gamma);

struct SettingCounts {
    double theta1;
    double theta2;
    std::array<double, 4> counts;  // integral when sampled
};

struct CountTable {
    std::vector<SettingCounts> settings;
    double rate_hz;
    double time_s;
    TimeAccounting accounting;
    std::uint64_t seed;
    bool sampled;
};

// Expected (unsampled) counts: rate * time_o * ((1-eps) p + eps/4).
CountTable expected_counts(const ProbabilityTable& probs, const SamplingConfig& cfg,
                           double eps);

// Independent Poisson draw per (setting, outcome); deterministic given the
// seed, regardless of evaluation order.
CountTable sample_counts(const ProbabilityTable& probs, const SamplingConfig& cfg,
                         double eps);

struct SEstimate {
    double S;
    double sigma;  // first-order (delta method) Poisson error
};

// Correlation estimates from count fractions; requires the four CHSH
// settings with nonzero totals.
SEstimate estimate_S(const CountTable& counts);

// ---- Monte Carlo drivers -------------------------------------------------------

// delta-method replication study: n_reps independently seeded count tables
// and their S estimates.
std::vector<SEstimate> replicate_chsh(const ProbabilityTable& probs,
                                      const SamplingConfig& cfg, double eps,
                                      int n_reps, Exec exec = Exec::Parallel);

struct ScanPoint {
    double delay_um;
    double gamma;
    double p_pp;       // absolute probability, conditioning included
    double p_mp;
    double counts_pp;  // sampled counts (expected counts when ideal)
    double counts_mp;
};

// Interference scan: for each pump delay, the overlap drops along the
// Gaussian, transferring weight from the ++ to the -+ analyzer outcome of
// the surviving photons.
std::vector<ScanPoint> delay_scan(const NoisyChain& chain, Branch branch,
                                  const NoiseParams& noise,
                                  const std::vector<double>& delays_um,
                                  const SamplingConfig& cfg, bool ideal,
                                  Exec exec = Exec::Parallel);

struct ScanVisibility {
    double visibility;   // 1 - dip/plateau on the -+ channel
    double plateau_pp;   // mean far-delay counts per point (background removed)
    double plateau_mp;
};

// Dip suppression of the -+ channel relative to its far-delay plateau
// (points with |d| >= 2.5 coherence lengths). `accidental_per_point` is the
// known accidental-coincidence level (rate * time * eps / 4), subtracted from
// every channel before forming the ratio.
ScanVisibility scan_visibility(const std::vector<ScanPoint>& points,
                               double coherence_length_um,
                               double accidental_per_point = 0.0);

}  // namespace entconc
