// Pair preparation and degradation, entanglement concentration, the one-step
// repeater swap, the plain Bell-measurement swap, and local filtering.
//
// Every protocol exists in two independent evaluation routes: the pure-state
// fast path below and a density-operator route (suffix _density) used as an
// oracle in tests.

#pragma once

#include <array>
#include <optional>
#include <string>

#include "entconc/optics.hpp"
#include "entconc/qstate.hpp"

namespace entconc {

// alpha|H_first V_second> + beta|V_first H_second>
struct PairSpec {
    cdouble alpha;
    cdouble beta;
    ModeId mode_first;
    ModeId mode_second;
};

// A two-photon state together with its role assignment: `first` is the
// photon kept by the end party, `second` the photon routed to the
// beam-splitter side of the apparatus.
struct Pair {
    PureState state;
    ModeId first;
    ModeId second;
};

// Outcome pair of the +/- polarization measurements closing a protocol.
enum class Branch { PP, PM, MP, MM };

inline constexpr std::array<Branch, 4> kAllBranches{Branch::PP, Branch::PM,
                                                    Branch::MP, Branch::MM};

std::string to_string(Branch b);
std::optional<Branch> branch_from_string(const std::string& s);
int branch_sign_first(Branch b);   // +1 or -1
int branch_sign_second(Branch b);
// Analyzer kets realizing the branch outcome.
Ket2 branch_ket_first(Branch b);
Ket2 branch_ket_second(Branch b);

struct ProtocolResult {
    PureState output;                      // normalized post-selected state
    double success_prob;                   // pbs_prob * branch_prob
    double pbs_prob;                       // equal-polarization coincidence prob
    double branch_prob;                    // conditional +/- branch prob
    std::optional<PureState> intermediate; // conditioned four-photon state
    Branch branch;
    // (+,-) and (-,+) land on the psi_minus partner state; a known, local
    // phase flip recovers psi_plus.
    bool phase_flip_needed;
};

struct DensityProtocolResult {
    DensityOperator output;
    double success_prob;
    double pbs_prob;
    double branch_prob;
};

// Bell states on two named modes.
PureState psi_plus(const ModeId& m1, const ModeId& m2);
PureState psi_minus(const ModeId& m1, const ModeId& m2);

// Fresh output label for a PBS port: "2" -> "2p".
ModeId primed(const ModeId& m);

PureState pair_state(cdouble alpha, cdouble beta, const ModeId& first,
                     const ModeId& second);

// Throws on a non-normalized spec (|alpha|^2 + |beta|^2 must be 1).
Pair prepare_pair(const PairSpec& spec);

struct FilteredState {
    PureState state;  // renormalized
    double prob;      // transmission probability of the filter
};

// Send one photon of the state through a polarization-dependent filter.
FilteredState degrade_pair(const PureState& s, const ModeId& m,
                           const FilterElement& windows);

// Concentration: rotate the second pair's beam-splitter photon by 90 deg,
// post-select a coincidence at the PBS, then measure the first party's
// second photon and the second PBS output in the +/- basis. For identical
// input pairs every branch yields a maximally entangled state on
// (p12.first, p12.second').
ProtocolResult concentrate(const Pair& p12, const Pair& p34, Branch branch);

// Same element chain, but the +/- measurements are placed on the two PBS
// outputs, so concentration and swapping happen in one step: the surviving
// photons are (p12.first, p34.first).
ProtocolResult repeater_swap(const Pair& p12, const Pair& p34, Branch branch);

// Plain entanglement swap: project the two inner photons onto psi_plus.
// Identical (alpha, beta) pairs produce alpha^2|HV> + beta^2|VH> on the
// outer photons, which is less entangled than either input pair.
ProtocolResult bell_swap(const Pair& p12, const Pair& p34);

struct LocalFilter {
    FilterElement filter;  // applied to mode_first of the pair
    double success_prob;
};

// The diagonal filter that equalizes the pair amplitudes (attenuates the
// larger of |alpha|, |beta|); succeeds with probability 2*min(|a|^2,|b|^2).
LocalFilter local_filter(const PairSpec& spec);

// Density-operator route (independent oracle path).
DensityProtocolResult concentrate_density(const Pair& p12, const Pair& p34, Branch branch);
DensityProtocolResult repeater_swap_density(const Pair& p12, const Pair& p34, Branch branch);
DensityProtocolResult bell_swap_density(const Pair& p12, const Pair& p34);

}  // namespace entconc
