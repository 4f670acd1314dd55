// Optical elements as operators on the H/V subspace of a single mode, plus
// the polarizing-beam-splitter coincidence post-selection.

#pragma once

#include <Eigen/Dense>

#include "entconc/qstate.hpp"

namespace entconc {

// 2x2 complex matrix acting on (H, V) amplitudes of one mode.
struct JonesMatrix {
    Eigen::Matrix2cd m;
};

bool is_unitary(const JonesMatrix& j, double tolerance = tol::kNorm);
// A passive filter never amplifies: both singular values <= 1.
bool is_filter(const JonesMatrix& j, double tolerance = tol::kNorm);

// Polarization-dependent attenuator, diagonal with entries sqrt(t_h),
// sqrt(t_v). t_h and t_v are the composite transmission probabilities.
struct FilterElement {
    JonesMatrix jones;
    double t_h;
    double t_v;
};

JonesMatrix identity_element();

// [[cos2t, sin2t], [sin2t, -cos2t]]; real symmetric, an involution for every
// theta. theta = pi/4 swaps H and V (the 90-degree rotator).
JonesMatrix half_wave_plate(double theta);

inline JonesMatrix rotator_90() { return half_wave_plate(M_PI / 4.0); }

// diag(1, e^{i phi}): relative phase between the V and H components.
JonesMatrix phase_compensator(double phi);

// Stack of n tilted-glass windows with per-window transmissions (t_h, t_v).
// Windows favor horizontal polarization, so t_v <= t_h is required here.
FilterElement brewster_window(double t_h, double t_v, int n);

// Analyzer ket cos(theta)|H> + sin(theta)|V>.
Ket2 polarizer(double theta);

inline Ket2 plus_ket() { return polarizer(M_PI / 4.0); }
// (|H> - |V>)/sqrt(2), fixed sign convention.
Ket2 minus_ket();

struct PbsOutcome {
    PureState state;  // normalized kept state, inputs relabeled to outputs
    double prob;      // squared norm of the kept branch (absolute, so upstream
                      // losses in an unnormalized input are included)
};

// The two kept amplitude components, unnormalized and already relabeled.
// |hh|^2 + |vv|^2 equals the coincidence probability; the components are the
// ingredients of the photon-distinguishability noise model.
struct PbsBranches {
    PureState hh;  // both PBS inputs horizontally polarized
    PureState vv;  // both vertically polarized
    double prob;
};

// Coincidence post-selection at a polarizing beam splitter: the PBS
// transmits H and reflects V, so one photon in each output means the two
// input photons carried equal polarization. Keeps the HH and VV terms,
// renames in_a -> out_a and in_b -> out_b, renormalizes.
// Throws ImpossibleBranchError when no equal-polarization component exists.
PbsOutcome pbs_coincidence(const PureState& s, const ModeId& in_a, const ModeId& in_b,
                           const ModeId& out_a, const ModeId& out_b);

PbsBranches pbs_kept_branches(const PureState& s, const ModeId& in_a,
                              const ModeId& in_b, const ModeId& out_a,
                              const ModeId& out_b);

struct PbsDensityOutcome {
    DensityOperator state;
    double prob;
};

// Density-route PBS for the oracle path.
PbsDensityOutcome pbs_coincidence(const DensityOperator& rho, const ModeId& in_a,
                                  const ModeId& in_b, const ModeId& out_a,
                                  const ModeId& out_b);

}  // namespace entconc
