// Figures of merit for two-photon polarization states: correlation functions,
// the CHSH combination, H/V fractions, +/- visibility, and the
// visibility <-> S <-> fidelity mappings used in reports.

#pragma once

#include <limits>

#include "entconc/qstate.hpp"

namespace entconc {

inline constexpr double kTsirelson = 2.0 * 1.4142135623730951;  // 2*sqrt(2)

// Analyzer angles (radians, in [0, pi)): two settings per side.
struct ChshSettings {
    double a;
    double a_prime;
    double b;
    double b_prime;
};

// One polarization-correlation measurement: analyzers at (theta1, theta2),
// outcome +/- meaning transmitted/absorbed at each analyzer.
struct CorrelationRecord {
    double theta1;
    double theta2;
    double p_pp;
    double p_pm;
    double p_mp;
    double p_mm;
    double E;  // p_pp + p_mm - p_pm - p_mp
};

// Probabilities from projecting each mode onto polarizer(theta) and its
// orthogonal complement. rho must live on exactly two modes.
CorrelationRecord correlation(const DensityOperator& rho, double theta1, double theta2);

// S = E(a,b) - E(a,b') + E(a',b) + E(a',b').
double chsh_S(const DensityOperator& rho, const ChshSettings& s);

// The standard maximizing set for psi_plus: a=0, a'=pi/4, b=3pi/8, b'=pi/8.
ChshSettings optimal_settings_psi_plus();

struct HvFractions {
    double p_hh;
    double p_hv;
    double p_vh;
    double p_vv;
    double ratio_hv_to_vh;  // +inf when p_vh is zero
};

HvFractions hv_fractions(const DensityOperator& rho);

// Interference visibility in the diagonal basis:
// (p_pp + p_mm - p_pm - p_mp) / sum, both analyzers at 45 degrees. Equals the
// retained coherence gamma on the dephased-psi_plus family.
double pm_visibility(const DensityOperator& rho);

// Entanglement visibility V = S / (2 sqrt 2), inverted: the S value implied
// by an observed +/- visibility.
double s_from_visibility(double v);

// F = (1 + S/(2 sqrt 2)) / 2; requires 0 <= S <= 2 sqrt 2.
double fidelity_from_S(double S);

// Number of standard deviations above the classical bound: (S - 2) / sigma.
double violation_sigma(double S, double sigma);

}  // namespace entconc
