#include "entconc/metrics.hpp"

#include <cmath>

#include "entconc/optics.hpp"

namespace entconc {

namespace {

double outcome_prob(const DensityOperator& rho, const Ket2& k1, const Ket2& k2) {
    Eigen::Vector4cd t;
    t << k1[0] * k2[0], k1[0] * k2[1], k1[1] * k2[0], k1[1] * k2[1];
    return ((t.adjoint() * rho.matrix() * t)(0, 0)).real();
}

}  // namespace

CorrelationRecord correlation(const DensityOperator& rho, double theta1, double theta2) {
    if (rho.num_modes() != 2) {
        throw ModeError("correlation: operator must live on exactly two modes");
    }
    const Ket2 p1 = polarizer(theta1);
    const Ket2 m1 = polarizer(theta1 + M_PI / 2.0);
    const Ket2 p2 = polarizer(theta2);
    const Ket2 m2 = polarizer(theta2 + M_PI / 2.0);
    CorrelationRecord r;
    r.theta1 = theta1;
    r.theta2 = theta2;
    r.p_pp = outcome_prob(rho, p1, p2);
    r.p_pm = outcome_prob(rho, p1, m2);
    r.p_mp = outcome_prob(rho, m1, p2);
    r.p_mm = outcome_prob(rho, m1, m2);
    r.E = r.p_pp + r.p_mm - r.p_pm - r.p_mp;
    return r;
}

double chsh_S(const DensityOperator& rho, const ChshSettings& s) {
    const double e_ab = correlation(rho, s.a, s.b).E;
    const double e_abp = correlation(rho, s.a, s.b_prime).E;
    const double e_apb = correlation(rho, s.a_prime, s.b).E;
    const double e_apbp = correlation(rho, s.a_prime, s.b_prime).E;
    return e_ab - e_abp + e_apb + e_apbp;
}

ChshSettings optimal_settings_psi_plus() {
    return ChshSettings{0.0, M_PI / 4.0, 3.0 * M_PI / 8.0, M_PI / 8.0};
}

HvFractions hv_fractions(const DensityOperator& rho) {
    if (rho.num_modes() != 2) {
        throw ModeError("hv_fractions: operator must live on exactly two modes");
    }
    HvFractions f;
    f.p_hh = rho.matrix()(0, 0).real();
    f.p_hv = rho.matrix()(1, 1).real();
    f.p_vh = rho.matrix()(2, 2).real();
    f.p_vv = rho.matrix()(3, 3).real();
    f.ratio_hv_to_vh = f.p_vh > 0.0 ? f.p_hv / f.p_vh
                                    : std::numeric_limits<double>::infinity();
    return f;
}

double pm_visibility(const DensityOperator& rho) {
    const CorrelationRecord r = correlation(rho, M_PI / 4.0, M_PI / 4.0);
    const double total = r.p_pp + r.p_pm + r.p_mp + r.p_mm;
    return (r.p_pp + r.p_mm - r.p_pm - r.p_mp) / total;
}

double s_from_visibility(double v) { return kTsirelson * v; }

double fidelity_from_S(double S) {
    if (S < 0.0 || S > kTsirelson + 1e-9) {
        throw std::invalid_argument("fidelity_from_S: S out of [0, 2*sqrt(2)]");
    }
    return (1.0 + S / kTsirelson) / 2.0;
}

double violation_sigma(double S, double sigma) {
    if (!(sigma > 0.0)) {
        throw std::invalid_argument("violation_sigma: sigma must be positive");
    }
    return (S - 2.0) / sigma;
}

}  // namespace entconc
