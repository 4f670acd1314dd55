#include "entconc/optics.hpp"

#include <cmath>

namespace entconc {

bool is_unitary(const JonesMatrix& j, double tolerance) {
    return (j.m.adjoint() * j.m - Eigen::Matrix2cd::Identity()).norm() <= tolerance;
}

bool is_filter(const JonesMatrix& j, double tolerance) {
    Eigen::JacobiSVD<Eigen::Matrix2cd> svd(j.m);
    return svd.singularValues().maxCoeff() <= 1.0 + tolerance;
}

JonesMatrix identity_element() {
    return JonesMatrix{Eigen::Matrix2cd::Identity()};
}

JonesMatrix half_wave_plate(double theta) {
    const double c = std::cos(2.0 * theta);
    const double s = std::sin(2.0 * theta);
    Eigen::Matrix2cd m;
    m << c, s, s, -c;
    return JonesMatrix{m};
}

JonesMatrix phase_compensator(double phi) {
    Eigen::Matrix2cd m = Eigen::Matrix2cd::Zero();
    m(0, 0) = 1.0;
    m(1, 1) = std::exp(cdouble(0.0, phi));
    return JonesMatrix{m};
}

FilterElement brewster_window(double t_h, double t_v, int n) {
    if (!(t_v > 0.0) || !(t_v <= t_h) || !(t_h <= 1.0)) {
        throw ConfigError("brewster_window: need 0 < t_v <= t_h <= 1");
    }
    if (n < 1) {
        throw ConfigError("brewster_window: need at least one window");
    }
    const double th_n = std::pow(t_h, n);
    const double tv_n = std::pow(t_v, n);
    Eigen::Matrix2cd m = Eigen::Matrix2cd::Zero();
    m(0, 0) = std::sqrt(th_n);
    m(1, 1) = std::sqrt(tv_n);
    return FilterElement{JonesMatrix{m}, th_n, tv_n};
}

Ket2 polarizer(double theta) {
    return Ket2(std::cos(theta), std::sin(theta));
}

Ket2 minus_ket() {
    return Ket2(1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0));
}

namespace {

// Zero out basis terms whose polarizations differ on the two PBS inputs,
// split the kept part into its HH and VV components, and relabel.
struct KeptParts {
    Eigen::VectorXcd hh;
    Eigen::VectorXcd vv;
};

KeptParts split_kept(const PureState& s, int pos_a, int pos_b) {
    const int n = s.num_modes();
    KeptParts parts{Eigen::VectorXcd::Zero(s.dim()), Eigen::VectorXcd::Zero(s.dim())};
    for (Eigen::Index idx = 0; idx < s.dim(); ++idx) {
        const int ba = s.bit_at(idx, pos_a);
        const int bb = s.bit_at(idx, pos_b);
        if (ba != bb) continue;
        (ba == 0 ? parts.hh : parts.vv)[idx] = s.amplitudes()[idx];
    }
    return parts;
}

}  // namespace

PbsBranches pbs_kept_branches(const PureState& s, const ModeId& in_a,
                              const ModeId& in_b, const ModeId& out_a,
                              const ModeId& out_b) {
    const int pos_a = s.mode_position(in_a);
    const int pos_b = s.mode_position(in_b);
    if (s.has_mode(out_a) || s.has_mode(out_b)) {
        throw ModeError("pbs_coincidence: output labels must be fresh");
    }
    KeptParts parts = split_kept(s, pos_a, pos_b);
    const std::vector<std::pair<ModeId, ModeId>> renames{{in_a, out_a}, {in_b, out_b}};
    PureState hh = relabel(PureState(s.modes(), std::move(parts.hh)), renames);
    PureState vv = relabel(PureState(s.modes(), std::move(parts.vv)), renames);
    const double prob = hh.norm_sq() + vv.norm_sq();
    return PbsBranches{std::move(hh), std::move(vv), prob};
}

PbsOutcome pbs_coincidence(const PureState& s, const ModeId& in_a, const ModeId& in_b,
                           const ModeId& out_a, const ModeId& out_b) {
    PbsBranches branches = pbs_kept_branches(s, in_a, in_b, out_a, out_b);
    if (branches.prob < tol::kBranch) {
        throw ImpossibleBranchError(
            "pbs_coincidence: no equal-polarization component survives");
    }
    Eigen::VectorXcd amps =
        (branches.hh.amplitudes() + branches.vv.amplitudes()) / std::sqrt(branches.prob);
    return PbsOutcome{PureState(branches.hh.modes(), std::move(amps)), branches.prob};
}

PbsDensityOutcome pbs_coincidence(const DensityOperator& rho, const ModeId& in_a,
                                  const ModeId& in_b, const ModeId& out_a,
                                  const ModeId& out_b) {
    const int pos_a = rho.mode_position(in_a);
    const int pos_b = rho.mode_position(in_b);
    if (rho.has_mode(out_a) || rho.has_mode(out_b)) {
        throw ModeError("pbs_coincidence: output labels must be fresh");
    }
    const int n = rho.num_modes();
    const Eigen::Index d = rho.dim();
    // Diagonal projector onto equal polarization at the two inputs.
    Eigen::VectorXd keep(d);
    for (Eigen::Index idx = 0; idx < d; ++idx) {
        const int ba = static_cast<int>((idx >> (n - 1 - pos_a)) & 1);
        const int bb = static_cast<int>((idx >> (n - 1 - pos_b)) & 1);
        keep[idx] = (ba == bb) ? 1.0 : 0.0;
    }
    Eigen::MatrixXcd kept = keep.asDiagonal() * rho.matrix() * keep.asDiagonal();
    const double prob = kept.trace().real();
    if (prob < tol::kBranch) {
        throw ImpossibleBranchError(
            "pbs_coincidence: no equal-polarization component survives");
    }
    DensityOperator out = relabel(DensityOperator(rho.modes(), kept / prob),
                                  {{in_a, out_a}, {in_b, out_b}});
    return PbsDensityOutcome{std::move(out), prob};
}

}  // namespace entconc
