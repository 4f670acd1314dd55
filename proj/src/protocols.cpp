#include "entconc/protocols.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace entconc {

std::string to_string(Branch b) {
    switch (b) {
        case Branch::PP: return "pp";
        case Branch::PM: return "pm";
        case Branch::MP: return "mp";
        case Branch::MM: return "mm";
    }
    return "?";
}

std::optional<Branch> branch_from_string(const std::string& s) {
    if (s == "pp") return Branch::PP;
    if (s == "pm") return Branch::PM;
    if (s == "mp") return Branch::MP;
    if (s == "mm") return Branch::MM;
    return std::nullopt;
}

int branch_sign_first(Branch b) {
    return (b == Branch::PP || b == Branch::PM) ? +1 : -1;
}

int branch_sign_second(Branch b) {
    return (b == Branch::PP || b == Branch::MP) ? +1 : -1;
}

namespace {

Ket2 sign_ket(int sign) { return sign > 0 ? plus_ket() : minus_ket(); }

}  // namespace

Ket2 branch_ket_first(Branch b) { return sign_ket(branch_sign_first(b)); }
Ket2 branch_ket_second(Branch b) { return sign_ket(branch_sign_second(b)); }

PureState psi_plus(const ModeId& m1, const ModeId& m2) {
    return pair_state(1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0), m1, m2);
}

PureState psi_minus(const ModeId& m1, const ModeId& m2) {
    return pair_state(1.0 / std::sqrt(2.0), -1.0 / std::sqrt(2.0), m1, m2);
}

ModeId primed(const ModeId& m) { return ModeId{m.label + "p"}; }

PureState pair_state(cdouble alpha, cdouble beta, const ModeId& first,
                     const ModeId& second) {
    if (first == second) {
        throw ModeError("pair_state: modes must differ");
    }
    // H on `first` pairs with V on `second` and vice versa.
    std::vector<ModeId> modes{first, second};
    std::sort(modes.begin(), modes.end());
    const bool first_is_msb = modes[0] == first;
    PureState hv = PureState::basis(modes, first_is_msb ? std::vector<int>{0, 1}
                                                        : std::vector<int>{1, 0});
    PureState vh = PureState::basis(modes, first_is_msb ? std::vector<int>{1, 0}
                                                        : std::vector<int>{0, 1});
    return PureState(modes, alpha * hv.amplitudes() + beta * vh.amplitudes());
}

Pair prepare_pair(const PairSpec& spec) {
    const double total = std::norm(spec.alpha) + std::norm(spec.beta);
    if (std::abs(total - 1.0) > tol::kNorm) {
        throw std::invalid_argument("prepare_pair: |alpha|^2 + |beta|^2 must be 1");
    }
    return Pair{pair_state(spec.alpha, spec.beta, spec.mode_first, spec.mode_second),
                spec.mode_first, spec.mode_second};
}

FilteredState degrade_pair(const PureState& s, const ModeId& m,
                           const FilterElement& windows) {
    PureState filtered = apply_single_mode(s, m, windows.jones.m);
    NormalizedState n = normalize(filtered);
    return FilteredState{std::move(n.state), n.norm_sq};
}

namespace {

// Shared chain: tensor the pairs, rotate the second pair's PBS photon by 90
// degrees, post-select the coincidence. Exposes the conditioned four-photon
// state; the caller picks which two modes get the +/- measurement.
struct ConditionedChain {
    PureState conditioned;
    double pbs_prob;
    ModeId out_a;  // relabeled p12.second
    ModeId out_b;  // relabeled p34.second
};

ConditionedChain run_chain(const Pair& p12, const Pair& p34) {
    PureState joint = tensor(p12.state, p34.state);
    joint = apply_single_mode(joint, p34.second, rotator_90().m);
    const ModeId out_a = primed(p12.second);
    const ModeId out_b = primed(p34.second);
    PbsOutcome pbs = pbs_coincidence(joint, p12.second, p34.second, out_a, out_b);
    return ConditionedChain{std::move(pbs.state), pbs.prob, out_a, out_b};
}

ProtocolResult finish(ConditionedChain chain, const ModeId& measure_a,
                      const ModeId& measure_b, Branch branch) {
    Projection proj = project(chain.conditioned,
                              {{measure_a, sign_ket(branch_sign_first(branch))},
                               {measure_b, sign_ket(branch_sign_second(branch))}});
    const bool flip = branch == Branch::PM || branch == Branch::MP;
    return ProtocolResult{std::move(proj.state),
                          chain.pbs_prob * proj.prob,
                          chain.pbs_prob,
                          proj.prob,
                          std::move(chain.conditioned),
                          branch,
                          flip};
}

}  // namespace

ProtocolResult concentrate(const Pair& p12, const Pair& p34, Branch branch) {
    ConditionedChain chain = run_chain(p12, p34);
    const ModeId measure_b = chain.out_b;
    return finish(std::move(chain), p34.first, measure_b, branch);
}

ProtocolResult repeater_swap(const Pair& p12, const Pair& p34, Branch branch) {
    ConditionedChain chain = run_chain(p12, p34);
    const ModeId measure_a = chain.out_a;
    const ModeId measure_b = chain.out_b;
    return finish(std::move(chain), measure_a, measure_b, branch);
}

ProtocolResult bell_swap(const Pair& p12, const Pair& p34) {
    PureState joint = tensor(p12.state, p34.state);
    Projection proj = project_onto(joint, psi_plus(p12.second, p34.first));
    return ProtocolResult{std::move(proj.state),
                          proj.prob,
                          proj.prob,
                          1.0,
                          std::nullopt,
                          Branch::PP,
                          false};
}

LocalFilter local_filter(const PairSpec& spec) {
    const double a2 = std::norm(spec.alpha);
    const double b2 = std::norm(spec.beta);
    if (a2 < tol::kBranch || b2 < tol::kBranch) {
        throw std::invalid_argument("local_filter: product state cannot be filtered");
    }
    FilterElement f{identity_element(), 1.0, 1.0};
    if (a2 > b2) {
        f.t_h = b2 / a2;  // attenuate the H component carried by alpha
        f.jones.m(0, 0) = std::sqrt(f.t_h);
    } else if (b2 > a2) {
        f.t_v = a2 / b2;
        f.jones.m(1, 1) = std::sqrt(f.t_v);
    }
    return LocalFilter{f, 2.0 * std::min(a2, b2)};
}

// ---- density route ---------------------------------------------------------

namespace {

struct ConditionedDensityChain {
    DensityOperator conditioned;
    double pbs_prob;
    ModeId out_a;
    ModeId out_b;
};

ConditionedDensityChain run_chain_density(const Pair& p12, const Pair& p34) {
    DensityOperator joint = tensor(to_density(p12.state), to_density(p34.state));
    joint = apply_single_mode(joint, p34.second, rotator_90().m);
    const ModeId out_a = primed(p12.second);
    const ModeId out_b = primed(p34.second);
    PbsDensityOutcome pbs = pbs_coincidence(joint, p12.second, p34.second, out_a, out_b);
    return ConditionedDensityChain{std::move(pbs.state), pbs.prob, out_a, out_b};
}

DensityProtocolResult finish_density(ConditionedDensityChain chain,
                                     const ModeId& measure_a, const ModeId& measure_b,
                                     Branch branch) {
    DensityProjection proj = project(chain.conditioned,
                                     {{measure_a, sign_ket(branch_sign_first(branch))},
                                      {measure_b, sign_ket(branch_sign_second(branch))}});
    return DensityProtocolResult{std::move(proj.state), chain.pbs_prob * proj.prob,
                                 chain.pbs_prob, proj.prob};
}

}  // namespace

DensityProtocolResult concentrate_density(const Pair& p12, const Pair& p34,
                                          Branch branch) {
    ConditionedDensityChain chain = run_chain_density(p12, p34);
    const ModeId measure_b = chain.out_b;
    return finish_density(std::move(chain), p34.first, measure_b, branch);
}

DensityProtocolResult repeater_swap_density(const Pair& p12, const Pair& p34,
                                            Branch branch) {
    ConditionedDensityChain chain = run_chain_density(p12, p34);
    const ModeId measure_a = chain.out_a;
    const ModeId measure_b = chain.out_b;
    return finish_density(std::move(chain), measure_a, measure_b, branch);
}

DensityProtocolResult bell_swap_density(const Pair& p12, const Pair& p34) {
    DensityOperator joint = tensor(to_density(p12.state), to_density(p34.state));
    DensityProjection proj = project_onto(joint, psi_plus(p12.second, p34.first));
    return DensityProtocolResult{std::move(proj.state), proj.prob, proj.prob, 1.0};
}

}  // namespace entconc
