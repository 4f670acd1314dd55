// Dense multi-photon polarization Hilbert space: labeled H/V modes, pure
// states, density operators, tensor products, projections, partial trace.
//
// Basis convention: H=0, V=1; within one state the modes are kept sorted by
// label ("canonical order") and the FIRST canonical mode is the MOST
// significant bit of the basis index. Unnormalized states are first-class:
// the squared norm of a post-selected branch is its probability, so success
// probabilities compose multiplicatively through element chains.

#pragma once

#include <Eigen/Dense>

#include <compare>
#include <string>
#include <utility>
#include <vector>

#include "entconc/common.hpp"

namespace entconc {

using Ket2 = Eigen::Vector2cd;

// A labeled two-level (H/V) photon mode.
struct ModeId {
    std::string label;

    auto operator<=>(const ModeId&) const = default;
};

inline ModeId mode(std::string label) { return ModeId{std::move(label)}; }

// Pure state over a set of labeled modes. The amplitude vector has length
// 2^n and is indexed by H/V bit-strings under the convention above.
class PureState {
public:
    // Modes must be strictly sorted by label; amps.size() must be 2^n.
    PureState(std::vector<ModeId> modes, Eigen::VectorXcd amps);

    // Computational basis ket; bits[k] is the H(0)/V(1) value of the k-th
    // canonical mode.
    static PureState basis(std::vector<ModeId> modes, const std::vector<int>& bits);

    const std::vector<ModeId>& modes() const { return modes_; }
    const Eigen::VectorXcd& amplitudes() const { return amps_; }
    int num_modes() const { return static_cast<int>(modes_.size()); }
    Eigen::Index dim() const { return amps_.size(); }

    double norm_sq() const { return amps_.squaredNorm(); }
    bool has_mode(const ModeId& m) const;
    // Position of a mode in canonical order; throws ModeError if absent.
    int mode_position(const ModeId& m) const;

    // Bit value of mode position `pos` within basis index `idx`.
    int bit_at(Eigen::Index idx, int pos) const {
        return static_cast<int>((idx >> (num_modes() - 1 - pos)) & 1);
    }

private:
    std::vector<ModeId> modes_;
    Eigen::VectorXcd amps_;
};

// Hermitian positive operator over the same labeled-mode basis.
class DensityOperator {
public:
    DensityOperator(std::vector<ModeId> modes, Eigen::MatrixXcd matrix);

    const std::vector<ModeId>& modes() const { return modes_; }
    const Eigen::MatrixXcd& matrix() const { return mat_; }
    int num_modes() const { return static_cast<int>(modes_.size()); }
    Eigen::Index dim() const { return mat_.rows(); }

    double trace() const { return mat_.trace().real(); }
    bool has_mode(const ModeId& m) const;
    int mode_position(const ModeId& m) const;

private:
    std::vector<ModeId> modes_;
    Eigen::MatrixXcd mat_;
};

struct NormalizedState {
    PureState state;
    double norm_sq;  // squared norm of the input = branch probability
};

struct Projection {
    PureState state;  // normalized residual over the remaining modes
    double prob;      // squared norm of the projected branch
};

struct DensityProjection {
    DensityOperator state;
    double prob;
};

// ---- pure-state operations -------------------------------------------------

// Tensor product over the union of modes in canonical order. Mode label sets
// must be disjoint.
PureState tensor(const PureState& a, const PureState& b);

// Rescale to unit norm; returns the input squared norm alongside. Throws
// ImpossibleBranchError when the state is numerically zero.
NormalizedState normalize(const PureState& s);

// Apply a 2x2 matrix to the H/V subspace of one mode. Non-unitary matrices
// (filters) shrink the norm; that loss is the absorption probability.
PureState apply_single_mode(const PureState& s, const ModeId& m,
                            const Eigen::Matrix2cd& op);

// Contract single-mode kets out of the state without renormalizing: the
// returned state lives on the remaining modes and its squared norm is the
// branch probability. Building block for project() and for noise models
// that need unnormalized branches.
PureState contract(const PureState& s,
                   const std::vector<std::pair<ModeId, Ket2>>& targets);

// Project onto a product of single-mode kets; returns the normalized
// residual and the branch probability. Throws ImpossibleBranchError when the
// branch probability is below tol::kBranch.
Projection project(const PureState& s,
                   const std::vector<std::pair<ModeId, Ket2>>& targets);

// Project a subset of modes onto an arbitrary (possibly entangled) state.
// `target` must be unit-norm and its modes a subset of s's modes.
Projection project_onto(const PureState& s, const PureState& target);
PureState contract_onto(const PureState& s, const PureState& target);

// Rename modes; amplitudes are permuted into the new canonical order.
// `renames` maps existing labels to fresh ones (modes not listed keep their
// label). The resulting label set must still be unique.
PureState relabel(const PureState& s,
                  const std::vector<std::pair<ModeId, ModeId>>& renames);

DensityOperator to_density(const PureState& s);

// <a|b>; modes must match.
cdouble inner_product(const PureState& a, const PureState& b);

// ---- density-operator operations -------------------------------------------
//
// These form an independent evaluation route: protocols can be run entirely
// in density form and compared against the pure-state fast path.

DensityOperator tensor(const DensityOperator& a, const DensityOperator& b);

DensityOperator apply_single_mode(const DensityOperator& rho, const ModeId& m,
                                  const Eigen::Matrix2cd& op);

// Sandwich with the product projector, trace out the measured modes,
// renormalize. prob is the pre-normalization trace.
DensityProjection project(const DensityOperator& rho,
                          const std::vector<std::pair<ModeId, Ket2>>& targets);

DensityProjection project_onto(const DensityOperator& rho, const PureState& target);

DensityOperator relabel(const DensityOperator& rho,
                        const std::vector<std::pair<ModeId, ModeId>>& renames);

// Reduced operator on `keep` (subset of rho's modes); trace is preserved.
DensityOperator partial_trace(const DensityOperator& rho,
                              const std::vector<ModeId>& keep);

// <t|rho|t>; modes must match and t must be unit-norm.
double fidelity_to_pure(const DensityOperator& rho, const PureState& t);

// Embed a single-mode operator at canonical position `pos` of an n-mode
// space (identity elsewhere). Exposed for the density route and tests.
Eigen::MatrixXcd embed_single_mode(const Eigen::Matrix2cd& op, int pos, int n_modes);

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b);

}  // namespace entconc
