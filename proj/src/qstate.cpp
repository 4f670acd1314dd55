#include "entconc/qstate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace entconc {

namespace {

bool sorted_unique(const std::vector<ModeId>& modes) {
    for (size_t i = 1; i < modes.size(); ++i) {
        if (!(modes[i - 1] < modes[i])) return false;
    }
    return true;
}

Eigen::Index dim_for(size_t n_modes) { return Eigen::Index{1} << n_modes; }

// Merge two disjoint sorted mode lists; records, for each position of the
// merged list, which source it came from (0=a, 1=b) and its position there.
struct MergePlan {
    std::vector<ModeId> modes;
    std::vector<int> source;
    std::vector<int> source_pos;
};

MergePlan merge_modes(const std::vector<ModeId>& a, const std::vector<ModeId>& b) {
    MergePlan plan;
    size_t i = 0, j = 0;
    while (i < a.size() || j < b.size()) {
        bool take_a;
        if (i == a.size()) {
            take_a = false;
        } else if (j == b.size()) {
            take_a = true;
        } else if (a[i] == b[j]) {
            throw ModeError("tensor: duplicate mode label '" + a[i].label + "'");
        } else {
            take_a = a[i] < b[j];
        }
        if (take_a) {
            plan.modes.push_back(a[i]);
            plan.source.push_back(0);
            plan.source_pos.push_back(static_cast<int>(i++));
        } else {
            plan.modes.push_back(b[j]);
            plan.source.push_back(1);
            plan.source_pos.push_back(static_cast<int>(j++));
        }
    }
    return plan;
}

int bit_of(Eigen::Index idx, int pos, int n) {
    return static_cast<int>((idx >> (n - 1 - pos)) & 1);
}

Eigen::Index with_bit(Eigen::Index idx, int pos, int n, int bit) {
    Eigen::Index mask = Eigen::Index{1} << (n - 1 - pos);
    return bit ? (idx | mask) : (idx & ~mask);
}

// Positions (in rho's canonical order) of the given sorted mode subset.
std::vector<int> positions_of(const std::vector<ModeId>& all,
                              const std::vector<ModeId>& subset,
                              const char* what) {
    std::vector<int> pos;
    pos.reserve(subset.size());
    for (const auto& m : subset) {
        auto it = std::lower_bound(all.begin(), all.end(), m);
        if (it == all.end() || !(*it == m)) {
            throw ModeError(std::string(what) + ": unknown mode label '" + m.label + "'");
        }
        pos.push_back(static_cast<int>(it - all.begin()));
    }
    return pos;
}

// Applies a mode-list permutation to basis indices: entry j of `old_pos` is
// the position, in the old ordering, of the mode that sits at position j of
// the new ordering.
Eigen::Index permute_index(Eigen::Index idx, const std::vector<int>& old_pos, int n) {
    Eigen::Index out = 0;
    for (int j = 0; j < n; ++j) {
        out = with_bit(out, j, n, bit_of(idx, old_pos[j], n));
    }
    return out;
}

struct RelabelPlan {
    std::vector<ModeId> modes;  // new canonical order
    std::vector<int> old_pos;   // old position of each new slot
};

RelabelPlan plan_relabel(const std::vector<ModeId>& modes,
                         const std::vector<std::pair<ModeId, ModeId>>& renames) {
    std::vector<std::pair<ModeId, int>> tagged;
    tagged.reserve(modes.size());
    for (size_t p = 0; p < modes.size(); ++p) {
        ModeId name = modes[p];
        for (const auto& [from, to] : renames) {
            if (modes[p] == from) {
                name = to;
                break;
            }
        }
        tagged.emplace_back(std::move(name), static_cast<int>(p));
    }
    for (const auto& [from, to] : renames) {
        if (!std::binary_search(modes.begin(), modes.end(), from)) {
            throw ModeError("relabel: unknown mode label '" + from.label + "'");
        }
    }
    std::sort(tagged.begin(), tagged.end());
    RelabelPlan plan;
    for (size_t j = 0; j < tagged.size(); ++j) {
        if (j > 0 && tagged[j].first == tagged[j - 1].first) {
            throw ModeError("relabel: duplicate mode label '" + tagged[j].first.label + "'");
        }
        plan.modes.push_back(tagged[j].first);
        plan.old_pos.push_back(tagged[j].second);
    }
    return plan;
}

}  // namespace

// ---- PureState ---------------------------------------------------------------

PureState::PureState(std::vector<ModeId> modes, Eigen::VectorXcd amps)
    : modes_(std::move(modes)), amps_(std::move(amps)) {
    if (!sorted_unique(modes_)) {
        throw ModeError("PureState: modes must be sorted and unique");
    }
    if (amps_.size() != dim_for(modes_.size())) {
        throw ModeError("PureState: amplitude vector length must be 2^n");
    }
}

PureState PureState::basis(std::vector<ModeId> modes, const std::vector<int>& bits) {
    if (bits.size() != modes.size()) {
        throw ModeError("basis: one bit per mode required");
    }
    const int n = static_cast<int>(modes.size());
    Eigen::Index idx = 0;
    for (int p = 0; p < n; ++p) {
        idx = with_bit(idx, p, n, bits[p] ? 1 : 0);
    }
    Eigen::VectorXcd amps = Eigen::VectorXcd::Zero(dim_for(modes.size()));
    amps[idx] = 1.0;
    return PureState(std::move(modes), std::move(amps));
}

bool PureState::has_mode(const ModeId& m) const {
    return std::binary_search(modes_.begin(), modes_.end(), m);
}

int PureState::mode_position(const ModeId& m) const {
    auto it = std::lower_bound(modes_.begin(), modes_.end(), m);
    if (it == modes_.end() || !(*it == m)) {
        throw ModeError("unknown mode label '" + m.label + "'");
    }
    return static_cast<int>(it - modes_.begin());
}

// ---- DensityOperator -----------------------------------------------------------

DensityOperator::DensityOperator(std::vector<ModeId> modes, Eigen::MatrixXcd matrix)
    : modes_(std::move(modes)), mat_(std::move(matrix)) {
    if (!sorted_unique(modes_)) {
        throw ModeError("DensityOperator: modes must be sorted and unique");
    }
    const Eigen::Index d = dim_for(modes_.size());
    if (mat_.rows() != d || mat_.cols() != d) {
        throw ModeError("DensityOperator: matrix must be 2^n x 2^n");
    }
}

bool DensityOperator::has_mode(const ModeId& m) const {
    return std::binary_search(modes_.begin(), modes_.end(), m);
}

int DensityOperator::mode_position(const ModeId& m) const {
    auto it = std::lower_bound(modes_.begin(), modes_.end(), m);
    if (it == modes_.end() || !(*it == m)) {
        throw ModeError("unknown mode label '" + m.label + "'");
    }
    return static_cast<int>(it - modes_.begin());
}

// ---- pure-state operations -----------------------------------------------------

PureState tensor(const PureState& a, const PureState& b) {
    MergePlan plan = merge_modes(a.modes(), b.modes());
    const int n = static_cast<int>(plan.modes.size());
    const int na = a.num_modes();
    const int nb = b.num_modes();
    Eigen::VectorXcd amps(dim_for(plan.modes.size()));
    for (Eigen::Index idx = 0; idx < amps.size(); ++idx) {
        Eigen::Index ia = 0, ib = 0;
        for (int p = 0; p < n; ++p) {
            const int bit = bit_of(idx, p, n);
            if (plan.source[p] == 0) {
                ia = with_bit(ia, plan.source_pos[p], na, bit);
            } else {
                ib = with_bit(ib, plan.source_pos[p], nb, bit);
            }
        }
        amps[idx] = a.amplitudes()[ia] * b.amplitudes()[ib];
    }
    return PureState(std::move(plan.modes), std::move(amps));
}

NormalizedState normalize(const PureState& s) {
    const double n2 = s.norm_sq();
    if (n2 < tol::kBranch) {
        throw ImpossibleBranchError("normalize: state has (numerically) zero norm");
    }
    return NormalizedState{PureState(s.modes(), s.amplitudes() / std::sqrt(n2)), n2};
}

PureState apply_single_mode(const PureState& s, const ModeId& m,
                            const Eigen::Matrix2cd& op) {
    const int n = s.num_modes();
    const int pos = s.mode_position(m);
    const Eigen::Index mask = Eigen::Index{1} << (n - 1 - pos);
    Eigen::VectorXcd amps = s.amplitudes();
    for (Eigen::Index idx = 0; idx < amps.size(); ++idx) {
        if (idx & mask) continue;  // visit each (H,V) pair once, from the H side
        const Eigen::Index partner = idx | mask;
        const cdouble a0 = amps[idx];
        const cdouble a1 = amps[partner];
        amps[idx] = op(0, 0) * a0 + op(0, 1) * a1;
        amps[partner] = op(1, 0) * a0 + op(1, 1) * a1;
    }
    return PureState(s.modes(), std::move(amps));
}

namespace {

// One-mode contraction step shared by contract(): removes `m`, weighting the
// surviving component of each basis string by conj(ket[bit]).
PureState contract_one(const PureState& s, const ModeId& m, const Ket2& ket) {
    const int n = s.num_modes();
    const int pos = s.mode_position(m);
    std::vector<ModeId> rem_modes;
    rem_modes.reserve(n - 1);
    for (int p = 0; p < n; ++p) {
        if (p != pos) rem_modes.push_back(s.modes()[p]);
    }
    Eigen::VectorXcd res = Eigen::VectorXcd::Zero(dim_for(rem_modes.size()));
    for (Eigen::Index idx = 0; idx < s.dim(); ++idx) {
        const int bit = bit_of(idx, pos, n);
        Eigen::Index rem = 0;
        int j = 0;
        for (int p = 0; p < n; ++p) {
            if (p == pos) continue;
            rem = with_bit(rem, j++, n - 1, bit_of(idx, p, n));
        }
        res[rem] += std::conj(ket[bit]) * s.amplitudes()[idx];
    }
    return PureState(std::move(rem_modes), std::move(res));
}

}  // namespace

PureState contract(const PureState& s,
                   const std::vector<std::pair<ModeId, Ket2>>& targets) {
    PureState cur = s;
    for (const auto& [m, ket] : targets) {
        cur = contract_one(cur, m, ket);
    }
    return cur;
}

Projection project(const PureState& s,
                   const std::vector<std::pair<ModeId, Ket2>>& targets) {
    for (const auto& [m, ket] : targets) {
        if (std::abs(ket.squaredNorm() - 1.0) > tol::kNorm) {
            throw ModeError("project: target ket for mode '" + m.label +
                            "' is not unit-norm");
        }
    }
    PureState residual = contract(s, targets);
    const double prob = residual.norm_sq();
    if (prob < tol::kBranch) {
        throw ImpossibleBranchError("project: branch probability is zero");
    }
    return Projection{PureState(residual.modes(), residual.amplitudes() / std::sqrt(prob)),
                      prob};
}

PureState contract_onto(const PureState& s, const PureState& target) {
    const int n = s.num_modes();
    const int nt = target.num_modes();
    std::vector<int> tpos = positions_of(s.modes(), target.modes(), "project_onto");
    std::vector<bool> is_target(n, false);
    for (int p : tpos) is_target[p] = true;
    std::vector<ModeId> rem_modes;
    for (int p = 0; p < n; ++p) {
        if (!is_target[p]) rem_modes.push_back(s.modes()[p]);
    }
    Eigen::VectorXcd res = Eigen::VectorXcd::Zero(dim_for(rem_modes.size()));
    const int nr = static_cast<int>(rem_modes.size());
    for (Eigen::Index idx = 0; idx < s.dim(); ++idx) {
        Eigen::Index tidx = 0, rem = 0;
        int jt = 0, jr = 0;
        for (int p = 0; p < n; ++p) {
            const int bit = bit_of(idx, p, n);
            if (is_target[p]) {
                tidx = with_bit(tidx, jt++, nt, bit);
            } else {
                rem = with_bit(rem, jr++, nr, bit);
            }
        }
        res[rem] += std::conj(target.amplitudes()[tidx]) * s.amplitudes()[idx];
    }
    return PureState(std::move(rem_modes), std::move(res));
}

Projection project_onto(const PureState& s, const PureState& target) {
    if (std::abs(target.norm_sq() - 1.0) > tol::kNorm) {
        throw ModeError("project_onto: target state is not unit-norm");
    }
    PureState residual = contract_onto(s, target);
    const double prob = residual.norm_sq();
    if (prob < tol::kBranch) {
        throw ImpossibleBranchError("project_onto: branch probability is zero");
    }
    return Projection{PureState(residual.modes(), residual.amplitudes() / std::sqrt(prob)),
                      prob};
}

PureState relabel(const PureState& s,
                  const std::vector<std::pair<ModeId, ModeId>>& renames) {
    RelabelPlan plan = plan_relabel(s.modes(), renames);
    const int n = s.num_modes();
    Eigen::VectorXcd amps(s.dim());
    for (Eigen::Index idx = 0; idx < s.dim(); ++idx) {
        // bit at new position j comes from old position old_pos[j]
        amps[permute_index(idx, plan.old_pos, n)] = s.amplitudes()[idx];
    }
    return PureState(std::move(plan.modes), std::move(amps));
}

DensityOperator to_density(const PureState& s) {
    if (std::abs(s.norm_sq() - 1.0) > tol::kNorm) {
        throw ModeError("to_density: state must be unit-norm");
    }
    Eigen::MatrixXcd rho = s.amplitudes() * s.amplitudes().adjoint();
    return DensityOperator(s.modes(), std::move(rho));
}

cdouble inner_product(const PureState& a, const PureState& b) {
    if (a.modes() != b.modes()) {
        throw ModeError("inner_product: mode sets differ");
    }
    return a.amplitudes().dot(b.amplitudes());  // Eigen dot conjugates the lhs
}

// ---- density-operator operations -----------------------------------------------

Eigen::MatrixXcd kron(const Eigen::MatrixXcd& a, const Eigen::MatrixXcd& b) {
    Eigen::MatrixXcd out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

Eigen::MatrixXcd embed_single_mode(const Eigen::Matrix2cd& op, int pos, int n_modes) {
    const Eigen::Index left = Eigen::Index{1} << pos;
    const Eigen::Index right = Eigen::Index{1} << (n_modes - 1 - pos);
    Eigen::MatrixXcd out = kron(Eigen::MatrixXcd::Identity(left, left), op);
    return kron(out, Eigen::MatrixXcd::Identity(right, right));
}

namespace {

DensityOperator reorder_density(const std::vector<ModeId>& modes_in_row_order,
                                const Eigen::MatrixXcd& mat) {
    // Sort the mode list; permute rows and columns accordingly.
    std::vector<std::pair<ModeId, int>> tagged;
    for (size_t p = 0; p < modes_in_row_order.size(); ++p) {
        tagged.emplace_back(modes_in_row_order[p], static_cast<int>(p));
    }
    std::sort(tagged.begin(), tagged.end());
    std::vector<ModeId> sorted_modes;
    std::vector<int> old_pos;
    for (auto& [m, p] : tagged) {
        if (!sorted_modes.empty() && sorted_modes.back() == m) {
            throw ModeError("tensor: duplicate mode label '" + m.label + "'");
        }
        sorted_modes.push_back(m);
        old_pos.push_back(p);
    }
    const int n = static_cast<int>(sorted_modes.size());
    const Eigen::Index d = mat.rows();
    std::vector<Eigen::Index> perm(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        perm[i] = permute_index(i, old_pos, n);
    }
    Eigen::MatrixXcd out(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            out(perm[i], perm[j]) = mat(i, j);
        }
    }
    return DensityOperator(std::move(sorted_modes), std::move(out));
}

}  // namespace

DensityOperator tensor(const DensityOperator& a, const DensityOperator& b) {
    std::vector<ModeId> combined = a.modes();
    combined.insert(combined.end(), b.modes().begin(), b.modes().end());
    return reorder_density(combined, kron(a.matrix(), b.matrix()));
}

DensityOperator apply_single_mode(const DensityOperator& rho, const ModeId& m,
                                  const Eigen::Matrix2cd& op) {
    const Eigen::MatrixXcd e = embed_single_mode(op, rho.mode_position(m), rho.num_modes());
    return DensityOperator(rho.modes(), e * rho.matrix() * e.adjoint());
}

DensityProjection project(const DensityOperator& rho,
                          const std::vector<std::pair<ModeId, Ket2>>& targets) {
    Eigen::MatrixXcd p = Eigen::MatrixXcd::Identity(rho.dim(), rho.dim());
    std::vector<ModeId> keep = rho.modes();
    for (const auto& [m, ket] : targets) {
        if (std::abs(ket.squaredNorm() - 1.0) > tol::kNorm) {
            throw ModeError("project: target ket for mode '" + m.label +
                            "' is not unit-norm");
        }
        const Eigen::Matrix2cd proj = ket * ket.adjoint();
        p = embed_single_mode(proj, rho.mode_position(m), rho.num_modes()) * p;
        keep.erase(std::remove(keep.begin(), keep.end(), m), keep.end());
    }
    Eigen::MatrixXcd sandwiched = p * rho.matrix() * p.adjoint();
    const double prob = sandwiched.trace().real();
    if (prob < tol::kBranch) {
        throw ImpossibleBranchError("project: branch probability is zero");
    }
    DensityOperator reduced =
        partial_trace(DensityOperator(rho.modes(), std::move(sandwiched)), keep);
    return DensityProjection{
        DensityOperator(reduced.modes(), reduced.matrix() / prob), prob};
}

DensityProjection project_onto(const DensityOperator& rho, const PureState& target) {
    if (std::abs(target.norm_sq() - 1.0) > tol::kNorm) {
        throw ModeError("project_onto: target state is not unit-norm");
    }
    std::vector<int> tpos = positions_of(rho.modes(), target.modes(), "project_onto");
    const int n = rho.num_modes();
    const int nt = target.num_modes();
    // Build |t><t| embedded on the target modes (identity elsewhere).
    const Eigen::Index d = rho.dim();
    Eigen::MatrixXcd p = Eigen::MatrixXcd::Zero(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            // rows/cols must agree on non-target bits
            bool match = true;
            Eigen::Index ti = 0, tj = 0;
            int jt = 0;
            for (int q = 0; q < n; ++q) {
                const bool is_t = std::find(tpos.begin(), tpos.end(), q) != tpos.end();
                if (is_t) {
                    ti = with_bit(ti, jt, nt, bit_of(i, q, n));
                    tj = with_bit(tj, jt, nt, bit_of(j, q, n));
                    ++jt;
                } else if (bit_of(i, q, n) != bit_of(j, q, n)) {
                    match = false;
                    break;
                }
            }
            if (match) {
                p(i, j) = target.amplitudes()[ti] * std::conj(target.amplitudes()[tj]);
            }
        }
    }
    Eigen::MatrixXcd sandwiched = p * rho.matrix() * p.adjoint();
    const double prob = sandwiched.trace().real();
    if (prob < tol::kBranch) {
        throw ImpossibleBranchError("project_onto: branch probability is zero");
    }
    std::vector<ModeId> keep;
    for (const auto& m : rho.modes()) {
        if (!std::binary_search(target.modes().begin(), target.modes().end(), m)) {
            keep.push_back(m);
        }
    }
    DensityOperator reduced =
        partial_trace(DensityOperator(rho.modes(), std::move(sandwiched)), keep);
    return DensityProjection{
        DensityOperator(reduced.modes(), reduced.matrix() / prob), prob};
}

DensityOperator relabel(const DensityOperator& rho,
                        const std::vector<std::pair<ModeId, ModeId>>& renames) {
    RelabelPlan plan = plan_relabel(rho.modes(), renames);
    const int n = rho.num_modes();
    const Eigen::Index d = rho.dim();
    std::vector<Eigen::Index> perm(d);
    for (Eigen::Index i = 0; i < d; ++i) {
        Eigen::Index out = 0;
        for (int j = 0; j < n; ++j) {
            out = with_bit(out, j, n, bit_of(i, plan.old_pos[j], n));
        }
        perm[i] = out;
    }
    Eigen::MatrixXcd mat(d, d);
    for (Eigen::Index i = 0; i < d; ++i) {
        for (Eigen::Index j = 0; j < d; ++j) {
            mat(perm[i], perm[j]) = rho.matrix()(i, j);
        }
    }
    return DensityOperator(std::move(plan.modes), std::move(mat));
}

DensityOperator partial_trace(const DensityOperator& rho,
                              const std::vector<ModeId>& keep) {
    std::vector<ModeId> keep_sorted = keep;
    std::sort(keep_sorted.begin(), keep_sorted.end());
    std::vector<int> kpos = positions_of(rho.modes(), keep_sorted, "partial_trace");
    const int n = rho.num_modes();
    const int nk = static_cast<int>(keep_sorted.size());
    std::vector<int> tpos;
    for (int p = 0; p < n; ++p) {
        if (std::find(kpos.begin(), kpos.end(), p) == kpos.end()) tpos.push_back(p);
    }
    const int ntr = static_cast<int>(tpos.size());
    const Eigen::Index dk = Eigen::Index{1} << nk;
    const Eigen::Index dt = Eigen::Index{1} << ntr;
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(dk, dk);
    for (Eigen::Index a = 0; a < dk; ++a) {
        for (Eigen::Index b = 0; b < dk; ++b) {
            cdouble sum = 0.0;
            for (Eigen::Index t = 0; t < dt; ++t) {
                Eigen::Index i = 0, j = 0;
                for (int q = 0; q < nk; ++q) {
                    i = with_bit(i, kpos[q], n, bit_of(a, q, nk));
                    j = with_bit(j, kpos[q], n, bit_of(b, q, nk));
                }
                for (int q = 0; q < ntr; ++q) {
                    const int bit = bit_of(t, q, ntr);
                    i = with_bit(i, tpos[q], n, bit);
                    j = with_bit(j, tpos[q], n, bit);
                }
                sum += rho.matrix()(i, j);
            }
            out(a, b) = sum;
        }
    }
    return DensityOperator(std::move(keep_sorted), std::move(out));
}

double fidelity_to_pure(const DensityOperator& rho, const PureState& t) {
    if (rho.modes() != t.modes()) {
        throw ModeError("fidelity_to_pure: mode sets differ");
    }
    if (std::abs(t.norm_sq() - 1.0) > tol::kNorm) {
        throw ModeError("fidelity_to_pure: target must be unit-norm");
    }
    const cdouble v = (t.amplitudes().adjoint() * rho.matrix() * t.amplitudes())(0, 0);
    return v.real();
}

}  // namespace entconc
