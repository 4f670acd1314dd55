#include "entconc/stochastics.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "entconc/optics.hpp"

namespace entconc {

double overlap_from_delay(double delay_um, double coherence_length_um, double gamma0) {
    if (!(coherence_length_um > 0.0)) {
        throw std::invalid_argument("overlap_from_delay: coherence length must be > 0");
    }
    const double x = delay_um / coherence_length_um;
    return gamma0 * std::exp(-x * x);
}

DensityOperator apply_distinguishability(const PureState& branch_a,
                                         const PureState& branch_b, double gamma) {
    if (gamma < 0.0 || gamma > 1.0) {
        throw std::invalid_argument("apply_distinguishability: gamma must be in [0, 1]");
    }
    if (branch_a.modes() != branch_b.modes()) {
        throw ModeError("apply_distinguishability: branch mode sets differ");
    }
    const Eigen::VectorXcd& a = branch_a.amplitudes();
    const Eigen::VectorXcd& b = branch_b.amplitudes();
    const Eigen::VectorXcd sum = a + b;
    // Convex mixture of the coherent superposition and the incoherent blend;
    // manifestly positive for every gamma in [0, 1].
    Eigen::MatrixXcd rho = gamma * (sum * sum.adjoint()) +
                           (1.0 - gamma) * (a * a.adjoint() + b * b.adjoint());
    const double trace = rho.trace().real();
    if (trace < tol::kBranch) {
        throw ImpossibleBranchError("apply_distinguishability: zero-weight branches");
    }
    return DensityOperator(branch_a.modes(), rho / trace);
}

NoisyChain build_chain(Scheme scheme, const PreparedPair& p12, const PreparedPair& p34) {
    if (scheme == Scheme::BellSwap) {
        throw std::invalid_argument("build_chain: the plain Bell swap has no PBS stage");
    }
    PureState s12 = apply_single_mode(p12.pair.state, p12.pair.first, p12.element);
    PureState s34 = apply_single_mode(p34.pair.state, p34.pair.first, p34.element);
    const double input_norm_sq = s12.norm_sq() * s34.norm_sq();
    PureState joint = tensor(s12, s34);
    joint = apply_single_mode(joint, p34.pair.second, rotator_90().m);
    const ModeId out_a = primed(p12.pair.second);
    const ModeId out_b = primed(p34.pair.second);
    PbsBranches branches =
        pbs_kept_branches(joint, p12.pair.second, p34.pair.second, out_a, out_b);
    if (scheme == Scheme::Concentrate) {
        return NoisyChain{std::move(branches), p12.pair.first, out_a,
                          p34.pair.first, out_b, input_norm_sq};
    }
    return NoisyChain{std::move(branches), p12.pair.first, p34.pair.first,
                      out_a, out_b, input_norm_sq};
}

namespace {

std::vector<std::pair<ModeId, Ket2>> conditioning_targets(const NoisyChain& chain,
                                                          Branch branch) {
    return {{chain.cond_first, branch_ket_first(branch)},
            {chain.cond_second, branch_ket_second(branch)}};
}

// gamma-weighted squared norm of a projected branch pair.
double combined_prob(const PureState& a, const PureState& b, double gamma) {
    const cdouble cross = inner_product(a, b);
    return a.norm_sq() + b.norm_sq() + 2.0 * gamma * cross.real();
}

Ket2 analyzer_ket(double theta, int outcome) {
    return polarizer(outcome > 0 ? theta : theta + M_PI / 2.0);
}

}  // namespace

double branch_probability(const NoisyChain& chain, Branch branch, double gamma) {
    const auto targets = conditioning_targets(chain, branch);
    PureState a = contract(chain.branches.vv, targets);
    PureState b = contract(chain.branches.hh, targets);
    return combined_prob(a, b, gamma);
}

DensityOperator conditional_output(const NoisyChain& chain, Branch branch,
                                   double gamma) {
    const auto targets = conditioning_targets(chain, branch);
    PureState a = contract(chain.branches.vv, targets);
    PureState b = contract(chain.branches.hh, targets);
    return apply_distinguishability(a, b, gamma);
}

double outcome_probability(const NoisyChain& chain, Branch branch, double theta1,
                           int o1, double theta2, int o2, double gamma) {
    auto targets = conditioning_targets(chain, branch);
    targets.emplace_back(chain.out_first, analyzer_ket(theta1, o1));
    targets.emplace_back(chain.out_second, analyzer_ket(theta2, o2));
    PureState a = contract(chain.branches.vv, targets);
    PureState b = contract(chain.branches.hh, targets);
    return combined_prob(a, b, gamma);
}

ProbabilityTable chsh_probability_table(const NoisyChain& chain, Branch branch,
                                        const ChshSettings& s, double gamma) {
    const std::array<std::pair<double, double>, 4> pairs{
        std::pair{s.a, s.b}, {s.a, s.b_prime}, {s.a_prime, s.b}, {s.a_prime, s.b_prime}};
    ProbabilityTable table;
    table.reserve(4);
    for (const auto& [t1, t2] : pairs) {
        SettingProbs sp{t1, t2, {}};
        int k = 0;
        for (int o1 : {+1, -1}) {
            for (int o2 : {+1, -1}) {
                sp.p[k++] = outcome_probability(chain, branch, t1, o1, t2, o2, gamma);
            }
        }
        table.push_back(sp);
    }
    return table;
}

namespace {

double outcome_time(const SamplingConfig& cfg) {
    return cfg.accounting == TimeAccounting::PerOutcome ? cfg.time_s : cfg.time_s / 4.0;
}

double poisson_mean(const SamplingConfig& cfg, double eps, double p) {
    return cfg.rate_hz * outcome_time(cfg) * ((1.0 - eps) * p + eps / 4.0);
}

void validate_table(const ProbabilityTable& probs, double eps) {
    if (eps < 0.0) {
        throw std::invalid_argument("background fraction must be >= 0");
    }
    for (const auto& s : probs) {
        double sum = 0.0;
        for (double p : s.p) {
            if (p < -tol::kOperator) {
                throw std::invalid_argument("negative outcome probability");
            }
            sum += p;
        }
        if (sum > 1.0 + tol::kOperator) {
            throw std::invalid_argument("outcome probabilities exceed 1 within a setting");
        }
    }
}

double draw_poisson(double mean, std::uint64_t seed) {
    if (mean <= 0.0) return 0.0;
    std::mt19937_64 eng(seed);
    std::poisson_distribution<long long> dist(mean);
    return static_cast<double>(dist(eng));
}

}  // namespace

CountTable expected_counts(const ProbabilityTable& probs, const SamplingConfig& cfg,
                           double eps) {
    validate_table(probs, eps);
    CountTable table{{}, cfg.rate_hz, cfg.time_s, cfg.accounting, cfg.seed, false};
    for (const auto& s : probs) {
        SettingCounts sc{s.theta1, s.theta2, {}};
        for (int o = 0; o < 4; ++o) {
            sc.counts[o] = poisson_mean(cfg, eps, s.p[o]);
        }
        table.settings.push_back(sc);
    }
    return table;
}

CountTable sample_counts(const ProbabilityTable& probs, const SamplingConfig& cfg,
                         double eps) {
    validate_table(probs, eps);
    CountTable table{{}, cfg.rate_hz, cfg.time_s, cfg.accounting, cfg.seed, true};
    for (size_t i = 0; i < probs.size(); ++i) {
        SettingCounts sc{probs[i].theta1, probs[i].theta2, {}};
        for (int o = 0; o < 4; ++o) {
            const double mean = poisson_mean(cfg, eps, probs[i].p[o]);
            sc.counts[o] = draw_poisson(mean, derive_seed(cfg.seed, i, o));
        }
        table.settings.push_back(sc);
    }
    return table;
}

SEstimate estimate_S(const CountTable& counts) {
    if (counts.settings.size() != 4) {
        throw std::invalid_argument("estimate_S: need exactly four settings");
    }
    double S = 0.0;
    double var = 0.0;
    for (size_t i = 0; i < 4; ++i) {
        const auto& c = counts.settings[i].counts;
        const double same = c[0] + c[3];
        const double diff = c[1] + c[2];
        const double total = same + diff;
        if (total <= 0.0) {
            throw std::invalid_argument("estimate_S: setting with zero total counts");
        }
        const double e = (same - diff) / total;
        // Poisson outcome counts, first order: Var(E) = 4*A*B/N^3.
        var += 4.0 * same * diff / (total * total * total);
        const double sign = (i == 1) ? -1.0 : 1.0;
        S += sign * e;
    }
    return SEstimate{S, std::sqrt(var)};
}

std::vector<SEstimate> replicate_chsh(const ProbabilityTable& probs,
                                      const SamplingConfig& cfg, double eps,
                                      int n_reps, Exec exec) {
    validate_table(probs, eps);
    std::vector<SEstimate> out(static_cast<size_t>(n_reps));
    auto one = [&](int r) {
        SamplingConfig rep_cfg = cfg;
        rep_cfg.seed = derive_seed(cfg.seed, 0x7e911ca7e5ULL, static_cast<std::uint64_t>(r));
        return estimate_S(sample_counts(probs, rep_cfg, eps));
    };
    if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
        for (int r = 0; r < n_reps; ++r) {
            out[static_cast<size_t>(r)] = one(r);
        }
    } else {
        for (int r = 0; r < n_reps; ++r) {
            out[static_cast<size_t>(r)] = one(r);
        }
    }
    return out;
}

std::vector<ScanPoint> delay_scan(const NoisyChain& chain, Branch branch,
                                  const NoiseParams& noise,
                                  const std::vector<double>& delays_um,
                                  const SamplingConfig& cfg, bool ideal, Exec exec) {
    std::vector<ScanPoint> out(delays_um.size());
    const double t = outcome_time(cfg);
    auto one = [&](size_t i) {
        const double d = delays_um[i];
        const double gamma =
            overlap_from_delay(d, noise.coherence_length_um, noise.overlap_gamma);
        ScanPoint pt{};
        pt.delay_um = d;
        pt.gamma = gamma;
        pt.p_pp = outcome_probability(chain, branch, M_PI / 4.0, +1, M_PI / 4.0, +1, gamma);
        pt.p_mp = outcome_probability(chain, branch, M_PI / 4.0, -1, M_PI / 4.0, +1, gamma);
        const double eps = noise.background_eps;
        const double mean_pp = cfg.rate_hz * t * ((1.0 - eps) * pt.p_pp + eps / 4.0);
        const double mean_mp = cfg.rate_hz * t * ((1.0 - eps) * pt.p_mp + eps / 4.0);
        if (ideal) {
            pt.counts_pp = mean_pp;
            pt.counts_mp = mean_mp;
        } else {
            pt.counts_pp = draw_poisson(mean_pp, derive_seed(cfg.seed, i, 0x9c));
            pt.counts_mp = draw_poisson(mean_mp, derive_seed(cfg.seed, i, 0x9d));
        }
        return pt;
    };
    if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
        for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(delays_um.size()); ++i) {
            out[static_cast<size_t>(i)] = one(static_cast<size_t>(i));
        }
    } else {
        for (size_t i = 0; i < delays_um.size(); ++i) {
            out[i] = one(i);
        }
    }
    return out;
}

ScanVisibility scan_visibility(const std::vector<ScanPoint>& points,
                               double coherence_length_um,
                               double accidental_per_point) {
    if (points.empty()) {
        throw std::invalid_argument("scan_visibility: empty scan");
    }
    double plateau_pp = 0.0, plateau_mp = 0.0;
    int n_plateau = 0;
    const ScanPoint* center = &points.front();
    for (const auto& pt : points) {
        if (std::abs(pt.delay_um) >= 2.5 * coherence_length_um) {
            plateau_pp += pt.counts_pp - accidental_per_point;
            plateau_mp += pt.counts_mp - accidental_per_point;
            ++n_plateau;
        }
        if (std::abs(pt.delay_um) < std::abs(center->delay_um)) {
            center = &pt;
        }
    }
    if (n_plateau == 0 || plateau_mp <= 0.0) {
        throw std::invalid_argument("scan_visibility: no usable plateau points");
    }
    plateau_pp /= n_plateau;
    plateau_mp /= n_plateau;
    const double dip = center->counts_mp - accidental_per_point;
    return ScanVisibility{1.0 - dip / plateau_mp, plateau_pp, plateau_mp};
}

}  // namespace entconc
