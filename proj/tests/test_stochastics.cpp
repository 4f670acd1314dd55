#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <cmath>
#include <numeric>

#include "entconc/stochastics.hpp"
#include "test_util.hpp"

using namespace entconc;

namespace {

const ModeId m1 = mode("1");
const ModeId m2 = mode("2");
const ModeId m3 = mode("3");
const ModeId m4 = mode("4");

constexpr double kInvSqrt2 = 0.7071067811865476;

PreparedPair prepared(cdouble a, cdouble b, const ModeId& first, const ModeId& second,
                      int windows = 0) {
    PreparedPair p{prepare_pair(PairSpec{a, b, first, second}),
                   Eigen::Matrix2cd::Identity()};
    if (windows > 0) p.element = brewster_window(0.98, 0.73, windows).jones.m;
    return p;
}

NoisyChain equal_pair_chain(int windows = 0) {
    return build_chain(Scheme::Concentrate,
                       prepared(kInvSqrt2, kInvSqrt2, m1, m2, windows),
                       prepared(kInvSqrt2, kInvSqrt2, m3, m4, windows));
}

double stddev(const std::vector<double>& xs) {
    const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    double acc = 0.0;
    for (double x : xs) acc += (x - mean) * (x - mean);
    return std::sqrt(acc / (xs.size() - 1));
}

}  // namespace

TEST_CASE("overlap versus delay follows the Gaussian") {
    CHECK(std::abs(overlap_from_delay(0.0, 76.0, 0.83) - 0.83) < 1e-15);
    const double half = 76.0 * std::sqrt(std::log(2.0));
    CHECK(std::abs(overlap_from_delay(half, 76.0, 0.83) - 0.415) < 1e-12);
    CHECK(std::abs(overlap_from_delay(-half, 76.0, 0.83) - 0.415) < 1e-12);
    CHECK(overlap_from_delay(2000.0, 76.0, 1.0) < 1e-200);
    CHECK_THROWS_AS(overlap_from_delay(1.0, 0.0, 1.0), std::invalid_argument);
}

TEST_CASE("distinguishability interpolates between superposition and mixture") {
    NoisyChain chain = equal_pair_chain();
    const auto targets = std::vector<std::pair<ModeId, Ket2>>{
        {chain.cond_first, plus_ket()}, {chain.cond_second, plus_ket()}};
    PureState a = contract(chain.branches.vv, targets);
    PureState b = contract(chain.branches.hh, targets);

    DensityOperator pure = apply_distinguishability(a, b, 1.0);
    CHECK(std::abs(pm_visibility(pure) - 1.0) < 1e-12);
    CHECK(std::abs(fidelity_to_pure(pure, psi_plus(m1, mode("2p"))) - 1.0) < 1e-12);

    DensityOperator mixed = apply_distinguishability(a, b, 0.0);
    CHECK(std::abs(pm_visibility(mixed)) < 1e-12);
    CHECK(std::abs(mixed.matrix()(1, 1).real() - 0.5) < 1e-12);
    CHECK(std::abs(mixed.matrix()(2, 2).real() - 0.5) < 1e-12);
    CHECK(std::abs(mixed.matrix()(1, 2)) < 1e-14);

    DensityOperator partial = apply_distinguishability(a, b, 0.83);
    CHECK(std::abs(pm_visibility(partial) - 0.83) < 1e-12);
    CHECK(std::abs(fidelity_to_pure(partial, psi_plus(m1, mode("2p"))) - 0.915) <
          1e-12);
    CHECK(std::abs(s_from_visibility(pm_visibility(partial)) - 2.3476) < 1e-3);
    CHECK(std::abs(partial.trace() - 1.0) < 1e-12);

    CHECK_THROWS_AS(apply_distinguishability(a, b, 1.5), std::invalid_argument);
}

TEST_CASE("distinguishability keeps trace and positivity for random branches") {
    auto g = testutil::make_rng(808);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int trial = 0; trial < 1000; ++trial) {
        PureState a = testutil::random_state({m1, m2}, g);
        PureState b = testutil::random_state({m1, m2}, g);  // generally non-orthogonal
        PureState a_scaled(a.modes(), 0.8 * a.amplitudes());
        DensityOperator rho = apply_distinguishability(a_scaled, b, unit(g));
        CHECK(std::abs(rho.trace() - 1.0) < 1e-10);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(rho.matrix());
        CHECK(eig.eigenvalues().minCoeff() > -1e-10);
    }
}

TEST_CASE("chain probabilities compose the losses multiplicatively") {
    NoisyChain chain = equal_pair_chain(1);
    const double pair_trans = (0.98 + 0.73) / 2.0;
    CHECK(std::abs(chain.input_norm_sq - pair_trans * pair_trans) < 1e-12);

    const double r = 0.98 / 0.73;
    const double a_sq = r / (1.0 + r);
    const double pbs_cond = 2.0 * a_sq * (1.0 - a_sq);
    CHECK(std::abs(chain.branches.prob - chain.input_norm_sq * pbs_cond) < 1e-12);

    // the conditioning probability is overlap-independent
    const double p0 = branch_probability(chain, Branch::PP, 0.0);
    const double p1 = branch_probability(chain, Branch::PP, 1.0);
    CHECK(std::abs(p0 - p1) < 1e-14);
    CHECK(std::abs(p0 - chain.branches.prob / 4.0) < 1e-12);
}

TEST_CASE("conditional output is the dephased entangled pair") {
    NoisyChain chain = equal_pair_chain(1);
    for (double gamma : {0.0, 0.5, 0.912, 1.0}) {
        DensityOperator rho = conditional_output(chain, Branch::PP, gamma);
        CHECK(std::abs(pm_visibility(rho) - gamma) < 1e-12);
        CHECK(std::abs(fidelity_to_pure(rho, psi_plus(m1, mode("2p"))) -
                       (1.0 + gamma) / 2.0) < 1e-12);
    }
}

TEST_CASE("outcome probabilities split the conditioning probability") {
    NoisyChain chain = equal_pair_chain(1);
    const double gamma = 0.7;
    for (Branch branch : kAllBranches) {
        const double cond = branch_probability(chain, branch, gamma);
        for (double t1 : {0.0, M_PI / 8.0, M_PI / 4.0}) {
            for (double t2 : {M_PI / 4.0, 1.0}) {
                double total = 0.0;
                for (int o1 : {+1, -1}) {
                    for (int o2 : {+1, -1}) {
                        total += outcome_probability(chain, branch, t1, o1, t2, o2, gamma);
                    }
                }
                CHECK(std::abs(total - cond) < 1e-12);
            }
        }
    }
}

TEST_CASE("outcome probabilities factor through the conditional state") {
    NoisyChain chain = equal_pair_chain(2);
    const double gamma = 0.859;
    const double cond = branch_probability(chain, Branch::PP, gamma);
    DensityOperator rho = conditional_output(chain, Branch::PP, gamma);
    const CorrelationRecord r = correlation(rho, 0.3, 1.2);
    CHECK(std::abs(outcome_probability(chain, Branch::PP, 0.3, +1, 1.2, +1, gamma) -
                   cond * r.p_pp) < 1e-12);
    CHECK(std::abs(outcome_probability(chain, Branch::PP, 0.3, +1, 1.2, -1, gamma) -
                   cond * r.p_pm) < 1e-12);
    CHECK(std::abs(outcome_probability(chain, Branch::PP, 0.3, -1, 1.2, +1, gamma) -
                   cond * r.p_mp) < 1e-12);
}

TEST_CASE("figures of merit grow with the overlap") {
    NoisyChain chain = equal_pair_chain(1);
    const ChshSettings s = optimal_settings_psi_plus();
    double last_vis = -1.0, last_S = -10.0, last_fid = -1.0;
    for (double gamma = 0.0; gamma <= 1.0 + 1e-9; gamma += 0.1) {
        DensityOperator rho = conditional_output(chain, Branch::PP, gamma);
        const double vis = pm_visibility(rho);
        const double S = chsh_S(rho, s);
        const double fid = fidelity_to_pure(rho, psi_plus(m1, mode("2p")));
        CHECK(vis >= last_vis - 1e-12);
        CHECK(S >= last_S - 1e-12);
        CHECK(fid >= last_fid - 1e-12);
        last_vis = vis;
        last_S = S;
        last_fid = fid;
    }
}

TEST_CASE("Poisson sampling basics") {
    ProbabilityTable certain{{0.0, 0.0, {1.0, 0.0, 0.0, 0.0}}};
    SamplingConfig cfg;
    cfg.rate_hz = 8.0;
    cfg.time_s = 1000.0;
    cfg.seed = 12345;
    CountTable t = sample_counts(certain, cfg, 0.0);
    const double n = t.settings[0].counts[0];
    CHECK(std::abs(n - 8000.0) < 4.0 * std::sqrt(8000.0));
    CHECK(t.settings[0].counts[1] == 0.0);

    CountTable again = sample_counts(certain, cfg, 0.0);
    CHECK(t.settings[0].counts == again.settings[0].counts);

    SamplingConfig other = cfg;
    other.seed = 54321;
    CountTable different = sample_counts(certain, other, 0.0);
    CHECK(t.settings[0].counts[0] != different.settings[0].counts[0]);

    // background floods empty outcomes at eps/4 of the rate-time product
    CountTable bg = sample_counts(certain, cfg, 0.4);
    CHECK(bg.settings[0].counts[1] > 0.0);

    ProbabilityTable bogus{{0.0, 0.0, {0.9, 0.9, 0.0, 0.0}}};
    CHECK_THROWS_AS(sample_counts(bogus, cfg, 0.0), std::invalid_argument);
}

TEST_CASE("per-setting accounting divides the integration time") {
    ProbabilityTable table{{0.0, 0.0, {0.2, 0.1, 0.05, 0.05}}};
    SamplingConfig cfg;
    cfg.rate_hz = 8.0;
    cfg.time_s = 1000.0;
    CountTable per_outcome = expected_counts(table, cfg, 0.0);
    cfg.accounting = TimeAccounting::PerSetting;
    CountTable per_setting = expected_counts(table, cfg, 0.0);
    for (int o = 0; o < 4; ++o) {
        CHECK(std::abs(per_outcome.settings[0].counts[o] -
                       4.0 * per_setting.settings[0].counts[o]) < 1e-12);
    }
}

TEST_CASE("estimator reproduces the model S on expected counts") {
    NoisyChain chain = equal_pair_chain(1);
    const double gamma = 0.912;
    const ChshSettings s = optimal_settings_psi_plus();
    const ProbabilityTable table = chsh_probability_table(chain, Branch::PP, s, gamma);
    SamplingConfig cfg;
    const SEstimate est = estimate_S(expected_counts(table, cfg, 0.0));
    const double model_S = chsh_S(conditional_output(chain, Branch::PP, gamma), s);
    CHECK(std::abs(est.S - model_S) < 1e-9);
    CHECK(est.sigma > 0.0);

    CountTable zeros = expected_counts(table, cfg, 0.0);
    zeros.settings[0].counts = {0.0, 0.0, 0.0, 0.0};
    CHECK_THROWS_AS(estimate_S(zeros), std::invalid_argument);

    // flat counts carry no correlation
    CountTable flat = expected_counts(table, cfg, 0.0);
    for (auto& sc : flat.settings) sc.counts = {25.0, 25.0, 25.0, 25.0};
    const SEstimate flat_est = estimate_S(flat);
    CHECK(std::abs(flat_est.S) < 1e-12);
    CHECK(flat_est.sigma > 0.0);
}

TEST_CASE("replication spread matches the first-order error estimate") {
    NoisyChain chain = equal_pair_chain(1);
    const ProbabilityTable table = chsh_probability_table(
        chain, Branch::PP, optimal_settings_psi_plus(), 0.912);
    SamplingConfig cfg;
    cfg.seed = 99;
    const std::vector<SEstimate> reps = replicate_chsh(table, cfg, 0.004, 1000);
    std::vector<double> s_values, sigmas;
    for (const auto& r : reps) {
        s_values.push_back(r.S);
        sigmas.push_back(r.sigma);
    }
    const double empirical = stddev(s_values);
    const double mean_sigma =
        std::accumulate(sigmas.begin(), sigmas.end(), 0.0) / sigmas.size();
    CHECK(std::abs(empirical - mean_sigma) / empirical < 0.2);
}

TEST_CASE("parallel and serial Monte Carlo paths are bit-identical") {
    NoisyChain chain = equal_pair_chain(1);
    const ProbabilityTable table = chsh_probability_table(
        chain, Branch::PP, optimal_settings_psi_plus(), 0.9);
    SamplingConfig cfg;
    cfg.seed = 7;
    const auto serial = replicate_chsh(table, cfg, 0.004, 200, Exec::Serial);
    const auto parallel = replicate_chsh(table, cfg, 0.004, 200, Exec::Parallel);
    REQUIRE(serial.size() == parallel.size());
    for (size_t i = 0; i < serial.size(); ++i) {
        CHECK(serial[i].S == parallel[i].S);
        CHECK(serial[i].sigma == parallel[i].sigma);
    }

    std::vector<double> delays;
    for (int i = -20; i <= 20; ++i) delays.push_back(10.0 * i);
    NoiseParams noise;
    noise.overlap_gamma = 0.83;
    const auto scan_serial =
        delay_scan(chain, Branch::PP, noise, delays, cfg, false, Exec::Serial);
    const auto scan_parallel =
        delay_scan(chain, Branch::PP, noise, delays, cfg, false, Exec::Parallel);
    REQUIRE(scan_serial.size() == scan_parallel.size());
    for (size_t i = 0; i < scan_serial.size(); ++i) {
        CHECK(scan_serial[i].counts_pp == scan_parallel[i].counts_pp);
        CHECK(scan_serial[i].counts_mp == scan_parallel[i].counts_mp);
        CHECK(scan_serial[i].p_pp == scan_parallel[i].p_pp);
    }
}

TEST_CASE("delay scan shows the interference dip with the right depth") {
    NoisyChain chain = equal_pair_chain(1);
    NoiseParams noise;
    noise.overlap_gamma = 0.83;
    noise.background_eps = 0.0;
    std::vector<double> delays;
    for (int i = -15; i <= 15; ++i) delays.push_back(20.0 * i);
    SamplingConfig cfg;
    const auto points =
        delay_scan(chain, Branch::PP, noise, delays, cfg, true, Exec::Serial);

    for (const auto& pt : points) {
        // contrast equals the local overlap at every delay
        const double contrast = (pt.p_pp - pt.p_mp) / (pt.p_pp + pt.p_mp);
        CHECK(std::abs(contrast - pt.gamma) < 1e-12);
        CHECK(std::abs(pt.gamma - overlap_from_delay(pt.delay_um, 76.0, 0.83)) <
              1e-15);
    }
    // symmetric in the delay
    const size_t n = points.size();
    for (size_t i = 0; i < n / 2; ++i) {
        CHECK(std::abs(points[i].p_mp - points[n - 1 - i].p_mp) < 1e-15);
        CHECK(std::abs(points[i].p_pp - points[n - 1 - i].p_pp) < 1e-15);
    }
    // at zero delay the dip ratio is (1 - gamma0) / (1 + gamma0)
    const auto& center = points[n / 2];
    CHECK(std::abs(center.delay_um) < 1e-12);
    CHECK(std::abs(center.p_mp / center.p_pp - (1.0 - 0.83) / (1.0 + 0.83)) < 1e-12);
    // far plateau: both channels at one quarter of the conditioning rate
    const auto& far = points.front();
    CHECK(std::abs(far.p_mp - far.p_pp) < 1e-12);

    const ScanVisibility sv = scan_visibility(points, noise.coherence_length_um);
    CHECK(std::abs(sv.visibility - 0.83) < 1e-9);
}

TEST_CASE("sampled delay scan reproduces the dip visibility within tolerance") {
    NoisyChain chain = equal_pair_chain(1);
    NoiseParams noise;
    noise.overlap_gamma = 0.83;
    std::vector<double> delays;
    for (int i = -20; i <= 20; ++i) delays.push_back(10.0 * i);
    SamplingConfig cfg;
    cfg.time_s = 10000.0;
    cfg.seed = 4242;
    const auto points = delay_scan(chain, Branch::PP, noise, delays, cfg, false);
    // the known accidental floor is subtracted, as in a lab analysis
    const double accidental =
        cfg.rate_hz * cfg.time_s * noise.background_eps / 4.0;
    const ScanVisibility sv =
        scan_visibility(points, noise.coherence_length_um, accidental);
    CHECK(std::abs(sv.visibility - 0.83) < 0.03);
}
