#include <doctest.h>

#include <cmath>

#include "entconc/metrics.hpp"
#include "entconc/protocols.hpp"
#include "test_util.hpp"

using namespace entconc;

namespace {

const ModeId m1 = mode("1");
const ModeId m2 = mode("2");
const ModeId m3 = mode("3");
const ModeId m4 = mode("4");

Pair make_pair(cdouble a, cdouble b, const ModeId& first, const ModeId& second) {
    return prepare_pair(PairSpec{a, b, first, second});
}

double fid_to(const PureState& s, const PureState& target) {
    return std::norm(inner_product(target, s));
}

constexpr double kInvSqrt2 = 0.7071067811865476;

// |alpha|^2 after n windows starting from equal amplitudes.
double degraded_alpha_sq(int n) {
    const double r = std::pow(0.98 / 0.73, n);
    return r / (1.0 + r);
}

}  // namespace

TEST_CASE("prepare_pair produces alpha|HV> + beta|VH>") {
    Pair bell = make_pair(kInvSqrt2, kInvSqrt2, m1, m2);
    CHECK(std::abs(bell.state.amplitudes()[1] - kInvSqrt2) < 1e-14);
    CHECK(std::abs(bell.state.amplitudes()[2] - kInvSqrt2) < 1e-14);

    Pair product = make_pair(1.0, 0.0, m1, m2);
    CHECK(std::abs(product.state.amplitudes()[1] - 1.0) < 1e-14);

    Pair phased = make_pair(kInvSqrt2, cdouble(0.0, kInvSqrt2), m1, m2);
    CHECK(std::abs(phased.state.amplitudes()[2] - cdouble(0.0, kInvSqrt2)) < 1e-14);

    CHECK_THROWS_AS(make_pair(0.9, 0.9, m1, m2), std::invalid_argument);
}

TEST_CASE("window degradation shifts the amplitude ratio as (t_h/t_v)^n") {
    for (int n : {1, 2}) {
        Pair bell = make_pair(kInvSqrt2, kInvSqrt2, m1, m2);
        FilteredState out =
            degrade_pair(bell.state, m1, brewster_window(0.98, 0.73, n));
        const double ratio = std::norm(out.state.amplitudes()[1]) /
                             std::norm(out.state.amplitudes()[2]);
        CHECK(std::abs(ratio - std::pow(0.98 / 0.73, n)) < 1e-12);
        CHECK(std::abs(out.prob - (std::pow(0.98, n) + std::pow(0.73, n)) / 2.0) <
              1e-12);
    }
    // reference intensity ratios for one and two windows
    CHECK(std::pow(0.98 / 0.73, 1) == doctest::Approx(1.3425).epsilon(1e-4));
    CHECK(std::pow(0.98 / 0.73, 2) == doctest::Approx(1.8022).epsilon(1e-4));

    Pair bell = make_pair(kInvSqrt2, kInvSqrt2, m1, m2);
    FilteredState flat = degrade_pair(bell.state, m1, brewster_window(0.9, 0.9, 3));
    CHECK(std::abs(flat.prob - std::pow(0.9, 3)) < 1e-12);
    CHECK(fid_to(flat.state, bell.state) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("concentration returns the maximally entangled pair for any branch") {
    auto g = testutil::make_rng(101);
    for (int trial = 0; trial < 50; ++trial) {
        auto [a, b] = testutil::random_pair_coeffs(g);
        Pair p12 = make_pair(a, b, m1, m2);
        Pair p34 = make_pair(a, b, m3, m4);
        double total_success = 0.0;
        for (Branch branch : kAllBranches) {
            ProtocolResult r = concentrate(p12, p34, branch);
            const double expect_pbs = 2.0 * std::norm(a * b);
            CHECK(std::abs(r.pbs_prob - expect_pbs) < 1e-12);
            CHECK(std::abs(r.branch_prob - 0.25) < 1e-12);
            CHECK(std::abs(r.success_prob - expect_pbs * 0.25) < 1e-12);
            const PureState target = r.phase_flip_needed
                                         ? psi_minus(m1, mode("2p"))
                                         : psi_plus(m1, mode("2p"));
            CHECK(fid_to(r.output, target) == doctest::Approx(1.0).epsilon(1e-9));
            total_success += r.success_prob;
        }
        // every +/- branch plus the discarded PBS branch accounts for all events
        CHECK(std::abs(total_success + (1.0 - 2.0 * std::norm(a * b)) - 1.0) < 1e-10);
    }
}

TEST_CASE("concentration removes a pure phase error") {
    Pair p12 = make_pair(kInvSqrt2, cdouble(0.0, kInvSqrt2), m1, m2);
    Pair p34 = make_pair(kInvSqrt2, cdouble(0.0, kInvSqrt2), m3, m4);
    ProtocolResult r = concentrate(p12, p34, Branch::PP);
    CHECK(fid_to(r.output, psi_plus(m1, mode("2p"))) ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(r.success_prob - 2.0 * 0.25 * 0.25) < 1e-12);
}

TEST_CASE("equal-coefficient pairs give total success 1/8 and the conditioned state") {
    Pair p12 = make_pair(kInvSqrt2, kInvSqrt2, m1, m2);
    Pair p34 = make_pair(kInvSqrt2, kInvSqrt2, m3, m4);
    ProtocolResult r = concentrate(p12, p34, Branch::PP);
    CHECK(std::abs(r.success_prob - 0.125) < 1e-12);
    REQUIRE(r.intermediate.has_value());
    // conditioned state: (|H V V V> + |V H H H>)/sqrt(2) on (1, 2p, 3, 4p)
    CHECK(std::abs(r.intermediate->amplitudes()[0b0111] - kInvSqrt2) < 1e-12);
    CHECK(std::abs(r.intermediate->amplitudes()[0b1000] - kInvSqrt2) < 1e-12);
}

TEST_CASE("minus branches flag the corrective phase flip") {
    Pair p12 = make_pair(0.6, 0.8, m1, m2);
    Pair p34 = make_pair(0.6, 0.8, m3, m4);
    ProtocolResult mp = concentrate(p12, p34, Branch::MP);
    CHECK(mp.phase_flip_needed);
    CHECK(fid_to(mp.output, psi_minus(m1, mode("2p"))) ==
          doctest::Approx(1.0).epsilon(1e-12));
    ProtocolResult mm = concentrate(p12, p34, Branch::MM);
    CHECK_FALSE(mm.phase_flip_needed);
    CHECK(fid_to(mm.output, psi_plus(m1, mode("2p"))) ==
          doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("one-step repeater leaves the outer photons maximally entangled") {
    auto g = testutil::make_rng(303);
    for (int trial = 0; trial < 50; ++trial) {
        auto [a, b] = testutil::random_pair_coeffs(g);
        Pair p12 = make_pair(a, b, m1, m2);
        Pair p34 = make_pair(a, b, m3, m4);
        ProtocolResult r = repeater_swap(p12, p34, Branch::PP);
        REQUIRE(r.output.modes() == std::vector<ModeId>{m1, m3});
        CHECK(fid_to(r.output, psi_plus(m1, m3)) == doctest::Approx(1.0).epsilon(1e-9));

        // identical element chain, so every reported number matches concentration
        ProtocolResult c = concentrate(p12, p34, Branch::PP);
        CHECK(std::abs(r.pbs_prob - c.pbs_prob) < 1e-9);
        CHECK(std::abs(r.branch_prob - c.branch_prob) < 1e-9);
        CHECK(std::abs(r.success_prob - c.success_prob) < 1e-9);
        CHECK(std::abs(fid_to(r.output, psi_plus(m1, m3)) -
                       fid_to(c.output, psi_plus(m1, mode("2p")))) < 1e-9);
    }
}

TEST_CASE("repeater on unequal pairs yields the predicted non-maximal state") {
    auto g = testutil::make_rng(404);
    auto [a1, b1] = testutil::random_pair_coeffs(g);
    auto [a2, b2] = testutil::random_pair_coeffs(g);
    Pair p12 = make_pair(a1, b1, m1, m2);
    Pair p34 = make_pair(a2, b2, m3, m4);
    ProtocolResult r = repeater_swap(p12, p34, Branch::PP);
    // expansion oracle: residual proportional to a1 b2 |H V> + b1 a2 |V H>
    const double norm = std::sqrt(std::norm(a1 * b2) + std::norm(b1 * a2));
    const cdouble expect_hv = a1 * b2 / norm;
    const cdouble expect_vh = b1 * a2 / norm;
    const cdouble got_hv = r.output.amplitudes()[1];
    const cdouble got_vh = r.output.amplitudes()[2];
    // compare up to a global phase
    const cdouble phase = got_hv / expect_hv;
    CHECK(std::abs(std::abs(phase) - 1.0) < 1e-12);
    CHECK(std::abs(got_vh - expect_vh * phase) < 1e-12);

    Pair e12 = make_pair(kInvSqrt2, kInvSqrt2, m1, m2);
    Pair e34 = make_pair(kInvSqrt2, kInvSqrt2, m3, m4);
    CHECK(std::abs(repeater_swap(e12, e34, Branch::PP).success_prob - 0.125) < 1e-12);
}

TEST_CASE("plain Bell swap degrades non-maximal pairs") {
    const double a_sq = degraded_alpha_sq(2);
    const double a = std::sqrt(a_sq);
    const double b = std::sqrt(1.0 - a_sq);
    Pair p12 = make_pair(a, b, m1, m2);
    Pair p34 = make_pair(a, b, m3, m4);
    ProtocolResult r = bell_swap(p12, p34);

    // closed-form oracle for identical real pairs
    const double quartic = a_sq * a_sq + (1.0 - a_sq) * (1.0 - a_sq);
    const double expect_success = quartic / 2.0;
    const double expect_fid_out = 1.0 / (2.0 * quartic);
    const double expect_fid_in = (a + b) * (a + b) / 2.0;

    REQUIRE(r.output.modes() == std::vector<ModeId>{m1, m4});
    CHECK(std::abs(r.success_prob - expect_success) < 1e-12);
    const double fid_out = fid_to(r.output, psi_plus(m1, m4));
    const double fid_in = fid_to(p12.state, psi_plus(m1, m2));
    CHECK(std::abs(fid_out - expect_fid_out) < 1e-3);
    CHECK(std::abs(fid_in - expect_fid_in) < 1e-3);
    CHECK(fid_out == doctest::Approx(0.92425).epsilon(2e-4));
    CHECK(fid_in == doctest::Approx(0.97907).epsilon(2e-4));
    CHECK(fid_out < fid_in);  // swapping alone makes things worse
}

TEST_CASE("Bell swap edge cases") {
    Pair bell12 = make_pair(kInvSqrt2, kInvSqrt2, m1, m2);
    Pair bell34 = make_pair(kInvSqrt2, kInvSqrt2, m3, m4);
    ProtocolResult r = bell_swap(bell12, bell34);
    CHECK(fid_to(r.output, psi_plus(m1, m4)) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(r.success_prob - 0.25) < 1e-12);

    Pair prod12 = make_pair(1.0, 0.0, m1, m2);
    Pair prod34 = make_pair(1.0, 0.0, m3, m4);
    ProtocolResult rp = bell_swap(prod12, prod34);
    CHECK(std::abs(rp.success_prob - 0.5) < 1e-12);
    CHECK(std::abs(rp.output.amplitudes()[1] - 1.0) < 1e-12);  // |H1 V4>
    CHECK(fid_to(rp.output, psi_plus(m1, m4)) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("Bell swap is strictly worse than the input for every unbalanced pair") {
    auto g = testutil::make_rng(505);
    std::uniform_real_distribution<double> unit(0.05, 0.45);
    for (int trial = 0; trial < 100; ++trial) {
        const double b_sq = unit(g);  // strictly below 1/2
        const double a = std::sqrt(1.0 - b_sq);
        const double b = std::sqrt(b_sq);
        Pair p12 = make_pair(a, b, m1, m2);
        Pair p34 = make_pair(a, b, m3, m4);
        const double fid_out = fid_to(bell_swap(p12, p34).output, psi_plus(m1, m4));
        const double fid_in = fid_to(p12.state, psi_plus(m1, m2));
        CHECK(fid_out < fid_in);
        CHECK(fid_in < 1.0);
    }
}

TEST_CASE("local filtering equalizes the pair and reports its success rate") {
    const double a_sq = degraded_alpha_sq(1);
    const double a = std::sqrt(a_sq);
    const double b = std::sqrt(1.0 - a_sq);
    PairSpec spec{a, b, m1, m2};
    LocalFilter lf = local_filter(spec);
    CHECK(std::abs(lf.filter.t_h - (1.0 - a_sq) / a_sq) < 1e-12);
    CHECK(std::abs(lf.filter.t_v - 1.0) < 1e-12);
    CHECK(std::abs(lf.success_prob - 2.0 * (1.0 - a_sq)) < 1e-12);
    CHECK(lf.success_prob == doctest::Approx(0.8538).epsilon(1e-3));

    FilteredState filtered =
        degrade_pair(prepare_pair(spec).state, m1, lf.filter);
    CHECK(fid_to(filtered.state, psi_plus(m1, m2)) ==
          doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(filtered.prob - lf.success_prob) < 1e-12);

    LocalFilter noop = local_filter(PairSpec{kInvSqrt2, kInvSqrt2, m1, m2});
    CHECK(std::abs(noop.success_prob - 1.0) < 1e-12);
    CHECK(std::abs(noop.filter.t_h - 1.0) < 1e-12);
    CHECK(std::abs(noop.filter.t_v - 1.0) < 1e-12);

    CHECK_THROWS_AS(local_filter(PairSpec{1.0, 0.0, m1, m2}), std::invalid_argument);
}

TEST_CASE("filtering unequal pairs then swapping restores the entangled link") {
    // pair (1,2) degraded by one window, pair (3,4) by two
    Pair raw12 = make_pair(kInvSqrt2, kInvSqrt2, m1, m2);
    Pair raw34 = make_pair(kInvSqrt2, kInvSqrt2, m3, m4);
    FilteredState d12 = degrade_pair(raw12.state, m1, brewster_window(0.98, 0.73, 1));
    FilteredState d34 = degrade_pair(raw34.state, m3, brewster_window(0.98, 0.73, 2));

    auto spec_of = [](const PureState& s, const ModeId& f, const ModeId& sec) {
        return PairSpec{s.amplitudes()[1], s.amplitudes()[2], f, sec};
    };
    LocalFilter f12 = local_filter(spec_of(d12.state, m1, m2));
    LocalFilter f34 = local_filter(spec_of(d34.state, m3, m4));
    FilteredState eq12 = degrade_pair(d12.state, m1, f12.filter);
    FilteredState eq34 = degrade_pair(d34.state, m3, f34.filter);

    ProtocolResult r = repeater_swap(Pair{eq12.state, m1, m2},
                                     Pair{eq34.state, m3, m4}, Branch::PP);
    CHECK(fid_to(r.output, psi_plus(m1, m3)) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(std::abs(r.success_prob - 0.125) < 1e-12);
    CHECK(std::abs(eq12.prob - f12.success_prob) < 1e-12);
    CHECK(std::abs(eq34.prob - f34.success_prob) < 1e-12);
}

TEST_CASE("coincidence probability follows 2|alpha beta|^2") {
    auto g = testutil::make_rng(606);
    for (int trial = 0; trial < 100; ++trial) {
        auto [a, b] = testutil::random_pair_coeffs(g);
        Pair p12 = make_pair(a, b, m1, m2);
        Pair p34 = make_pair(a, b, m3, m4);
        ProtocolResult r = concentrate(p12, p34, Branch::PP);
        CHECK(std::abs(r.pbs_prob - 2.0 * std::norm(a * b)) < 1e-12);
    }
}

TEST_CASE("density route reproduces the pure route") {
    auto g = testutil::make_rng(707);
    for (int trial = 0; trial < 10; ++trial) {
        auto [a1, b1] = testutil::random_pair_coeffs(g);
        Pair p12 = make_pair(a1, b1, m1, m2);
        Pair p34 = make_pair(a1, b1, m3, m4);
        const Branch branch = kAllBranches[static_cast<size_t>(trial) % 4];

        ProtocolResult pure = concentrate(p12, p34, branch);
        DensityProtocolResult dens = concentrate_density(p12, p34, branch);
        CHECK(std::abs(pure.pbs_prob - dens.pbs_prob) < 1e-9);
        CHECK(std::abs(pure.branch_prob - dens.branch_prob) < 1e-9);
        CHECK(std::abs(fidelity_to_pure(dens.output, pure.output) - 1.0) < 1e-9);

        ProtocolResult swp = bell_swap(p12, p34);
        DensityProtocolResult swd = bell_swap_density(p12, p34);
        CHECK(std::abs(swp.success_prob - swd.success_prob) < 1e-9);
        CHECK(std::abs(fidelity_to_pure(swd.output, swp.output) - 1.0) < 1e-9);
    }
}
