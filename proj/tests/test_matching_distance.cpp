#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "w2chaos/matching_distance.hpp"
#include "w2chaos/rng.hpp"

using namespace w2chaos;

namespace {

std::uint64_t g_ctr = 0;

double urand(double lo, double hi, std::uint64_t stream = 31) {
    return lo + (hi - lo) * rng::uniform01(rng::stream_seed(777, stream), g_ctr++);
}

UnitSphereVector random_unit(int len) {
    std::vector<double> v;
    double s = 0.0;
    for (int i = 0; i < len; ++i) {
        v.push_back(urand(-1.0, 1.0));
        s += v.back() * v.back();
    }
    for (double& x : v) x /= std::sqrt(s);
    return UnitSphereVector(v);
}

double brute_force_min(std::vector<double> x, std::vector<double> y) {
    const std::size_t L = std::max(x.size(), y.size());
    x.resize(L, 0.0);
    y.resize(L, 0.0);
    std::vector<int> perm(L);
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double s = 0.0;
        for (std::size_t i = 0; i < L; ++i) {
            const double g = x[i] - y[static_cast<std::size_t>(perm[i])];
            s += g * g;
        }
        best = std::min(best, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return std::sqrt(best);
}

} // namespace

TEST_CASE("d_sigma basics") {
    const UnitSphereVector e1({1.0, 0.0, 0.0});
    const UnitSphereVector e2({0.0, 1.0});
    CHECK(d_sigma(e1, e1).distance == doctest::Approx(0.0));
    CHECK(d_sigma(e1, e2).distance == doctest::Approx(0.0));
    CHECK_THROWS_AS(UnitSphereVector({0.5, 0.5}), std::invalid_argument);
}

TEST_CASE("d_sigma pairing is consistent with its distance") {
    const UnitSphereVector x = random_unit(5);
    const UnitSphereVector y = random_unit(3);
    const MatchingResult r = d_sigma(x, y);
    std::vector<double> xv = x.entries, yv = y.entries;
    xv.resize(5, 0.0);
    yv.resize(5, 0.0);
    double s = 0.0;
    for (auto [i, j] : r.pairing) {
        const double g = xv[static_cast<std::size_t>(i)] - yv[static_cast<std::size_t>(j)];
        s += g * g;
    }
    CHECK(std::abs(r.distance * r.distance - s) <= 1e-12);
}

TEST_CASE("sorted matching equals the factorial brute force") {
    for (int rep = 0; rep < 120; ++rep) {
        const int lx = 1 + rep % 7;
        const int ly = 1 + (rep / 3) % 7;
        const UnitSphereVector x = random_unit(lx);
        const UnitSphereVector y = random_unit(ly);
        const double fast = d_sigma(x, y).distance;
        const double slow = brute_force_min(x.entries, y.entries);
        CHECK(std::abs(fast - slow) <= 1e-12);
    }
}

TEST_CASE("d_sigma is a symmetric pseudometric on padded multisets") {
    for (int rep = 0; rep < 40; ++rep) {
        const UnitSphereVector a = random_unit(2 + rep % 5);
        const UnitSphereVector b = random_unit(2 + (rep + 2) % 5);
        const UnitSphereVector c = random_unit(2 + (rep + 4) % 5);
        const double ab = d_sigma(a, b).distance;
        const double ba = d_sigma(b, a).distance;
        CHECK(std::abs(ab - ba) <= 1e-12);
        CHECK(ab >= 0.0);
        const double ac = d_sigma(a, c).distance;
        const double cb = d_sigma(c, b).distance;
        CHECK(ab <= ac + cb + 1e-10);
    }
}

TEST_CASE("d_sigma is invariant under a common permutation") {
    const UnitSphereVector x = random_unit(6);
    const UnitSphereVector y = random_unit(6);
    std::vector<double> xp = x.entries, yp = y.entries;
    std::rotate(xp.begin(), xp.begin() + 2, xp.end());
    std::rotate(yp.begin(), yp.begin() + 2, yp.end());
    CHECK(d_sigma(UnitSphereVector(xp), UnitSphereVector(yp)).distance ==
          doctest::Approx(d_sigma(x, y).distance).epsilon(1e-12));
}

TEST_CASE("d_sigma vanishes exactly on equal padded multisets") {
    const UnitSphereVector a({0.6, 0.8, 0.0});
    const UnitSphereVector b({0.8, 0.0, 0.6, 0.0});
    CHECK(d_sigma(a, b).distance == doctest::Approx(0.0));
    const UnitSphereVector c({0.8, 0.6});
    const UnitSphereVector d({0.6, -0.8});
    CHECK(d_sigma(c, d).distance > 0.0);
}

TEST_CASE("delta_x constant") {
    CHECK(delta_x_constant({1.0}) == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(delta_x_constant({1.0 / std::sqrt(2.0)}) == doctest::Approx(0.25).epsilon(1e-8));
    for (int rep = 0; rep < 10; ++rep) {
        std::vector<double> roots;
        for (int i = 0; i < 1 + rep % 3; ++i) roots.push_back(urand(0.1, 1.0) * (i % 2 ? -1 : 1));
        bool distinct = true;
        for (std::size_t i = 0; i < roots.size() && distinct; ++i)
            for (std::size_t j = i + 1; j < roots.size(); ++j)
                if (std::abs(roots[i] - roots[j]) < 1e-3) distinct = false;
        if (!distinct) continue;
        CHECK(delta_x_constant(roots) > 0.0);
    }
}

TEST_CASE("eta and the adherence set") {
    SUBCASE("single unit root") {
        const EtaAdherence ea = eta_and_adherence({1.0});
        CHECK(ea.eta == doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-12));
        REQUIRE(ea.adherence_set.size() == 1);
        CHECK(ea.adherence_set[0] == std::vector<int>{1});
    }
    SUBCASE("symmetric pair has a three-element adherence set") {
        const double c = 1.0 / std::sqrt(2.0);
        const EtaAdherence ea = eta_and_adherence({c, -c});
        REQUIRE(ea.adherence_set.size() == 3);
        CHECK(ea.adherence_set[0] == std::vector<int>{0, 2});
        CHECK(ea.adherence_set[1] == std::vector<int>{1, 1});
        CHECK(ea.adherence_set[2] == std::vector<int>{2, 0});
        CHECK(ea.kappa_const == doctest::Approx(std::sqrt(1.5) - 1.0).epsilon(1e-12));
        CHECK(ea.eta == doctest::Approx(0.0).epsilon(1e-12)); // (2,0) also sums to 1
    }
    SUBCASE("rationally independent squares give a singleton") {
        const double s1 = 1.0 / std::sqrt(2.0);
        const std::vector<double> roots = {std::sqrt(s1), -std::sqrt(1.0 - s1)};
        const EtaAdherence ea = eta_and_adherence(roots);
        REQUIRE(ea.adherence_set.size() == 1);
        CHECK(ea.adherence_set[0] == std::vector<int>{1, 1});
        CHECK(ea.eta == doctest::Approx(ea.kappa_const).epsilon(1e-12));
        CHECK(ea.eta > 0.0);
    }
    SUBCASE("input validation") {
        CHECK_THROWS_AS(eta_and_adherence({0.5}), std::invalid_argument); // not unit
    }
}

TEST_CASE("alpha_x constant") {
    CHECK(alpha_x_constant({1.0}) == doctest::Approx(1.0).epsilon(1e-12));
    const double a2 = alpha_x_constant({0.5, -0.5});
    CHECK(a2 > 0.0);
    CHECK_THROWS_AS(alpha_x_constant({0.5, 0.5}), std::invalid_argument);
    for (int rep = 0; rep < 5; ++rep) {
        const std::vector<double> u = {urand(0.3, 1.0), -urand(0.3, 1.0)};
        CHECK(alpha_x_constant(u) > 0.0);
    }
}

TEST_CASE("power-sum gaps") {
    CHECK(delta_p_gap({1.0}, {0.6, 0.8}, 3) == doctest::Approx(0.272).epsilon(1e-12));
    CHECK(delta_p_gap({0.3, -0.2}, {0.3, -0.2}, 4) == doctest::Approx(0.0));
    CHECK(delta_p_gap({0.3, -0.2}, {-0.2, 0.3}, 5) == doctest::Approx(0.0));
    CHECK_THROWS_AS(delta_p_gap({1.0}, {1.0}, 1), std::invalid_argument);
}

TEST_CASE("independence probe") {
    SUBCASE("equal squares") {
        const ProbeResult p = rational_independence_probe({0.5, 0.5}, 5);
        REQUIRE_FALSE(p.independent);
        double dot = 0.0;
        for (std::size_t i = 0; i < 2; ++i) dot += p.relation[i] * 0.5;
        CHECK(std::abs(dot) <= 1e-12);
    }
    SUBCASE("rational ratio") {
        const ProbeResult p = rational_independence_probe({0.3, 0.7}, 10);
        REQUIRE_FALSE(p.independent);
        double dot = 0.0;
        const double sq[2] = {0.3, 0.7};
        for (std::size_t i = 0; i < 2; ++i) dot += p.relation[i] * sq[i];
        CHECK(std::abs(dot) <= 1e-9);
    }
    SUBCASE("irrational split survives the probe") {
        const double s = 1.0 / std::sqrt(2.0);
        const ProbeResult p = rational_independence_probe({s, 1.0 - s}, 50);
        CHECK(p.independent);
        CHECK(p.relation.empty());
    }
}

TEST_CASE("bound constants for the unit singleton target") {
    const TargetSpec t({1.0}, BaseNoise::chi2_centered());
    const BoundConstants bc = compute_bound_constants(t);
    CHECK(bc.independent);
    CHECK(bc.delta_x == doctest::Approx(0.5).epsilon(1e-8));
    CHECK(bc.eta == doctest::Approx(std::sqrt(2.0) - 1.0).epsilon(1e-10));
    CHECK(bc.C_x == doctest::Approx((3.0 + 2.0 * std::sqrt(2.0)) * 2.0).epsilon(1e-7));
}

TEST_CASE("certified bound dominates the matching distance") {
    const TargetSpec t({1.0}, BaseNoise::chi2_centered());
    SUBCASE("zero at the target itself") {
        const ChaosCoefficients c({1.0}, BaseNoise::chi2_centered(), Convention::unit);
        CHECK(certified_upper_bound(t, c).value == doctest::Approx(0.0));
    }
    SUBCASE("random unit vectors never violate the bound") {
        const UnitSphereVector x({1.0});
        for (int rep = 0; rep < 300; ++rep) {
            const UnitSphereVector y = random_unit(1 + rep % 6);
            ChaosCoefficients c(y.entries, BaseNoise::chi2_centered(), Convention::unit);
            const CertifiedBound b = certified_upper_bound(t, c);
            CHECK(b.independent_branch);
            CHECK(d_sigma(x, y).distance <= b.value + 1e-12);
        }
    }
}

TEST_CASE("dependent-branch certified bound") {
    const double c = 1.0 / std::sqrt(2.0);
    const TargetSpec t({c, -c}, BaseNoise::chi2_centered());
    const ChaosCoefficients same({c, -c}, BaseNoise::chi2_centered(), Convention::unit);
    const CertifiedBound b0 = certified_upper_bound(t, same);
    CHECK_FALSE(b0.independent_branch);
    CHECK(b0.value == doctest::Approx(0.0));
    CHECK(b0.constants.alpha_x > 0.0);
    CHECK(b0.constants.C_tilde_x ==
          doctest::Approx(2.0 * 3.0 * b0.constants.C_x *
                          (1.0 + 2.0 / b0.constants.alpha_x)).epsilon(1e-12));

    const UnitSphereVector x({c, -c});
    for (int rep = 0; rep < 100; ++rep) {
        const UnitSphereVector y = random_unit(2 + rep % 4);
        const ChaosCoefficients cc(y.entries, BaseNoise::chi2_centered(), Convention::unit);
        const CertifiedBound b = certified_upper_bound(t, cc);
        CHECK(d_sigma(x, y).distance <= b.value + 1e-12);
    }
}

TEST_CASE("certified bound validates conventions") {
    const TargetSpec t({1.0}, BaseNoise::chi2_centered());
    const ChaosCoefficients off({0.5, 0.5}, BaseNoise::chi2_centered());
    CHECK_THROWS_AS(certified_upper_bound(t, off), std::invalid_argument);
    const ChaosCoefficients other_noise({1.0}, BaseNoise::chi2_unit_variance());
    CHECK_THROWS_AS(certified_upper_bound(t, other_noise), std::invalid_argument);
}
