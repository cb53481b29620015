// SPDX-License-Identifier: Apache-2.0
#include "doctest.h"

#include "emadir/rng.hpp"

#include <cmath>
#include <set>

using namespace emadir;

TEST_CASE("identical seeds replay the identical sequence") {
    Rng a(42), b(42);
    for (int i = 0; i < 1000; ++i) {
        CHECK(a.uniform() == b.uniform());
        CHECK(a.gaussian() == b.gaussian());
    }
}

TEST_CASE("uniform stays in [0,1) with the right moments") {
    Rng rng(7);
    double sum = 0.0, sq = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
        sq += u * u;
    }
    const double mean = sum / n;
    const double var = sq / n - mean * mean;
    CHECK(mean == doctest::Approx(0.5).epsilon(0.01));
    CHECK(var == doctest::Approx(1.0 / 12.0).epsilon(0.03));
}

TEST_CASE("gaussian has zero mean and unit variance") {
    Rng rng(13);
    double sum = 0.0, sq = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double g = rng.gaussian();
        sum += g;
        sq += g * g;
    }
    const double mean = sum / n;
    CHECK(std::abs(mean) < 0.02);
    CHECK(sq / n - mean * mean == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("cgaussian is circular with unit power") {
    Rng rng(99);
    std::complex<double> first(0.0, 0.0);  // E[z] -> 0
    std::complex<double> pseudo(0.0, 0.0); // E[z^2] -> 0 (circularity)
    double power = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const auto z = rng.cgaussian();
        first += z;
        pseudo += z * z;
        power += std::norm(z);
    }
    CHECK(std::abs(first) / n < 0.02);
    CHECK(std::abs(pseudo) / n < 0.02);
    CHECK(power / n == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("derive spreads streams apart and is pure") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t s = 0; s < 100; ++s)
        seen.insert(Rng::derive(1, s));
    CHECK(seen.size() == 100);
    CHECK(Rng::derive(5, 3) == Rng::derive(5, 3));
    CHECK(Rng::derive(5, 3) != Rng::derive(6, 3));
}
