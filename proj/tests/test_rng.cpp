#include <cmath>
#include <set>

#include "cavity/rng.hpp"
#include "doctest.h"

using namespace cavity;

TEST_CASE("streams are deterministic and key-separated") {
    Rng a(derive_seed(7, tag("x"), 0));
    Rng b(derive_seed(7, tag("x"), 0));
    Rng c(derive_seed(7, tag("x"), 1));
    bool same = true, differ = false;
    for (int i = 0; i < 64; ++i) {
        uint64_t va = a.next_u64();
        same = same && (va == b.next_u64());
        differ = differ || (va != c.next_u64());
    }
    CHECK(same);
    CHECK(differ);
}

TEST_CASE("unit draws lie in [0,1)") {
    Rng r(123);
    for (int i = 0; i < 10000; ++i) {
        double u = r.next_unit();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("next_below covers the range uniformly") {
    Rng r(5);
    std::vector<int> counts(7, 0);
    const int n = 70000;
    for (int i = 0; i < n; ++i) counts[r.next_below(7)]++;
    for (int c : counts) CHECK(std::abs(c - n / 7) < 5 * std::sqrt(n / 7.0));
}

TEST_CASE("poisson inversion has the right moments") {
    Rng r(99);
    for (double lambda : {0.5, 4.0, 42.0}) {
        double sum = 0.0, sum2 = 0.0;
        const int n = 200000;
        for (int i = 0; i < n; ++i) {
            int k = r.poisson(lambda);
            sum += k;
            sum2 += static_cast<double>(k) * k;
        }
        double mean = sum / n;
        double var = sum2 / n - mean * mean;
        double se = std::sqrt(lambda / n);
        CHECK(std::abs(mean - lambda) < 5 * se);
        CHECK(std::abs(var - lambda) < 0.05 * lambda);
    }
    CHECK(Rng(1).poisson(0.0) == 0);
}

TEST_CASE("dirichlet lands on the simplex with uniform mean") {
    Rng r(3);
    std::vector<double> mu(3), mean(3, 0.0);
    const int n = 50000;
    for (int i = 0; i < n; ++i) {
        r.dirichlet(0.5, mu);
        double s = 0.0;
        for (double x : mu) {
            CHECK(x >= 0.0);
            s += x;
        }
        CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
        for (int j = 0; j < 3; ++j) mean[j] += mu[j];
    }
    for (int j = 0; j < 3; ++j) CHECK(mean[j] / n == doctest::Approx(1.0 / 3).epsilon(0.02));
}
