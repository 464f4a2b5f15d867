#include <cmath>

#include "cavity/bethe.hpp"
#include "cavity/model.hpp"
#include "doctest.h"

using namespace cavity;

TEST_CASE("batch_estimate: constant samples give an exact mean with zero error") {
    std::vector<double> values(1000, std::log(3.0));
    auto est = batch_estimate(values);
    CHECK(est.mean == std::log(3.0));
    CHECK(est.std_error == 0.0);
    CHECK(est.samples == 1000);
    std::vector<double> mixed = {1.0, 2.0, 3.0, 4.0};
    auto est2 = batch_estimate(mixed, 2);
    CHECK(est2.mean == doctest::Approx(2.5));
    CHECK(est2.std_error > 0.0);
}

TEST_CASE("B at the trivial population anchors to the RS value across the zoo") {
    struct Case {
        Model model;
        double d;
    };
    std::vector<Case> cases;
    cases.push_back({make_potts_c(3, 0.5), 2.0});
    cases.push_back({make_potts_c(2, 0.7), 4.0});
    cases.push_back({make_ksat(3, 1.0), 2.5});
    cases.push_back({make_naesat(4, 1.0), 2.0});
    cases.push_back({make_hypergraph_potts(3, 3, 1.0), 2.0});
    cases.push_back({make_ldgm(3, 0.1), 3.0});
    for (const auto& c : cases) {
        Population triv = init_population(InitKind::trivial, c.model.q(), 20000, 0.0, 1);
        auto est = bethe_functional(triv, c.model, c.d, 40000, 7, 2);
        double target = rs_value(c.model, c.d);
        CHECK(std::abs(est.mean - target) <= std::max(3.0 * est.std_error, 1e-3));
    }
    // the worked value: potts(q=3, c=1/2) at d=2 sits at ln 3 + ln(5/6)
    Population triv = init_population(InitKind::trivial, 3, 20000, 0.0, 1);
    auto est = bethe_functional(triv, make_potts_c(3, 0.5), 2.0, 50000, 7, 2);
    CHECK(est.mean == doctest::Approx(0.916290731874155).epsilon(1e-3));
}

TEST_CASE("B at d = 0 is exactly ln q with zero error") {
    for (int q : {2, 3}) {
        Model model = q == 2 ? make_ldgm(3, 0.1) : make_potts_c(3, 0.5);
        Population triv = init_population(InitKind::trivial, q, 100, 0.0, 1);
        auto est = bethe_functional(triv, model, 0.0, 5000, 3, 1);
        CHECK(est.mean == std::log(static_cast<double>(q)));
        CHECK(est.std_error == 0.0);
    }
}

TEST_CASE("bethe_potts: closed form at the trivial population, c < 1 and c = 1") {
    Population triv = init_population(InitKind::trivial, 3, 10000, 0.0, 1);
    auto soft = bethe_potts(3, 2.0, 0.5, triv, 40000, 11, 2);
    CHECK(std::abs(soft.mean - (std::log(3.0) + std::log(1.0 - 0.5 / 3.0))) <=
          std::max(3.0 * soft.std_error, 1e-6));
    // graph coloring: q = 3, d = 4 gives ln 3 + 2 ln(2/3)
    auto hard = bethe_potts(3, 4.0, 1.0, triv, 60000, 11, 2);
    double target = std::log(3.0) + 2.0 * std::log(2.0 / 3.0);
    CHECK(target == doctest::Approx(0.28768).epsilon(1e-4));
    CHECK(std::abs(hard.mean - target) <= std::max(3.0 * hard.std_error, 1e-6));
    CHECK_THROWS_AS(bethe_potts(3, 2.0, 0.0, triv, 100, 1, 1), std::invalid_argument);
}

TEST_CASE("bethe_potts and bethe_functional agree on a shared population") {
    Model model = make_potts_c(3, 0.7);
    Population pop = init_population(InitKind::planted, 3, 20000, 0.3, 5);
    auto via_table = bethe_functional(pop, model, 3.0, 120000, 21, 2);
    auto via_closed = bethe_potts(3, 3.0, 0.7, pop, 120000, 22, 2);
    double combined = std::sqrt(via_table.std_error * via_table.std_error +
                                via_closed.std_error * via_closed.std_error);
    CHECK(std::abs(via_table.mean - via_closed.mean) <= std::max(3.0 * combined, 1e-4));
}

TEST_CASE("ldgm_bethe: exact values and the theta change of variables") {
    // all-zero fields: both Lambda arguments collapse and B = ln 2 exactly
    std::vector<double> zero(500, 0.0);
    auto triv = ldgm_bethe(3, 2.0, 0.1, zero, 5000, 3, 1);
    CHECK(triv.mean == std::log(2.0));
    CHECK(triv.std_error == 0.0);

    // eta = 1/2 kills every (1 - 2 eta) product regardless of the fields
    Population pop = init_population(InitKind::planted, 2, 2000, 0.3, 5);
    auto fields = to_sym_fields(pop);
    auto half = ldgm_bethe(3, 2.0, 0.5, fields, 5000, 3, 1);
    CHECK(half.mean == std::log(2.0));
    CHECK(half.std_error == 0.0);

    // consistency with the generic evaluator through theta = 2 mu(1) - 1
    Model model = make_ldgm(3, 0.2);
    auto generic = bethe_functional(pop, model, 2.0, 120000, 31, 2);
    auto themed = ldgm_bethe(3, 2.0, 0.2, fields, 120000, 32, 2);
    double combined = std::sqrt(generic.std_error * generic.std_error +
                                themed.std_error * themed.std_error);
    CHECK(std::abs(generic.mean - themed.mean) <= std::max(3.0 * combined, 1e-4));

    std::vector<double> skew(100, 0.9);
    CHECK_THROWS_AS(ldgm_bethe(3, 1.0, 0.5, skew, 10, 1, 1),
                    std::invalid_argument);  // not mean-zero
}

TEST_CASE("log-space evaluation matches the direct route and survives d = 30") {
    Model model = make_potts_c(3, 0.5);
    Population pop = init_population(InitKind::planted, 3, 4000, 0.2, 5);
    auto log_vals = bethe_samples(pop, model, 5.0, 4000, 77, 1, true);
    auto direct_vals = bethe_samples(pop, model, 5.0, 4000, 77, 1, false);
    REQUIRE(log_vals.size() == direct_vals.size());
    for (size_t i = 0; i < log_vals.size(); ++i) {
        double denom = std::max(std::abs(direct_vals[i]), 1e-30);
        CHECK(std::abs(log_vals[i] - direct_vals[i]) / denom < 1e-10);
    }
    auto big = bethe_functional(pop, model, 30.0, 20000, 78, 2);
    CHECK(std::isfinite(big.mean));
    CHECK(std::isfinite(big.std_error));
}

TEST_CASE("mutual information assembly") {
    // entropy term for ldgm reduces to (d/k)[ln 2 + eta ln eta + (1-eta) ln(1-eta)]
    Model m = make_ldgm(3, 0.1);
    double direct = entropy_term(m, 0.5);
    double reduced = (0.5 / 3.0) * (std::log(2.0) + 0.1 * std::log(0.1) + 0.9 * std::log(0.9));
    CHECK(direct == doctest::Approx(reduced).epsilon(1e-12));
    CHECK(direct == doctest::Approx(0.06134).epsilon(2e-4));

    // any model at d = 0: middle term 0, sup B = ln q, I = 0 exactly
    Population triv = init_population(InitKind::trivial, 2, 50, 0.0, 1);
    auto b0 = bethe_functional(triv, m, 0.0, 1000, 3, 1);
    auto i0 = mutual_info(m, 0.0, b0);
    CHECK(i0.mean == 0.0);
    CHECK(i0.std_error == 0.0);

    // eta = 1/2: psi is identically 1, so the entropy term vanishes and the
    // Bethe value is exactly ln 2 at any population
    Model half = make_ldgm(3, 0.5);
    Population pop = init_population(InitKind::planted, 2, 500, 0.2, 9);
    auto bh = bethe_functional(pop, half, 2.0, 4000, 5, 1);
    auto ih = mutual_info(half, 2.0, bh);
    // exact zero up to accumulated rounding in the per-member products
    CHECK(std::abs(ih.mean) <= std::max(3.0 * ih.std_error, 1e-12));

    // stderr is propagated unchanged
    CHECK(ih.std_error == bh.std_error);
}
