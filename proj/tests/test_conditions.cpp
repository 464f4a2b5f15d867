#include <cmath>

#include "cavity/conditions.hpp"
#include "cavity/model.hpp"
#include "doctest.h"

using namespace cavity;

namespace {

Model ferro_potts(int q, double boost) {
    WeightFunction w;
    w.table.assign(static_cast<size_t>(q) * q, 1.0);
    for (int s = 0; s < q; ++s) w.table[static_cast<size_t>(s) * q + s] = 1.0 + boost;
    return make_custom(q, 2, {std::move(w)}, {1.0});
}

}  // namespace

TEST_CASE("SYM passes on color-symmetric models") {
    CHECK(check_sym(make_potts(3, 1.0)).verdict == Verdict::pass);
    CHECK(check_sym(make_ldgm(2, 0.3)).verdict == Verdict::pass);
    CHECK(check_sym(make_ksat(3, 1.0)).verdict == Verdict::pass);
    CHECK(check_sym(make_hypergraph_potts(3, 3, 0.7)).verdict == Verdict::pass);
    // deterministic: repeated runs give identical residuals
    auto a = check_sym(make_naesat(4, 1.0));
    auto b = check_sym(make_naesat(4, 1.0));
    CHECK(a.verdict == Verdict::pass);
    CHECK(a.max_residual == b.max_residual);
}

TEST_CASE("SYM fails with a checkable witness on a lopsided table") {
    // psi(0,0) = 1.5, all else 1 over q = 2: S(0,0) = 2.5 vs S(1,0) = 2.0
    WeightFunction w;
    w.table = {1.5, 1.0, 1.0, 1.0};
    Model m = make_custom(2, 2, {std::move(w)}, {1.0});
    auto rep = check_sym(m);
    REQUIRE(rep.verdict == Verdict::fail);
    CHECK(rep.max_residual == doctest::Approx(0.5).epsilon(1e-12));
    // replay the witness sums against the table
    int sig = rep.witness.at("sigma").get<int>();
    int i = rep.witness.at("i").get<int>();
    double s_claimed = rep.witness.at("S").get<double>();
    double s = 0.0;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) {
            int tau[2] = {a, b};
            if (tau[i] == sig) s += m.mean_table()[a * 2 + b];
        }
    CHECK(s == doctest::Approx(s_claimed).epsilon(1e-14));
    CHECK(s == doctest::Approx(2.5).epsilon(1e-14));
}

TEST_CASE("BAL passes for the antiferromagnetic zoo") {
    CHECK(check_bal(make_potts(3, 1.0)).verdict == Verdict::pass);
    CHECK(check_bal(make_ksat(3, 1.0)).verdict == Verdict::pass);  // constant function
    CHECK(check_bal(make_naesat(4, 1.0)).verdict == Verdict::pass);
    CHECK(check_bal(make_hypergraph_potts(3, 3, 1.0)).verdict == Verdict::pass);
    CHECK(check_bal(make_ldgm(3, 0.2)).verdict == Verdict::pass);
}

TEST_CASE("BAL fails for the ferromagnetic Potts model with the delta witness") {
    Model m = ferro_potts(3, 0.5);
    auto rep = check_bal(m, 20, 400, 9);
    REQUIRE(rep.verdict == Verdict::fail);
    REQUIRE(rep.witness.at("kind") == "maximum");
    // F(delta) = 1.5 beats F(uniform) = 7/6
    CHECK(rep.witness.at("F_mu").get<double>() == doctest::Approx(1.5).epsilon(1e-12));
    CHECK(rep.witness.at("F_uniform").get<double>() == doctest::Approx(7.0 / 6.0).epsilon(1e-12));
    // replaying the witness point reproduces the violation
    auto mu = rep.witness.at("mu").get<std::vector<double>>();
    double f = 0.0;
    for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) f += m.mean_table()[a * 3 + b] * mu[a] * mu[b];
    CHECK(f > rep.witness.at("F_uniform").get<double>() + 1e-10);
}

TEST_CASE("POS passes across the zoo at moderate budgets") {
    CHECK(check_pos(make_potts(4, 2.0), 6, 4000, 6, 11).verdict == Verdict::pass);
    CHECK(check_pos(make_naesat(4, 1.0), 6, 4000, 6, 11).verdict == Verdict::pass);
    CHECK(check_pos(make_ksat(3, 1.0), 5, 4000, 6, 11).verdict == Verdict::pass);
    CHECK(check_pos(make_hypergraph_potts(3, 3, 1.0), 5, 4000, 6, 11).verdict == Verdict::pass);
    CHECK(check_pos(make_ldgm(3, 0.2), 5, 4000, 6, 11).verdict == Verdict::pass);
}

TEST_CASE("POS integrand vanishes identically at the uniform atom for ldgm") {
    Model m = make_ldgm(3, 0.2);
    StressMixture atom;
    atom.desc = "atom_uniform";
    atom.weights = {1.0};
    atom.atoms = {{0.5, 0.5}};
    auto ests = pos_integrand_estimate(m, atom, atom, 5, 2000, 17);
    for (const auto& e : ests) {
        CHECK(e.mean == 0.0);
        CHECK(e.std_error == 0.0);
    }
}

TEST_CASE("POS rejects a non-mean-uniform mixture") {
    Model m = make_potts(3, 1.0);
    StressMixture bad;
    bad.desc = "skew";
    bad.weights = {1.0};
    bad.atoms = {{0.5, 0.3, 0.2}};
    CHECK_THROWS_AS(pos_integrand_estimate(m, bad, bad, 3, 100, 1), std::invalid_argument);
}

TEST_CASE("reports are reproducible for fixed seeds") {
    Model m = make_potts(3, 1.0);
    auto a = check_pos(m, 4, 2000, 5, 123);
    auto b = check_pos(m, 4, 2000, 5, 123);
    CHECK(a.verdict == b.verdict);
    CHECK(a.max_residual == b.max_residual);
    auto ba = check_bal(m, 15, 200, 99);
    auto bb = check_bal(m, 15, 200, 99);
    CHECK(ba.max_residual == bb.max_residual);
}
