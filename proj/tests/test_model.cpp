#include <cmath>
#include <cstring>

#include "cavity/model.hpp"
#include "doctest.h"

using namespace cavity;

namespace {

double table_at(const Model& m, int w, std::initializer_list<int> tau) {
    std::vector<int> t(tau);
    return m.weights()[w].table[m.flat_index(t)];
}

}  // namespace

TEST_CASE("potts weight table matches the closed form") {
    Model m = make_potts(3, std::log(2.0));  // c = 1/2
    CHECK(table_at(m, 0, {0, 0}) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(table_at(m, 0, {0, 1}) == 1.0);
    CHECK(table_at(m, 0, {2, 2}) == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(m.soft());
}

TEST_CASE("ldgm weight tables match the parity form") {
    Model m = make_ldgm(3, 0.1);
    // all-(+1) tuple is index 0
    CHECK(table_at(m, 0, {0, 0, 0}) == doctest::Approx(1.8).epsilon(1e-15));
    CHECK(table_at(m, 1, {0, 0, 0}) == doctest::Approx(0.2).epsilon(1e-15));
    // flipping one spin flips the parity
    CHECK(table_at(m, 0, {1, 0, 0}) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(m.prior()[0] == 0.5);
    CHECK(m.prior()[1] == 0.5);
}

TEST_CASE("ksat tables agree with the literal-sign formula") {
    double c = 0.5;
    int k = 3;
    Model m = make_ksat_c(k, c);
    REQUIRE(m.weights().size() == 8);
    for (int w = 0; w < 8; ++w) {
        for (int s = 0; s < 8; ++s) {
            double prod = 1.0;
            for (int i = 0; i < k; ++i) {
                int jbit = (w >> (k - 1 - i)) & 1;
                int sbit = (s >> (k - 1 - i)) & 1;
                double J = 1.0 - 2.0 * jbit;
                double sigma = 1.0 - 2.0 * sbit;
                prod *= (1.0 + J * sigma) / 2.0;
            }
            CHECK(m.weights()[w].table[s] == doctest::Approx(1.0 - c * prod).epsilon(1e-15));
        }
    }
}

TEST_CASE("naesat tables agree with the two-sided literal formula") {
    double c = 0.6;
    int k = 3;
    Model m = make_naesat_c(k, c);
    for (int w = 0; w < 8; ++w) {
        for (int s = 0; s < 8; ++s) {
            double p1 = 1.0, p2 = 1.0;
            for (int i = 0; i < k; ++i) {
                double J = 1.0 - 2.0 * ((w >> (k - 1 - i)) & 1);
                double sg = 1.0 - 2.0 * ((s >> (k - 1 - i)) & 1);
                p1 *= (1.0 + J * sg) / 2.0;
                p2 *= (1.0 - J * sg) / 2.0;
            }
            CHECK(m.weights()[w].table[s] ==
                  doctest::Approx(1.0 - c * p1 - c * p2).epsilon(1e-15));
        }
    }
}

TEST_CASE("hypergraph potts penalizes exactly the monochromatic tuples") {
    Model m = make_hypergraph_potts(3, 3, 1.0);
    int mono = 0;
    for (size_t i = 0; i < m.table_size(); ++i) {
        if (m.weights()[0].table[i] < 1.0) {
            ++mono;
            CHECK(m.weights()[0].table[i] == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
        } else {
            CHECK(m.weights()[0].table[i] == 1.0);
        }
    }
    CHECK(mono == 3);
}

TEST_CASE("sbm parameters follow the degree mapping") {
    // d_in = d q e^-b / (q - 1 + e^-b), evaluated independently here
    double d = 5.0, beta = std::log(3.0);
    Model m = make_sbm(3, d, beta);
    double e = std::exp(-beta);
    double denom = 3.0 - 1.0 + e;
    CHECK(m.params().d_in == doctest::Approx(d * 3.0 * e / denom).epsilon(1e-15));
    CHECK(m.params().d_out == doctest::Approx(d * 3.0 / denom).epsilon(1e-15));
    CHECK(m.params().d_in == doctest::Approx(15.0 / 7.0).epsilon(1e-14));
    CHECK(m.params().d_out == doctest::Approx(45.0 / 7.0).epsilon(1e-14));
    // weights are the Potts table for the same beta
    Model p = make_potts(3, beta);
    for (size_t i = 0; i < m.table_size(); ++i)
        CHECK(m.weights()[0].table[i] == p.weights()[0].table[i]);
}

TEST_CASE("xi by exact summation") {
    CHECK(xi(make_potts_c(3, 0.5)) == doctest::Approx(5.0 / 6.0).epsilon(1e-14));
    CHECK(xi(make_ldgm(4, 0.23)) == 1.0);  // parity terms cancel exactly
    // independent oracle: direct summation of the 2^3 x 2^3 table
    Model ks = make_ksat_c(3, 0.5);
    double s = 0.0;
    for (size_t w = 0; w < ks.weights().size(); ++w)
        for (double v : ks.weights()[w].table) s += ks.prior()[w] * v;
    s /= static_cast<double>(ks.table_size());
    CHECK(s == doctest::Approx(0.9375).epsilon(1e-15));
    CHECK(xi(ks) == doctest::Approx(0.9375).epsilon(1e-14));
}

TEST_CASE("rs_value closed form and affinity in d") {
    Model m = make_potts_c(3, 0.5);
    CHECK(rs_value(m, 2.0) == doctest::Approx(std::log(3.0) + std::log(5.0 / 6.0)).epsilon(1e-14));
    CHECK(rs_value(m, 0.0) == std::log(3.0));
    CHECK(rs_value(make_ldgm(3, 0.1), 3.0) == doctest::Approx(std::log(2.0)).epsilon(1e-14));
    // affine in d with slope (1/k) ln(xi q^k) - ln q
    double slope = (rs_value(m, 3.0) - rs_value(m, 1.0)) / 2.0;
    double expected = 0.5 * std::log(xi(m) * 9.0) - std::log(3.0);
    CHECK(slope == doctest::Approx(expected).epsilon(1e-12));
    // the (1-d) ln q + (d/k) ln sum form agrees
    double sum = 0.0;
    for (double v : m.mean_table()) sum += v;
    double alt = (1.0 - 2.0) * std::log(3.0) + (2.0 / 2.0) * std::log(sum);
    CHECK(rs_value(m, 2.0) == doctest::Approx(alt).epsilon(1e-12));
}

TEST_CASE("invariants of the model zoo") {
    for (auto kind : {0, 1, 2, 3, 4}) {
        Model m = kind == 0   ? make_potts(3, 1.0)
                  : kind == 1 ? make_hypergraph_potts(3, 3, 1.0)
                  : kind == 2 ? make_ksat(3, 1.0)
                  : kind == 3 ? make_naesat(4, 1.0)
                              : make_ldgm(3, 0.2);
        for (const auto& w : m.weights())
            for (double v : w.table) {
                CHECK(v > 0.0);
                CHECK(v < 2.0);
            }
        CHECK(xi(m) > 0.0);
        CHECK(xi(m) < 2.0);
        double prior_sum = 0.0;
        for (double p : m.prior()) prior_sum += p;
        CHECK(prior_sum == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("parameter validation") {
    CHECK_THROWS_AS(make_potts(1, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(make_potts(3, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(make_potts_c(3, 1.0), std::invalid_argument);  // c = 1 only via coloring
    CHECK_THROWS_AS(make_ksat_c(3, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(make_ldgm(3, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(make_ldgm(1, 0.1), std::invalid_argument);
    // bad prior mass
    WeightFunction w;
    w.table.assign(4, 1.0);
    CHECK_THROWS_AS(make_custom(2, 2, {w}, {0.9}), std::invalid_argument);
    // entry out of (0,2)
    WeightFunction bad;
    bad.table.assign(4, 1.0);
    bad.table[0] = 2.5;
    CHECK_THROWS_AS(make_custom(2, 2, {bad}, {1.0}), std::invalid_argument);
    // coloring is allowed to carry zeros but stays flagged hard
    Model col = make_coloring(3);
    CHECK_FALSE(col.soft());
    CHECK(col.kind() == ModelKind::coloring_closed_form);
}

TEST_CASE("json round trip is bit exact") {
    auto check_roundtrip = [](const Model& m) {
        nlohmann::json j = model_to_json(m);
        Model back = model_from_json_string(j.dump());
        nlohmann::json j2 = model_to_json(back);
        CHECK(j.dump() == j2.dump());
        REQUIRE(back.weights().size() == m.weights().size());
        for (size_t w = 0; w < m.weights().size(); ++w)
            for (size_t i = 0; i < m.table_size(); ++i) {
                double a = m.weights()[w].table[i];
                double b = back.weights()[w].table[i];
                CHECK(std::memcmp(&a, &b, sizeof a) == 0);
            }
    };
    check_roundtrip(make_potts(3, 0.6931471805599453));
    check_roundtrip(make_potts_c(4, 0.1 + 0.2));  // non-representable decimal
    check_roundtrip(make_sbm(3, 5.0, std::log(3.0)));
    check_roundtrip(make_ldgm(3, 0.1));
    check_roundtrip(make_ksat(3, 1.0));
    check_roundtrip(make_coloring(3));
    WeightFunction w;
    w.table = {1.3, 0.7, 0.9, 1.1};
    check_roundtrip(make_custom(2, 2, {w}, {1.0}));
}

TEST_CASE("unknown model fields are rejected") {
    CHECK_THROWS_AS(model_from_json_string(R"({"kind":"potts","q":3,"beta":1.0,"zap":1})"),
                    std::invalid_argument);
    CHECK_THROWS_AS(model_from_json_string(R"({"kind":"nonsense","q":3})"),
                    std::invalid_argument);
    Model m = model_from_json_string(R"({"kind":"potts","q":3,"beta":0.693147})");
    CHECK(m.q() == 3);
    CHECK(m.k() == 2);
}
