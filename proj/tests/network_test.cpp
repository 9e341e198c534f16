#include <doctest.h>

#include <cmath>

#include "dolqr/errors.hpp"
#include "dolqr/network.hpp"

using namespace dolqr;

TEST_CASE("cycle topology matches the two-neighbor weights") {
    MixingMatrix net = MixingMatrix::build_cycle(20, 1, 0.6);
    const MatrixXd& P = net.P();
    CHECK(P(0, 0) == doctest::Approx(0.6));
    CHECK(P(0, 1) == doctest::Approx(0.2));
    CHECK(P(0, 19) == doctest::Approx(0.2));
    CHECK(P(0, 2) == 0.0);
    // beta = 0.6 + 0.4 cos(pi / 10) from the circulant spectrum.
    CHECK(net.beta() == doctest::Approx(0.6 + 0.4 * std::cos(M_PI / 10.0)).epsilon(1e-10));
}

TEST_CASE("six-neighbor cycle beta comes from the circulant spectrum") {
    MixingMatrix net = MixingMatrix::build_cycle(20, 3, 0.6);
    double expect = 0.0;
    for (int k = 1; k < 20; ++k) {
        double lam = 0.6;
        for (int j = 1; j <= 3; ++j)
            lam += (0.4 / 6.0) * 2.0 * std::cos(2.0 * M_PI * j * k / 20.0);
        expect = std::max(expect, std::abs(lam));
    }
    CHECK(net.beta() == doctest::Approx(expect).epsilon(1e-10));
}

TEST_CASE("degenerate three-agent cycle is the complete graph") {
    MixingMatrix net = MixingMatrix::build_cycle(3, 1, 1.0 / 3.0);
    CHECK((net.P() - MatrixXd::Constant(3, 3, 1.0 / 3.0)).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(net.beta() == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("complete graph properties") {
    MixingMatrix net = MixingMatrix::build_complete(20);
    CHECK(net.P()(0, 0) == doctest::Approx(0.05));
    CHECK(net.beta() < 1e-12);
    CHECK(net.mixing_error(1) < 1e-14);

    MixingMatrix two = MixingMatrix::build_complete(2);
    CHECK(two.P()(0, 0) == doctest::Approx(0.5));
    CHECK(two.P()(0, 1) == doctest::Approx(0.5));
}

TEST_CASE("topology parameter validation") {
    CHECK_THROWS_AS(MixingMatrix::build_cycle(2, 1, 0.6), ContractViolation);
    CHECK_THROWS_AS(MixingMatrix::build_cycle(5, 3, 0.6), ContractViolation);
    CHECK_THROWS_AS(MixingMatrix::build_cycle(5, 1, 1.2), ContractViolation);
    CHECK_THROWS_AS(MixingMatrix::build_complete(1), ContractViolation);

    MatrixXd bad = MatrixXd::Identity(3, 3);
    bad(0, 0) = 0.5;  // row sum 0.5
    CHECK_THROWS_AS(MixingMatrix::build_custom(bad), ContractViolation);
}

TEST_CASE("custom topology accepts a single agent") {
    MatrixXd one(1, 1);
    one << 1.0;
    MixingMatrix net = MixingMatrix::build_custom(one);
    CHECK(net.beta() == 0.0);
    CHECK(net.connected());
}

TEST_CASE("mixing_error identity and geometric bound") {
    MixingMatrix net = MixingMatrix::build_cycle(20, 1, 0.6);
    const double m = 20.0;
    CHECK(net.mixing_error(0) == doctest::Approx(2.0 * (m - 1.0) / m));

    // Paper-style bound: mixing_error(k) <= sqrt(m) beta^k, for every k.
    for (const auto& topo :
         {MixingMatrix::build_cycle(20, 1, 0.6), MixingMatrix::build_cycle(20, 3, 0.6),
          MixingMatrix::build_complete(20), MixingMatrix::build_cycle(7, 2, 0.4)}) {
        for (int k = 0; k <= 200; k += (k < 20 ? 1 : 10)) {
            CHECK(topo.mixing_error(k) <=
                  std::sqrt(static_cast<double>(topo.size())) * std::pow(topo.beta(), k) + 1e-10);
        }
    }
}

TEST_CASE("beta ordering across the three experiment topologies") {
    double beta_a = MixingMatrix::build_cycle(20, 1, 0.6).beta();
    double beta_b = MixingMatrix::build_cycle(20, 3, 0.6).beta();
    double beta_c = MixingMatrix::build_complete(20).beta();
    CHECK(beta_a > beta_b);
    CHECK(beta_b > beta_c);
    CHECK(beta_c == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("second_singular_value of the complete graph is zero") {
    CHECK(second_singular_value(MatrixXd::Constant(4, 4, 0.25)) < 1e-14);
}
