#include <catch2/catch.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <random>

#include "detopt/crn.hpp"
#include "detopt/seqnet.hpp"

using namespace detopt;

namespace {

Eigen::VectorXd random_positive_vector(int n, std::mt19937& rng, double lo = 0.5, double hi = 2.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = dist(rng);
  return v;
}

// Central-difference Jacobian, the independent oracle for the analytic one.
Eigen::MatrixXd finite_difference_jacobian(const Network& net, const Eigen::VectorXd& rates,
                                           const Eigen::VectorXd& x, double step) {
  const int n = net.species_count;
  Eigen::MatrixXd jac(n, n);
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXd xp = x, xm = x;
    xp(j) += step;
    xm(j) -= step;
    jac.col(j) = (ode_rhs(net, rates, xp) - ode_rhs(net, rates, xm)) / (2.0 * step);
  }
  return jac;
}

// The mass-action right-hand side of the sequestration network written out
// species by species, independently of the Gamma * R(x) evaluation path.
Eigen::VectorXd expanded_sequestration_rhs(int m, int n, const Eigen::VectorXd& r, const Eigen::VectorXd& x) {
  Eigen::VectorXd f(n);
  f(0) = -r(0) * x(0) * x(1) - r(n - 1) * x(0) - r(n) * x(0) + r(2 * n);
  for (int i = 2; i <= n - 1; ++i) {
    f(i - 1) = -r(i - 2) * x(i - 2) * x(i - 1) - r(i - 1) * x(i - 1) * x(i) - r(n + i - 1) * x(i - 1) +
               r(2 * n + i - 1);
  }
  f(n - 1) = -r(n - 2) * x(n - 2) * x(n - 1) + m * r(n - 1) * x(0) - r(2 * n - 1) * x(n - 1) + r(3 * n - 1);
  return f;
}

}  // namespace

TEST_CASE("fully open extension appends flows in canonical order", "[crn]") {
  Network k23;
  k23.species_count = 3;
  k23.reactions = {Reaction::make(Complex::of({{0, 1}, {1, 1}}), Complex::zero()),
                   Reaction::make(Complex::of({{1, 1}, {2, 1}}), Complex::zero()),
                   Reaction::make(Complex::of({{0, 1}}), Complex::of({{2, 2}}))};
  const Network open = fully_open_extension(k23);
  REQUIRE(open.reaction_count() == 9);
  for (int k = 0; k < 3; ++k) CHECK(open.reactions[k].kind == ReactionKind::Internal);
  for (int k = 3; k < 6; ++k) {
    CHECK(open.reactions[k].kind == ReactionKind::Outflow);
    CHECK(open.reactions[k].reactant.coefficient(k - 3) == 1);
  }
  for (int k = 6; k < 9; ++k) {
    CHECK(open.reactions[k].kind == ReactionKind::Inflow);
    CHECK(open.reactions[k].product.coefficient(k - 6) == 1);
  }

  SECTION("idempotence") { CHECK(fully_open_extension(open) == open); }

  SECTION("empty network with one species gains exactly the two flows") {
    Network empty;
    empty.species_count = 1;
    const Network open1 = fully_open_extension(empty);
    REQUIRE(open1.reaction_count() == 2);
    CHECK(open1.reactions[0] == Reaction::make(Complex::of({{0, 1}}), Complex::zero()));
    CHECK(open1.reactions[1] == Reaction::make(Complex::zero(), Complex::of({{0, 1}})));
  }
}

TEST_CASE("sequestration network construction", "[crn]") {
  const Network net = build_sequestration(2, 3);
  REQUIRE(net.reaction_count() == 9);
  CHECK(net.reactions[3] == Reaction::make(Complex::of({{0, 1}}), Complex::zero()));
  CHECK(net.reactions[2] == Reaction::make(Complex::of({{0, 1}}), Complex::of({{2, 2}})));

  const Network small = build_sequestration(5, 2);
  REQUIRE(small.reaction_count() == 6);
  CHECK(small.reactions[0] == Reaction::make(Complex::of({{0, 1}, {1, 1}}), Complex::zero()));
  CHECK(small.reactions[1] == Reaction::make(Complex::of({{0, 1}}), Complex::of({{1, 5}})));

  CHECK_THROWS_AS(build_sequestration(0, 3), std::invalid_argument);
  CHECK_THROWS_AS(build_sequestration(2, 1), std::invalid_argument);

  SECTION("recognizer inverts the builder") {
    for (int m : {1, 2, 5}) {
      for (int n : {2, 3, 6, 11}) {
        const auto id = recognize_sequestration(build_sequestration(m, n));
        REQUIRE(id.has_value());
        CHECK(id->first == m);
        CHECK(id->second == n);
      }
    }
    Network other;
    other.species_count = 2;
    other.reactions = {Reaction::make(Complex::of({{0, 1}}), Complex::of({{1, 1}}))};
    CHECK_FALSE(recognize_sequestration(other).has_value());
  }
}

TEST_CASE("stoichiometric matrix", "[crn]") {
  SECTION("sequestration network blocks") {
    const Eigen::MatrixXi gamma = stoichiometric_matrix(build_sequestration(2, 3));
    CHECK(gamma.col(2) == Eigen::Vector3i(-1, 0, 2));
    CHECK(gamma.block(0, 3, 3, 3) == -Eigen::Matrix3i::Identity());
    CHECK(gamma.block(0, 6, 3, 3) == Eigen::Matrix3i::Identity());
    // first internal column: X1 + X2 -> 0
    CHECK(gamma.col(0) == Eigen::Vector3i(-1, -1, 0));
  }

  SECTION("identity blocks for every (m, n)") {
    for (int m : {1, 3}) {
      for (int n : {2, 5, 8}) {
        const Eigen::MatrixXi gamma = stoichiometric_matrix(build_sequestration(m, n));
        CHECK(gamma.block(0, n, n, n) == -Eigen::MatrixXi::Identity(n, n));
        CHECK(gamma.block(0, 2 * n, n, n) == Eigen::MatrixXi::Identity(n, n));
      }
    }
  }

  SECTION("single reaction A + 2B -> 2A") {
    Network net;
    net.species_count = 2;
    net.reactions = {Reaction::make(Complex::of({{0, 1}, {1, 2}}), Complex::of({{0, 2}}))};
    CHECK(stoichiometric_matrix(net).col(0) == Eigen::Vector2i(1, -2));
  }

  SECTION("inflow-only network gives identity columns") {
    Network net;
    net.species_count = 3;
    for (int i = 0; i < 3; ++i) net.reactions.push_back(Reaction::make(Complex::zero(), Complex::of({{i, 1}})));
    CHECK(stoichiometric_matrix(net) == Eigen::Matrix3i::Identity());
  }

  SECTION("fully open networks have full row rank") {
    std::mt19937 rng(7);
    std::uniform_int_distribution<int> species_dist(1, 5);
    std::uniform_int_distribution<int> coeff_dist(0, 2);
    for (int trial = 0; trial < 50; ++trial) {
      Network net;
      net.species_count = species_dist(rng);
      for (int k = 0; k < 3; ++k) {
        Complex reactant, product;
        for (int i = 0; i < net.species_count; ++i) {
          if (int c = coeff_dist(rng)) reactant.add(i, c);
          if (int c = coeff_dist(rng)) product.add(i, c);
        }
        if (reactant == product) continue;
        net.reactions.push_back(Reaction::make(reactant, product));
      }
      const Network open = fully_open_extension(net);
      const Eigen::MatrixXd gamma = stoichiometric_matrix(open).cast<double>();
      CHECK(Eigen::FullPivLU<Eigen::MatrixXd>(gamma).rank() == open.species_count);
    }
  }
}

TEST_CASE("rate assignments must be strictly positive", "[crn]") {
  CHECK_THROWS_AS(RateAssignment(Eigen::VectorXd::Zero(2)), std::invalid_argument);
  Eigen::VectorXd mixed(3);
  mixed << 1.0, -0.5, 2.0;
  CHECK_THROWS_AS(RateAssignment(mixed), std::invalid_argument);
  CHECK_NOTHROW(RateAssignment(Eigen::VectorXd::Ones(3)));
}

TEST_CASE("mass-action right-hand side", "[crn]") {
  SECTION("zero complex has monomial one") {
    Network net;
    net.species_count = 1;
    net.reactions = {Reaction::make(Complex::zero(), Complex::of({{0, 1}}))};
    const Eigen::VectorXd f =
        ode_rhs(net, RateAssignment(Eigen::VectorXd::Ones(1)), Eigen::VectorXd::Ones(1));
    CHECK(f(0) == Approx(1.0));
  }

  SECTION("reference rates make both concentration vectors steady states") {
    for (int m : {2, 3, 7}) {
      const Network net = build_sequestration(m, 3);
      const RateAssignment rates = seq::rates_n3(m);
      const Eigen::VectorXd at_ones = ode_rhs(net, rates, Eigen::Vector3d::Ones());
      CHECK(at_ones.lpNorm<Eigen::Infinity>() <= 1e-10);
      const Eigen::VectorXd at_sharp = ode_rhs(net, rates, seq::x_sharp_n3(m));
      CHECK(at_sharp.lpNorm<Eigen::Infinity>() <= 1e-10);
    }
  }

  SECTION("matches the explicitly expanded sequestration ODEs") {
    std::mt19937 rng(11);
    for (int trial = 0; trial < 20; ++trial) {
      const int m = 2 + trial % 4;
      const int n = 3 + 2 * (trial % 3);
      const Network net = build_sequestration(m, n);
      const Eigen::VectorXd rates = random_positive_vector(3 * n, rng, 0.1, 3.0);
      const Eigen::VectorXd x = random_positive_vector(n, rng);
      const Eigen::VectorXd via_gamma = ode_rhs(net, rates, x);
      const Eigen::VectorXd expanded = expanded_sequestration_rhs(m, n, rates, x);
      const double scale = std::max(1.0, expanded.lpNorm<Eigen::Infinity>());
      CHECK((via_gamma - expanded).lpNorm<Eigen::Infinity>() <= 1e-14 * scale);
    }
  }

  SECTION("dimension mismatches are rejected") {
    const Network net = build_sequestration(2, 3);
    CHECK_THROWS_AS(ode_rhs(net, Eigen::VectorXd::Ones(4), Eigen::Vector3d::Ones()), std::invalid_argument);
    CHECK_THROWS_AS(ode_rhs(net, Eigen::VectorXd::Ones(9), Eigen::Vector2d::Ones()), std::invalid_argument);
  }
}

TEST_CASE("analytic Jacobian", "[crn]") {
  SECTION("matches the displayed sequestration Jacobian entrywise") {
    std::mt19937 rng(13);
    const int m = 3, n = 5;
    const Network net = build_sequestration(m, n);
    const Eigen::VectorXd r = random_positive_vector(3 * n, rng, 0.2, 2.5);
    const Eigen::VectorXd x = random_positive_vector(n, rng);

    Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(n, n);
    expected(0, 0) = -r(0) * x(1) - r(n - 1) - r(n);
    expected(0, 1) = -r(0) * x(0);
    for (int i = 2; i <= n - 1; ++i) {
      expected(i - 1, i - 2) = -r(i - 2) * x(i - 1);
      expected(i - 1, i - 1) = -r(i - 2) * x(i - 2) - r(i - 1) * x(i) - r(n + i - 1);
      expected(i - 1, i) = -r(i - 1) * x(i - 1);
    }
    expected(n - 1, 0) = m * r(n - 1);
    expected(n - 1, n - 2) = -r(n - 2) * x(n - 1);
    expected(n - 1, n - 1) = -r(n - 2) * x(n - 2) - r(2 * n - 1);

    const Eigen::MatrixXd jac = jacobian(net, r, x);
    CHECK((jac - expected).lpNorm<Eigen::Infinity>() <= 1e-13 * expected.lpNorm<Eigen::Infinity>());
  }

  SECTION("inflow-only network has zero Jacobian") {
    Network net;
    net.species_count = 2;
    net.reactions = {Reaction::make(Complex::zero(), Complex::of({{0, 1}})),
                     Reaction::make(Complex::zero(), Complex::of({{1, 1}}))};
    CHECK(jacobian(net, Eigen::Vector2d(3.0, 4.0), Eigen::Vector2d::Ones()).isZero(0.0));
  }

  SECTION("agrees with central finite differences on random positive points") {
    std::mt19937 rng(17);
    Network bimolecular;
    bimolecular.species_count = 2;
    bimolecular.reactions = {Reaction::make(Complex::of({{0, 1}, {1, 2}}), Complex::of({{0, 2}}))};
    const std::vector<Network> nets = {build_sequestration(2, 3), build_sequestration(3, 5),
                                       fully_open_extension(bimolecular)};
    for (const Network& net : nets) {
      const Eigen::VectorXd rates = random_positive_vector(net.reaction_count(), rng, 0.2, 2.0);
      for (int trial = 0; trial < 100; ++trial) {
        const Eigen::VectorXd x = random_positive_vector(net.species_count, rng);
        const Eigen::MatrixXd analytic = jacobian(net, rates, x);
        const Eigen::MatrixXd numeric = finite_difference_jacobian(net, rates, x, 1e-6);
        const double scale = std::max(1.0, analytic.lpNorm<Eigen::Infinity>());
        REQUIRE((analytic - numeric).lpNorm<Eigen::Infinity>() <= 1e-5 * scale);
      }
    }
  }
}

TEST_CASE("Jacobian determinant and nondegeneracy", "[crn]") {
  const Network net = build_sequestration(2, 3);
  const RateAssignment rates = seq::rates_n3(2);

  SECTION("reference determinants at both steady states") {
    CHECK(jacobian_determinant(net, rates, Eigen::Vector3d::Ones()) == Approx(0.336).margin(0.005));
    CHECK(jacobian_determinant(net, rates, seq::x_sharp_n3(2)) == Approx(-1.063).margin(0.005));
  }

  SECTION("one-species outflow system") {
    Network tiny;
    tiny.species_count = 1;
    tiny.reactions = {Reaction::make(Complex::of({{0, 1}}), Complex::zero())};
    const double r = 2.75;
    CHECK(jacobian_determinant(tiny, Eigen::VectorXd::Constant(1, r), Eigen::VectorXd::Constant(1, 5.0)) ==
          Approx(-r));
  }

  SECTION("nondegenerate at the reference steady states") {
    CHECK(is_nondegenerate(net, rates, Eigen::Vector3d::Ones(), 1e-8));
    CHECK(is_nondegenerate(net, rates, seq::x_sharp_n3(2), 1e-8));
  }

  SECTION("degenerate when the rates are the singular eta weights") {
    const Eigen::VectorXd eta = seq::eta_zero_unchecked(seq::SeqParams::checked(2, 3, 1.0, 0.1, 1.0));
    Eigen::VectorXd r(9);
    r.head(6) = eta;
    r.tail(3).setOnes();  // inflow rates never enter the Jacobian
    CHECK_FALSE(is_nondegenerate(net, RateAssignment(r), Eigen::Vector3d::Ones(), 1e-8));
  }

  SECTION("infinite tolerance always reports degenerate") {
    CHECK_FALSE(is_nondegenerate(net, rates, Eigen::Vector3d::Ones(), std::numeric_limits<double>::infinity()));
  }

  SECTION("networks that are not fully open are rejected") {
    Network closed;
    closed.species_count = 2;
    closed.reactions = {Reaction::make(Complex::of({{0, 1}, {1, 1}}), Complex::zero())};
    CHECK_THROWS_AS(is_nondegenerate(closed, RateAssignment(Eigen::VectorXd::Ones(1)), Eigen::Vector2d::Ones(), 1e-8),
                    std::invalid_argument);
  }
}
