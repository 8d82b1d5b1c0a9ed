#include <doctest.h>

#include <cmath>
#include <numbers>

#include "gmewit/witness.hpp"
#include "helpers.hpp"

using namespace gmewit;
using fock::Basis;
using fock::OccupationTuple;
using fock::TruncatedState;
using witness::DisplacementSpec;
using witness::WitnessParams;

namespace {
const fock::PhaseAveraging kAvg{true, 0};
const double kLn2 = std::log(2.0);
}  // namespace

TEST_SUITE_BEGIN("witness");

TEST_CASE("fgh coefficients") {
  auto zero = witness::fgh(0.0);
  CHECK(zero.f == 1.0);
  CHECK(zero.g == 0.0);
  CHECK(zero.h == -1.0);

  auto root = witness::fgh(witness::alpha_f_zero());
  CHECK(std::abs(root.f) <= 1e-15);
  CHECK(root.g == doctest::Approx(std::sqrt(kLn2)).epsilon(1e-14));
  CHECK(root.h == doctest::Approx(kLn2 - 1.0).epsilon(1e-14));
}

TEST_CASE("O_restricted structure") {
  SUBCASE("alpha = 0") {
    auto m = witness::O_restricted(std::vector<double>(4, 0.0));
    CHECK(m(0, 0) == doctest::Approx(12.0));  // N(N-1)
    for (int k = 1; k <= 4; ++k) {
      for (int l = k + 1; l <= 4; ++l) CHECK(m(k, l) == 0.0);
    }
  }
  SUBCASE("alpha = sqrt(ln 2), N = 4") {
    auto m = witness::O_restricted(std::vector<double>(4, witness::alpha_f_zero()));
    CHECK(std::abs(m(0, 0)) <= 1e-12);
    for (int k = 1; k <= 4; ++k) {
      CHECK(std::abs(m(k, k)) <= 1e-12);
      for (int l = k + 1; l <= 4; ++l) {
        CHECK(m(k, l) == doctest::Approx(2 * kLn2).epsilon(1e-12));
      }
    }
  }
  SUBCASE("matches the twirled click-operator construction") {
    std::vector<std::vector<double>> cases = {{0.83, 0.61}, {0.4, 1.1}, {0.9, 0.9}};
    for (const auto& alphas : cases) {
      const int n = static_cast<int>(alphas.size());
      Basis basis(n, 2);
      auto dense = fock::twirled_global_observable(basis, alphas, kAvg);
      auto small = witness::O_restricted(alphas);
      // map restricted indices: 0 -> vacuum, k -> |1_{k-1}>
      std::vector<std::size_t> idx;
      idx.push_back(basis.index(OccupationTuple(n, 0)));
      for (int m = 0; m < n; ++m) {
        OccupationTuple t(n, 0);
        t[m] = 1;
        idx.push_back(basis.index(t));
      }
      for (int r = 0; r <= n; ++r) {
        for (int c = 0; c <= n; ++c) {
          CHECK(std::abs(dense(idx[r], idx[c]) - small(r, c)) <= 1e-12);
        }
      }
    }
  }
}

TEST_CASE("expected_O") {
  SUBCASE("vacuum at alpha = 0") {
    auto vac = TruncatedState::vacuum(4, 2);
    CHECK(witness::expected_O(vac, std::vector<double>(4, 0.0), kAvg, 0.0) ==
          doctest::Approx(12.0).epsilon(1e-12));
  }
  SUBCASE("ideal W4 at alpha = sqrt(ln 2)") {
    auto w = test::w_state(4);
    std::vector<double> alphas(4, witness::alpha_f_zero());
    double o = witness::expected_O(w, alphas, kAvg, 0.0);
    CHECK(o == doctest::Approx(6 * kLn2).epsilon(1e-10));  // 2 (N-1) ln 2
    // same value through the restricted-matrix path
    Basis basis(4, 2);
    auto dense = witness::O_restricted(alphas);
    std::vector<std::size_t> idx;
    idx.push_back(basis.index(OccupationTuple(4, 0)));
    for (int m = 0; m < 4; ++m) {
      OccupationTuple t(4, 0);
      t[m] = 1;
      idx.push_back(basis.index(t));
    }
    double quad = 0.0;
    for (int r = 0; r <= 4; ++r) {
      for (int c = 0; c <= 4; ++c) {
        quad += (w.rho(idx[r], idx[c]) * dense(c, r)).real();
      }
    }
    CHECK(o == doctest::Approx(quad).epsilon(1e-10));
  }
  SUBCASE("two-path equality on random low states") {
    std::mt19937_64 rng(97);
    for (int trial = 0; trial < 30; ++trial) {
      int n = 2 + trial % 3;
      Basis basis(n, 2);
      auto state = test::random_low_state(basis, rng);
      std::vector<double> alphas;
      std::uniform_real_distribution<double> uni(0.2, 1.2);
      for (int i = 0; i < n; ++i) alphas.push_back(uni(rng));

      double via_clicks = witness::expected_O(state, alphas, kAvg, 0.0);
      auto small = witness::O_restricted(alphas);
      std::vector<std::size_t> idx;
      idx.push_back(basis.index(OccupationTuple(n, 0)));
      for (int m = 0; m < n; ++m) {
        OccupationTuple t(n, 0);
        t[m] = 1;
        idx.push_back(basis.index(t));
      }
      double quad = 0.0;
      for (int r = 0; r <= n; ++r) {
        for (int c = 0; c <= n; ++c) {
          quad += (state.rho(idx[r], idx[c]) * small(c, r)).real();
        }
      }
      CHECK(via_clicks == doctest::Approx(quad).epsilon(1e-10));
    }
  }
}

TEST_CASE("pair correlator stays in [-1, 1]") {
  std::mt19937_64 rng(11);
  Basis basis(3, 2);
  std::uniform_real_distribution<double> uni(0.0, 1.5);
  for (int trial = 0; trial < 25; ++trial) {
    auto state = test::random_state(basis, rng);
    std::vector<double> alphas = {uni(rng), uni(rng), uni(rng)};
    double p_dc = 0.05 * (trial % 4);
    for (int i = 0; i < 3; ++i) {
      for (int j = i + 1; j < 3; ++j) {
        double c = witness::pair_correlator(state, i, j, alphas, kAvg, p_dc);
        CHECK(c >= -1.0 - 1e-12);
        CHECK(c <= 1.0 + 1e-12);
      }
    }
  }
}

TEST_CASE("expected_O invariant under a common displacement phase") {
  std::mt19937_64 rng(13);
  Basis basis(3, 2);
  std::vector<double> alphas = {0.83, 0.65, 1.0};
  for (int trial = 0; trial < 10; ++trial) {
    auto state = test::random_state(basis, rng);
    double reference = witness::expected_O(state, alphas, kAvg, 0.0);
    for (double phi : {0.3, 1.2, 2.9}) {
      fock::complexd rot = std::polar(1.0, phi);
      std::vector<fock::complexd> rotated;
      for (double a : alphas) rotated.push_back(a * rot);
      double sum = 0.0;
      for (int i = 0; i < 3; ++i) {
        for (int j = i + 1; j < 3; ++j) {
          double pi = fock::noclick_set_prob(state, {i}, rotated, kAvg);
          double pj = fock::noclick_set_prob(state, {j}, rotated, kAvg);
          double pij = fock::noclick_set_prob(state, {i, j}, rotated, kAvg);
          sum += 2.0 * (4.0 * pij - 2.0 * pi - 2.0 * pj + 1.0);
        }
      }
      CHECK(sum == doctest::Approx(reference).epsilon(1e-12));
    }
  }
}

TEST_CASE("F coefficients") {
  SUBCASE("degenerate box at the f-zero") {
    auto spec = DisplacementSpec::uniform(3, witness::alpha_f_zero());
    auto f = witness::F_coeffs(spec);
    CHECK(f.cwiseAbs().maxCoeff() <= 1e-15);
  }
  SUBCASE("no displacement") {
    auto spec = DisplacementSpec::uniform(2, 0.0);
    auto f = witness::F_coeffs(spec);
    CHECK(f(0, 1) == 1.0);
  }
  SUBCASE("corner enumeration matches a dense grid") {
    auto spec = DisplacementSpec::uniform_box(2, 0.83, 0.80, 0.86);
    auto f = witness::F_coeffs(spec);
    double best = 0.0;
    const int grid = 201;
    for (int i = 0; i < grid; ++i) {
      double ai = 0.80 + 0.06 * i / (grid - 1);
      for (int j = 0; j < grid; ++j) {
        double aj = 0.80 + 0.06 * j / (grid - 1);
        best = std::max(best, witness::fgh(ai).f * witness::fgh(aj).f);
      }
    }
    best = std::max(0.0, best);
    CHECK(f(0, 1) == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("expected_Z") {
  WitnessParams params{3, 2.0, 50.0};
  Eigen::MatrixXd zero_f = Eigen::MatrixXd::Zero(3, 3);
  SUBCASE("vacuum") {
    auto vac = TruncatedState::vacuum(3, 2);
    CHECK(witness::expected_Z(vac, params, zero_f, 0.0) ==
          doctest::Approx(2.0).epsilon(1e-14));
  }
  SUBCASE("ideal W state") {
    auto w = test::w_state(3);
    CHECK(witness::expected_Z(w, params, zero_f, 0.0) == doctest::Approx(0.0));
  }
  SUBCASE("two-click state") {
    // q |1,1,0><1,1,0| + (1-q) |1,0,0><1,0,0|: P_click^2 = q, p_0 = 0
    Basis basis(3, 2);
    double q = 0.37;
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(basis.size(), basis.size());
    rho(basis.index({1, 1, 0}), basis.index({1, 1, 0})) = q;
    rho(basis.index({1, 0, 0}), basis.index({1, 0, 0})) = 1 - q;
    TruncatedState state{basis, rho};
    double expected = -(6.0 + params.mu) * q;
    CHECK(witness::expected_Z(state, params, zero_f, 0.0) ==
          doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("local multiphoton bound") {
  SUBCASE("W state has no local pairs") {
    auto w = test::w_state(4);
    auto local = witness::local_multiphoton(w, 0);
    CHECK(local.p_cc == doctest::Approx(0.0));
    CHECK(local.p_star_local == doctest::Approx(0.0));
  }
  SUBCASE("two photons anti-bunch half the time") {
    Basis b1(1, 2);
    Eigen::VectorXcd two = Eigen::VectorXcd::Zero(3);
    two(2) = 1.0;
    auto state = TruncatedState::from_pure(b1, two);
    CHECK(witness::local_multiphoton(state, 0).p_cc == doctest::Approx(0.5).epsilon(1e-14));
  }
  SUBCASE("p_star_local recovers the two-photon weight") {
    Basis basis(2, 2);
    double w = 0.23;
    Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(basis.size(), basis.size());
    rho(basis.index({2, 0}), basis.index({2, 0})) = w;
    rho(basis.index({1, 0}), basis.index({1, 0})) = 1 - w;
    TruncatedState state{basis, rho};
    CHECK(witness::local_multiphoton(state, 0).p_star_local ==
          doctest::Approx(w).epsilon(1e-12));
  }
}

TEST_CASE("p_star") {
  CHECK(witness::p_star(test::w_state(5), true) == doctest::Approx(0.0));
  CHECK(witness::p_star(TruncatedState::vacuum(3, 2), true) == doctest::Approx(0.0));
  SUBCASE("vanishes on every n <= 1 state") {
    std::mt19937_64 rng(3);
    Basis basis(3, 2);
    for (int trial = 0; trial < 10; ++trial) {
      auto state = test::random_low_state(basis, rng);
      CHECK(witness::p_star(state, false) <= 1e-12);
    }
  }
}

TEST_CASE("witness_value") {
  const double root = witness::alpha_f_zero();
  SUBCASE("ideal W4") {
    auto w = test::w_state(4);
    WitnessParams params{4, 2.73, 102.0};
    auto spec = DisplacementSpec::uniform(4, root);
    auto wv = witness::witness_value(w, params, spec, kAvg, 0.0,
                                     witness::SigmaConvention::conservative, true);
    CHECK(wv.value == doctest::Approx(6 * kLn2).epsilon(1e-10));
    CHECK(wv.triple.z == doctest::Approx(0.0));
    CHECK(wv.triple.s == doctest::Approx(0.0));
    CHECK(wv.triple.p0 == doctest::Approx(0.0));
  }
  SUBCASE("vacuum scores exactly lambda") {
    auto vac = TruncatedState::vacuum(3, 2);
    WitnessParams params{3, 2.73, 10.0};
    auto spec = DisplacementSpec::uniform(3, root);
    auto wv = witness::witness_value(vac, params, spec, kAvg, 0.0,
                                     witness::SigmaConvention::conservative, true);
    CHECK(wv.value == 2.73);
    CHECK(wv.triple.o == doctest::Approx(0.0));
  }
}

TEST_CASE("measured bound never exceeds the witness operator expectation") {
  // W-bar <= W-hat on every state (conservative convention, per-mode
  // coincidences).
  std::mt19937_64 rng(2024);
  const int n = 3;
  Basis basis(n, 2);
  std::uniform_real_distribution<double> uni(0.3, 1.3);
  for (int trial = 0; trial < 1000; ++trial) {
    auto state = test::random_state(basis, rng);
    double alpha = uni(rng);
    WitnessParams params{n, 0.5 + uni(rng), 5.0 + 40.0 * uni(rng)};
    auto spec = DisplacementSpec::uniform(n, alpha);
    auto wv = witness::witness_value(state, params, spec, kAvg, 0.0,
                                     witness::SigmaConvention::conservative, false);
    auto op = witness::dense_witness_operator(basis, params, spec.nominal, kAvg);
    double dense = fock::real_expectation(state, op);
    CHECK(wv.value <= dense + 1e-9);
  }
}

TEST_SUITE_END();
