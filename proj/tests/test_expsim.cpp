#include <doctest.h>

#include <cmath>

#include "gmewit/expsim.hpp"
#include "helpers.hpp"

using namespace gmewit;
using expsim::Conventions;
using expsim::EvalOptions;
using expsim::SourceModel;
using witness::DisplacementSpec;
using witness::WitnessParams;

namespace {

SourceModel experiment_like(int parties) {
  SourceModel model;
  model.parties = parties;
  model.p = 5e-3;
  model.eta = 0.3;
  return model;
}

Conventions symmetric_conv() {
  Conventions conv;
  conv.symmetric_bipartitions = true;
  conv.symmetric_modes = true;
  return conv;
}

}  // namespace

TEST_SUITE_BEGIN("expsim");

TEST_CASE("make_state") {
  SUBCASE("ideal source gives the W state") {
    SourceModel model;
    model.parties = 4;
    model.p = 0.0;
    model.eta = 1.0;
    auto state = expsim::make_state(model);
    auto w = test::w_state(4);
    CHECK((state.rho - w.rho).cwiseAbs().maxCoeff() <= 1e-13);
  }
  SUBCASE("eta = 0 gives vacuum") {
    SourceModel model = experiment_like(3);
    model.eta = 0.0;
    auto state = expsim::make_state(model);
    CHECK(state.rho(0, 0).real() == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("vacuum weight closed form") {
    auto state = expsim::make_state(experiment_like(5));
    // (1 - eta + p (1 - eta)^2) / (1 + p)
    CHECK(state.rho(0, 0).real() == doctest::Approx(0.69895).epsilon(1e-4));
    CHECK(state.rho(0, 0).real() ==
          doctest::Approx((0.7 + 5e-3 * 0.49) / 1.005).epsilon(1e-12));
  }
  SUBCASE("herald dark fraction mixes in vacuum") {
    SourceModel model = experiment_like(2);
    model.eta = 1.0;
    model.p = 0.0;
    model.herald_dark_fraction = 0.25;
    auto state = expsim::make_state(model);
    CHECK(state.rho(0, 0).real() == doctest::Approx(0.25).epsilon(1e-14));
  }
}

TEST_CASE("dark penalty") {
  CHECK(expsim::dark_penalty(8, 1.16e-6) == doctest::Approx(1.039e-3).epsilon(1e-3));
  CHECK(expsim::dark_penalty(5, 0.0) == 0.0);
  CHECK(expsim::dark_penalty(4, 1e-6) == doctest::Approx(9.6e-5).epsilon(1e-12));
}

TEST_CASE("loss placement is immaterial") {
  SourceModel folded = experiment_like(4);
  folded.eta = 0.3 * 0.8;
  SourceModel split = experiment_like(4);
  split.eta = 0.3;
  split.per_mode_eta = std::vector<double>(4, 0.8);
  auto a = expsim::make_state(folded);
  auto b = expsim::make_state(split);
  CHECK((a.rho - b.rho).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("evaluate") {
  SUBCASE("N = 4 experiment model violates with the paper parameters") {
    auto report = expsim::evaluate(experiment_like(4), {4, 2.73, 102.0},
                                   DisplacementSpec::uniform(4, witness::alpha_f_zero()),
                                   symmetric_conv());
    CHECK(report.violation > 0.0);
    CHECK(report.triple.s <= 0.0);
    CHECK(report.dark_penalty == 0.0);
  }
  SUBCASE("fast and exact paths agree") {
    const int n = 10;
    auto model = experiment_like(n);
    WitnessParams params{n, 9.0, 200.0};
    auto spec = DisplacementSpec::uniform(n, witness::alpha_f_zero());
    for (double p_dc : {0.0, 1e-5}) {
      model.p_dc = p_dc;
      EvalOptions exact;
      exact.force_exact = true;
      EvalOptions fast;
      fast.force_fast = true;
      auto a = expsim::evaluate(model, params, spec, symmetric_conv(), exact);
      auto b = expsim::evaluate(model, params, spec, symmetric_conv(), fast);
      CHECK(a.violation == doctest::Approx(b.violation).epsilon(1e-9));
      CHECK(a.triple.o == doctest::Approx(b.triple.o).epsilon(1e-9));
      CHECK(a.triple.z == doctest::Approx(b.triple.z).epsilon(1e-9));
      CHECK(a.triple.s == doctest::Approx(b.triple.s).epsilon(1e-9));
      CHECK(a.triple.p_star == doctest::Approx(b.triple.p_star).epsilon(1e-9));
    }
  }
  SUBCASE("asymmetric transmissions are rejected on the fast path") {
    auto model = experiment_like(4);
    model.per_mode_eta = std::vector<double>{0.9, 0.8, 0.7, 0.6};
    EvalOptions fast;
    fast.force_fast = true;
    CHECK_THROWS_AS(expsim::summarize(model,
                                      DisplacementSpec::uniform(4, witness::alpha_f_zero()),
                                      symmetric_conv(), fast),
                    DimensionGuardError);
  }
}

TEST_CASE("dark counts transform the summary exactly") {
  auto model = experiment_like(5);
  auto spec = DisplacementSpec::uniform(5, witness::alpha_f_zero());
  auto clean = expsim::summarize(model, spec, symmetric_conv());
  double p_dc = 2e-4;
  model.p_dc = p_dc;
  auto dark = expsim::summarize(model, spec, symmetric_conv());
  const int n = 5;
  double keep = 1.0 - p_dc;
  CHECK(dark.p0 == doctest::Approx(std::pow(keep, n) * clean.p0).epsilon(1e-12));
  CHECK(dark.f_term == doctest::Approx(keep * keep * clean.f_term).epsilon(1e-12));
  // pairwise correlator: 4 q^2 Pij - 2 q (Pi + Pj) + 1 with q = 1 - p_dc
  auto state = expsim::make_state(model);
  fock::PhaseAveraging avg{true, 0};
  double pij = fock::noclick_set_prob(state, {0, 1},
                                      std::vector<fock::complexd>(n, spec.nominal[0]), avg);
  double pi = fock::noclick_set_prob(state, {0},
                                     std::vector<fock::complexd>(n, spec.nominal[0]), avg);
  double expected_pair = 4.0 * keep * keep * pij - 4.0 * keep * pi + 1.0;
  CHECK(dark.o == doctest::Approx(n * (n - 1) * expected_pair).epsilon(1e-10));
}

TEST_CASE("tuned violation is non-decreasing in transmission") {
  expsim::TuneGrid grid;
  grid.lambda_points = 25;
  grid.mu_points = 25;
  grid.refine = 2;
  double prev = -1e300;
  for (double eta : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    auto model = experiment_like(4);
    model.eta = eta;
    auto tuned = expsim::tune_params(model, DisplacementSpec::uniform(4, witness::alpha_f_zero()),
                                     grid, symmetric_conv());
    CHECK(tuned.violation >= prev - 1e-9);
    prev = tuned.violation;
  }
}

TEST_CASE("tune_params") {
  SUBCASE("beats the published operating point when it lies on the search box") {
    auto model = experiment_like(4);
    auto spec = DisplacementSpec::uniform(4, 0.83);
    expsim::TuneGrid grid;
    grid.refine = 3;
    auto tuned = expsim::tune_params(model, spec, grid, symmetric_conv());
    auto at_paper = expsim::evaluate(model, {4, 2.73, 102.0}, spec, symmetric_conv());
    auto at_tuned = expsim::evaluate(model, {4, tuned.lambda, tuned.mu}, spec,
                                     symmetric_conv());
    CHECK(at_tuned.violation >= at_paper.violation - 1e-6);
  }
  SUBCASE("vacuum never certifies") {
    auto model = experiment_like(3);
    model.eta = 0.0;
    expsim::TuneGrid grid;
    grid.lambda_points = 12;
    grid.mu_points = 12;
    auto tuned = expsim::tune_params(model, DisplacementSpec::uniform(3, witness::alpha_f_zero()),
                                     grid, symmetric_conv());
    CHECK(tuned.violation <= 0.0);
  }
}

TEST_CASE("subset analysis") {
  SUBCASE("full-set row matches evaluate") {
    auto model = experiment_like(4);
    WitnessParams params{4, 2.73, 102.0};
    auto spec = DisplacementSpec::uniform(4, witness::alpha_f_zero());
    auto rows = expsim::subset_analysis(model, params, spec, symmetric_conv());
    CHECK(rows.size() == 11);  // sizes 2..4 of 4 parties
    const auto& full = rows.back();
    CHECK(full.size == 4);
    auto report = expsim::evaluate(model, params, spec, symmetric_conv());
    CHECK(full.value ==
          doctest::Approx(report.triple.o + report.triple.z + report.triple.s)
              .epsilon(1e-12));
    CHECK(full.violation == doctest::Approx(report.violation).epsilon(1e-12));
  }
  SUBCASE("balanced N = 4 model: every subset violates with tuned parameters") {
    auto model = experiment_like(4);
    auto spec = DisplacementSpec::uniform(4, witness::alpha_f_zero());
    expsim::TuneGrid grid;
    grid.refine = 3;
    auto rows = expsim::subset_analysis(model, std::nullopt, spec, symmetric_conv(), grid);
    CHECK(rows.size() == 11);
    for (const auto& row : rows) {
      CAPTURE(row.size);
      CHECK(row.violation > 0.0);
      CHECK(row.one_minus_p0 > 0.0);
    }
    // equal sizes -> equal violations for the balanced model
    for (const auto& a : rows) {
      for (const auto& b : rows) {
        if (a.size == b.size) CHECK(a.violation == doctest::Approx(b.violation).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("sample_trials") {
  SUBCASE("no-light, no-displacement model is deterministic") {
    SourceModel model;
    model.parties = 4;
    model.p = 0.0;
    model.eta = 0.0;
    WitnessParams params{4, 2.73, 102.0};
    auto spec = DisplacementSpec::uniform(4, 0.0);  // F = 1 box
    for (std::uint64_t seed : {1ull, 99ull}) {
      auto trials = expsim::sample_trials(model, params, spec, symmetric_conv(),
                                          {200, 200, 200}, seed);
      CHECK(trials.o_bar == 12.0);                  // N(N-1), all sigmas +1
      CHECK(trials.z_bar == 2.73 - 12.0);           // lambda - sum F_ij
      CHECK(trials.s_bar == 0.0);
    }
  }
  SUBCASE("fixed seed is bit-identical") {
    auto model = experiment_like(4);
    model.p_dc = 1e-5;
    WitnessParams params{4, 2.73, 102.0};
    auto spec = DisplacementSpec::uniform(4, witness::alpha_f_zero());
    auto a = expsim::sample_trials(model, params, spec, symmetric_conv(),
                                   {5000, 5000, 5000}, 42);
    auto b = expsim::sample_trials(model, params, spec, symmetric_conv(),
                                   {5000, 5000, 5000}, 42);
    CHECK(a.o_bar == b.o_bar);
    CHECK(a.z_bar == b.z_bar);
    CHECK(a.s_bar == b.s_bar);
  }
  SUBCASE("means converge to the evaluated expectations") {
    auto model = experiment_like(4);
    WitnessParams params{4, 2.73, 102.0};
    auto spec = DisplacementSpec::uniform(4, witness::alpha_f_zero());
    auto conv = symmetric_conv();
    auto summary = expsim::summarize(model, spec, conv);
    auto wv = expsim::value_from_summary(summary, params);

    const long long trials = 200000;
    auto sampled = expsim::sample_trials(model, params, spec, conv,
                                         {trials, trials, trials}, 7);

    // exact standard errors from the pattern distributions
    auto state = expsim::make_state(model);
    fock::PhaseAveraging avg{true, 0};
    auto stats_o = fock::click_stats(
        state, std::vector<fock::complexd>(4, spec.nominal[0]), avg, 0.0);
    double mo = 0.0, mo2 = 0.0;
    for (const auto& [mask, prob] : stats_o.pattern_prob) {
      double s = 4.0 - 2.0 * std::popcount(mask);
      double o = s * s - 4.0;
      mo += prob * o;
      mo2 += prob * o * o;
    }
    double se_o = std::sqrt((mo2 - mo * mo) / trials);
    CHECK(std::abs(sampled.o_bar - wv.triple.o) <= 5.0 * se_o + 1e-12);
    CHECK(std::abs(mo - wv.triple.o) <= 1e-10);

    auto stats_z = fock::click_stats(state, std::nullopt, avg, 0.0);
    double mz = 0.0, mz2 = 0.0;
    for (const auto& [mask, prob] : stats_z.pattern_prob) {
      double z = 0.0;
      if (mask == 0) z += params.lambda;
      if (std::popcount(mask) >= 2) z -= 12.0 + params.mu;
      mz += prob * z;
      mz2 += prob * z * z;
    }
    double se_z = std::sqrt((mz2 - mz * mz) / trials);
    CHECK(std::abs(sampled.z_bar - wv.triple.z) <= 5.0 * se_z + 1e-12);

    double p_cc = witness::local_multiphoton(state, 0, 0.0).p_cc;
    double score = -2.0 * 16.0 * 3.0;  // conservative convention
    double ms = p_cc * score;
    double se_s = std::sqrt(p_cc * (1 - p_cc) / trials) * std::abs(score);
    CHECK(std::abs(sampled.s_bar - ms) <= 5.0 * se_s + 1e-12);
    CHECK(std::abs(ms - wv.triple.s) <= 1e-10);
  }
}

TEST_CASE("p_star of the experiment-like model") {
  auto state = expsim::make_state(experiment_like(8));
  double p = witness::p_star(state, true);
  CHECK(p > 0.0);
  CHECK(p < 1e-3);
  CHECK(witness::p_star(state, false) == doctest::Approx(p).epsilon(1e-12));
}

TEST_CASE("no two-photon weight means no multi-photon terms") {
  for (double eta : {0.2, 0.6, 1.0}) {
    for (int n : {2, 4, 6}) {
      SourceModel model;
      model.parties = n;
      model.p = 0.0;
      model.eta = eta;
      auto state = expsim::make_state(model);
      CHECK(witness::p_star(state, true) <= 1e-14);
      auto per_n = fock::per_n_click_no_displacement(state, 0.0);
      double multi = 0.0;
      for (std::size_t k = 2; k < per_n.size(); ++k) multi += per_n[k];
      CHECK(multi <= 1e-14);
    }
  }
}

TEST_CASE("confidence interval ladder shrinks as 1/sqrt(n)") {
  auto model = experiment_like(4);
  WitnessParams params{4, 2.73, 102.0};
  auto spec = DisplacementSpec::uniform(4, witness::alpha_f_zero());
  auto conv = symmetric_conv();
  auto summary = expsim::summarize(model, spec, conv);
  double exact_o = summary.o;

  double delta_o = 2.0 * 12.0;
  double prev_width = 1e300;
  for (long long n : {25000, 50000, 100000, 200000}) {
    auto trials = expsim::sample_trials(model, params, spec, conv, {n, 1, 1}, 5);
    // Hoeffding 99% half-width for the o average
    double width = delta_o * std::sqrt(std::log(2.0 / 0.01) / (2.0 * n));
    CHECK(std::abs(trials.o_bar - exact_o) <= width);
    CHECK(width <= prev_width / std::sqrt(2.0) + 1e-12);
    prev_width = width;
  }
}

TEST_CASE("violation decreases with the two-photon weight") {
  expsim::TuneGrid grid;
  grid.lambda_points = 25;
  grid.mu_points = 25;
  grid.refine = 2;
  double prev = 1e300;
  for (double p : {0.0, 5e-3, 2e-2}) {
    auto model = experiment_like(6);
    model.p = p;
    auto tuned = expsim::tune_params(model, DisplacementSpec::uniform(6, witness::alpha_f_zero()),
                                     grid, symmetric_conv());
    CHECK(tuned.violation <= prev + 1e-9);
    prev = tuned.violation;
  }
}

TEST_CASE("a clean single-photon source violates at any size") {
  // p = 0 removes the two-photon penalty entirely; the fast path covers the
  // large-N rungs.
  auto model = experiment_like(2);
  model.p = 0.0;
  auto spec = DisplacementSpec::uniform(2, witness::alpha_f_zero());
  expsim::ScanOptions options;
  options.grid.lambda_points = 25;
  options.grid.mu_points = 25;
  options.grid.refine = 2;
  auto curve = expsim::scan_parties(model, spec, 22, 26, symmetric_conv(), options);
  for (const auto& point : curve) {
    CAPTURE(point.parties);
    CHECK(point.violation > 0.0);
  }
}

TEST_CASE("scan_eta edge cases") {
  SUBCASE("the vacuum limit reports no violating size") {
    // The single-photon coherence survives any transmission, so the collapse
    // needs dark counts to outweigh the vanishing signal.
    expsim::EtaScanOptions options;
    options.max_parties = 6;
    auto rows = expsim::scan_eta(experiment_like(2), {1e-5}, {{5e-3, 1e-4}},
                                 symmetric_conv(), options);
    CHECK(rows.size() == 1);
    CHECK(rows[0].n_max_parties == 0);
  }
  SUBCASE("more dark counts never help") {
    expsim::EtaScanOptions options;
    options.max_parties = 24;
    auto rows = expsim::scan_eta(experiment_like(2), {0.5}, {{5e-3, 1e-6}, {5e-3, 1e-5}},
                                 symmetric_conv(), options);
    CHECK(rows.size() == 2);
    CHECK(rows[1].n_max_parties <= rows[0].n_max_parties);
    CHECK(rows[0].n_max_parties >= 17);
  }
}

TEST_CASE("scan_parties smoke") {
  auto model = experiment_like(6);
  auto spec = DisplacementSpec::uniform(6, witness::alpha_f_zero());
  expsim::ScanOptions options;
  options.grid.lambda_points = 30;
  options.grid.mu_points = 30;
  options.grid.refine = 2;
  auto curve = expsim::scan_parties(model, spec, 3, 6, symmetric_conv(), options);
  CHECK(curve.size() == 4);
  for (const auto& point : curve) {
    CAPTURE(point.parties);
    CHECK(point.violation > 0.0);
    CHECK(point.bound >= point.lambda - 1e-9);
  }
  CHECK(expsim::last_positive_parties(curve) == 6);
}

TEST_SUITE_END();
