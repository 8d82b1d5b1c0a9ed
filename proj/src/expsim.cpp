#include "gmewit/expsim.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <random>

#include "gmewit/parallel.hpp"

namespace gmewit::expsim {

using fock::TruncatedState;

void SourceModel::validate() const {
  if (parties < 1) throw ValidationError("SourceModel: parties must be >= 1");
  if (!(p >= 0.0)) throw ValidationError("SourceModel: p must be >= 0");
  if (!(eta >= 0.0 && eta <= 1.0)) throw ValidationError("SourceModel: eta must lie in [0, 1]");
  if (!(p_dc >= 0.0 && p_dc <= 1.0)) {
    throw ValidationError("SourceModel: p_dc must lie in [0, 1]");
  }
  if (!(herald_dark_fraction >= 0.0 && herald_dark_fraction < 1.0)) {
    throw ValidationError("SourceModel: herald_dark_fraction must lie in [0, 1)");
  }
  int needed = p > 0.0 ? 2 : 1;
  if (n_max < needed) {
    throw ValidationError("SourceModel: n_max too small for the two-photon term");
  }
  if (per_mode_eta) {
    if (static_cast<int>(per_mode_eta->size()) != parties) {
      throw ValidationError("SourceModel: per_mode_eta length must equal parties");
    }
    for (double e : *per_mode_eta) {
      if (!(e >= 0.0 && e <= 1.0)) {
        throw ValidationError("SourceModel: per_mode_eta entries must lie in [0, 1]");
      }
    }
  }
}

namespace {

// Heralded single-mode state after the dark-count vacuum admixture and the
// loss channel; diagonal in the number basis.
TruncatedState heralded_mode(const SourceModel& model) {
  fock::Basis b1(1, model.n_max);
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(b1.size(), b1.size());
  double d = model.herald_dark_fraction;
  rho(0, 0) = d;
  rho(1, 1) = (1.0 - d) / (1.0 + model.p);
  if (model.p > 0.0) rho(2, 2) = (1.0 - d) * model.p / (1.0 + model.p);
  TruncatedState state{b1, std::move(rho)};
  return fock::apply_loss(state, model.eta);
}

bool uniform_eta(const SourceModel& model) {
  if (!model.per_mode_eta) return true;
  const auto& v = *model.per_mode_eta;
  return std::all_of(v.begin(), v.end(), [&](double e) { return e == v.front(); });
}

}  // namespace

TruncatedState make_state(const SourceModel& model, std::size_t basis_guard) {
  model.validate();
  TruncatedState mode = heralded_mode(model);
  TruncatedState state = fock::split_balanced(mode, model.parties, basis_guard);
  if (model.per_mode_eta) state = fock::apply_loss(state, *model.per_mode_eta);
  return state;
}

double dark_penalty(int parties, double p_dc) {
  if (parties < 1) throw ValidationError("dark_penalty: parties must be >= 1");
  if (!(p_dc >= 0.0 && p_dc <= 1.0)) throw ValidationError("dark_penalty: p_dc in [0, 1]");
  return 2.0 * static_cast<double>(parties) * parties * (parties - 1) * p_dc;
}

// --- summaries ---------------------------------------------------------------

namespace {

StateSummary summarize_exact(const SourceModel& model, const DisplacementSpec& spec,
                             const Conventions& conv, std::size_t basis_guard) {
  if (model.parties >= 32) {
    throw DimensionGuardError("summarize: exact path limited to 31 modes");
  }
  TruncatedState state = make_state(model, basis_guard);
  const int n = model.parties;
  const double p_dc = model.p_dc;

  StateSummary out;
  out.parties = n;
  out.o = witness::expected_O(state, spec.nominal, conv.averaging, p_dc);

  fock::PhaseAveraging off{false, 0};
  std::uint32_t full = (1u << n) - 1;
  out.p0 = fock::noclick_set_prob_mask(state, full, std::nullopt, off) *
           fock::dark_scale(p_dc, n);

  Eigen::MatrixXd F = witness::F_coeffs(spec);
  out.f_term = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double pair = fock::noclick_set_prob_mask(state, (1u << i) | (1u << j), std::nullopt,
                                                off) *
                    fock::dark_scale(p_dc, 2);
      out.f_term += (F(i, j) + F(j, i)) * pair;
    }
  }

  auto per_n = fock::per_n_click_no_displacement(state, p_dc);
  double tail = 0.0;
  for (std::size_t k = 2; k < per_n.size(); ++k) tail += per_n[k];
  out.multi_click = fock::checked_probability(tail);

  double factor = witness::sigma_factor(conv.sigma);
  double local_sum = 0.0;
  if (conv.symmetric_modes) {
    double p_cc = witness::local_multiphoton(state, 0, p_dc).p_cc;
    out.sigma_sum = n * factor * p_cc;
    local_sum = n * 2.0 * p_cc;
  } else {
    for (int i = 0; i < n; ++i) {
      double p_cc = witness::local_multiphoton(state, i, p_dc).p_cc;
      out.sigma_sum += factor * p_cc;
      local_sum += 2.0 * p_cc;
    }
  }
  out.p_star = out.multi_click + local_sum;
  return out;
}

// Reduced two-mode path for large N: keeping k modes of a balanced N-port
// output equals a loss of k/N followed by a balanced k-port split, so the
// pair correlator, the pair-vacuum term and the coincidence probability all
// come from two-mode states; the click-count terms have closed forms from
// the single-mode occupation weights.
StateSummary summarize_fast(const SourceModel& model, const DisplacementSpec& spec,
                            const Conventions& conv) {
  if (!uniform_eta(model)) {
    throw DimensionGuardError(
        "evaluate: asymmetric per-mode transmissions require the exact path");
  }
  if (!spec.uniform_values()) {
    throw DimensionGuardError(
        "evaluate: non-uniform displacement amplitudes require the exact path");
  }
  if (model.n_max > 2) {
    throw DimensionGuardError("evaluate: reduced path supports n_max <= 2");
  }
  SourceModel folded = model;
  if (model.per_mode_eta) {
    folded.eta = model.eta * model.per_mode_eta->front();
    folded.per_mode_eta.reset();
  }
  const int n = model.parties;
  const double p_dc = model.p_dc;
  TruncatedState mode = heralded_mode(folded);

  double q0 = mode.rho(0, 0).real();
  double q1 = mode.rho(1, 1).real();
  double q2 = mode.n_max() >= 2 ? mode.rho(2, 2).real() : 0.0;

  StateSummary out;
  out.parties = n;

  TruncatedState pair_state =
      fock::split_balanced(fock::apply_loss(mode, 2.0 / n), 2);
  out.o = n * static_cast<double>(n - 1) *
          witness::pair_correlator(pair_state, 0, 1, {spec.nominal[0], spec.nominal[0]},
                                   conv.averaging, p_dc);

  out.p0 = fock::dark_scale(p_dc, n) * q0;

  fock::PhaseAveraging off{false, 0};
  double pair_silent = fock::noclick_set_prob_mask(pair_state, 0b11, std::nullopt, off) *
                       fock::dark_scale(p_dc, 2);
  Eigen::MatrixXd F = witness::F_coeffs(
      witness::DisplacementSpec::uniform_box(2, spec.nominal[0], spec.box_min[0],
                                             spec.box_max[0]));
  out.f_term = n * static_cast<double>(n - 1) * F(0, 1) * pair_silent;

  // True click counts: one click from |1>, from |2> both photons bunch into
  // one mode with probability 1/N.
  double p1_true = q1 + q2 / n;
  double keep = 1.0 - p_dc;
  double p0_dc = std::pow(keep, n) * q0;
  double p1_dc = q0 * n * p_dc * std::pow(keep, n - 1) + p1_true * std::pow(keep, n - 1);
  out.multi_click = fock::checked_probability(1.0 - p0_dc - p1_dc);

  TruncatedState mode_state = fock::apply_loss(mode, 1.0 / n);
  double p_cc = witness::local_multiphoton(mode_state, 0, p_dc).p_cc;
  out.sigma_sum = n * witness::sigma_factor(conv.sigma) * p_cc;
  out.p_star = out.multi_click + n * 2.0 * p_cc;
  return out;
}

}  // namespace

StateSummary summarize(const SourceModel& model, const DisplacementSpec& spec,
                       const Conventions& conv, const EvalOptions& options) {
  model.validate();
  spec.validate();
  if (spec.modes() != model.parties) {
    throw ValidationError("summarize: spec/model mode mismatch");
  }
  if (options.force_fast && options.force_exact) {
    throw ValidationError("summarize: cannot force both paths");
  }
  bool exact = model.parties <= options.exact_guard;
  if (options.force_fast) exact = false;
  if (options.force_exact) exact = true;
  return exact ? summarize_exact(model, spec, conv, fock::kDefaultBasisGuard)
               : summarize_fast(model, spec, conv);
}

witness::WitnessValue value_from_summary(const StateSummary& summary,
                                         const WitnessParams& params) {
  params.validate();
  if (params.parties != summary.parties) {
    throw ValidationError("value_from_summary: party mismatch");
  }
  const double nn1 = static_cast<double>(summary.parties) * (summary.parties - 1);
  witness::WitnessValue out;
  out.triple.o = summary.o;
  out.triple.z = params.lambda * summary.p0 - summary.f_term -
                 (nn1 + params.mu) * summary.multi_click;
  out.triple.s = -nn1 * summary.sigma_sum;
  out.triple.p0 = summary.p0;
  out.triple.p_star = summary.p_star;
  out.value = out.triple.o + out.triple.z + out.triple.s;
  return out;
}

ScenarioReport evaluate(const SourceModel& model, const WitnessParams& params,
                        const DisplacementSpec& spec, const Conventions& conv,
                        const EvalOptions& options) {
  params.validate();
  if (params.parties != model.parties) {
    throw ValidationError("evaluate: params/model party mismatch");
  }
  StateSummary summary = summarize(model, spec, conv, options);

  bisep::WorstCaseOptions bound_options = options.bound;
  bound_options.symmetric_partitions = conv.symmetric_bipartitions;

  ScenarioReport report;
  report.params = params;
  auto wv = value_from_summary(summary, params);
  report.triple = wv.triple;
  report.bound = bisep::worst_case_bound(params, spec, bound_options);
  report.dark_penalty = dark_penalty(model.parties, model.p_dc);
  report.violation = wv.value - report.bound.value - report.dark_penalty;
  return report;
}

// --- tuning ----------------------------------------------------------------------

namespace {

std::vector<double> log_grid(double lo, double hi, int points) {
  if (!(lo > 0.0) || !(hi >= lo) || points < 1) {
    throw ValidationError("tune_params: invalid grid");
  }
  std::vector<double> out;
  if (points == 1 || hi == lo) {
    out.push_back(lo);
    return out;
  }
  for (int i = 0; i < points; ++i) {
    out.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / (points - 1)));
  }
  return out;
}

struct GridEval {
  double violation;
  double lambda, mu;
};

// Violation over a lambda x mu grid for a fixed state summary.
GridEval best_on_grid(const StateSummary& summary, const DisplacementSpec& spec,
                      const std::vector<double>& lambdas,
                      const std::vector<double>& mus, double penalty,
                      const bisep::WorstCaseOptions& bound_options) {
  std::vector<GridEval> cells(lambdas.size() * mus.size());
  parallel_for(cells.size(), [&](std::size_t idx) {
    std::size_t li = idx / mus.size();
    std::size_t mi = idx % mus.size();
    WitnessParams params{summary.parties, lambdas[li], mus[mi]};
    double value = value_from_summary(summary, params).value;
    double bound = bisep::worst_case_bound(params, spec, bound_options).value;
    cells[idx] = {value - bound - penalty, lambdas[li], mus[mi]};
  });
  // Ties break toward smaller lambda, then smaller mu (ascending scan).
  GridEval best = cells[0];
  for (const auto& cell : cells) {
    if (cell.violation > best.violation) best = cell;
  }
  return best;
}

bisep::WorstCaseOptions tuning_bound_options(const Conventions& conv,
                                             const EvalOptions& options) {
  bisep::WorstCaseOptions bound = options.bound;
  bound.symmetric_partitions = conv.symmetric_bipartitions;
  // The grid search tolerates a slightly coarser angle scan; the returned
  // parameters are re-evaluated with the defaults by the callers.
  bound.angle.grid_points = std::min(bound.angle.grid_points, 601);
  bound.angle.certify = false;
  return bound;
}

}  // namespace

TuneResult tune_params(const SourceModel& model, const DisplacementSpec& spec,
                       const TuneGrid& grid, const Conventions& conv,
                       const EvalOptions& options) {
  StateSummary summary = summarize(model, spec, conv, options);
  double penalty = dark_penalty(model.parties, model.p_dc);
  auto bound_options = tuning_bound_options(conv, options);

  std::vector<double> lambdas = log_grid(grid.lambda_min, grid.lambda_max, grid.lambda_points);
  std::vector<double> mus = log_grid(grid.mu_min, grid.mu_max, grid.mu_points);
  GridEval best = best_on_grid(summary, spec, lambdas, mus, penalty, bound_options);

  double lam_step = grid.lambda_points > 1
                        ? std::pow(grid.lambda_max / grid.lambda_min,
                                   1.0 / (grid.lambda_points - 1))
                        : 1.0;
  double mu_step =
      grid.mu_points > 1 ? std::pow(grid.mu_max / grid.mu_min, 1.0 / (grid.mu_points - 1))
                         : 1.0;
  for (int round = 0; round < grid.refine; ++round) {
    std::vector<double> lam_local = log_grid(best.lambda / lam_step, best.lambda * lam_step, 7);
    std::vector<double> mu_local = log_grid(best.mu / mu_step, best.mu * mu_step, 7);
    // The violation is concave in (lambda, mu) but the coarse argmax can sit
    // in a corner of the grid along one axis; the full-axis cross sweeps let
    // a refinement round escape along either coordinate.
    for (const auto& [lams, muss] :
         {std::pair(lam_local, mu_local), std::pair(lam_local, mus),
          std::pair(lambdas, mu_local)}) {
      GridEval refined = best_on_grid(summary, spec, lams, muss, penalty, bound_options);
      if (refined.violation > best.violation) best = refined;
    }
    lam_step = std::pow(lam_step, 1.0 / 3.0);
    mu_step = std::pow(mu_step, 1.0 / 3.0);
  }
  return {best.lambda, best.mu, best.violation};
}

// --- subset analysis ---------------------------------------------------------------

namespace {

std::vector<std::vector<int>> subsets_of_size(int n, int k) {
  std::vector<std::vector<int>> out;
  std::vector<int> cur(k);
  std::iota(cur.begin(), cur.end(), 0);
  while (true) {
    out.push_back(cur);
    int pos = k - 1;
    while (pos >= 0 && cur[pos] == n - k + pos) --pos;
    if (pos < 0) break;
    ++cur[pos];
    for (int i = pos + 1; i < k; ++i) cur[i] = cur[i - 1] + 1;
  }
  return out;
}

DisplacementSpec restrict_spec(const DisplacementSpec& spec, const std::vector<int>& subset) {
  DisplacementSpec out;
  for (int m : subset) {
    out.nominal.push_back(spec.nominal[m]);
    out.box_min.push_back(spec.box_min[m]);
    out.box_max.push_back(spec.box_max[m]);
  }
  return out;
}

}  // namespace

std::vector<SubsetRow> subset_analysis(const SourceModel& model,
                                       const std::optional<WitnessParams>& fixed_params,
                                       const DisplacementSpec& spec, const Conventions& conv,
                                       const TuneGrid& grid, const EvalOptions& options) {
  model.validate();
  spec.validate();
  const int n = model.parties;
  if (n > options.exact_guard) {
    throw DimensionGuardError("subset_analysis: requires the exact path");
  }
  TruncatedState state = make_state(model);

  std::vector<SubsetRow> rows;
  for (int size = 2; size <= n; ++size) {
    auto subsets = subsets_of_size(n, size);

    // Shared parameters per size: either the fixed pair or a tune on the
    // representative (first) subset.
    WitnessParams params_n;
    if (fixed_params) {
      params_n = {size, fixed_params->lambda, fixed_params->mu};
    } else {
      SourceModel sub_model = model;
      // Tracing out N - size modes of the balanced split equals a loss of
      // size/N followed by a balanced size-port split.
      sub_model.parties = size;
      sub_model.eta = model.eta * static_cast<double>(size) / n;
      if (model.per_mode_eta) {
        std::vector<double> eta_sub;
        for (int m : subsets.front()) eta_sub.push_back((*model.per_mode_eta)[m]);
        sub_model.per_mode_eta = eta_sub;
      }
      TuneResult tuned = tune_params(sub_model, restrict_spec(spec, subsets.front()),
                                     grid, conv, options);
      params_n = {size, tuned.lambda, tuned.mu};
    }

    // The bound only depends on the restricted spec; cache it for uniform specs.
    std::optional<double> cached_bound;
    bisep::WorstCaseOptions bound_options = options.bound;
    bound_options.symmetric_partitions = conv.symmetric_bipartitions;

    std::vector<SubsetRow> size_rows(subsets.size());
    if (spec.uniform_values()) {
      cached_bound = bisep::worst_case_bound(params_n, restrict_spec(spec, subsets.front()),
                                             bound_options)
                         .value;
    }
    parallel_for(subsets.size(), [&](std::size_t si) {
      const auto& subset = subsets[si];
      TruncatedState reduced = fock::partial_trace(state, subset);
      DisplacementSpec sub_spec = restrict_spec(spec, subset);
      auto wv = witness::witness_value(reduced, params_n, sub_spec, conv.averaging,
                                       model.p_dc, conv.sigma, conv.symmetric_modes);
      double bound = cached_bound
                         ? *cached_bound
                         : bisep::worst_case_bound(params_n, sub_spec, bound_options).value;
      SubsetRow row;
      row.subset = subset;
      row.size = size;
      row.lambda = params_n.lambda;
      row.mu = params_n.mu;
      row.value = wv.value;
      row.bound = bound;
      row.violation = wv.value - bound - dark_penalty(size, model.p_dc);
      row.one_minus_p0 = 1.0 - wv.triple.p0;
      size_rows[si] = std::move(row);
    });
    for (auto& row : size_rows) rows.push_back(std::move(row));
  }
  return rows;
}

// --- trial sampling -----------------------------------------------------------------

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class PatternSampler {
 public:
  PatternSampler(const std::map<std::uint32_t, double>& probs, std::uint64_t seed)
      : rng_(seed) {
    double acc = 0.0;
    for (const auto& [mask, p] : probs) {
      acc += p;
      masks_.push_back(mask);
      cdf_.push_back(acc);
    }
    if (std::abs(acc - 1.0) > 1e-9) {
      throw ConsistencyError("PatternSampler: distribution does not sum to 1");
    }
    cdf_.back() = 1.0;
  }

  std::uint32_t draw() {
    double u = uniform();
    auto it = std::lower_bound(cdf_.begin(), cdf_.end(), u);
    std::size_t idx = it == cdf_.end() ? cdf_.size() - 1 : it - cdf_.begin();
    return masks_[idx];
  }

 private:
  double uniform() {
    return (rng_() >> 11) * 0x1.0p-53;  // [0, 1), platform independent
  }
  std::mt19937_64 rng_;
  std::vector<std::uint32_t> masks_;
  std::vector<double> cdf_;
};

}  // namespace

SampledTrials sample_trials(const SourceModel& model, const WitnessParams& params,
                            const DisplacementSpec& spec, const Conventions& conv,
                            const TrialRequest& counts, std::uint64_t seed,
                            const EvalOptions& options) {
  model.validate();
  params.validate();
  spec.validate();
  if (counts.n < 1 || counts.m < 1 || counts.l < 1) {
    throw ValidationError("sample_trials: counts must be >= 1");
  }
  const int n = model.parties;
  if (n > options.exact_guard) {
    throw DimensionGuardError("sample_trials: requires the exact pattern path");
  }
  TruncatedState state = make_state(model);

  SampledTrials out;
  out.n = counts.n;
  out.m = counts.m;
  out.l = counts.l;
  out.seed = seed;

  std::vector<fock::complexd> alphas(spec.nominal.begin(), spec.nominal.end());

  {  // o-trials: displaced patterns, o_k = (sum_i s_i)^2 - N
    auto stats = fock::click_stats(state, alphas, conv.averaging, model.p_dc,
                                   options.exact_guard);
    PatternSampler sampler(stats.pattern_prob, splitmix64(seed ^ 0x6f6f6f6fULL));
    long double acc = 0.0;
    for (long long k = 0; k < counts.n; ++k) {
      int clicks = std::popcount(sampler.draw());
      double s = static_cast<double>(n) - 2.0 * clicks;
      acc += s * s - n;
    }
    out.o_bar = static_cast<double>(acc / counts.n);
  }

  Eigen::MatrixXd F = witness::F_coeffs(spec);
  {  // z-trials: bare patterns
    auto stats = fock::click_stats(state, std::nullopt, conv.averaging, model.p_dc,
                                   options.exact_guard);
    PatternSampler sampler(stats.pattern_prob, splitmix64(seed ^ 0x7a7a7a7aULL));
    const double nn1 = static_cast<double>(n) * (n - 1);
    long double acc = 0.0;
    for (long long k = 0; k < counts.m; ++k) {
      std::uint32_t clicks = sampler.draw();
      double z = 0.0;
      if (clicks == 0) z += params.lambda;
      for (int i = 0; i < n; ++i) {
        if (clicks & (1u << i)) continue;
        for (int j = i + 1; j < n; ++j) {
          if (!(clicks & (1u << j))) z -= F(i, j) + F(j, i);
        }
      }
      if (std::popcount(clicks) >= 2) z -= nn1 + params.mu;
      acc += z;
    }
    out.z_bar = static_cast<double>(acc / counts.m);
  }

  {  // s-trials: coincidence on a balanced split of mode 0
    TruncatedState two = fock::split_balanced(fock::partial_trace(state, {0}), 2);
    auto stats = fock::click_stats(two, std::nullopt, conv.averaging, model.p_dc,
                                   options.exact_guard);
    PatternSampler sampler(stats.pattern_prob, splitmix64(seed ^ 0x73737373ULL));
    double score = -witness::sigma_factor(conv.sigma) * static_cast<double>(n) * n * (n - 1);
    long double acc = 0.0;
    for (long long k = 0; k < counts.l; ++k) {
      if (sampler.draw() == 0b11) acc += score;
    }
    out.s_bar = static_cast<double>(acc / counts.l);
  }
  return out;
}

// --- scans ------------------------------------------------------------------------

std::vector<ScanPoint> scan_parties(const SourceModel& model_template,
                                    const DisplacementSpec& spec_template, int n_min,
                                    int n_max, const Conventions& conv,
                                    const ScanOptions& options) {
  if (n_min < 2 || n_max < n_min) throw ValidationError("scan_parties: invalid N range");
  if (!spec_template.uniform_values()) {
    throw ValidationError("scan_parties: requires a uniform displacement spec");
  }
  std::vector<ScanPoint> out;
  for (int n = n_min; n <= n_max; ++n) {
    SourceModel model = model_template;
    model.parties = n;
    DisplacementSpec spec = witness::DisplacementSpec::uniform_box(
        n, spec_template.nominal[0], spec_template.box_min[0], spec_template.box_max[0]);
    WitnessParams params;
    if (options.fixed_params) {
      params = {n, options.fixed_params->lambda, options.fixed_params->mu};
    } else {
      TuneResult tuned = tune_params(model, spec, options.grid, conv, options.eval);
      params = {n, tuned.lambda, tuned.mu};
    }
    ScenarioReport report = evaluate(model, params, spec, conv, options.eval);
    out.push_back({n, params.lambda, params.mu,
                   report.triple.o + report.triple.z + report.triple.s, report.bound.value,
                   report.dark_penalty, report.violation});
  }
  return out;
}

int last_positive_parties(const std::vector<ScanPoint>& curve) {
  int last = 0;
  for (const auto& point : curve) {
    if (point.violation > 0.0) last = point.parties;
  }
  return last;
}

std::vector<EtaScanRow> scan_eta(const SourceModel& model_template,
                                 const std::vector<double>& eta_grid,
                                 const std::vector<EtaScanCase>& cases,
                                 const Conventions& conv, const EtaScanOptions& options) {
  if (eta_grid.empty() || cases.empty()) {
    throw ValidationError("scan_eta: empty grid or case list");
  }
  for (double e : eta_grid) {
    if (!(e > 0.0 && e <= 1.0)) throw ValidationError("scan_eta: eta must lie in (0, 1]");
  }
  double alpha = options.alpha > 0.0 ? options.alpha : witness::alpha_f_zero();

  std::vector<EtaScanRow> rows(cases.size() * eta_grid.size());
  parallel_for(rows.size(), [&](std::size_t idx) {
    const EtaScanCase& c = cases[idx / eta_grid.size()];
    double eta = eta_grid[idx % eta_grid.size()];

    EtaScanRow row;
    row.eta = eta;
    row.p = c.p;
    row.p_dc = c.p_dc;

    TuneGrid coarse = options.grid;
    coarse.refine = 0;
    int last_positive = 0;
    std::vector<TuneResult> tuned_by_n(options.max_parties + 1);
    for (int n = 2; n <= options.max_parties; ++n) {
      SourceModel model = model_template;
      model.parties = n;
      model.eta = eta;
      model.p = c.p;
      model.p_dc = c.p_dc;
      auto spec = witness::DisplacementSpec::uniform(n, alpha);
      // Coarse tune first; confirm a failure with the refined grid before
      // stopping the climb.
      TuneResult tuned = tune_params(model, spec, coarse, conv, options.eval);
      if (tuned.violation <= 0.0) {
        tuned = tune_params(model, spec, options.grid, conv, options.eval);
      }
      tuned_by_n[n] = tuned;
      if (tuned.violation > 0.0) {
        last_positive = n;
        if (n == options.max_parties) row.capped = true;
      } else {
        break;
      }
    }
    // The climb used a fast bound; accept the threshold only after the
    // certified bound confirms the violation.
    while (last_positive >= 2) {
      SourceModel model = model_template;
      model.parties = last_positive;
      model.eta = eta;
      model.p = c.p;
      model.p_dc = c.p_dc;
      auto spec = witness::DisplacementSpec::uniform(last_positive, alpha);
      WitnessParams params{last_positive, tuned_by_n[last_positive].lambda,
                           tuned_by_n[last_positive].mu};
      if (evaluate(model, params, spec, conv, options.eval).violation > 0.0) break;
      row.capped = false;
      --last_positive;
    }
    row.n_max_parties = last_positive < 2 ? 0 : last_positive;
    rows[idx] = std::move(row);
  });
  return rows;
}

}  // namespace gmewit::expsim
