#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "gmewit/bisep.hpp"
#include "gmewit/fock.hpp"
#include "gmewit/witness.hpp"

namespace gmewit::expsim {

using witness::DisplacementSpec;
using witness::SigmaConvention;
using witness::WitnessParams;

// Heralded-source model: (|1><1| + p |2><2|)/(1+p) with herald-dark vacuum
// admixture d, a loss channel eta, a balanced N-port split and optional
// per-mode transmissions.
struct SourceModel {
  int parties = 0;
  double p = 5e-3;
  double eta = 0.3;
  std::optional<std::vector<double>> per_mode_eta;
  double p_dc = 0.0;
  double herald_dark_fraction = 0.0;
  int n_max = 2;

  void validate() const;
};

fock::TruncatedState make_state(const SourceModel& model,
                                std::size_t basis_guard = fock::kDefaultBasisGuard);

double dark_penalty(int parties, double p_dc);

struct Conventions {
  SigmaConvention sigma = SigmaConvention::conservative;
  bool symmetric_bipartitions = false;
  bool symmetric_modes = false;  // coincidence measured on mode 0 only
  fock::PhaseAveraging averaging{};
};

struct EvalOptions {
  int exact_guard = fock::kDefaultPatternGuard;  // reduced path beyond this
  bool force_fast = false;
  bool force_exact = false;
  bisep::WorstCaseOptions bound;
};

struct ScenarioReport {
  witness::ObservableTriple triple;
  bisep::BoundResult bound;
  double dark_penalty = 0.0;
  double violation = 0.0;  // o + z + s - bound - penalty
  WitnessParams params;
};

// Everything the witness value needs from the state; independent of
// (lambda, mu), so parameter tuning reuses one summary.
struct StateSummary {
  int parties = 0;
  double o = 0.0;           // <O_alpha>, dark-dressed
  double p0 = 0.0;          // no-click probability, dark-dressed
  double f_term = 0.0;      // sum_{i != j} F_ij P(i, j silent), dark-dressed
  double multi_click = 0.0; // P(>= 2 clicks), dark-dressed
  double sigma_sum = 0.0;   // estimate of <Sigma_{n>=2}> from coincidences
  double p_star = 0.0;
};

StateSummary summarize(const SourceModel& model, const DisplacementSpec& spec,
                       const Conventions& conv, const EvalOptions& options = {});

// Witness value o + z(lambda, mu) + s assembled from a summary.
witness::WitnessValue value_from_summary(const StateSummary& summary,
                                         const WitnessParams& params);

ScenarioReport evaluate(const SourceModel& model, const WitnessParams& params,
                        const DisplacementSpec& spec, const Conventions& conv,
                        const EvalOptions& options = {});

// --- subset analysis --------------------------------------------------------

struct SubsetRow {
  std::vector<int> subset;
  int size = 0;
  double lambda = 0.0, mu = 0.0;
  double value = 0.0, bound = 0.0, violation = 0.0;
  double one_minus_p0 = 0.0;
};

struct TuneGrid {
  double lambda_min = 0.1, lambda_max = 100.0;
  int lambda_points = 40;
  double mu_min = 1.0, mu_max = 1e4;
  int mu_points = 40;
  int refine = 0;  // local log-grid refinement rounds around the argmax
};

struct TuneResult {
  double lambda = 0.0, mu = 0.0;
  double violation = 0.0;
};

// Maximizes the violation over a log-spaced (lambda, mu) grid; ties break
// toward smaller lambda, then smaller mu.
TuneResult tune_params(const SourceModel& model, const DisplacementSpec& spec,
                       const TuneGrid& grid, const Conventions& conv,
                       const EvalOptions& options = {});

// Per-subset witness evaluation with the discarded parties traced out.
// lambda/mu are re-tuned per subset size when `tune` is set (the published
// per-size parameters are not stated); rows ordered by (size, lexicographic).
std::vector<SubsetRow> subset_analysis(const SourceModel& model,
                                       const std::optional<WitnessParams>& fixed_params,
                                       const DisplacementSpec& spec, const Conventions& conv,
                                       const TuneGrid& grid = {},
                                       const EvalOptions& options = {});

// --- finite-sample simulation -------------------------------------------------

struct TrialRequest {
  long long n = 0, m = 0, l = 0;
};

// Draws i.i.d. click patterns from the exact distributions (displaced for
// o-trials, bare for z-trials, mode-0 coincidence for s-trials) and scores
// them per the witness decomposition.  Deterministic for a fixed seed.
struct SampledTrials {
  double o_bar = 0.0, z_bar = 0.0, s_bar = 0.0;
  long long n = 0, m = 0, l = 0;
  std::uint64_t seed = 0;
};

SampledTrials sample_trials(const SourceModel& model, const WitnessParams& params,
                            const DisplacementSpec& spec, const Conventions& conv,
                            const TrialRequest& counts, std::uint64_t seed,
                            const EvalOptions& options = {});

// --- scans ---------------------------------------------------------------------

struct ScanPoint {
  int parties = 0;
  double lambda = 0.0, mu = 0.0;
  double value = 0.0, bound = 0.0, penalty = 0.0, violation = 0.0;
};

struct ScanOptions {
  std::optional<WitnessParams> fixed_params;  // tune per N when absent
  TuneGrid grid{.refine = 3};
  EvalOptions eval;
};

std::vector<ScanPoint> scan_parties(const SourceModel& model_template,
                                    const DisplacementSpec& spec_template, int n_min,
                                    int n_max, const Conventions& conv,
                                    const ScanOptions& options = {});

int last_positive_parties(const std::vector<ScanPoint>& curve);

struct EtaScanCase {
  double p = 0.0;
  double p_dc = 0.0;
};

struct EtaScanRow {
  double eta = 0.0;
  double p = 0.0, p_dc = 0.0;
  int n_max_parties = 0;  // 0: witness never violated
  bool capped = false;    // search hit the party cap while still violating
};

struct EtaScanOptions {
  int max_parties = 64;
  double alpha = 0.0;  // 0 -> sqrt(ln 2)
  TuneGrid grid{.refine = 3};
  EvalOptions eval;
};

std::vector<EtaScanRow> scan_eta(const SourceModel& model_template,
                                 const std::vector<double>& eta_grid,
                                 const std::vector<EtaScanCase>& cases,
                                 const Conventions& conv, const EtaScanOptions& options = {});

}  // namespace gmewit::expsim
