#pragma once

#include <cstdint>

#include <Eigen/Dense>

#include "gmewit/witness.hpp"

namespace gmewit::stats {

// Hoeffding ranges of the three observables.
struct Ranges {
  double delta_o = 0.0;  // 2 N (N-1)
  double delta_z = 0.0;  // lambda + sum_{i != j} F_ij + N(N-1) + mu
  double delta_s = 0.0;  // N^2 (N-1), doubled under the conservative convention
};

Ranges ranges(const witness::WitnessParams& params, const Eigen::MatrixXd& F,
              witness::SigmaConvention conv);

// Sample means and evaluation counts of the three observables.
struct TrialCounts {
  double o_bar = 0.0;
  double z_bar = 0.0;
  double s_bar = 0.0;
  long long n = 0, m = 0, l = 0;
  std::uint64_t seed = 0;

  void validate() const;
};

// log10 of the Hoeffding p-value for the null hypothesis "biseparable":
// p = exp(-2 (n+m+l)^2 t^2 / (n do^2 + m dz^2 + l ds^2)) with
// t = o_bar + z_bar + s_bar - bound.  Returns 0 (p = 1) when t <= 0.
// Carried in log space; never underflows.
double log10_p_value(const TrialCounts& counts, double bound, const Ranges& ranges);

// Smallest equal count n = m = l reaching log10 p <= target for an expected
// violation t.
long long min_trials(double t, const Ranges& ranges, double target_log10_p);

// Count planning with fixed ratios (w_o, w_z, w_s): returns the base n such
// that counts (w_o n, w_z n, w_s n) reach the target.
long long min_trials_weighted(double t, const Ranges& ranges, double target_log10_p,
                              double w_o, double w_z, double w_s);

}  // namespace gmewit::stats
