#include "gmewit/stats.hpp"

#include <cmath>

namespace gmewit::stats {

Ranges ranges(const witness::WitnessParams& params, const Eigen::MatrixXd& F,
              witness::SigmaConvention conv) {
  params.validate();
  const int n = params.parties;
  if (F.rows() != n || F.cols() != n) {
    throw ValidationError("ranges: F matrix dimension mismatch");
  }
  double sum_f = 0.0;  // ordered pairs
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j) sum_f += F(i, j);
    }
  }
  const double nn1 = static_cast<double>(n) * (n - 1);
  Ranges out;
  out.delta_o = 2.0 * nn1;
  out.delta_z = params.lambda + sum_f + nn1 + params.mu;
  out.delta_s = witness::sigma_factor(conv) * static_cast<double>(n) * n * (n - 1);
  return out;
}

void TrialCounts::validate() const {
  if (n < 1 || m < 1 || l < 1) throw ValidationError("TrialCounts: counts must be >= 1");
  if (s_bar > 0.0) throw ValidationError("TrialCounts: s_bar must be <= 0");
  if (!std::isfinite(o_bar) || !std::isfinite(z_bar) || !std::isfinite(s_bar)) {
    throw ValidationError("TrialCounts: means must be finite");
  }
}

double log10_p_value(const TrialCounts& counts, double bound, const Ranges& ranges) {
  counts.validate();
  double t = counts.o_bar + counts.z_bar + counts.s_bar - bound;
  if (t <= 0.0) return 0.0;
  double total = static_cast<double>(counts.n) + counts.m + counts.l;
  double denom = counts.n * ranges.delta_o * ranges.delta_o +
                 counts.m * ranges.delta_z * ranges.delta_z +
                 counts.l * ranges.delta_s * ranges.delta_s;
  if (!(denom > 0.0)) throw ValidationError("log10_p_value: degenerate ranges");
  return -(2.0 * total * total * t * t) / (denom * std::log(10.0));
}

long long min_trials(double t, const Ranges& ranges, double target_log10_p) {
  return min_trials_weighted(t, ranges, target_log10_p, 1.0, 1.0, 1.0);
}

long long min_trials_weighted(double t, const Ranges& ranges, double target_log10_p,
                              double w_o, double w_z, double w_s) {
  if (!(t > 0.0)) throw ValidationError("min_trials: expected violation t must be positive");
  if (!(target_log10_p < 0.0)) {
    throw ValidationError("min_trials: target log10 p must be negative");
  }
  if (!(w_o > 0.0 && w_z > 0.0 && w_s > 0.0)) {
    throw ValidationError("min_trials: weights must be positive");
  }
  // p = exp(-2 ((w_o+w_z+w_s) n)^2 t^2 / (n (w_o do^2 + w_z dz^2 + w_s ds^2)))
  double wsum = w_o + w_z + w_s;
  double wd2 = w_o * ranges.delta_o * ranges.delta_o + w_z * ranges.delta_z * ranges.delta_z +
               w_s * ranges.delta_s * ranges.delta_s;
  double n = (-target_log10_p * std::log(10.0)) * wd2 / (2.0 * wsum * wsum * t * t);
  return static_cast<long long>(std::ceil(n));
}

}  // namespace gmewit::stats
