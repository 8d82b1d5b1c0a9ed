#include "gmewit/witness.hpp"

#include <algorithm>
#include <cmath>

namespace gmewit::witness {

using fock::TruncatedState;

void WitnessParams::validate() const {
  if (parties < 2) throw ValidationError("WitnessParams: parties must be >= 2");
  if (!(lambda > 0.0)) throw ValidationError("WitnessParams: lambda must be positive");
  if (!(mu > 0.0)) throw ValidationError("WitnessParams: mu must be positive");
}

DisplacementSpec DisplacementSpec::uniform(int modes, double alpha) {
  return uniform_box(modes, alpha, alpha, alpha);
}

DisplacementSpec DisplacementSpec::uniform_box(int modes, double alpha, double lo, double hi) {
  DisplacementSpec spec;
  spec.nominal.assign(modes, alpha);
  spec.box_min.assign(modes, lo);
  spec.box_max.assign(modes, hi);
  spec.validate();
  return spec;
}

bool DisplacementSpec::degenerate() const {
  for (int i = 0; i < modes(); ++i) {
    if (box_min[i] != box_max[i]) return false;
  }
  return true;
}

bool DisplacementSpec::uniform_values() const {
  for (int i = 1; i < modes(); ++i) {
    if (nominal[i] != nominal[0] || box_min[i] != box_min[0] || box_max[i] != box_max[0]) {
      return false;
    }
  }
  return true;
}

void DisplacementSpec::validate() const {
  if (nominal.empty() || nominal.size() != box_min.size() || nominal.size() != box_max.size()) {
    throw ValidationError("DisplacementSpec: nominal/box length mismatch");
  }
  for (int i = 0; i < modes(); ++i) {
    if (!(box_min[i] >= 0.0)) {
      throw ValidationError("DisplacementSpec: box_min must be >= 0 (mode " +
                            std::to_string(i) + ")");
    }
    if (box_min[i] > box_max[i]) {
      throw ValidationError("DisplacementSpec: inverted box on mode " + std::to_string(i));
    }
    if (nominal[i] < box_min[i] || nominal[i] > box_max[i]) {
      throw ValidationError("DisplacementSpec: nominal outside box on mode " +
                            std::to_string(i));
    }
  }
}

double sigma_factor(SigmaConvention c) {
  return c == SigmaConvention::conservative ? 2.0 : 1.0;
}

Coefficients fgh(double alpha) {
  if (alpha < 0.0) throw ValidationError("fgh: alpha must be >= 0");
  double e = std::exp(-alpha * alpha);
  return {2.0 * e - 1.0, 2.0 * alpha * e, 2.0 * alpha * alpha * e - 1.0};
}

double alpha_f_zero() { return std::sqrt(std::log(2.0)); }

Eigen::MatrixXd O_restricted(const std::vector<double>& alphas) {
  const int n = static_cast<int>(alphas.size());
  std::vector<Coefficients> c(n);
  for (int i = 0; i < n; ++i) c[i] = fgh(alphas[i]);

  double sum_f = 0.0;
  for (const auto& ci : c) sum_f += ci.f;
  double sum_ff = 0.0;  // ordered pairs i != j
  for (int i = 0; i < n; ++i) sum_ff += c[i].f * (sum_f - c[i].f);

  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n + 1, n + 1);
  out(0, 0) = sum_ff;
  for (int k = 0; k < n; ++k) {
    double sum_f_nok = sum_f - c[k].f;
    double sum_ff_nok = 0.0;
    for (int i = 0; i < n; ++i) {
      if (i == k) continue;
      sum_ff_nok += c[i].f * (sum_f_nok - c[i].f);
    }
    out(k + 1, k + 1) = sum_ff_nok + 2.0 * c[k].h * sum_f_nok;
    for (int l = k + 1; l < n; ++l) {
      out(k + 1, l + 1) = 2.0 * c[k].g * c[l].g;
      out(l + 1, k + 1) = out(k + 1, l + 1);
    }
  }
  return out;
}

double pair_correlator(const TruncatedState& state, int i, int j,
                       const std::vector<double>& alphas, const fock::PhaseAveraging& avg,
                       double p_dc) {
  std::vector<fock::complexd> a(alphas.begin(), alphas.end());
  double pi = fock::noclick_set_prob(state, {i}, a, avg) * fock::dark_scale(p_dc, 1);
  double pj = fock::noclick_set_prob(state, {j}, a, avg) * fock::dark_scale(p_dc, 1);
  double pij = fock::noclick_set_prob(state, {i, j}, a, avg) * fock::dark_scale(p_dc, 2);
  return 4.0 * pij - 2.0 * pi - 2.0 * pj + 1.0;
}

double expected_O(const TruncatedState& state, const std::vector<double>& alphas,
                  const fock::PhaseAveraging& avg, double p_dc) {
  if (static_cast<int>(alphas.size()) != state.modes()) {
    throw ValidationError("expected_O: alpha vector length mismatch");
  }
  double sum = 0.0;
  for (int i = 0; i < state.modes(); ++i) {
    for (int j = i + 1; j < state.modes(); ++j) {
      sum += 2.0 * pair_correlator(state, i, j, alphas, avg, p_dc);
    }
  }
  return sum;
}

Eigen::MatrixXd F_coeffs(const DisplacementSpec& spec) {
  spec.validate();
  const int n = spec.modes();
  Eigen::MatrixXd F(n, n);
  for (int i = 0; i < n; ++i) {
    double fi_lo = fgh(spec.box_min[i]).f;
    double fi_hi = fgh(spec.box_max[i]).f;
    for (int j = 0; j < n; ++j) {
      double fj_lo = fgh(spec.box_min[j]).f;
      double fj_hi = fgh(spec.box_max[j]).f;
      double best = std::max({fi_lo * fj_lo, fi_lo * fj_hi, fi_hi * fj_lo, fi_hi * fj_hi});
      F(i, j) = std::max(0.0, best);
    }
  }
  return F;
}

namespace {

struct NoDisplacementStats {
  double p0 = 0.0;              // all detectors silent
  Eigen::MatrixXd pair_silent;  // (i, j) both silent, dark-scaled
  double multi_click = 0.0;     // >= 2 detectors click
};

NoDisplacementStats no_displacement_stats(const TruncatedState& state, double p_dc) {
  NoDisplacementStats out;
  const int n = state.modes();
  fock::PhaseAveraging off{false, 0};
  std::uint32_t full = (n >= 32) ? 0xffffffffu : ((1u << n) - 1);
  if (n >= 32) throw DimensionGuardError("no_displacement_stats: too many modes for masks");
  out.p0 = fock::noclick_set_prob_mask(state, full, std::nullopt, off) *
           fock::dark_scale(p_dc, n);
  out.pair_silent = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      double p = fock::noclick_set_prob_mask(state, (1u << i) | (1u << j), std::nullopt, off) *
                 fock::dark_scale(p_dc, 2);
      out.pair_silent(i, j) = p;
      out.pair_silent(j, i) = p;
    }
  }
  auto per_n = fock::per_n_click_no_displacement(state, p_dc);
  double tail = 0.0;
  for (std::size_t k = 2; k < per_n.size(); ++k) tail += per_n[k];
  out.multi_click = fock::checked_probability(tail);
  return out;
}

}  // namespace

double expected_Z(const TruncatedState& state, const WitnessParams& params,
                  const Eigen::MatrixXd& F, double p_dc) {
  params.validate();
  const int n = state.modes();
  if (F.rows() != n || F.cols() != n) {
    throw ValidationError("expected_Z: F matrix dimension mismatch");
  }
  auto stats = no_displacement_stats(state, p_dc);
  double f_term = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i != j) f_term += F(i, j) * stats.pair_silent(i, j);
    }
  }
  double nn1 = static_cast<double>(n) * (n - 1);
  return params.lambda * stats.p0 - f_term - (nn1 + params.mu) * stats.multi_click;
}

LocalMultiphoton local_multiphoton(const TruncatedState& state, int mode, double p_dc) {
  if (mode < 0 || mode >= state.modes()) {
    throw ValidationError("local_multiphoton: invalid mode");
  }
  TruncatedState reduced =
      state.modes() == 1 ? state : fock::partial_trace(state, {mode});
  TruncatedState two = fock::split_balanced(reduced, 2);
  fock::PhaseAveraging off{false, 0};
  double p1 = fock::noclick_set_prob_mask(two, 0b01, std::nullopt, off);
  double p2 = fock::noclick_set_prob_mask(two, 0b10, std::nullopt, off);
  double p12 = fock::noclick_set_prob_mask(two, 0b11, std::nullopt, off);
  double q = 1.0 - p_dc;
  double p_cc = fock::checked_probability(1.0 - q * p1 - q * p2 + q * q * p12);
  return {p_cc, 2.0 * p_cc};
}

namespace {

double p_star_impl(const TruncatedState& state, bool symmetric, double p_dc) {
  auto per_n = fock::per_n_click_no_displacement(state, p_dc);
  double multi = 0.0;
  for (std::size_t k = 2; k < per_n.size(); ++k) multi += per_n[k];
  double local = 0.0;
  if (symmetric) {
    local = state.modes() * local_multiphoton(state, 0, p_dc).p_star_local;
  } else {
    for (int i = 0; i < state.modes(); ++i) {
      local += local_multiphoton(state, i, p_dc).p_star_local;
    }
  }
  return multi + local;
}

}  // namespace

double p_star(const TruncatedState& state, bool symmetric) {
  return p_star_impl(state, symmetric, 0.0);
}

WitnessValue witness_value(const TruncatedState& state, const WitnessParams& params,
                           const DisplacementSpec& spec, const fock::PhaseAveraging& avg,
                           double p_dc, SigmaConvention conv, bool symmetric_modes) {
  params.validate();
  spec.validate();
  if (spec.modes() != state.modes() || params.parties != state.modes()) {
    throw ValidationError("witness_value: inconsistent mode counts");
  }
  const int n = state.modes();
  const double nn1 = static_cast<double>(n) * (n - 1);

  WitnessValue out;
  out.triple.o = expected_O(state, spec.nominal, avg, p_dc);
  out.triple.z = expected_Z(state, params, F_coeffs(spec), p_dc);

  double sigma_sum = 0.0;  // <Sigma_{n>=2}> estimate from coincidences
  double factor = sigma_factor(conv);
  if (symmetric_modes) {
    sigma_sum = n * factor * local_multiphoton(state, 0, p_dc).p_cc;
  } else {
    for (int i = 0; i < n; ++i) {
      sigma_sum += factor * local_multiphoton(state, i, p_dc).p_cc;
    }
  }
  out.triple.s = -nn1 * sigma_sum;

  fock::PhaseAveraging off{false, 0};
  std::uint32_t full = (1u << n) - 1;
  out.triple.p0 = fock::noclick_set_prob_mask(state, full, std::nullopt, off) *
                  fock::dark_scale(p_dc, n);
  out.triple.p_star = p_star_impl(state, symmetric_modes, p_dc);
  out.value = out.triple.o + out.triple.z + out.triple.s;
  return out;
}

namespace {

// M_{n<=1} = lambda |0..0><0..0| - sum_{i != j} f_i f_j (|0..0><0..0| +
//            sum_{k != i,j} |1_k><1_k|), diagonal in the product Fock basis.
Eigen::MatrixXcd dense_M(const fock::Basis& basis, const WitnessParams& params,
                         const std::vector<double>& alphas) {
  const int n = basis.modes();
  std::vector<double> f(n);
  double sum_f = 0.0;
  for (int i = 0; i < n; ++i) {
    f[i] = fgh(alphas[i]).f;
    sum_f += f[i];
  }
  double sum_ff = 0.0;
  for (int i = 0; i < n; ++i) sum_ff += f[i] * (sum_f - f[i]);

  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(basis.size(), basis.size());
  for (std::size_t idx = 0; idx < basis.size(); ++idx) {
    if (basis.total(idx) == 0) {
      out(idx, idx) = params.lambda - sum_ff;
    } else if (basis.total(idx) == 1) {
      int k = 0;
      while (basis.tuple(idx)[k] == 0) ++k;
      double sum_f_nok = sum_f - f[k];
      double sum_ff_nok = 0.0;
      for (int i = 0; i < n; ++i) {
        if (i != k) sum_ff_nok += f[i] * (sum_f_nok - f[i]);
      }
      out(idx, idx) = -sum_ff_nok;
    }
  }
  return out;
}

}  // namespace

Eigen::MatrixXcd dense_witness_operator(const fock::Basis& basis, const WitnessParams& params,
                                        const std::vector<double>& alphas,
                                        const fock::PhaseAveraging& avg) {
  params.validate();
  const double nn1 = static_cast<double>(basis.modes()) * (basis.modes() - 1);
  return fock::twirled_global_observable(basis, alphas, avg) + dense_M(basis, params, alphas) -
         nn1 * fock::two_or_more_photons_projector(basis) -
         params.mu * fock::multi_click_projector(basis, 2);
}

Eigen::MatrixXcd dense_relaxed_operator(const fock::Basis& basis, const WitnessParams& params,
                                        const std::vector<double>& alphas,
                                        const fock::PhaseAveraging& avg) {
  params.validate();
  Eigen::MatrixXcd low = fock::twirled_global_observable(basis, alphas, avg) +
                         dense_M(basis, params, alphas);
  // Restrict to the n <= 1 sector, keep -mu E_{n>=2} on the rest.
  for (std::size_t r = 0; r < basis.size(); ++r) {
    for (std::size_t c = 0; c < basis.size(); ++c) {
      if (basis.total(r) >= 2 || basis.total(c) >= 2) low(r, c) = 0.0;
    }
  }
  return low - params.mu * fock::multi_click_projector(basis, 2);
}

}  // namespace gmewit::witness
