#pragma once

#include <vector>

#include <Eigen/Dense>

#include "gmewit/fock.hpp"

namespace gmewit::witness {

struct WitnessParams {
  int parties = 0;
  double lambda = 0.0;
  double mu = 0.0;

  void validate() const;
};

// Nominal displacement amplitudes plus the per-mode fluctuation box A.
struct DisplacementSpec {
  std::vector<double> nominal;
  std::vector<double> box_min;
  std::vector<double> box_max;

  static DisplacementSpec uniform(int modes, double alpha);
  static DisplacementSpec uniform_box(int modes, double alpha, double lo, double hi);

  int modes() const { return static_cast<int>(nominal.size()); }
  bool degenerate() const;        // box collapsed onto the nominal point
  bool uniform_values() const;    // every mode shares nominal and box
  void validate() const;
};

// Which estimate of the local multi-photon bound p_i* feeds the witness:
// `conservative` uses 2*p_cc (never understates), `paper_tables` uses p_cc
// (the convention behind the published statistics tables).
enum class SigmaConvention { conservative, paper_tables };

double sigma_factor(SigmaConvention c);  // 2 or 1

struct Coefficients {
  double f, g, h;
};

// f = 2 e^{-a^2} - 1,  g = 2 a e^{-a^2},  h = 2 a^2 e^{-a^2} - 1.
Coefficients fgh(double alpha);

// The displacement amplitude with f = 0 (sqrt(ln 2)), the operating point
// most robust to amplitude fluctuations.
double alpha_f_zero();

// Matrix of the phase-averaged global observable restricted to the
// {vacuum, one-photon} sector, basis {|0...0>, |1_1>, ..., |1_N>}.
Eigen::MatrixXd O_restricted(const std::vector<double>& alphas);

// <O> from the measured click statistics: sum_{i != j} <sigma_i sigma_j> with
// <sigma_i sigma_j> = 4 P(nc_i & nc_j) - 2 P(nc_i) - 2 P(nc_j) + 1, each
// no-click probability phase-averaged and dark-scaled.
double expected_O(const fock::TruncatedState& state, const std::vector<double>& alphas,
                  const fock::PhaseAveraging& avg, double p_dc);

// Phase-averaged <sigma_i sigma_j> for one pair.
double pair_correlator(const fock::TruncatedState& state, int i, int j,
                       const std::vector<double>& alphas, const fock::PhaseAveraging& avg,
                       double p_dc);

// F_ij = max{0, max_{alpha in A} f(alpha_i) f(alpha_j)}; exact because f is
// monotone, so the extremes sit on box corners.
Eigen::MatrixXd F_coeffs(const DisplacementSpec& spec);

// <Z> = lambda P(all silent) - sum_{i != j} F_ij P(i and j silent)
//       - (N(N-1) + mu) P(>= 2 clicks), measured without displacement.
double expected_Z(const fock::TruncatedState& state, const WitnessParams& params,
                  const Eigen::MatrixXd& F, double p_dc);

struct LocalMultiphoton {
  double p_cc = 0.0;          // coincidence after a balanced split of the mode
  double p_star_local = 0.0;  // conservative bound 2 * p_cc
};

LocalMultiphoton local_multiphoton(const fock::TruncatedState& state, int mode,
                                   double p_dc = 0.0);

// p_* = sum_{n >= 2} P_click^n + sum_i p_i*; the symmetric flag evaluates the
// local term on mode 0 only and multiplies by N.
double p_star(const fock::TruncatedState& state, bool symmetric);

struct ObservableTriple {
  double o = 0.0;       // <O_alpha>
  double z = 0.0;       // <Z>
  double s = 0.0;       // <-N(N-1) Sigma_{n>=2}>, always <= 0
  double p0 = 0.0;      // probability of no clicks
  double p_star = 0.0;  // bound on the >= 2 photon probability
};

struct WitnessValue {
  double value = 0.0;
  ObservableTriple triple;
};

// The measurable lower bound W-bar = <O> + <Z> - N(N-1) <Sigma_{n>=2}>.
// `symmetric_modes` evaluates the coincidence term on mode 0 and scales by N
// (valid for exchange-symmetric states); otherwise every mode is measured.
WitnessValue witness_value(const fock::TruncatedState& state, const WitnessParams& params,
                           const DisplacementSpec& spec, const fock::PhaseAveraging& avg,
                           double p_dc, SigmaConvention conv, bool symmetric_modes);

// Dense matrix of the full witness operator
// O_alpha + M_{n<=1} - N(N-1) Pi_{n>=2} - mu E_{n>=2}
// built from fock primitives; used for operator-inequality checks.
Eigen::MatrixXcd dense_witness_operator(const fock::Basis& basis,
                                        const WitnessParams& params,
                                        const std::vector<double>& alphas,
                                        const fock::PhaseAveraging& avg);

// Dense matrix of the relaxed bound operator
// (O^{n<=1} + M_{n<=1}) ⊕ (-mu E_{n>=2}), also from fock primitives.
Eigen::MatrixXcd dense_relaxed_operator(const fock::Basis& basis,
                                        const WitnessParams& params,
                                        const std::vector<double>& alphas,
                                        const fock::PhaseAveraging& avg);

}  // namespace gmewit::witness
