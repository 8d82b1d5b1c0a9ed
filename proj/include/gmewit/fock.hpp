#pragma once

#include <complex>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "gmewit/errors.hpp"

namespace gmewit::fock {

using complexd = std::complex<double>;

// Photons per mode; sum bounded by the basis cutoff.
using OccupationTuple = std::vector<int>;

inline constexpr std::size_t kDefaultBasisGuard = 100000;
inline constexpr int kDefaultPatternGuard = 20;

// Lexicographically ordered basis of all occupation tuples of `modes` modes
// with total photon number <= n_max.  Cheap to copy (shared storage).
class Basis {
 public:
  Basis(int modes, int n_max, std::size_t guard = kDefaultBasisGuard);

  int modes() const { return data_->modes; }
  int n_max() const { return data_->n_max; }
  std::size_t size() const { return data_->tuples.size(); }
  const OccupationTuple& tuple(std::size_t i) const { return data_->tuples[i]; }
  int total(std::size_t i) const { return data_->totals[i]; }
  std::size_t index(const OccupationTuple& t) const;
  const std::vector<OccupationTuple>& tuples() const { return data_->tuples; }

  bool operator==(const Basis& other) const {
    return data_->modes == other.data_->modes && data_->n_max == other.data_->n_max;
  }

 private:
  struct Data {
    int modes, n_max;
    std::vector<OccupationTuple> tuples;
    std::vector<int> totals;
    std::map<OccupationTuple, std::size_t> index;
  };
  std::shared_ptr<const Data> data_;
};

std::vector<OccupationTuple> enumerate_basis(int modes, int n_max,
                                             std::size_t guard = kDefaultBasisGuard);

// <n|alpha> for a coherent state of amplitude alpha.
double coherent_overlap(int n, double alpha);
complexd coherent_overlap(int n, complexd alpha);

// Uniform averaging over a common phase of the displacement amplitudes.
// quadrature_points == 0 selects 2*n_max + 1, which integrates the
// trigonometric-polynomial integrand exactly.
struct PhaseAveraging {
  bool enabled = true;
  int quadrature_points = 0;

  int points_for(int n_max) const;
};

// Dense Hermitian density operator on a truncated N-mode Fock space.
struct TruncatedState {
  Basis basis;
  Eigen::MatrixXcd rho;

  int modes() const { return basis.modes(); }
  int n_max() const { return basis.n_max(); }

  static TruncatedState vacuum(int modes, int n_max);
  static TruncatedState from_pure(const Basis& basis, const Eigen::VectorXcd& amplitudes);
  // Validates hermiticity/trace/positivity before accepting the matrix.
  static TruncatedState from_matrix(const Basis& basis, const Eigen::MatrixXcd& rho);

  // Throws ConsistencyError when the state is not a valid density operator.
  void validate(double herm_tol = 1e-12, double trace_tol = 1e-12,
                double eig_tol = 1e-10) const;
};

// --- channels ------------------------------------------------------------

// Binomial photon-loss channel, independent transmission per mode.
TruncatedState apply_loss(const TruncatedState& state, const std::vector<double>& eta);
TruncatedState apply_loss(const TruncatedState& state, double eta);

// Balanced N-port splitter acting on a single-mode state:
// a^dag -> (1/sqrt(N)) sum_i a_i^dag.
TruncatedState split_balanced(const TruncatedState& state, int n_out,
                              std::size_t guard = kDefaultBasisGuard);

// Keeps the listed modes (ascending), traces out the rest.
TruncatedState partial_trace(const TruncatedState& state, const std::vector<int>& keep);

// Two-mode beam splitter of the given transmission on modes (a, b).
TruncatedState apply_beamsplitter(const TruncatedState& state, int mode_a, int mode_b,
                                  double transmission);

// Appends a fresh mode in the vacuum state.
TruncatedState attach_vacuum_mode(const TruncatedState& state);

// --- detection -----------------------------------------------------------

// P(no detector in S clicks), detectors preceded by displacements when
// `alphas` is set, with the other modes marginalized.  Phase averaging is an
// exact uniform quadrature over the common displacement phase.
double noclick_set_prob(const TruncatedState& state, const std::vector<int>& subset,
                        const std::optional<std::vector<complexd>>& alphas,
                        const PhaseAveraging& avg);
double noclick_set_prob_mask(const TruncatedState& state, std::uint32_t mask,
                             const std::optional<std::vector<complexd>>& alphas,
                             const PhaseAveraging& avg);

// No-click probabilities for all detectors, the exact click-pattern
// distribution, P_click^n and pairwise double-vacuum probabilities.
// Dark counts flip each no-click to a click with probability p_dc, which
// scales every stored no-click-set probability by (1-p_dc)^{|S|}.
struct ClickStats {
  int modes = 0;
  std::map<std::uint32_t, double> noclick_set_prob;  // keyed by mode bitmask
  std::map<std::uint32_t, double> pattern_prob;      // keyed by click bitmask
  std::vector<double> per_n_click;                   // size modes+1
  Eigen::MatrixXd pair_vacuum;  // (i,j): both silent; diagonal: single silent

  double p0() const { return per_n_click.at(0); }
};

ClickStats click_stats(const TruncatedState& state,
                       const std::optional<std::vector<complexd>>& alphas,
                       const PhaseAveraging& avg, double p_dc,
                       int pattern_guard = kDefaultPatternGuard);

// P_click^n with dark counts, valid for any N (no pattern enumeration):
// detector i clicks iff mode i is non-empty, so the true click sets follow
// the diagonal occupation weights and dark counts dress them binomially.
std::vector<double> per_n_click_no_displacement(const TruncatedState& state, double p_dc);

// Probability that a fixed no-click value `x` survives dark counts |S| times.
double dark_scale(double p_dc, int set_size);

// tr(rho * H) for Hermitian H, real part (imaginary part checked small).
double real_expectation(const TruncatedState& state, const Eigen::MatrixXcd& op);

// Checks x in [-tol, 1+tol] and clips into [0, 1]; throws ConsistencyError
// outside the band.
double checked_probability(double x, double tol = 1e-10);

// --- operator-level helpers (cross-checks and oracles) --------------------

// Projector onto "no click" behind a displacement of amplitude alpha on one
// mode of the basis, i.e. |alpha><alpha| restricted to the truncation.
Eigen::MatrixXcd noclick_projector(const Basis& basis, int mode, complexd alpha);

// Joint no-click projector for a set of modes, assembled from the exact
// product form (a truncated matrix product would drop the contribution of
// intermediate states above the cutoff).
Eigen::MatrixXcd noclick_projector_set(const Basis& basis, const std::vector<int>& modes,
                                       const std::vector<complexd>& alphas);

// Phase-averaged sigma_i ⊗ sigma_j correlator, sigma = 2 E_0 - 1.
Eigen::MatrixXcd twirled_pair_correlator(const Basis& basis, int mode_i, int mode_j,
                                         complexd alpha_i, complexd alpha_j,
                                         const PhaseAveraging& avg);

// Phase-averaged global observable sum_{i != j} sigma_i sigma_j.
Eigen::MatrixXcd twirled_global_observable(const Basis& basis,
                                           const std::vector<double>& alphas,
                                           const PhaseAveraging& avg);

// Diagonal projector onto occupation tuples where >= k distinct modes are
// occupied (the no-displacement "k or more detectors click" POVM element).
Eigen::MatrixXcd multi_click_projector(const Basis& basis, int min_clicks);

// Diagonal projector onto total photon number >= 2.
Eigen::MatrixXcd two_or_more_photons_projector(const Basis& basis);

}  // namespace gmewit::fock
