#pragma once

#include <random>

#include "gmewit/fock.hpp"

namespace gmewit::test {

// Ginibre-ensemble density matrix on the full truncated space.
inline fock::TruncatedState random_state(const fock::Basis& basis, std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::MatrixXcd a(basis.size(), basis.size());
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      a(r, c) = fock::complexd(gauss(rng), gauss(rng));
    }
  }
  Eigen::MatrixXcd rho = a * a.adjoint();
  rho /= rho.trace().real();
  return {basis, std::move(rho)};
}

// Random state supported on the {vacuum, one-photon} sector.
inline fock::TruncatedState random_low_state(const fock::Basis& basis,
                                             std::mt19937_64& rng) {
  std::normal_distribution<double> gauss(0.0, 1.0);
  const int dim = basis.modes() + 1;
  Eigen::MatrixXcd a(dim, dim);
  for (int r = 0; r < dim; ++r) {
    for (int c = 0; c < dim; ++c) a(r, c) = fock::complexd(gauss(rng), gauss(rng));
  }
  Eigen::MatrixXcd small = a * a.adjoint();
  small /= small.trace().real();

  // Map {vacuum, 1_k} onto the full basis.
  std::vector<std::size_t> idx;
  idx.push_back(basis.index(fock::OccupationTuple(basis.modes(), 0)));
  for (int m = 0; m < basis.modes(); ++m) {
    fock::OccupationTuple t(basis.modes(), 0);
    t[m] = 1;
    idx.push_back(basis.index(t));
  }
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(basis.size(), basis.size());
  for (int r = 0; r < dim; ++r) {
    for (int c = 0; c < dim; ++c) rho(idx[r], idx[c]) = small(r, c);
  }
  return {basis, std::move(rho)};
}

inline fock::TruncatedState w_state(int modes) {
  fock::Basis basis(modes, modes >= 2 ? 2 : 1);
  Eigen::VectorXcd amp = Eigen::VectorXcd::Zero(basis.size());
  for (int m = 0; m < modes; ++m) {
    fock::OccupationTuple t(modes, 0);
    t[m] = 1;
    amp(basis.index(t)) = 1.0 / std::sqrt(static_cast<double>(modes));
  }
  return fock::TruncatedState::from_pure(basis, amp);
}

// Single-mode displacement operator exp(alpha a^dag - alpha a) on a cutoff
// space, via the eigendecomposition of the Hermitian generator.
inline Eigen::MatrixXcd displacement_operator(int cutoff, double alpha) {
  const int dim = cutoff + 1;
  Eigen::MatrixXcd gen = Eigen::MatrixXcd::Zero(dim, dim);
  for (int n = 0; n + 1 < dim; ++n) {
    gen(n + 1, n) = alpha * std::sqrt(static_cast<double>(n + 1));   // a^dag
    gen(n, n + 1) = -alpha * std::sqrt(static_cast<double>(n + 1));  // -a
  }
  Eigen::MatrixXcd herm = fock::complexd(0.0, 1.0) * gen;  // i*gen is Hermitian
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(herm);
  Eigen::VectorXcd phases(dim);
  for (int i = 0; i < dim; ++i) {
    phases(i) = std::exp(fock::complexd(0.0, -es.eigenvalues()(i)));
  }
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

// No-click probability of "apply the displacement operation to the state,
// send it through a dilated loss beamsplitter of transmission eta, detect
// vacuum", evaluated at a high cutoff so the displacement is exact to
// machine precision.  The library's measurement-side projector |alpha><alpha|
// corresponds to displacing the state by -alpha, hence the sign.
// Independent oracle for the detector-efficiency folding identity.
inline double dilated_lossy_noclick(const fock::TruncatedState& single_mode, double alpha,
                                    double eta, int cutoff = 28) {
  fock::Basis big(1, cutoff);
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(big.size(), big.size());
  for (std::size_t r = 0; r < single_mode.basis.size(); ++r) {
    for (std::size_t c = 0; c < single_mode.basis.size(); ++c) {
      rho(r, c) = single_mode.rho(r, c);  // the cutoff basis extends the small one
    }
  }
  Eigen::MatrixXcd d = displacement_operator(cutoff, -alpha);
  fock::TruncatedState displaced{big, d * rho * d.adjoint()};
  fock::TruncatedState dilated =
      fock::apply_beamsplitter(fock::attach_vacuum_mode(displaced), 0, 1, eta);
  fock::PhaseAveraging off{false, 0};
  return fock::noclick_set_prob(dilated, {0}, std::nullopt, off);
}

}  // namespace gmewit::test
