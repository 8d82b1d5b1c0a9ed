#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "gmewit/witness.hpp"

namespace gmewit::bisep {

using witness::DisplacementSpec;
using witness::WitnessParams;

inline constexpr int kDefaultEnumerationGuard = 24;

// One side of a mode bipartition; canonical form keeps mode 0 in G2, so each
// unordered split appears exactly once.
struct Bipartition {
  std::vector<int> g1;  // sorted, non-empty, proper, excludes mode 0
  int parties = 0;

  std::vector<int> g2() const;
  void validate() const;
};

// All canonical bipartitions ordered by (|G1|, lexicographic members); with
// `symmetric` set, one representative per group size 1..floor(N/2) (valid
// when all displacement amplitudes coincide).
std::vector<Bipartition> enumerate_bipartitions(int parties, bool symmetric,
                                                int guard = kDefaultEnumerationGuard);

// The N x N matrix whose top eigenvalue bounds the witness on product states
// of the partition; rows/columns are ordered G2 block first, then G1 block.
Eigen::MatrixXd build_M(const WitnessParams& params, const std::vector<double>& alphas,
                        const Bipartition& part, double angle);

// Largest eigenvalue of a symmetric matrix; rejects non-symmetric input.
double max_eig(const Eigen::MatrixXd& m, double sym_tol = 1e-12);

struct AngleOptions {
  int grid_points = 2001;        // dense scan of a in [0, pi/2]
  double angle_tol = 1e-10;      // golden-section width target
  double certify_tol = 1e-8;     // Lipschitz certificate on the value
  bool certify = true;
  bool force_dense = false;      // skip the uniform-alpha closed form
  std::size_t max_certify_evals = 1000000;
};

struct AngleOptimum {
  double value = 0.0;
  double angle = 0.0;
};

// max_{a in [0, pi/2]} max eig M(lambda, mu, alpha, a) by dense grid plus
// golden-section refinement; a Lipschitz bound over the grid certifies the
// reported value to certify_tol.
AngleOptimum bound_for_partition(const WitnessParams& params,
                                 const std::vector<double>& alphas, const Bipartition& part,
                                 const AngleOptions& options = {});

struct BoundResult {
  double value = 0.0;
  Bipartition argmax_partition;
  double argmax_angle = 0.0;
  std::vector<double> argmax_alpha;

  struct Row {
    Bipartition partition;
    double value = 0.0;
    double angle = 0.0;
  };
  std::vector<Row> per_partition;  // evaluated at the worst-case alpha
};

struct WorstCaseOptions {
  AngleOptions angle;
  bool symmetric_partitions = false;
  int grid_points_per_mode = 5;   // full grid when <= max_grid_modes fluctuate
  int max_grid_modes = 4;         // corners-only beyond this
  int enumeration_guard = kDefaultEnumerationGuard;
};

// w_bisep^max = max over the alpha box and over bipartitions.
BoundResult worst_case_bound(const WitnessParams& params, const DisplacementSpec& spec,
                             const WorstCaseOptions& options = {});

// Direct maximization of the relaxed witness over real product states with
// at most one photon per group; multi-start alternating ascent.  Oracle for
// bound_for_partition, built from the dense fock-level operator.
double brute_force_bound(const WitnessParams& params, const std::vector<double>& alphas,
                         const Bipartition& part, int restarts = 200,
                         std::uint64_t seed = 1);

}  // namespace gmewit::bisep
