#include "gmewit/bisep.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <queue>
#include <random>

#include "gmewit/parallel.hpp"

namespace gmewit::bisep {

namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;

}  // namespace

std::vector<int> Bipartition::g2() const {
  std::vector<int> out;
  std::size_t k = 0;
  for (int m = 0; m < parties; ++m) {
    if (k < g1.size() && g1[k] == m) {
      ++k;
    } else {
      out.push_back(m);
    }
  }
  return out;
}

void Bipartition::validate() const {
  if (parties < 2) throw ValidationError("Bipartition: parties must be >= 2");
  if (g1.empty() || static_cast<int>(g1.size()) >= parties) {
    throw ValidationError("Bipartition: G1 must be a non-empty proper subset");
  }
  if (!std::is_sorted(g1.begin(), g1.end())) {
    throw ValidationError("Bipartition: G1 must be sorted");
  }
  if (std::adjacent_find(g1.begin(), g1.end()) != g1.end()) {
    throw ValidationError("Bipartition: G1 has duplicates");
  }
  if (g1.front() == 0) {
    throw ValidationError("Bipartition: canonical form keeps mode 0 in G2");
  }
  if (g1.back() >= parties) throw ValidationError("Bipartition: mode index out of range");
}

std::vector<Bipartition> enumerate_bipartitions(int parties, bool symmetric, int guard) {
  if (parties < 2) throw ValidationError("enumerate_bipartitions: parties must be >= 2");
  std::vector<Bipartition> out;
  if (symmetric) {
    for (int size = 1; size <= parties / 2; ++size) {
      Bipartition p;
      p.parties = parties;
      for (int m = 1; m <= size; ++m) p.g1.push_back(m);
      out.push_back(std::move(p));
    }
    return out;
  }
  if (parties > guard) {
    throw DimensionGuardError("enumerate_bipartitions: " + std::to_string(parties) +
                              " parties exceeds the asymmetric enumeration guard " +
                              std::to_string(guard) + "; use symmetric mode");
  }
  // Subsets of modes {1..N-1}: mode 0 stays in G2.
  for (std::uint32_t mask = 1; mask < (1u << (parties - 1)); ++mask) {
    Bipartition p;
    p.parties = parties;
    for (int m = 1; m < parties; ++m) {
      if (mask & (1u << (m - 1))) p.g1.push_back(m);
    }
    out.push_back(std::move(p));
  }
  std::sort(out.begin(), out.end(), [](const Bipartition& a, const Bipartition& b) {
    if (a.g1.size() != b.g1.size()) return a.g1.size() < b.g1.size();
    return a.g1 < b.g1;
  });
  return out;
}

Eigen::MatrixXd build_M(const WitnessParams& params, const std::vector<double>& alphas,
                        const Bipartition& part, double angle) {
  params.validate();
  part.validate();
  const int n = params.parties;
  if (static_cast<int>(alphas.size()) != n || part.parties != n) {
    throw ValidationError("build_M: inconsistent dimensions");
  }
  if (angle < 0.0 || angle > kHalfPi + 1e-12) {
    throw ValidationError("build_M: angle must lie in [0, pi/2]");
  }
  std::vector<witness::Coefficients> c(n);
  double sum_f = 0.0;
  for (int i = 0; i < n; ++i) {
    c[i] = witness::fgh(alphas[i]);
    sum_f += c[i].f;
  }
  // Modes reordered G2 block first.
  std::vector<int> order = part.g2();
  const int n2 = static_cast<int>(order.size());
  for (int m : part.g1) order.push_back(m);

  Eigen::MatrixXd base(n, n);
  for (int r = 0; r < n; ++r) {
    int k = order[r];
    base(r, r) = 2.0 * (sum_f - c[k].f) * c[k].h;
    for (int cidx = r + 1; cidx < n; ++cidx) {
      int l = order[cidx];
      base(r, cidx) = 2.0 * c[k].g * c[l].g;
      base(cidx, r) = base(r, cidx);
    }
  }
  const double ca = std::cos(angle), sa = std::sin(angle);
  Eigen::MatrixXd m(n, n);
  m.topLeftCorner(n2, n2) = ca * ca * base.topLeftCorner(n2, n2) -
                            sa * sa * params.mu * Eigen::MatrixXd::Identity(n2, n2);
  m.bottomRightCorner(n - n2, n - n2) =
      sa * sa * base.bottomRightCorner(n - n2, n - n2) +
      ca * ca * params.lambda * Eigen::MatrixXd::Identity(n - n2, n - n2);
  m.topRightCorner(n2, n - n2) = ca * sa * base.topRightCorner(n2, n - n2);
  m.bottomLeftCorner(n - n2, n2) = m.topRightCorner(n2, n - n2).transpose();
  return m;
}

double max_eig(const Eigen::MatrixXd& m, double sym_tol) {
  if (m.rows() != m.cols()) throw ValidationError("max_eig: matrix must be square");
  double dev = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (dev > sym_tol) {
    throw ValidationError("max_eig: matrix not symmetric, deviation " + std::to_string(dev));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
  return es.eigenvalues().maxCoeff();
}

namespace {

// Evaluates a -> max eig M(a).  When every alpha coincides the blocks have
// the structure beta*I + gamma*(J - I) and the spectrum reduces to two
// deflated branches plus a 2x2 symmetric-subspace block.
class AngleObjective {
 public:
  AngleObjective(const WitnessParams& params, const std::vector<double>& alphas,
                 const Bipartition& part, bool force_dense)
      : lambda_(params.lambda), mu_(params.mu) {
    n1_ = static_cast<int>(part.g1.size());
    n2_ = part.parties - n1_;
    uniform_ = !force_dense &&
               std::all_of(alphas.begin(), alphas.end(),
                           [&](double a) { return a == alphas.front(); });
    double bw, bv, bc;
    if (uniform_) {
      auto c = witness::fgh(alphas.front());
      beta_ = 2.0 * (part.parties - 1) * c.f * c.h;
      gamma_ = 2.0 * c.g * c.g;
      bw = std::sqrt(n2_ * beta_ * beta_ + n2_ * (n2_ - 1) * gamma_ * gamma_);
      bv = std::sqrt(n1_ * beta_ * beta_ + n1_ * (n1_ - 1) * gamma_ * gamma_);
      bc = std::sqrt(static_cast<double>(n1_) * n2_) * std::abs(gamma_);
    } else {
      params_ = params;
      alphas_ = alphas;
      part_ = part;
      // Recover the angle-free blocks from M(0), M(pi/2) and M(pi/4).
      Eigen::MatrixXd m0 = build_M(params, alphas, part, 0.0);
      Eigen::MatrixXd m1 = build_M(params, alphas, part, kHalfPi);
      bw = m0.topLeftCorner(n2_, n2_).norm();
      bv = m1.bottomRightCorner(n1_, n1_).norm();
      Eigen::MatrixXd mid = build_M(params, alphas, part, kHalfPi / 2.0);
      bc = 2.0 * mid.topRightCorner(n2_, n1_).norm();  // cos*sin = 1/2 there
    }
    // M(a) = P + cos(2a) Q + sin(2a) R, so every Rayleigh quotient traces a
    // sinusoid in theta = 2a with amplitude <= sqrt(|Q|^2 + |R|^2).
    double q_norm = 0.5 * std::max(bw + mu_, bv + lambda_);
    double r_norm = 0.5 * bc;
    sine_amplitude_ = std::sqrt(q_norm * q_norm + r_norm * r_norm);
  }

  double operator()(double a) const {
    if (!uniform_) return max_eig(build_M(params_, alphas_, part_, a));
    double c2 = std::cos(a) * std::cos(a);
    double s2 = 1.0 - c2;
    double cs = std::cos(a) * std::sin(a);
    double top = -std::numeric_limits<double>::infinity();
    if (n2_ >= 2) top = std::max(top, c2 * (beta_ - gamma_) - s2 * mu_);
    if (n1_ >= 2) top = std::max(top, s2 * (beta_ - gamma_) + c2 * lambda_);
    double aa = c2 * (beta_ + (n2_ - 1) * gamma_) - s2 * mu_;
    double bb = s2 * (beta_ + (n1_ - 1) * gamma_) + c2 * lambda_;
    double cc = cs * gamma_ * std::sqrt(static_cast<double>(n1_) * n2_);
    double mean = 0.5 * (aa + bb);
    double disc = std::sqrt(0.25 * (aa - bb) * (aa - bb) + cc * cc);
    return std::max(top, mean + disc);
  }

  // Amplitude bound of the sinusoids max eig M is a supremum of (in 2a).
  double sine_amplitude() const { return sine_amplitude_; }

 private:
  double lambda_, mu_;
  int n1_ = 0, n2_ = 0;
  bool uniform_ = false;
  double beta_ = 0.0, gamma_ = 0.0;
  double sine_amplitude_ = 0.0;
  WitnessParams params_;
  std::vector<double> alphas_;
  Bipartition part_;
};

// Interval of theta = 2a.  Any sinusoid of amplitude s that stays below the
// endpoint values exceeds them inside by at most s (1 - cos(width/2)).
struct Cell {
  double lo, hi, flo, fhi;
  double ub(double amplitude) const {
    double half = 0.25 * (hi - lo);
    double excess = 2.0 * amplitude * std::sin(half) * std::sin(half);
    return std::max(flo, fhi) + excess;
  }
};

}  // namespace

AngleOptimum bound_for_partition(const WitnessParams& params,
                                 const std::vector<double>& alphas, const Bipartition& part,
                                 const AngleOptions& options) {
  params.validate();
  part.validate();
  if (static_cast<int>(alphas.size()) != params.parties || part.parties != params.parties) {
    throw ValidationError("bound_for_partition: inconsistent dimensions");
  }
  AngleObjective obj(params, alphas, part, options.force_dense);
  const int grid = std::max(options.grid_points, 3);

  std::vector<double> xs(grid), fs(grid);
  for (int i = 0; i < grid; ++i) {
    xs[i] = kHalfPi * i / (grid - 1);
    fs[i] = obj(xs[i]);
  }
  int best_i = 0;
  for (int i = 1; i < grid; ++i) {
    if (fs[i] > fs[best_i]) best_i = i;
  }
  double best_x = xs[best_i], best_f = fs[best_i];

  // Golden-section refinement inside the bracket around the best grid point.
  {
    double lo = xs[std::max(0, best_i - 1)];
    double hi = xs[std::min(grid - 1, best_i + 1)];
    const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = hi - phi * (hi - lo), x2 = lo + phi * (hi - lo);
    double f1 = obj(x1), f2 = obj(x2);
    while (hi - lo > options.angle_tol) {
      if (f1 < f2) {
        lo = x1;
        x1 = x2;
        f1 = f2;
        x2 = lo + phi * (hi - lo);
        f2 = obj(x2);
      } else {
        hi = x2;
        x2 = x1;
        f2 = f1;
        x1 = hi - phi * (hi - lo);
        f1 = obj(x1);
      }
      if (f1 > best_f) {
        best_f = f1;
        best_x = x1;
      }
      if (f2 > best_f) {
        best_f = f2;
        best_x = x2;
      }
    }
  }

  if (options.certify) {
    // Branch-and-refine on theta = 2a: subdivide any grid cell that could
    // still hide a value above best + certify_tol.
    const double amp = obj.sine_amplitude();
    auto cmp = [amp](const Cell& a, const Cell& b) { return a.ub(amp) < b.ub(amp); };
    std::priority_queue<Cell, std::vector<Cell>, decltype(cmp)> queue(cmp);
    for (int i = 0; i + 1 < grid; ++i) {
      queue.push({2.0 * xs[i], 2.0 * xs[i + 1], fs[i], fs[i + 1]});
    }
    std::size_t evals = 0;
    while (!queue.empty()) {
      Cell cell = queue.top();
      if (cell.ub(amp) <= best_f + options.certify_tol) break;
      queue.pop();
      double mid = 0.5 * (cell.lo + cell.hi);
      double fmid = obj(0.5 * mid);
      if (fmid > best_f) {
        best_f = fmid;
        best_x = 0.5 * mid;
      }
      queue.push({cell.lo, mid, cell.flo, fmid});
      queue.push({mid, cell.hi, fmid, cell.fhi});
      if (++evals > options.max_certify_evals) {
        throw ConsistencyError("bound_for_partition: certification budget exceeded");
      }
    }
  }
  return {best_f, best_x};
}

namespace {

std::vector<std::vector<double>> alpha_search_points(const DisplacementSpec& spec,
                                                     const WorstCaseOptions& options) {
  const int n = spec.modes();
  std::vector<int> fluctuating;
  for (int i = 0; i < n; ++i) {
    if (spec.box_min[i] < spec.box_max[i]) fluctuating.push_back(i);
  }
  if (fluctuating.empty()) return {spec.nominal};

  std::vector<std::vector<double>> per_mode_values(fluctuating.size());
  if (static_cast<int>(fluctuating.size()) <= options.max_grid_modes) {
    int pts = std::max(2, options.grid_points_per_mode);
    for (std::size_t k = 0; k < fluctuating.size(); ++k) {
      int m = fluctuating[k];
      for (int i = 0; i < pts; ++i) {
        per_mode_values[k].push_back(spec.box_min[m] +
                                     (spec.box_max[m] - spec.box_min[m]) * i / (pts - 1));
      }
    }
  } else {
    if (fluctuating.size() > 20) {
      throw DimensionGuardError("worst_case_bound: too many fluctuating modes");
    }
    for (std::size_t k = 0; k < fluctuating.size(); ++k) {
      int m = fluctuating[k];
      per_mode_values[k] = {spec.box_min[m], spec.box_max[m]};
    }
  }

  std::vector<std::vector<double>> points;
  std::vector<std::size_t> idx(fluctuating.size(), 0);
  while (true) {
    std::vector<double> alpha = spec.nominal;
    for (std::size_t k = 0; k < fluctuating.size(); ++k) {
      alpha[fluctuating[k]] = per_mode_values[k][idx[k]];
    }
    points.push_back(std::move(alpha));
    std::size_t pos = 0;
    while (pos < idx.size()) {
      if (++idx[pos] < per_mode_values[pos].size()) break;
      idx[pos] = 0;
      ++pos;
    }
    if (pos == idx.size()) break;
  }
  return points;
}

}  // namespace

BoundResult worst_case_bound(const WitnessParams& params, const DisplacementSpec& spec,
                             const WorstCaseOptions& options) {
  params.validate();
  spec.validate();
  if (spec.modes() != params.parties) {
    throw ValidationError("worst_case_bound: spec/params mode mismatch");
  }
  if (options.symmetric_partitions && !spec.uniform_values()) {
    throw ValidationError(
        "worst_case_bound: symmetric bipartitions require uniform displacement amplitudes");
  }
  auto partitions =
      enumerate_bipartitions(params.parties, options.symmetric_partitions,
                             options.enumeration_guard);
  auto points = alpha_search_points(spec, options);

  const std::size_t cells = points.size() * partitions.size();
  std::vector<AngleOptimum> results(cells);
  parallel_for(cells, [&](std::size_t idx) {
    std::size_t pi = idx / partitions.size();
    std::size_t qi = idx % partitions.size();
    results[idx] = bound_for_partition(params, points[pi], partitions[qi], options.angle);
  });

  std::size_t best_point = 0, best_part = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t pi = 0; pi < points.size(); ++pi) {
    for (std::size_t qi = 0; qi < partitions.size(); ++qi) {
      double v = results[pi * partitions.size() + qi].value;
      if (v > best) {
        best = v;
        best_point = pi;
        best_part = qi;
      }
    }
  }
  BoundResult out;
  out.value = best;
  out.argmax_partition = partitions[best_part];
  out.argmax_angle = results[best_point * partitions.size() + best_part].angle;
  out.argmax_alpha = points[best_point];
  out.per_partition.reserve(partitions.size());
  for (std::size_t qi = 0; qi < partitions.size(); ++qi) {
    const AngleOptimum& opt = results[best_point * partitions.size() + qi];
    out.per_partition.push_back({partitions[qi], opt.value, opt.angle});
  }
  return out;
}

// --- brute force oracle ------------------------------------------------------

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Eigen::VectorXd top_eigenvector(const Eigen::MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  Eigen::Index last = m.rows() - 1;
  return es.eigenvectors().col(last);
}

}  // namespace

double brute_force_bound(const WitnessParams& params, const std::vector<double>& alphas,
                         const Bipartition& part, int restarts, std::uint64_t seed) {
  params.validate();
  part.validate();
  const int n = params.parties;
  if (static_cast<int>(alphas.size()) != n) {
    throw ValidationError("brute_force_bound: alpha vector length mismatch");
  }
  if (n > 8) throw DimensionGuardError("brute_force_bound: oracle limited to 8 parties");

  fock::Basis basis(n, 2);
  fock::PhaseAveraging avg{true, 0};
  Eigen::MatrixXcd wc = witness::dense_relaxed_operator(basis, params, alphas, avg);
  if (wc.imag().cwiseAbs().maxCoeff() > 1e-12) {
    throw ConsistencyError("brute_force_bound: relaxed operator has imaginary parts");
  }
  Eigen::MatrixXd w = wc.real();

  const auto& g1 = part.g1;
  const auto g2 = part.g2();
  const int d1 = static_cast<int>(g1.size()) + 1;
  const int d2 = static_cast<int>(g2.size()) + 1;

  // Embed |p>_{G1} |q>_{G2} into the N-mode basis (vacuum at index 0).
  auto tuple_for = [&](int p, int q) {
    fock::OccupationTuple t(n, 0);
    if (p > 0) t[g1[p - 1]] = 1;
    if (q > 0) t[g2[q - 1]] += 1;
    return t;
  };
  Eigen::MatrixXd embed = Eigen::MatrixXd::Zero(basis.size(), d1 * d2);
  for (int p = 0; p < d1; ++p) {
    for (int q = 0; q < d2; ++q) {
      embed(basis.index(tuple_for(p, q)), p * d2 + q) = 1.0;
    }
  }
  Eigen::MatrixXd wp = embed.transpose() * w * embed;  // product-basis operator

  std::mt19937_64 rng(splitmix64(seed));
  auto random_unit = [&](int dim) {
    Eigen::VectorXd v(dim);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (int i = 0; i < dim; ++i) v(i) = gauss(rng);
    double norm = v.norm();
    return norm > 0 ? Eigen::VectorXd(v / norm) : Eigen::VectorXd::Unit(dim, 0).eval();
  };

  auto objective = [&](const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
    Eigen::VectorXd psi(d1 * d2);
    for (int p = 0; p < d1; ++p) {
      for (int q = 0; q < d2; ++q) psi(p * d2 + q) = x(p) * y(q);
    }
    return psi.dot(wp * psi);
  };

  double best = -std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts + 2; ++r) {
    Eigen::VectorXd x, y;
    if (r == 0) {  // vacuum product state
      x = Eigen::VectorXd::Unit(d1, 0);
      y = Eigen::VectorXd::Unit(d2, 0);
    } else if (r == 1) {  // uniform superposition
      x = Eigen::VectorXd::Ones(d1).normalized();
      y = Eigen::VectorXd::Ones(d2).normalized();
    } else {
      x = random_unit(d1);
      y = random_unit(d2);
    }
    double prev = objective(x, y);
    for (int it = 0; it < 1000; ++it) {
      // For fixed y the objective is a Rayleigh quotient in x, and vice versa.
      Eigen::MatrixXd ax = Eigen::MatrixXd::Zero(d1, d1);
      for (int p = 0; p < d1; ++p) {
        for (int pp = 0; pp < d1; ++pp) {
          double acc = 0.0;
          for (int q = 0; q < d2; ++q) {
            for (int qq = 0; qq < d2; ++qq) acc += wp(p * d2 + q, pp * d2 + qq) * y(q) * y(qq);
          }
          ax(p, pp) = acc;
        }
      }
      x = top_eigenvector(ax);
      Eigen::MatrixXd ay = Eigen::MatrixXd::Zero(d2, d2);
      for (int q = 0; q < d2; ++q) {
        for (int qq = 0; qq < d2; ++qq) {
          double acc = 0.0;
          for (int p = 0; p < d1; ++p) {
            for (int pp = 0; pp < d1; ++pp) acc += wp(p * d2 + q, pp * d2 + qq) * x(p) * x(pp);
          }
          ay(q, qq) = acc;
        }
      }
      y = top_eigenvector(ay);
      double cur = objective(x, y);
      if (std::abs(cur - prev) < 1e-12) {
        prev = cur;
        break;
      }
      prev = cur;
    }
    best = std::max(best, prev);
  }
  return best;
}

}  // namespace gmewit::bisep
