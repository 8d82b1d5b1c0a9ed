#include "gmewit/fock.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numbers>

namespace gmewit::fock {

namespace {

double log_factorial(int n) { return std::lgamma(static_cast<double>(n) + 1.0); }

double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  return std::round(std::exp(log_factorial(n) - log_factorial(k) - log_factorial(n - k)));
}

std::uint32_t mask_of(const std::vector<int>& subset, int modes) {
  std::uint32_t mask = 0;
  for (int m : subset) {
    if (m < 0 || m >= modes) throw ValidationError("subset contains an invalid mode index");
    mask |= (1u << m);
  }
  return mask;
}

}  // namespace

// --- basis -----------------------------------------------------------------

std::vector<OccupationTuple> enumerate_basis(int modes, int n_max, std::size_t guard) {
  if (modes < 1) throw ValidationError("enumerate_basis: modes must be >= 1");
  if (n_max < 0) throw ValidationError("enumerate_basis: n_max must be >= 0");
  // C(modes + n_max, n_max) tuples in total.
  double count = 1.0;
  for (int k = 1; k <= n_max; ++k) count *= static_cast<double>(modes + k) / k;
  if (count > static_cast<double>(guard)) {
    throw DimensionGuardError("enumerate_basis: basis size " + std::to_string(count) +
                              " exceeds guard " + std::to_string(guard));
  }

  std::vector<OccupationTuple> out;
  out.reserve(static_cast<std::size_t>(std::llround(count)));
  OccupationTuple current(modes, 0);
  // Lexicographic odometer over tuples with sum <= n_max.
  while (true) {
    out.push_back(current);
    int pos = modes - 1;
    while (pos >= 0) {
      int sum = 0;
      for (int i = 0; i <= pos; ++i) sum += current[i];
      if (sum < n_max) break;
      current[pos] = 0;
      --pos;
    }
    if (pos < 0) break;
    ++current[pos];
    for (int i = pos + 1; i < modes; ++i) current[i] = 0;
  }
  std::sort(out.begin(), out.end());
  return out;
}

Basis::Basis(int modes, int n_max, std::size_t guard) {
  auto data = std::make_shared<Data>();
  data->modes = modes;
  data->n_max = n_max;
  data->tuples = enumerate_basis(modes, n_max, guard);
  data->totals.reserve(data->tuples.size());
  for (std::size_t i = 0; i < data->tuples.size(); ++i) {
    int t = 0;
    for (int v : data->tuples[i]) t += v;
    data->totals.push_back(t);
    data->index.emplace(data->tuples[i], i);
  }
  data_ = std::move(data);
}

std::size_t Basis::index(const OccupationTuple& t) const {
  auto it = data_->index.find(t);
  if (it == data_->index.end()) throw ValidationError("Basis::index: tuple not in basis");
  return it->second;
}

// --- overlaps and averaging -------------------------------------------------

double coherent_overlap(int n, double alpha) {
  if (n < 0) throw ValidationError("coherent_overlap: n must be >= 0");
  return std::exp(-0.5 * alpha * alpha) * std::pow(alpha, n) /
         std::sqrt(std::round(std::exp(log_factorial(n))));
}

complexd coherent_overlap(int n, complexd alpha) {
  if (n < 0) throw ValidationError("coherent_overlap: n must be >= 0");
  complexd pow = 1.0;
  for (int k = 0; k < n; ++k) pow *= alpha;
  return std::exp(-0.5 * std::norm(alpha)) * pow /
         std::sqrt(std::round(std::exp(log_factorial(n))));
}

int PhaseAveraging::points_for(int n_max) const {
  if (!enabled) return 1;
  int k = quadrature_points > 0 ? quadrature_points : 2 * n_max + 1;
  if (k < 2 * n_max + 1) {
    throw ValidationError("PhaseAveraging: quadrature_points must be >= 2*n_max + 1");
  }
  return k;
}

// --- state ------------------------------------------------------------------

TruncatedState TruncatedState::vacuum(int modes, int n_max) {
  Basis basis(modes, n_max);
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(basis.size(), basis.size());
  rho(0, 0) = 1.0;  // the all-zero tuple sorts first
  return {basis, std::move(rho)};
}

TruncatedState TruncatedState::from_pure(const Basis& basis, const Eigen::VectorXcd& amp) {
  if (static_cast<std::size_t>(amp.size()) != basis.size()) {
    throw ValidationError("from_pure: amplitude vector does not match basis size");
  }
  double n2 = amp.squaredNorm();
  if (std::abs(n2 - 1.0) > 1e-12) {
    throw ValidationError("from_pure: amplitudes are not normalized");
  }
  return {basis, amp * amp.adjoint()};
}

TruncatedState TruncatedState::from_matrix(const Basis& basis, const Eigen::MatrixXcd& rho) {
  if (static_cast<std::size_t>(rho.rows()) != basis.size() || rho.rows() != rho.cols()) {
    throw ValidationError("from_matrix: matrix does not match basis size");
  }
  TruncatedState state{basis, rho};
  state.validate();
  return state;
}

void TruncatedState::validate(double herm_tol, double trace_tol, double eig_tol) const {
  if (static_cast<std::size_t>(rho.rows()) != basis.size() || rho.rows() != rho.cols()) {
    throw ConsistencyError("TruncatedState: matrix/basis dimension mismatch");
  }
  double herm = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  if (herm > herm_tol) {
    throw ConsistencyError("TruncatedState: not Hermitian, deviation " + std::to_string(herm));
  }
  double tr = rho.trace().real();
  if (std::abs(tr - 1.0) > trace_tol) {
    throw ConsistencyError("TruncatedState: trace " + std::to_string(tr));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho, Eigen::EigenvaluesOnly);
  double min_eig = es.eigenvalues().minCoeff();
  if (min_eig < -eig_tol) {
    throw ConsistencyError("TruncatedState: negative eigenvalue " + std::to_string(min_eig));
  }
}

// --- channels ----------------------------------------------------------------

TruncatedState apply_loss(const TruncatedState& state, const std::vector<double>& eta) {
  if (static_cast<int>(eta.size()) != state.modes()) {
    throw ValidationError("apply_loss: eta vector length must equal mode count");
  }
  for (double e : eta) {
    if (!(e >= 0.0 && e <= 1.0)) throw ValidationError("apply_loss: eta must lie in [0, 1]");
  }
  const Basis& basis = state.basis;
  Eigen::MatrixXcd rho = state.rho;
  for (int mode = 0; mode < state.modes(); ++mode) {
    double e = eta[mode];
    if (e == 1.0) continue;
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(rho.rows(), rho.cols());
    // Kraus K_k removes k photons from `mode` with binomial amplitude.
    for (std::size_t a = 0; a < basis.size(); ++a) {
      for (std::size_t b = 0; b < basis.size(); ++b) {
        complexd v = rho(a, b);
        if (v == 0.0) continue;
        const auto& ta = basis.tuple(a);
        const auto& tb = basis.tuple(b);
        int kmax = std::min(ta[mode], tb[mode]);
        for (int k = 0; k <= kmax; ++k) {
          double ca = binomial(ta[mode], k) * std::pow(e, ta[mode] - k) * std::pow(1.0 - e, k);
          double cb = binomial(tb[mode], k) * std::pow(e, tb[mode] - k) * std::pow(1.0 - e, k);
          double w = std::sqrt(ca * cb);
          if (w == 0.0) continue;
          OccupationTuple na = ta, nb = tb;
          na[mode] -= k;
          nb[mode] -= k;
          out(basis.index(na), basis.index(nb)) += w * v;
        }
      }
    }
    rho = std::move(out);
  }
  return {basis, std::move(rho)};
}

TruncatedState apply_loss(const TruncatedState& state, double eta) {
  return apply_loss(state, std::vector<double>(state.modes(), eta));
}

TruncatedState split_balanced(const TruncatedState& state, int n_out, std::size_t guard) {
  if (state.modes() != 1) throw ValidationError("split_balanced: input must have one mode");
  if (n_out < 1) throw ValidationError("split_balanced: output mode count must be >= 1");
  const int n_max = state.n_max();
  Basis out_basis(n_out, n_max, guard);
  // Isometry |n> -> sum_{|k|=n} sqrt(multinomial(n;k)/N^n) |k>.
  Eigen::MatrixXd T = Eigen::MatrixXd::Zero(out_basis.size(), state.basis.size());
  for (std::size_t i = 0; i < out_basis.size(); ++i) {
    const auto& k = out_basis.tuple(i);
    int n = out_basis.total(i);
    double log_mult = log_factorial(n);
    for (int v : k) log_mult -= log_factorial(v);
    T(i, static_cast<std::size_t>(n)) =
        std::sqrt(std::exp(log_mult) / std::pow(static_cast<double>(n_out), n));
  }
  Eigen::MatrixXcd rho = T * state.rho * T.transpose();
  return {out_basis, std::move(rho)};
}

TruncatedState partial_trace(const TruncatedState& state, const std::vector<int>& keep) {
  if (keep.empty()) throw ValidationError("partial_trace: keep set must be non-empty");
  std::vector<int> sorted = keep;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw ValidationError("partial_trace: keep set has duplicates");
  }
  for (int m : sorted) {
    if (m < 0 || m >= state.modes()) throw ValidationError("partial_trace: invalid mode index");
  }
  const Basis& basis = state.basis;
  std::vector<bool> kept(state.modes(), false);
  for (int m : sorted) kept[m] = true;

  Basis out_basis(static_cast<int>(sorted.size()), state.n_max());
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(out_basis.size(), out_basis.size());
  std::vector<std::size_t> projected(basis.size());
  std::vector<OccupationTuple> traced(basis.size());
  OccupationTuple kept_part(sorted.size());
  for (std::size_t i = 0; i < basis.size(); ++i) {
    const auto& t = basis.tuple(i);
    OccupationTuple rest;
    rest.reserve(state.modes() - sorted.size());
    for (int m = 0, k = 0; m < state.modes(); ++m) {
      if (kept[m]) {
        kept_part[k++] = t[m];
      } else {
        rest.push_back(t[m]);
      }
    }
    projected[i] = out_basis.index(kept_part);
    traced[i] = rest;
  }
  for (std::size_t a = 0; a < basis.size(); ++a) {
    for (std::size_t b = 0; b < basis.size(); ++b) {
      complexd v = state.rho(a, b);
      if (v == 0.0) continue;
      if (traced[a] == traced[b]) out(projected[a], projected[b]) += v;
    }
  }
  return {out_basis, std::move(out)};
}

TruncatedState apply_beamsplitter(const TruncatedState& state, int mode_a, int mode_b,
                                  double transmission) {
  if (mode_a == mode_b || mode_a < 0 || mode_b < 0 || mode_a >= state.modes() ||
      mode_b >= state.modes()) {
    throw ValidationError("apply_beamsplitter: invalid mode pair");
  }
  if (!(transmission >= 0.0 && transmission <= 1.0)) {
    throw ValidationError("apply_beamsplitter: transmission must lie in [0, 1]");
  }
  const Basis& basis = state.basis;
  const double c = std::sqrt(transmission);
  const double s = std::sqrt(1.0 - transmission);
  // a^dag -> c a^dag + s b^dag,  b^dag -> -s a^dag + c b^dag.
  Eigen::MatrixXd U = Eigen::MatrixXd::Zero(basis.size(), basis.size());
  for (std::size_t in = 0; in < basis.size(); ++in) {
    const auto& t = basis.tuple(in);
    int na = t[mode_a], nb = t[mode_b];
    double norm_in = std::exp(-0.5 * (log_factorial(na) + log_factorial(nb)));
    for (int r = 0; r <= na; ++r) {
      for (int q = 0; q <= nb; ++q) {
        // (c a + s b)^na picks a^r b^(na-r); (-s a + c b)^nb picks a^q b^(nb-q).
        double coeff = binomial(na, r) * std::pow(c, r) * std::pow(s, na - r) *
                       binomial(nb, q) * std::pow(-s, q) * std::pow(c, nb - q);
        if (coeff == 0.0) continue;
        int pa = r + q;
        int pb = (na - r) + (nb - q);
        OccupationTuple out = t;
        out[mode_a] = pa;
        out[mode_b] = pb;
        double norm_out = std::exp(0.5 * (log_factorial(pa) + log_factorial(pb)));
        U(basis.index(out), in) += coeff * norm_in * norm_out;
      }
    }
  }
  Eigen::MatrixXcd rho = U * state.rho * U.transpose();
  return {basis, std::move(rho)};
}

TruncatedState attach_vacuum_mode(const TruncatedState& state) {
  Basis out_basis(state.modes() + 1, state.n_max());
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(out_basis.size(), out_basis.size());
  const Basis& basis = state.basis;
  std::vector<std::size_t> embed(basis.size());
  for (std::size_t i = 0; i < basis.size(); ++i) {
    OccupationTuple t = basis.tuple(i);
    t.push_back(0);
    embed[i] = out_basis.index(t);
  }
  for (std::size_t a = 0; a < basis.size(); ++a) {
    for (std::size_t b = 0; b < basis.size(); ++b) {
      if (state.rho(a, b) != 0.0) out(embed[a], embed[b]) = state.rho(a, b);
    }
  }
  return {out_basis, std::move(out)};
}

// --- detection ----------------------------------------------------------------

namespace {

// Per-mode overlap tables <n|alpha_i e^{i phi_k}> for each quadrature point.
// Without displacement the no-click element is the vacuum projector.
struct OverlapTables {
  // [phase][mode][n]
  std::vector<std::vector<std::vector<complexd>>> o;
  int points = 1;
};

OverlapTables make_overlaps(const Basis& basis,
                            const std::optional<std::vector<complexd>>& alphas,
                            const PhaseAveraging& avg) {
  OverlapTables tables;
  const int n_max = basis.n_max();
  const int modes = basis.modes();
  if (!alphas.has_value()) {
    tables.points = 1;
    tables.o.assign(1, std::vector<std::vector<complexd>>(
                           modes, std::vector<complexd>(n_max + 1, 0.0)));
    for (int m = 0; m < modes; ++m) tables.o[0][m][0] = 1.0;
    return tables;
  }
  if (static_cast<int>(alphas->size()) != modes) {
    throw ValidationError("displacement amplitudes must match mode count");
  }
  tables.points = avg.points_for(n_max);
  tables.o.assign(tables.points, std::vector<std::vector<complexd>>(
                                     modes, std::vector<complexd>(n_max + 1)));
  for (int k = 0; k < tables.points; ++k) {
    double phi = 2.0 * std::numbers::pi * k / tables.points;
    complexd rot = std::polar(1.0, phi);
    for (int m = 0; m < modes; ++m) {
      complexd a = (*alphas)[m] * rot;
      for (int n = 0; n <= n_max; ++n) tables.o[k][m][n] = coherent_overlap(n, a);
    }
  }
  return tables;
}

}  // namespace

double noclick_set_prob_mask(const TruncatedState& state, std::uint32_t mask,
                             const std::optional<std::vector<complexd>>& alphas,
                             const PhaseAveraging& avg) {
  if (mask == 0) return 1.0;
  const Basis& basis = state.basis;
  const int modes = basis.modes();
  if (mask >> modes) throw ValidationError("noclick_set_prob: subset exceeds mode count");

  OverlapTables tables = make_overlaps(basis, alphas, avg);
  std::vector<int> members;
  for (int m = 0; m < modes; ++m) {
    if (mask & (1u << m)) members.push_back(m);
  }

  complexd acc = 0.0;
  for (int k = 0; k < tables.points; ++k) {
    const auto& o = tables.o[k];
    for (std::size_t a = 0; a < basis.size(); ++a) {
      for (std::size_t b = 0; b < basis.size(); ++b) {
        complexd v = state.rho(a, b);
        if (v == 0.0) continue;
        const auto& ta = basis.tuple(a);
        const auto& tb = basis.tuple(b);
        // E(b,a) = prod_{i in S} <b_i|alpha_i><alpha_i|a_i>, identity elsewhere.
        complexd w = 1.0;
        bool ok = true;
        for (int m = 0; m < modes; ++m) {
          if (mask & (1u << m)) continue;
          if (ta[m] != tb[m]) {
            ok = false;
            break;
          }
        }
        if (!ok) continue;
        for (int m : members) w *= o[m][tb[m]] * std::conj(o[m][ta[m]]);
        acc += v * w;
      }
    }
  }
  acc /= static_cast<double>(tables.points);
  return checked_probability(acc.real());
}

double noclick_set_prob(const TruncatedState& state, const std::vector<int>& subset,
                        const std::optional<std::vector<complexd>>& alphas,
                        const PhaseAveraging& avg) {
  return noclick_set_prob_mask(state, mask_of(subset, state.modes()), alphas, avg);
}

double dark_scale(double p_dc, int set_size) {
  return std::pow(1.0 - p_dc, set_size);
}

std::vector<double> per_n_click_no_displacement(const TruncatedState& state, double p_dc) {
  if (!(p_dc >= 0.0 && p_dc <= 1.0)) throw ValidationError("p_dc must lie in [0, 1]");
  const Basis& basis = state.basis;
  const int modes = basis.modes();
  // True click sets follow the diagonal occupation weights.
  std::map<int, double> true_by_count;  // photons occupy at most n_max distinct modes
  for (std::size_t i = 0; i < basis.size(); ++i) {
    double w = state.rho(i, i).real();
    if (w == 0.0) continue;
    int clicks = 0;
    for (int v : basis.tuple(i)) clicks += (v > 0);
    true_by_count[clicks] += w;
  }
  std::vector<double> per_n(modes + 1, 0.0);
  for (const auto& [c, w] : true_by_count) {
    // Dark counts flip n - c of the silent detectors.
    for (int n = c; n <= modes; ++n) {
      per_n[n] += w * binomial(modes - c, n - c) * std::pow(p_dc, n - c) *
                  std::pow(1.0 - p_dc, modes - n);
    }
  }
  for (double& p : per_n) p = checked_probability(p);
  return per_n;
}

namespace {

// All 2^N no-click-set probabilities (optionally dark-scaled via `w_scale`).
// Per matrix entry, a DFS enumerates the masks that keep the off-diagonal
// modes inside the set; diagonal-equal modes branch both ways.
std::vector<double> all_noclick_masks(const TruncatedState& state,
                                      const std::optional<std::vector<complexd>>& alphas,
                                      const PhaseAveraging& avg, double w_scale) {
  const Basis& basis = state.basis;
  const int modes = basis.modes();
  OverlapTables tables = make_overlaps(basis, alphas, avg);
  std::vector<complexd> acc(std::size_t{1} << modes, 0.0);

  std::vector<complexd> w(modes);
  for (int k = 0; k < tables.points; ++k) {
    const auto& o = tables.o[k];
    for (std::size_t a = 0; a < basis.size(); ++a) {
      for (std::size_t b = 0; b < basis.size(); ++b) {
        complexd v = state.rho(a, b);
        if (v == 0.0) continue;
        const auto& ta = basis.tuple(a);
        const auto& tb = basis.tuple(b);
        for (int m = 0; m < modes; ++m) {
          w[m] = o[m][tb[m]] * std::conj(o[m][ta[m]]) * w_scale;
        }
        // DFS over modes; running (mask, product).
        struct Frame {
          int mode;
          std::uint32_t mask;
          complexd prod;
        };
        std::vector<Frame> stack;
        stack.push_back({0, 0u, v});
        while (!stack.empty()) {
          Frame f = stack.back();
          stack.pop_back();
          if (f.mode == modes) {
            acc[f.mask] += f.prod;
            continue;
          }
          int m = f.mode;
          // mode inside the no-click set
          stack.push_back({m + 1, f.mask | (1u << m), f.prod * w[m]});
          // mode outside: requires equal occupations (identity factor)
          if (ta[m] == tb[m]) stack.push_back({m + 1, f.mask, f.prod});
        }
      }
    }
  }
  std::vector<double> out(acc.size());
  for (std::size_t i = 0; i < acc.size(); ++i) {
    out[i] = checked_probability(acc[i].real() / tables.points);
  }
  return out;
}

}  // namespace

ClickStats click_stats(const TruncatedState& state,
                       const std::optional<std::vector<complexd>>& alphas,
                       const PhaseAveraging& avg, double p_dc, int pattern_guard) {
  if (!(p_dc >= 0.0 && p_dc <= 1.0)) throw ValidationError("p_dc must lie in [0, 1]");
  const int modes = state.modes();
  if (modes > pattern_guard) {
    throw DimensionGuardError(
        "click_stats: exact pattern enumeration limited to " + std::to_string(pattern_guard) +
        " modes; use the reduced two-mode path for larger systems");
  }

  ClickStats stats;
  stats.modes = modes;
  std::vector<double> noclick = all_noclick_masks(state, alphas, avg, 1.0 - p_dc);
  const std::uint32_t full = (1u << modes) - 1;

  // Moebius transform: after the loop, a[m] = P(silent exactly on m).
  std::vector<double> a = noclick;
  for (int bit = 0; bit < modes; ++bit) {
    for (std::uint32_t m = 0; m <= full; ++m) {
      if (!(m & (1u << bit))) a[m] -= a[m | (1u << bit)];
    }
  }

  stats.per_n_click.assign(modes + 1, 0.0);
  for (std::uint32_t m = 0; m <= full; ++m) {
    stats.noclick_set_prob[m] = noclick[m];
    std::uint32_t clicks = full & ~m;
    double p = checked_probability(a[m]);
    stats.pattern_prob[clicks] = p;
    stats.per_n_click[std::popcount(clicks)] += p;
  }
  for (double& p : stats.per_n_click) p = checked_probability(p);

  stats.pair_vacuum = Eigen::MatrixXd::Zero(modes, modes);
  for (int i = 0; i < modes; ++i) {
    stats.pair_vacuum(i, i) = noclick[1u << i];
    for (int j = i + 1; j < modes; ++j) {
      double p = noclick[(1u << i) | (1u << j)];
      stats.pair_vacuum(i, j) = p;
      stats.pair_vacuum(j, i) = p;
    }
  }
  return stats;
}

double real_expectation(const TruncatedState& state, const Eigen::MatrixXcd& op) {
  complexd v = (state.rho * op).trace();
  if (std::abs(v.imag()) > 1e-9) {
    throw ConsistencyError("real_expectation: non-real expectation value");
  }
  return v.real();
}

double checked_probability(double x, double tol) {
  if (x < -tol || x > 1.0 + tol) {
    throw ConsistencyError("probability out of range: " + std::to_string(x));
  }
  return std::clamp(x, 0.0, 1.0);
}

// --- operator-level helpers -----------------------------------------------------

Eigen::MatrixXcd noclick_projector_set(const Basis& basis, const std::vector<int>& modes,
                                       const std::vector<complexd>& alphas) {
  if (modes.size() != alphas.size()) {
    throw ValidationError("noclick_projector_set: modes/alphas length mismatch");
  }
  std::vector<int> slot(basis.modes(), -1);
  for (std::size_t k = 0; k < modes.size(); ++k) {
    if (modes[k] < 0 || modes[k] >= basis.modes() || slot[modes[k]] != -1) {
      throw ValidationError("noclick_projector_set: bad mode set");
    }
    slot[modes[k]] = static_cast<int>(k);
  }
  std::vector<std::vector<complexd>> o(modes.size(),
                                       std::vector<complexd>(basis.n_max() + 1));
  for (std::size_t k = 0; k < modes.size(); ++k) {
    for (int n = 0; n <= basis.n_max(); ++n) o[k][n] = coherent_overlap(n, alphas[k]);
  }
  Eigen::MatrixXcd out(basis.size(), basis.size());
  for (std::size_t r = 0; r < basis.size(); ++r) {
    for (std::size_t c = 0; c < basis.size(); ++c) {
      const auto& tr = basis.tuple(r);
      const auto& tc = basis.tuple(c);
      complexd v = 1.0;
      for (int m = 0; m < basis.modes(); ++m) {
        if (slot[m] >= 0) {
          v *= o[slot[m]][tr[m]] * std::conj(o[slot[m]][tc[m]]);
        } else if (tr[m] != tc[m]) {
          v = 0.0;
          break;
        }
      }
      out(r, c) = v;
    }
  }
  return out;
}

Eigen::MatrixXcd noclick_projector(const Basis& basis, int mode, complexd alpha) {
  return noclick_projector_set(basis, {mode}, {alpha});
}

Eigen::MatrixXcd twirled_pair_correlator(const Basis& basis, int mode_i, int mode_j,
                                         complexd alpha_i, complexd alpha_j,
                                         const PhaseAveraging& avg) {
  const int points = avg.points_for(basis.n_max());
  Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(basis.size(), basis.size());
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(basis.size(), basis.size());
  for (int k = 0; k < points; ++k) {
    complexd rot = std::polar(1.0, 2.0 * std::numbers::pi * k / points);
    // sigma_i sigma_j = 4 E_i E_j - 2 E_i - 2 E_j + 1 with every term built
    // from its exact product form.
    acc += 4.0 * noclick_projector_set(basis, {mode_i, mode_j},
                                       {alpha_i * rot, alpha_j * rot});
    acc -= 2.0 * noclick_projector(basis, mode_i, alpha_i * rot);
    acc -= 2.0 * noclick_projector(basis, mode_j, alpha_j * rot);
    acc += id;
  }
  return acc / static_cast<double>(points);
}

Eigen::MatrixXcd twirled_global_observable(const Basis& basis,
                                           const std::vector<double>& alphas,
                                           const PhaseAveraging& avg) {
  if (static_cast<int>(alphas.size()) != basis.modes()) {
    throw ValidationError("twirled_global_observable: alpha vector length mismatch");
  }
  Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(basis.size(), basis.size());
  for (int i = 0; i < basis.modes(); ++i) {
    for (int j = i + 1; j < basis.modes(); ++j) {
      acc += 2.0 * twirled_pair_correlator(basis, i, j, alphas[i], alphas[j], avg);
    }
  }
  return acc;
}

Eigen::MatrixXcd multi_click_projector(const Basis& basis, int min_clicks) {
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(basis.size(), basis.size());
  for (std::size_t i = 0; i < basis.size(); ++i) {
    int clicks = 0;
    for (int v : basis.tuple(i)) clicks += (v > 0);
    if (clicks >= min_clicks) out(i, i) = 1.0;
  }
  return out;
}

Eigen::MatrixXcd two_or_more_photons_projector(const Basis& basis) {
  Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(basis.size(), basis.size());
  for (std::size_t i = 0; i < basis.size(); ++i) {
    if (basis.total(i) >= 2) out(i, i) = 1.0;
  }
  return out;
}

}  // namespace gmewit::fock
