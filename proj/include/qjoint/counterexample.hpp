#pragma once

// The published four-projector instance that is pairwise commuting on a state
// yet not 4-permutable on it, its verification, and a seeded penalty search
// for new instances of the same kind.
//
// Products are written as matrix products: the word (1, 2, 3, 4) stands for
// P1 P2 P3 P4, so P4 acts on the state first.

#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "qjoint/combinatorics.hpp"
#include "qjoint/error.hpp"
#include "qjoint/linalg.hpp"
#include "qjoint/measurement.hpp"
#include "qjoint/parallel.hpp"
#include "qjoint/permutation.hpp"
#include "qjoint/random.hpp"
#include "qjoint/report.hpp"

namespace qjoint {

struct CounterexampleInstance {
  Eigen::Index dim = 0;
  StateVector state{Vector::Ones(1)};
  std::vector<Matrix> projectors;
  /// Orthonormal eigenvectors spanning each projector's range, when known.
  std::optional<std::vector<std::vector<Vector>>> eigenvector_form;

  std::vector<Eigen::Index> ranks() const {
    std::vector<Eigen::Index> out;
    for (const Matrix& p : projectors) out.push_back(std::lround(trace(p).real()));
    return out;
  }
};

/// Sum of |v><v| over the vectors.
inline Matrix projector_from_eigenvectors(const std::vector<Vector>& vectors, Eigen::Index dim) {
  Matrix p = Matrix::Zero(dim, dim);
  for (const Vector& v : vectors) {
    require_dim(v.size(), dim, "eigenvector");
    p += outer(v);
  }
  return p;
}

/// Builds an instance from eigenvector lists. The state is kept as given and
/// only has to be unit-norm within `state_tolerance`.
inline CounterexampleInstance make_instance(const Vector& state, std::vector<std::vector<Vector>> eigenvectors,
                                            double state_tolerance = tol::golden) {
  CounterexampleInstance inst;
  inst.dim = state.size();
  inst.state = StateVector(state, Tolerance(state_tolerance));
  for (const auto& vs : eigenvectors) inst.projectors.push_back(projector_from_eigenvectors(vs, inst.dim));
  inst.eigenvector_form = std::move(eigenvectors);
  return inst;
}

inline CounterexampleInstance make_instance(const Vector& state, std::vector<Matrix> projectors,
                                            double state_tolerance = tol::golden) {
  CounterexampleInstance inst;
  inst.dim = state.size();
  inst.state = StateVector(state, Tolerance(state_tolerance));
  for (const Matrix& p : projectors) {
    require_square(p, "projector");
    require_dim(p.rows(), inst.dim, "projector");
  }
  inst.projectors = std::move(projectors);
  return inst;
}

namespace detail {

template <std::size_t N>
Vector vector_from(const double (&entries)[N][2]) {
  Vector v(static_cast<Eigen::Index>(N));
  for (std::size_t k = 0; k < N; ++k) v[static_cast<Eigen::Index>(k)] = Complex(entries[k][0], entries[k][1]);
  return v;
}

template <std::size_t R, std::size_t N>
std::vector<Vector> vectors_from(const double (&entries)[R][N][2]) {
  std::vector<Vector> out;
  for (std::size_t r = 0; r < R; ++r) out.push_back(vector_from(entries[r]));
  return out;
}

}  // namespace detail

/// The published instance: dim 8, ranks (1, 2, 3, 2), values as printed.
inline CounterexampleInstance load_appendix_instance() {
  static const double state[8][2] = {{-0.135381, -0.0503468}, {0.325588, -0.222403}, {-0.209447, -0.0404665},
                                     {-0.418336, 0.130098},   {-0.503693, -0.299414}, {0.379842, 0.205081},
                                     {-0.179291, -0.0381456}, {0.0840381, -0.125995}};
  static const double p1[1][8][2] = {{{0.440777, 0.168408}, {0.208781, -0.37351}, {0.247514, 0.0276065},
                                      {-0.297971, 0.0252308}, {0.118798, 0.112225}, {-0.293428, 0.270889},
                                      {-0.193073, 0.218869}, {-0.41405, 0}}};
  static const double p2[2][8][2] = {{{-0.497016, -0.094035}, {0.417527, -0.0737062}, {-0.000125303, 0.35123},
                                      {0.166569, -0.187245}, {-0.373202, 0.205633}, {0.318452, -0.251475},
                                      {-0.107473, -0.123987}, {-0.0711523, 0}},
                                     {{0.365906, 0.0620997}, {0.418728, -0.2059}, {0.229457, 0.0557421},
                                      {-0.140393, 0.0945029}, {-0.199205, -0.188139}, {0.103617, 0.279644},
                                      {-0.546498, 0.147197}, {0.275295, 0}}};
  static const double p3[3][8][2] = {{{-0.453059, 0.181543}, {-0.452841, 0.0154095}, {-0.17948, -0.222827},
                                      {-0.230355, -0.0526756}, {-0.0918752, -0.250754}, {0.242416, -0.126917},
                                      {0.300832, -0.287566}, {0.315259, 0}},
                                     {{-0.0586669, -0.269559}, {-0.280155, 0.373271}, {-0.150758, -0.158539},
                                      {0.158793, -0.0454731}, {0.165888, 0.362832}, {-0.110453, -0.310755},
                                      {0.353894, -0.00811586}, {-0.487537, 0}},
                                     {{-0.182739, -0.114718}, {0.246775, -0.134678}, {-0.513357, -0.193655},
                                      {-0.10451, 0.421294}, {0.111183, 0.122625}, {-0.200917, -0.25897},
                                      {-0.0290851, 0.398494}, {0.30081, 0}}};
  static const double p4[2][8][2] = {{{-0.464187, 0.213035}, {-0.364421, 0.119836}, {-0.324984, -0.23097},
                                      {-0.256841, 0.0478513}, {-0.0700499, -0.192822}, {0.146148, -0.225755},
                                      {0.243944, -0.284786}, {0.331272, 0}},
                                     {{0.111757, 0.151275}, {0.236223, -0.323279}, {0.157312, -0.115385},
                                      {-0.30864, 0.0990552}, {-0.260931, -0.236239}, {0.240497, 0.13559},
                                      {-0.453404, 0.12357}, {0.490125, 0}}};
  return make_instance(detail::vector_from(state),
                       {detail::vectors_from(p1), detail::vectors_from(p2), detail::vectors_from(p3),
                        detail::vectors_from(p4)});
}

/// P_{w(1)} ... P_{w(m)} phi for a word of 0-based indices.
inline Vector apply_word(const std::vector<Matrix>& projectors, const std::vector<int>& word, const Vector& phi) {
  Vector out = phi;
  for (auto it = word.rbegin(); it != word.rend(); ++it) out = projectors.at(static_cast<std::size_t>(*it)) * out;
  return out;
}

/// 0-based one-line form of the block swap (k+1, ..., n, 1, ..., k) with k = n / 2.
inline Permutation block_swap(std::size_t n) {
  std::vector<int> m;
  const std::size_t k = n / 2;
  for (std::size_t i = k; i < n; ++i) m.push_back(static_cast<int>(i));
  for (std::size_t i = 0; i < k; ++i) m.push_back(static_cast<int>(i));
  return Permutation(std::move(m));
}

/// ||(P_1 ... P_n - P_sigma(1) ... P_sigma(n)) phi||, evaluated through
/// vector_permutation_defect on the reversed operator list.
inline double word_permutation_defect(const std::vector<Matrix>& projectors, const Vector& phi,
                                      const Permutation& sigma) {
  const std::size_t n = projectors.size();
  std::vector<Matrix> reversed(projectors.rbegin(), projectors.rend());
  std::vector<int> m(n);
  for (std::size_t k = 0; k < n; ++k) m[k] = static_cast<int>(n - 1) - sigma(n - 1 - k);
  return vector_permutation_defect(reversed, phi, Permutation(std::move(m)));
}

struct SigmaDefect {
  Permutation sigma;
  double defect = 0.0;
};

struct InstanceReport {
  double idempotence_residual = 0.0;  // max_i max-abs entry of P_i^2 - P_i
  double hermiticity_residual = 0.0;  // max_i max-abs entry of P_i - P_i^dagger
  double eigenvector_residual = 0.0;  // max-abs of P_i - sum_j |pi_j><pi_j|, when given
  double state_norm = 0.0;
  Eigen::MatrixXd pairwise_defects;   // ||[P_i, P_j] phi||
  double worst_pairwise_defect = 0.0;
  Permutation block_swap_sigma;
  double block_swap_defect = 0.0;
  std::vector<SigmaDefect> spectrum;  // every sigma, in lexicographic order
  SigmaDefect worst_sigma;
  double tolerance = 0.0;
  bool projectors_ok = false;
  bool state_ok = false;
  bool pairwise_ok = false;
  /// All checks pass and the block-swap defect exceeds 10 * tolerance.
  bool is_counterexample = false;
  PropertyReport report;
};

inline InstanceReport verify_instance(const CounterexampleInstance& inst, double tolerance = tol::golden,
                                      std::size_t max_spectrum_size = 6) {
  if (inst.projectors.empty()) throw Error(ErrorKind::InvalidArgument, "instance has no projectors");
  if (!(tolerance >= 0.0)) throw Error(ErrorKind::InvalidArgument, "tolerance must be non-negative");
  const std::size_t n = inst.projectors.size();
  const Vector& phi = inst.state.amplitudes();
  require_dim(phi.size(), inst.dim, "state");

  InstanceReport r;
  r.tolerance = tolerance;
  WitnessCollector collector(tolerance, 32);
  for (std::size_t i = 0; i < n; ++i) {
    const Matrix& p = inst.projectors[i];
    require_square(p, "projector");
    require_dim(p.rows(), inst.dim, "projector");
    const double idem = max_abs(p * p - p);
    const double herm = max_abs(p - p.adjoint());
    r.idempotence_residual = std::max(r.idempotence_residual, idem);
    r.hermiticity_residual = std::max(r.hermiticity_residual, herm);
    const IndexSet which{static_cast<int>(i)};
    collector.add(idem, [&] { return Witness{"idempotence", {}, {which}, {}, 0.0}; });
    collector.add(herm, [&] { return Witness{"hermiticity", {}, {which}, {}, 0.0}; });
    if (inst.eigenvector_form) {
      const double ev = max_abs(p - projector_from_eigenvectors((*inst.eigenvector_form).at(i), inst.dim));
      r.eigenvector_residual = std::max(r.eigenvector_residual, ev);
      collector.add(ev, [&] { return Witness{"eigenvector_form", {}, {which}, {}, 0.0}; });
    }
  }
  r.state_norm = phi.norm();
  collector.add(std::abs(r.state_norm - 1.0), [] { return Witness{"state_norm", {}, {}, {}, 0.0}; });

  r.pairwise_defects = pairwise_commutation_defects(inst.projectors, phi);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double d = r.pairwise_defects(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
      r.worst_pairwise_defect = std::max(r.worst_pairwise_defect, d);
      collector.add(d, [&] {
        return Witness{"pairwise_defect", {}, {IndexSet{static_cast<int>(i), static_cast<int>(j)}}, {}, 0.0};
      });
    }
  r.report = collector.finish("counterexample_constraints");

  r.block_swap_sigma = block_swap(n);
  r.block_swap_defect = word_permutation_defect(inst.projectors, phi, r.block_swap_sigma);
  r.worst_sigma = {Permutation::identity(n), 0.0};
  if (n <= max_spectrum_size) {
    for (const Permutation& sigma : Permutation::all(n)) {
      const double d = word_permutation_defect(inst.projectors, phi, sigma);
      r.spectrum.push_back({sigma, d});
      if (d > r.worst_sigma.defect) r.worst_sigma = {sigma, d};
    }
  }

  r.projectors_ok = r.idempotence_residual <= tolerance && r.hermiticity_residual <= tolerance &&
                    r.eigenvector_residual <= tolerance;
  r.state_ok = std::abs(r.state_norm - 1.0) <= tolerance;
  r.pairwise_ok = r.worst_pairwise_defect <= tolerance;
  r.is_counterexample = r.projectors_ok && r.state_ok && r.pairwise_ok && r.block_swap_defect > 10.0 * tolerance;
  return r;
}

/// The binary projective family {1 - P_i, P_i} with the projectors themselves
/// as square roots, so printed-precision data needs no spectral cleanup.
inline MeasurementFamily induced_family(const CounterexampleInstance& inst, double tolerance = tol::printed) {
  std::vector<Povm> povms;
  std::vector<std::vector<SquareRootOperator>> roots;
  for (const Matrix& p : inst.projectors) {
    const Matrix ph = 0.5 * (p + p.adjoint());
    const Matrix q = identity(inst.dim) - ph;
    povms.push_back(Povm({0, 1}, {q, ph}, Tolerance(tolerance)));
    roots.push_back({{0, q}, {1, ph}});
  }
  return MeasurementFamily(std::move(povms), std::move(roots), Tolerance(tolerance));
}

/// Hermitian H from dim^2 reals laid out as a row-major matrix A: the diagonal
/// of A is diag(H), A(k, l) and A(l, k) for k < l are Re and Im of H(k, l).
inline Matrix hermitian_from_params(const Eigen::VectorXd& params, Eigen::Index dim) {
  if (params.size() != dim * dim)
    throw Error(ErrorKind::DimensionMismatch, "expected dim^2 generator coefficients");
  Matrix h(dim, dim);
  for (Eigen::Index k = 0; k < dim; ++k) {
    h(k, k) = params[k * dim + k];
    for (Eigen::Index l = k + 1; l < dim; ++l) {
      h(k, l) = Complex(params[k * dim + l], params[l * dim + k]);
      h(l, k) = std::conj(h(k, l));
    }
  }
  return h;
}

/// V diag(1^rank, 0^(dim-rank)) V^dagger with V = exp(iH).
inline Matrix parametrize_projector(const Eigen::VectorXd& params, Eigen::Index dim, Eigen::Index rank) {
  if (rank < 0 || rank > dim) throw Error(ErrorKind::InvalidArgument, "rank out of range");
  const Matrix v = expi_hermitian(hermitian_from_params(params, dim));
  const Matrix p = v.leftCols(rank) * v.leftCols(rank).adjoint();
  return 0.5 * (p + p.adjoint());
}

struct PenaltyStage {
  double weight = 1.0;
  double learning_rate = 0.01;
};

struct SearchConfig {
  Eigen::Index dim = 8;
  std::size_t n_projectors = 4;
  std::vector<Eigen::Index> ranks{1, 2, 3, 2};
  std::uint64_t seed = 0;
  std::size_t restarts = 64;
  std::vector<PenaltyStage> penalty_schedule{{0.01, 0.01}, {0.1, 0.01}, {1.0, 0.01},  {10.0, 0.01},
                                             {100.0, 0.01}, {1e3, 0.003}, {1e4, 0.001}, {1e5, 3e-4},
                                             {1e6, 1e-4},  {1e7, 3e-5}};
  /// Adam iterations per penalty stage.
  std::size_t max_iterations = 1000;
  std::size_t polish_iterations = 30;
  double constraint_tol = 1e-7;
  unsigned threads = 0;  // 0 picks worker_count()

  /// Ranks (1, 2, 3, 2) repeated to n entries, each clamped to [1, dim - 1].
  static std::vector<Eigen::Index> default_ranks(Eigen::Index dim, std::size_t n) {
    static constexpr Eigen::Index pattern[] = {1, 2, 3, 2};
    std::vector<Eigen::Index> out;
    for (std::size_t i = 0; i < n; ++i)
      out.push_back(std::clamp<Eigen::Index>(pattern[i % 4], 1, std::max<Eigen::Index>(1, dim - 1)));
    return out;
  }

  void validate() const {
    if (dim < 1 || dim > 32) throw Error(ErrorKind::InvalidArgument, "dim must lie in [1, 32]");
    if (n_projectors < 1 || n_projectors > 6) throw Error(ErrorKind::InvalidArgument, "n_projectors must lie in [1, 6]");
    if (ranks.size() != n_projectors) throw Error(ErrorKind::InvalidArgument, "need one rank per projector");
    for (Eigen::Index r : ranks)
      if (r < 0 || r > dim) throw Error(ErrorKind::InvalidArgument, "rank out of range [0, dim]");
    if (restarts == 0) throw Error(ErrorKind::InvalidArgument, "restarts must be positive");
    if (penalty_schedule.empty()) throw Error(ErrorKind::InvalidArgument, "penalty schedule is empty");
    for (const PenaltyStage& s : penalty_schedule)
      if (!(s.weight > 0.0) || !(s.learning_rate > 0.0))
        throw Error(ErrorKind::InvalidArgument, "penalty weights and learning rates must be positive");
    if (!(constraint_tol > 0.0)) throw Error(ErrorKind::InvalidArgument, "constraint_tol must be positive");
  }
};

struct RestartSummary {
  std::size_t restart = 0;
  std::uint64_t seed = 0;
  double objective = 0.0;
  double worst_constraint_residual = 0.0;
};

struct SearchResult {
  CounterexampleInstance instance;
  double objective = 0.0;                  // block-swap defect
  double worst_constraint_residual = 0.0;  // worst pairwise defect
  std::size_t iterations = 0;
  std::uint64_t seed_used = 0;
  std::size_t restart = 0;
  bool is_counterexample = false;
  std::vector<RestartSummary> restarts;
};

namespace detail {

/// Penalty objective over the parameter vector: dim^2 generator coefficients
/// per projector followed by Re and Im of the unnormalized state.
class SearchProblem {
 public:
  explicit SearchProblem(const SearchConfig& config)
      : d_(config.dim), n_(config.n_projectors), ranks_(config.ranks) {
    const std::size_t k = n_ / 2;
    for (std::size_t i = 0; i < n_; ++i) word_a_.push_back(static_cast<int>(i));
    for (std::size_t i = k; i < n_; ++i) word_b_.push_back(static_cast<int>(i));
    for (std::size_t i = 0; i < k; ++i) word_b_.push_back(static_cast<int>(i));
  }

  Eigen::Index size() const { return static_cast<Eigen::Index>(n_) * d_ * d_ + 2 * d_; }
  Eigen::Index constraint_count() const { return static_cast<Eigen::Index>(n_ * (n_ - 1) / 2) * 2 * d_; }

  struct Point {
    std::vector<Matrix> p;
    std::vector<Matrix> u;
    std::vector<Eigen::VectorXd> lambda;
    std::vector<Matrix> v;
    Vector phi;
    double state_norm = 1.0;
  };

  Point evaluate(const Eigen::VectorXd& x) const {
    Point pt;
    const Eigen::Index dd = d_ * d_;
    for (std::size_t i = 0; i < n_; ++i) {
      const Matrix h = hermitian_from_params(x.segment(static_cast<Eigen::Index>(i) * dd, dd), d_);
      Eigen::SelfAdjointEigenSolver<Matrix> solver(h);
      const Eigen::VectorXd lam = solver.eigenvalues();
      const Matrix v = solver.eigenvectors();
      Eigen::VectorXcd phases(d_);
      for (Eigen::Index k = 0; k < d_; ++k) phases[k] = std::polar(1.0, lam[k]);
      const Matrix u = v * phases.asDiagonal() * v.adjoint();
      const Eigen::Index r = ranks_[i];
      pt.p.push_back(u.leftCols(r) * u.leftCols(r).adjoint());
      pt.u.push_back(u);
      pt.lambda.push_back(lam);
      pt.v.push_back(v);
    }
    const Eigen::Index off = static_cast<Eigen::Index>(n_) * dd;
    Vector s(d_);
    for (Eigen::Index k = 0; k < d_; ++k) s[k] = Complex(x[off + k], x[off + d_ + k]);
    pt.state_norm = s.norm();
    pt.phi = s / pt.state_norm;
    return pt;
  }

  Vector objective_vector(const Point& pt) const {
    return apply_word(pt.p, word_a_, pt.phi) - apply_word(pt.p, word_b_, pt.phi);
  }

  Vector commutator_vector(const Point& pt, std::size_t i, std::size_t j) const {
    return pt.p[i] * (pt.p[j] * pt.phi) - pt.p[j] * (pt.p[i] * pt.phi);
  }

  double objective(const Point& pt) const { return objective_vector(pt).norm(); }

  Eigen::VectorXd constraints(const Point& pt) const {
    Eigen::VectorXd c(constraint_count());
    Eigen::Index row = 0;
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i + 1; j < n_; ++j) {
        const Vector w = commutator_vector(pt, i, j);
        c.segment(row, d_) = w.real();
        c.segment(row + d_, d_) = w.imag();
        row += 2 * d_;
      }
    return c;
  }

  /// Gradient accumulators: df = 2 Re sum_i Tr(G_i^dagger dP_i) + 2 Re(g^dagger dphi).
  struct Cotangent {
    std::vector<Matrix> g;
    Vector g_phi;
  };

  Cotangent zero_cotangent() const {
    return {std::vector<Matrix>(n_, Matrix::Zero(d_, d_)), Vector::Zero(d_)};
  }

  /// Adds the cotangent of Re(v^dagger (sign * word) phi) scaled by `scale`,
  /// with the factor 2 of the convention absorbed.
  void add_word(Cotangent& ct, const Point& pt, const std::vector<int>& word, const Vector& v, double scale) const {
    const std::size_t m = word.size();
    std::vector<Vector> right(m + 1);
    right[m] = pt.phi;
    for (std::size_t q = m; q-- > 0;) right[q] = pt.p[static_cast<std::size_t>(word[q])] * right[q + 1];
    Vector left = v;
    for (std::size_t q = 0; q < m; ++q) {
      const auto idx = static_cast<std::size_t>(word[q]);
      ct.g[idx] += (0.5 * scale) * left * right[q + 1].adjoint();
      left = pt.p[idx] * left;
    }
    ct.g_phi += (0.5 * scale) * left;
  }

  void add_objective(Cotangent& ct, const Point& pt, const Vector& v, double scale) const {
    add_word(ct, pt, word_a_, v, scale);
    add_word(ct, pt, word_b_, v, -scale);
  }

  void add_commutator(Cotangent& ct, const Point& pt, std::size_t i, std::size_t j, const Vector& v,
                      double scale) const {
    add_word(ct, pt, {static_cast<int>(i), static_cast<int>(j)}, v, scale);
    add_word(ct, pt, {static_cast<int>(j), static_cast<int>(i)}, v, -scale);
  }

  /// Chain rule from the cotangent to the real parameter gradient (of the
  /// quantity whose differential is 2 Re <G, dP> + 2 Re <g, dphi>).
  Eigen::VectorXd pullback(const Point& pt, const Cotangent& ct) const {
    Eigen::VectorXd grad(size());
    const Eigen::Index dd = d_ * d_;
    for (std::size_t i = 0; i < n_; ++i) {
      const Matrix gh = 0.5 * (ct.g[i] + ct.g[i].adjoint());
      const Eigen::Index r = ranks_[i];
      Matrix gu = Matrix::Zero(d_, d_);
      gu.leftCols(r) = 2.0 * gh * pt.u[i].leftCols(r);
      const Matrix& v = pt.v[i];
      const Eigen::VectorXd& lam = pt.lambda[i];
      Matrix b = v.adjoint() * gu * v;
      for (Eigen::Index a = 0; a < d_; ++a)
        for (Eigen::Index c = 0; c < d_; ++c) {
          const double half = 0.5 * (lam[a] - lam[c]);
          const double sinc = std::abs(half) < 1e-8 ? 1.0 - half * half / 6.0 : std::sin(half) / half;
          const Complex phi_ac = Complex(0.0, 1.0) * std::polar(1.0, 0.5 * (lam[a] + lam[c])) * sinc;
          b(a, c) *= std::conj(phi_ac);
        }
      const Matrix cm = v * b * v.adjoint();
      const Eigen::Index off = static_cast<Eigen::Index>(i) * dd;
      for (Eigen::Index k = 0; k < d_; ++k) {
        grad[off + k * d_ + k] = 2.0 * cm(k, k).real();
        for (Eigen::Index l = k + 1; l < d_; ++l) {
          grad[off + k * d_ + l] = 2.0 * (cm(k, l).real() + cm(l, k).real());
          grad[off + l * d_ + k] = 2.0 * (cm(k, l).imag() - cm(l, k).imag());
        }
      }
    }
    const Vector gs = (ct.g_phi - pt.phi * pt.phi.dot(ct.g_phi).real()) / pt.state_norm;
    const Eigen::Index off = static_cast<Eigen::Index>(n_) * dd;
    for (Eigen::Index k = 0; k < d_; ++k) {
      grad[off + k] = 2.0 * gs[k].real();
      grad[off + d_ + k] = 2.0 * gs[k].imag();
    }
    return grad;
  }

  /// -||W phi|| + weight * sum ||[P_i, P_j] phi||^2 and its gradient.
  double penalty(const Eigen::VectorXd& x, double weight, Eigen::VectorXd& grad) const {
    const Point pt = evaluate(x);
    Cotangent ct = zero_cotangent();
    const Vector w = objective_vector(pt);
    const double obj = std::sqrt(w.squaredNorm() + 1e-30);
    add_objective(ct, pt, w, -1.0 / obj);
    double cons = 0.0;
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i + 1; j < n_; ++j) {
        const Vector c = commutator_vector(pt, i, j);
        cons += c.squaredNorm();
        add_commutator(ct, pt, i, j, c, 2.0 * weight);
      }
    grad = pullback(pt, ct);
    return -obj + weight * cons;
  }

  Eigen::MatrixXd constraint_jacobian(const Eigen::VectorXd& x) const {
    const Point pt = evaluate(x);
    Eigen::MatrixXd jac(constraint_count(), size());
    Eigen::Index row = 0;
    for (std::size_t i = 0; i < n_; ++i)
      for (std::size_t j = i + 1; j < n_; ++j) {
        for (int part = 0; part < 2; ++part)
          for (Eigen::Index k = 0; k < d_; ++k) {
            Vector e = Vector::Zero(d_);
            e[k] = part == 0 ? Complex(1.0, 0.0) : Complex(0.0, 1.0);
            Cotangent ct = zero_cotangent();
            add_commutator(ct, pt, i, j, e, 1.0);
            jac.row(row++) = pullback(pt, ct).transpose();
          }
      }
    return jac;
  }

  CounterexampleInstance instance(const Eigen::VectorXd& x) const {
    const Eigen::Index dd = d_ * d_;
    std::vector<Matrix> projectors;
    for (std::size_t i = 0; i < n_; ++i)
      projectors.push_back(parametrize_projector(x.segment(static_cast<Eigen::Index>(i) * dd, dd), d_, ranks_[i]));
    const Eigen::Index off = static_cast<Eigen::Index>(n_) * dd;
    Vector s(d_);
    for (Eigen::Index k = 0; k < d_; ++k) s[k] = Complex(x[off + k], x[off + d_ + k]);
    return make_instance(s / s.norm(), std::move(projectors), tol::norm);
  }

 private:
  Eigen::Index d_;
  std::size_t n_;
  std::vector<Eigen::Index> ranks_;
  std::vector<int> word_a_;
  std::vector<int> word_b_;
};

struct RestartOutcome {
  CounterexampleInstance instance;
  double objective = 0.0;
  double residual = 0.0;
  std::size_t iterations = 0;
  std::uint64_t seed = 0;
};

inline RestartOutcome run_restart(const SearchConfig& config, std::uint64_t seed) {
  const SearchProblem problem(config);
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::VectorXd x(problem.size());
  for (Eigen::Index k = 0; k < x.size(); ++k) x[k] = normal(rng);

  std::size_t iterations = 0;
  Eigen::VectorXd grad;
  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  for (const PenaltyStage& stage : config.penalty_schedule) {
    Eigen::VectorXd m = Eigen::VectorXd::Zero(x.size());
    Eigen::VectorXd v = Eigen::VectorXd::Zero(x.size());
    double b1 = 1.0;
    double b2 = 1.0;
    for (std::size_t it = 0; it < config.max_iterations; ++it) {
      problem.penalty(x, stage.weight, grad);
      m = beta1 * m + (1.0 - beta1) * grad;
      v = beta2 * v + (1.0 - beta2) * grad.cwiseAbs2();
      b1 *= beta1;
      b2 *= beta2;
      const Eigen::VectorXd m_hat = m / (1.0 - b1);
      const Eigen::VectorXd v_hat = v / (1.0 - b2);
      x.array() -= stage.learning_rate * m_hat.array() / (v_hat.array().sqrt() + 1e-12);
      ++iterations;
    }
  }

  for (std::size_t k = 0; k < config.polish_iterations; ++k) {
    const Eigen::VectorXd c = problem.constraints(problem.evaluate(x));
    if (c.cwiseAbs().maxCoeff() < 1e-13) break;
    const Eigen::MatrixXd jac = problem.constraint_jacobian(x);
    Eigen::BDCSVD<Eigen::MatrixXd> svd(jac, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-8);
    const Eigen::VectorXd dx = svd.solve(c);
    double step = 1.0;
    Eigen::VectorXd next = x - dx;
    while (step > 1e-4) {
      next = x - step * dx;
      if (problem.constraints(problem.evaluate(next)).norm() < c.norm()) break;
      step *= 0.5;
    }
    x = next;
    ++iterations;
  }

  RestartOutcome out{problem.instance(x), 0.0, 0.0, iterations, seed};
  const InstanceReport report = verify_instance(out.instance, config.constraint_tol, 0);
  out.objective = report.block_swap_defect;
  out.residual = std::max({report.worst_pairwise_defect, report.idempotence_residual, report.hermiticity_residual});
  return out;
}

}  // namespace detail

/// Runs every restart and returns the best one (largest objective among
/// restarts meeting constraint_tol, lowest restart index on ties) without
/// judging whether it is a counterexample.
inline SearchResult search_best(const SearchConfig& config) {
  config.validate();
  std::vector<std::optional<detail::RestartOutcome>> outcomes(config.restarts);
  const unsigned workers = config.threads == 0 ? worker_count() : config.threads;
  parallel_for(config.restarts, workers,
               [&](std::size_t r) { outcomes[r] = detail::run_restart(config, mix_seed(config.seed, r)); });

  SearchResult result;
  std::optional<std::size_t> best;
  for (std::size_t r = 0; r < outcomes.size(); ++r) {
    const detail::RestartOutcome& o = *outcomes[r];
    result.restarts.push_back({r, o.seed, o.objective, o.residual});
    const bool feasible = o.residual <= config.constraint_tol;
    if (!feasible) continue;
    if (!best || o.objective > outcomes[*best]->objective) best = r;
  }
  if (!best) {
    best = 0;
    for (std::size_t r = 1; r < outcomes.size(); ++r)
      if (outcomes[r]->residual < outcomes[*best]->residual) best = r;
  }
  const detail::RestartOutcome& o = *outcomes[*best];
  result.instance = o.instance;
  result.objective = o.objective;
  result.worst_constraint_residual = o.residual;
  result.iterations = o.iterations;
  result.seed_used = o.seed;
  result.restart = *best;
  result.is_counterexample = o.residual <= config.constraint_tol && o.objective > 10.0 * config.constraint_tol;
  return result;
}

/// Like search_best, but throws NoFeasiblePointFound unless the best restart
/// satisfies the constraints and its objective exceeds 10 * constraint_tol.
inline SearchResult search(const SearchConfig& config) {
  SearchResult result = search_best(config);
  if (!result.is_counterexample)
    throw Error(ErrorKind::NoFeasiblePointFound,
                "best restart has objective " + std::to_string(result.objective) + " and constraint residual " +
                    std::to_string(result.worst_constraint_residual));
  return result;
}

}  // namespace qjoint
