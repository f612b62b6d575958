#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <queue>
#include <string>
#include <utility>
#include <type_traits>
#include <variant>
#include <vector>

#include "distdetect/error.hpp"
#include "distdetect/matrix.hpp"
#include "distdetect/rng.hpp"

namespace distdetect {

inline constexpr double kMatrixTolerance = 1e-12;
inline constexpr double kPositiveEntryThreshold = 1e-12;

// Undirected simple graph on agents 0..n-1.
class Graph {
 public:
  using Edge = std::pair<std::size_t, std::size_t>;

  Graph(std::size_t n, const std::vector<Edge>& edges) : n_(n), adjacency_(n) {
    for (auto [i, j] : edges) {
      if (i >= n || j >= n)
        fail(ErrorKind::DimensionMismatch, "edge endpoint out of range");
      if (i == j) fail(ErrorKind::DimensionMismatch, "self-loop on agent " + std::to_string(i));
      const Edge e = std::minmax(i, j);
      if (std::find(edges_.begin(), edges_.end(), e) != edges_.end()) continue;
      edges_.push_back(e);
      adjacency_[i].push_back(j);
      adjacency_[j].push_back(i);
    }
    for (auto& nb : adjacency_) std::sort(nb.begin(), nb.end());
  }

  static Graph path(std::size_t n) {
    std::vector<Edge> e;
    for (std::size_t i = 0; i + 1 < n; ++i) e.emplace_back(i, i + 1);
    return Graph(n, e);
  }
  static Graph cycle(std::size_t n) {
    std::vector<Edge> e;
    for (std::size_t i = 0; i < n; ++i) e.emplace_back(i, (i + 1) % n);
    return Graph(n, e);
  }
  static Graph complete(std::size_t n) {
    std::vector<Edge> e;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) e.emplace_back(i, j);
    return Graph(n, e);
  }
  static Graph star(std::size_t n) {
    std::vector<Edge> e;
    for (std::size_t i = 1; i < n; ++i) e.emplace_back(0, i);
    return Graph(n, e);
  }

  std::size_t n() const noexcept { return n_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  const std::vector<std::size_t>& neighbors(std::size_t i) const { return adjacency_.at(i); }
  std::size_t degree(std::size_t i) const { return adjacency_.at(i).size(); }

 private:
  std::size_t n_;
  std::vector<Edge> edges_;
  std::vector<std::vector<std::size_t>> adjacency_;
};

// Nonnegative, symmetric, row-stochastic (hence doubly stochastic) n x n matrix.
class MixingMatrix {
 public:
  explicit MixingMatrix(Matrix w) : w_(std::move(w)) {
    const std::size_t n = w_.rows();
    if (n < 2 || w_.cols() != n)
      fail(ErrorKind::InvalidMatrix, "mixing matrix must be square with n >= 2");
    for (std::size_t i = 0; i < n; ++i) {
      double sum = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        const double v = w_(i, j);
        if (!std::isfinite(v) || v < 0.0)
          fail(ErrorKind::InvalidMatrix, "negative or non-finite entry");
        if (std::abs(v - w_(j, i)) > kMatrixTolerance)
          fail(ErrorKind::InvalidMatrix, "not symmetric at (" + std::to_string(i) + ", " +
                                             std::to_string(j) + ")");
        sum += v;
      }
      if (std::abs(sum - 1.0) > kMatrixTolerance)
        fail(ErrorKind::InvalidMatrix, "row " + std::to_string(i) + " sums to " + std::to_string(sum));
    }
  }
  explicit MixingMatrix(const std::vector<std::vector<double>>& rows)
      : MixingMatrix(Matrix::from_rows(rows)) {}

  static MixingMatrix uniform(std::size_t n) {
    return MixingMatrix(Matrix(n, n, 1.0 / static_cast<double>(n)));
  }

  std::size_t n() const noexcept { return w_.rows(); }
  double operator()(std::size_t i, std::size_t j) const { return w_(i, j); }
  const Matrix& matrix() const noexcept { return w_; }

 private:
  Matrix w_;
};

// Off-diagonal (i, j) in E gets 1 / (1 + max(deg i, deg j)); the diagonal
// takes the remainder, so it stays strictly positive.
inline MixingMatrix metropolis_matrix(const Graph& g) {
  const std::size_t n = g.n();
  if (n < 2) fail(ErrorKind::InvalidMatrix, "graph needs n >= 2");
  Matrix w(n, n);
  for (auto [i, j] : g.edges()) {
    const double v = 1.0 / (1.0 + static_cast<double>(std::max(g.degree(i), g.degree(j))));
    w(i, j) = v;
    w(j, i) = v;
  }
  for (std::size_t i = 0; i < n; ++i) {
    double off = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) off += w(i, j);
    w(i, i) = 1.0 - off;
  }
  return MixingMatrix(std::move(w));
}

// I - (1/2)(e_i - e_j)(e_i - e_j)^T
inline MixingMatrix pairwise_average_matrix(std::size_t n, std::size_t i, std::size_t j) {
  Matrix w = Matrix::identity(n);
  w(i, i) = 0.5;
  w(j, j) = 0.5;
  w(i, j) = 0.5;
  w(j, i) = 0.5;
  return MixingMatrix(std::move(w));
}

namespace detail {
inline void require_no_isolated(const Graph& g) {
  for (std::size_t i = 0; i < g.n(); ++i)
    if (g.degree(i) == 0) fail(ErrorKind::IsolatedAgent, "agent " + std::to_string(i) + " has no neighbors");
}
}  // namespace detail

// One gossip tick: a uniform agent, then a uniform neighbor of it.
inline MixingMatrix gossip_draw(const Graph& g, Rng& rng) {
  detail::require_no_isolated(g);
  const std::size_t i = uniform_index(rng, g.n());
  const auto& nb = g.neighbors(i);
  const std::size_t j = nb[uniform_index(rng, nb.size())];
  return pairwise_average_matrix(g.n(), i, j);
}

struct FixedNetwork {
  MixingMatrix w;
};
struct GossipNetwork {
  Graph graph;
};
struct FiniteSupportNetwork {
  std::vector<std::pair<MixingMatrix, double>> support;
};

enum class Connectivity { Required, Unchecked };

class NetworkProcess;
bool check_expected_connectivity(const NetworkProcess& p);

// Stationary i.i.d. distribution over mixing matrices.
class NetworkProcess {
 public:
  using Kind = std::variant<FixedNetwork, GossipNetwork, FiniteSupportNetwork>;

  static NetworkProcess fixed(MixingMatrix w, Connectivity c = Connectivity::Required) {
    return NetworkProcess(FixedNetwork{std::move(w)}, c);
  }
  static NetworkProcess gossip(Graph g, Connectivity c = Connectivity::Required) {
    detail::require_no_isolated(g);
    if (g.n() < 2) fail(ErrorKind::InvalidMatrix, "gossip graph needs n >= 2");
    return NetworkProcess(GossipNetwork{std::move(g)}, c);
  }
  static NetworkProcess finite_support(std::vector<std::pair<MixingMatrix, double>> support,
                                       Connectivity c = Connectivity::Required) {
    if (support.empty()) fail(ErrorKind::InvalidMatrix, "empty finite support");
    double total = 0.0;
    for (const auto& [w, p] : support) {
      if (w.n() != support.front().first.n())
        fail(ErrorKind::DimensionMismatch, "support matrices differ in size");
      if (!(p > 0.0)) fail(ErrorKind::InvalidMatrix, "support probabilities must be positive");
      total += p;
    }
    if (std::abs(total - 1.0) > kMatrixTolerance)
      fail(ErrorKind::InvalidMatrix, "support probabilities sum to " + std::to_string(total));
    return NetworkProcess(FiniteSupportNetwork{std::move(support)}, c);
  }

  std::size_t n() const {
    return std::visit(
        [](const auto& k) -> std::size_t {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, FixedNetwork>) return k.w.n();
          else if constexpr (std::is_same_v<T, GossipNetwork>) return k.graph.n();
          else return k.support.front().first.n();
        },
        kind_);
  }

  const Kind& kind() const noexcept { return kind_; }
  bool is_fixed() const noexcept { return std::holds_alternative<FixedNetwork>(kind_); }

  MixingMatrix draw(Rng& rng) const {
    return std::visit(
        [&rng](const auto& k) -> MixingMatrix {
          using T = std::decay_t<decltype(k)>;
          if constexpr (std::is_same_v<T, FixedNetwork>) {
            return k.w;
          } else if constexpr (std::is_same_v<T, GossipNetwork>) {
            return gossip_draw(k.graph, rng);
          } else {
            const double u = uniform01(rng);
            double cum = 0.0;
            for (std::size_t s = 0; s + 1 < k.support.size(); ++s) {
              cum += k.support[s].second;
              if (u < cum) return k.support[s].first;
            }
            return k.support.back().first;
          }
        },
        kind_);
  }

 private:
  NetworkProcess(Kind kind, Connectivity c) : kind_(std::move(kind)) {
    if (c == Connectivity::Required && !check_expected_connectivity(*this))
      fail(ErrorKind::DegenerateNetwork, "network is not connected in expectation");
  }

  Kind kind_;
};

// E[W(t)]. Gossip uses the closed form with edge probability
// q_ij = (1/n)(1/deg i) + (1/n)(1/deg j).
inline MixingMatrix expected_matrix(const NetworkProcess& p) {
  return std::visit(
      [](const auto& k) -> MixingMatrix {
        using T = std::decay_t<decltype(k)>;
        if constexpr (std::is_same_v<T, FixedNetwork>) {
          return k.w;
        } else if constexpr (std::is_same_v<T, GossipNetwork>) {
          const auto& g = k.graph;
          const double n = static_cast<double>(g.n());
          Matrix w = Matrix::identity(g.n());
          for (auto [i, j] : g.edges()) {
            const double q = 1.0 / (n * static_cast<double>(g.degree(i))) +
                             1.0 / (n * static_cast<double>(g.degree(j)));
            w(i, i) -= 0.5 * q;
            w(j, j) -= 0.5 * q;
            w(i, j) += 0.5 * q;
            w(j, i) += 0.5 * q;
          }
          return MixingMatrix(std::move(w));
        } else {
          const std::size_t n = k.support.front().first.n();
          Matrix w(n, n);
          for (const auto& [m, prob] : k.support) {
            Matrix term = m.matrix();
            term *= prob;
            w += term;
          }
          return MixingMatrix(std::move(w));
        }
      },
      p.kind());
}

// Breadth-first reachability over strictly positive off-diagonal entries.
inline bool is_connected(const MixingMatrix& w) {
  const std::size_t n = w.n();
  std::vector<bool> seen(n, false);
  std::queue<std::size_t> frontier;
  frontier.push(0);
  seen[0] = true;
  std::size_t reached = 1;
  while (!frontier.empty()) {
    const std::size_t i = frontier.front();
    frontier.pop();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || seen[j] || w(i, j) <= kPositiveEntryThreshold) continue;
      seen[j] = true;
      ++reached;
      frontier.push(j);
    }
  }
  return reached == n;
}

inline bool check_expected_connectivity(const NetworkProcess& p) {
  return is_connected(expected_matrix(p));
}

struct PowerIterationOptions {
  double relative_tolerance = 1e-10;
  std::size_t max_iterations = 100000;
};

// Second-largest singular value of a symmetric doubly stochastic matrix,
// i.e. the spectral norm of C = W - (1/n) 1 1^T. Power iteration runs on C^2
// so that eigenvalue pairs +s / -s cannot stall it; it stops once the
// Rayleigh-quotient residual of C^2 is below tolerance.
inline double sigma2(const MixingMatrix& w, PowerIterationOptions opt = {}) {
  const std::size_t n = w.n();
  const double inv_n = 1.0 / static_cast<double>(n);
  Matrix c = w.matrix();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) c(i, j) -= inv_n;

  auto center = [&](std::vector<double>& x) {
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) * inv_n;
    for (double& v : x) v -= mean;
  };
  auto normalize = [](std::vector<double>& x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    s = std::sqrt(s);
    if (s > 0.0)
      for (double& v : x) v /= s;
    return s;
  };

  // Deterministic start with no lattice symmetry: alternating or constant
  // patterns are exact eigenvectors of cycle-like matrices.
  std::vector<double> x(n);
  for (std::size_t j = 0; j < n; ++j) {
    const double g = static_cast<double>(j + 1) * 0.6180339887498949;
    x[j] = g - std::floor(g) - 0.5;
  }
  center(x);
  normalize(x);

  for (std::size_t it = 0; it < opt.max_iterations; ++it) {
    std::vector<double> cx = multiply(c, x);
    std::vector<double> ccx = multiply(c, cx);
    center(ccx);
    double rho = 0.0;  // x^T C^2 x = |Cx|^2
    for (double v : cx) rho += v * v;
    double res = 0.0;
    for (std::size_t j = 0; j < n; ++j) res += (ccx[j] - rho * x[j]) * (ccx[j] - rho * x[j]);
    res = std::sqrt(res);
    if (res <= opt.relative_tolerance * rho + 1e-24) return std::min(std::sqrt(rho), 1.0);
    if (normalize(ccx) == 0.0) return 0.0;
    x = std::move(ccx);
  }
  fail(ErrorKind::NoConvergence, "power iteration hit the iteration cap");
}

// Cumulative sums S(t) = sum_{s=0}^{t-1} sum_j |[W^s]_{ij} - 1/n| for
// t = 1..t_max, built by repeated vector-matrix products from row i.
inline std::vector<double> mixing_deviation_profile(const MixingMatrix& w, std::size_t i,
                                                    std::size_t t_max) {
  const std::size_t n = w.n();
  if (i >= n) fail(ErrorKind::DimensionMismatch, "agent index out of range");
  const double inv_n = 1.0 / static_cast<double>(n);
  std::vector<double> r(n, 0.0);
  r[i] = 1.0;
  std::vector<double> out;
  out.reserve(t_max);
  double total = 0.0;
  for (std::size_t t = 1; t <= t_max; ++t) {
    for (double v : r) total += std::abs(v - inv_n);
    out.push_back(total);
    r = multiply(w.matrix(), r);  // symmetric: row i of W^s is column i
  }
  return out;
}

inline double mixing_deviation_sum(const MixingMatrix& w, std::size_t i, std::size_t t) {
  if (t < 1) fail(ErrorKind::DimensionMismatch, "t must be at least 1");
  return mixing_deviation_profile(w, i, t).back();
}

}  // namespace distdetect
