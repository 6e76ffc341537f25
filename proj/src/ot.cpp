#include "jkoflow/ot.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>

#include "jkoflow/error.hpp"
#include "jkoflow/parallel.hpp"
#include "jkoflow/random.hpp"

namespace jkoflow {

namespace {

std::atomic<std::size_t> g_solves{0};

// Network simplex on the bipartite transportation graph. Nodes 0..n-1 are
// rows (sources), n..n+m-1 columns (targets), n+m an artificial root joined
// to every node by a high-cost arc. The basis is a strongly feasible spanning
// tree (zero-flow tree arcs point away from the root), kept by choosing the
// last blocking arc around the cycle; re-rooting after a pivot only touches
// the subtree that was cut off.
class TransportSimplex {
 public:
  TransportSimplex(const Eigen::MatrixXd& cost, const Eigen::VectorXd& a, const Eigen::VectorXd& b)
      : n_(static_cast<int>(cost.rows())),
        m_(static_cast<int>(cost.cols())),
        root_(n_ + m_),
        c_(static_cast<std::size_t>(n_) * m_),
        x_(static_cast<std::size_t>(n_) * m_, 0.0),
        art_flow_(static_cast<std::size_t>(n_ + m_), 0.0),
        art_out_(static_cast<std::size_t>(n_ + m_), false),
        adj_(static_cast<std::size_t>(n_ + m_ + 1)),
        parent_(static_cast<std::size_t>(n_ + m_ + 1), -1),
        depth_(static_cast<std::size_t>(n_ + m_ + 1), 0),
        up_(static_cast<std::size_t>(n_ + m_ + 1), false),
        pot_(static_cast<std::size_t>(n_ + m_ + 1), 0.0) {
    double cmax = 0.0;
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < m_; ++j) {
        const double v = cost(i, j);
        c_[idx(i, j)] = v;
        cmax = std::max(cmax, std::abs(v));
      }
    eps_ = 1e-12 * (1.0 + cmax);
    art_cost_ = (1.0 + cmax) * static_cast<double>(n_ + m_ + 1);
    // Rows with supply ship to the root, the root ships to every column.
    for (int i = 0; i < n_; ++i) {
      art_out_[i] = a(i) > 0.0;
      art_flow_[i] = std::max(a(i), 0.0);
    }
    for (int j = 0; j < m_; ++j) art_flow_[n_ + j] = std::max(b(j), 0.0);
    for (int k = 0; k < n_ + m_; ++k) add_edge(k, root_);
    parent_[root_] = -1;
    reroot(root_);
  }

  std::size_t run(std::size_t max_pivots) {
    const std::size_t degenerate_limit = 10 * static_cast<std::size_t>(n_ + m_);
    std::size_t pivots = 0, degenerate_streak = 0;
    int ei = 0, ej = 0;
    while (true) {
      const bool bland = degenerate_streak > degenerate_limit;
      const bool found = bland ? price_bland(ei, ej) : price_block(ei, ej);
      if (!found) return pivots;
      if (++pivots > max_pivots)
        throw SolverError("transportation simplex exceeded " + std::to_string(max_pivots) +
                          " pivots (degenerate cycling)");
      const double theta = pivot(ei, ej);
      degenerate_streak = theta > 0.0 ? 0 : degenerate_streak + 1;
    }
  }

  OtSolution solution() const {
    OtSolution s;
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < m_; ++j) {
        const double f = x_[idx(i, j)];
        if (f > 0.0) {
          s.coupling.pairs.push_back({i, j, f});
          s.objective += f * c_[idx(i, j)];
        }
      }
    return s;
  }

  double artificial_flow() const {
    double t = 0.0;
    for (double f : art_flow_) t += f;
    return t;
  }

 private:
  std::size_t idx(int i, int j) const { return static_cast<std::size_t>(i) * m_ + j; }

  // Tree arc between node w and its neighbour q: is it directed w -> q?
  bool directed(int w, int q) const {
    if (q == root_) return art_out_[w];
    if (w == root_) return !art_out_[q];
    return w < n_;
  }

  double arc_cost(int w, int q) const {
    if (w == root_ || q == root_) return art_cost_;
    return w < n_ ? c_[idx(w, q - n_)] : c_[idx(q, w - n_)];
  }

  double& arc_flow(int w, int q) {
    if (q == root_) return art_flow_[w];
    if (w == root_) return art_flow_[q];
    return w < n_ ? x_[idx(w, q - n_)] : x_[idx(q, w - n_)];
  }

  void add_edge(int p, int q) {
    adj_[p].push_back(q);
    adj_[q].push_back(p);
  }

  void remove_edge(int p, int q) {
    auto drop = [](std::vector<int>& v, int w) {
      auto it = std::find(v.begin(), v.end(), w);
      *it = v.back();
      v.pop_back();
    };
    drop(adj_[p], q);
    drop(adj_[q], p);
  }

  // Recompute parent/direction/depth/potential below `s`, whose own links
  // must already be set. Potentials satisfy pot[q] = pot[p] + c on arc p->q.
  void reroot(int s) {
    stack_.clear();
    stack_.push_back(s);
    while (!stack_.empty()) {
      const int u = stack_.back();
      stack_.pop_back();
      for (int w : adj_[u]) {
        if (w == parent_[u]) continue;
        parent_[w] = u;
        depth_[w] = depth_[u] + 1;
        up_[w] = directed(w, u);
        pot_[w] = up_[w] ? pot_[u] - arc_cost(w, u) : pot_[u] + arc_cost(u, w);
        stack_.push_back(w);
      }
    }
  }

  double reduced(int i, int j) const { return c_[idx(i, j)] + pot_[i] - pot_[n_ + j]; }

  // Block search: most negative reduced cost within the first block that has
  // any candidate, scanning cyclically from where the last search stopped.
  // Ties go to the lowest (i, j).
  bool price_block(int& ei, int& ej) {
    const std::size_t total = static_cast<std::size_t>(n_) * m_;
    const std::size_t block = std::max<std::size_t>(
        std::min<std::size_t>(total, 16),
        static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(total)))));
    double best = -eps_;
    std::size_t best_k = total;
    int i = static_cast<int>(next_ / m_), j = static_cast<int>(next_ % m_);
    std::size_t in_block = 0;
    for (std::size_t scanned = 0; scanned < total; ++scanned) {
      const std::size_t k = static_cast<std::size_t>(i) * m_ + j;
      const double r = c_[k] + pot_[i] - pot_[n_ + j];
      if (r < best || (r == best && best_k < total && k < best_k)) {
        best = r;
        best_k = k;
      }
      if (++j == m_) {
        j = 0;
        if (++i == n_) i = 0;
      }
      if (++in_block == block) {
        if (best_k < total) break;
        in_block = 0;
      }
    }
    next_ = static_cast<std::size_t>(i) * m_ + j;
    if (best_k == total) return false;
    ei = static_cast<int>(best_k / m_);
    ej = static_cast<int>(best_k % m_);
    return true;
  }

  // Bland: lexicographically first arc with negative reduced cost.
  bool price_bland(int& ei, int& ej) const {
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < m_; ++j)
        if (reduced(i, j) < -eps_) {
          ei = i;
          ej = j;
          return true;
        }
    return false;
  }

  double pivot(int ei, int ej) {
    const int u = ei, v = n_ + ej;
    int p = u, q = v;
    while (p != q) {
      if (depth_[p] >= depth_[q])
        p = parent_[p];
      else
        q = parent_[q];
    }
    const int join = p;

    // Circulation runs u -> v -> join -> u. On the u side an arc pointing up
    // loses flow, on the v side an arc pointing down does.
    double theta = std::numeric_limits<double>::infinity();
    int leave = -1;
    bool leave_u_side = true;
    for (int w = u; w != join; w = parent_[w])
      if (up_[w]) {
        const double f = arc_flow(w, parent_[w]);
        if (f < theta) {
          theta = f;
          leave = w;
          leave_u_side = true;
        }
      }
    for (int w = v; w != join; w = parent_[w])
      if (!up_[w]) {
        const double f = arc_flow(w, parent_[w]);
        if (f <= theta) {
          theta = f;
          leave = w;
          leave_u_side = false;
        }
      }
    if (leave < 0) throw SolverError("transportation simplex found an unbounded cycle");

    if (theta > 0.0) {
      x_[idx(ei, ej)] += theta;
      for (int w = u; w != join; w = parent_[w]) arc_flow(w, parent_[w]) += up_[w] ? -theta : theta;
      for (int w = v; w != join; w = parent_[w]) arc_flow(w, parent_[w]) += up_[w] ? theta : -theta;
      arc_flow(leave, parent_[leave]) = 0.0;
    }

    remove_edge(leave, parent_[leave]);
    add_edge(u, v);
    const int s = leave_u_side ? u : v;
    const int o = leave_u_side ? v : u;
    parent_[s] = o;
    depth_[s] = depth_[o] + 1;
    up_[s] = s == u;
    pot_[s] = up_[s] ? pot_[o] - arc_cost(s, o) : pot_[o] + arc_cost(o, s);
    reroot(s);
    return theta;
  }

  int n_, m_, root_;
  std::vector<double> c_, x_;
  std::vector<double> art_flow_;
  std::vector<bool> art_out_;  // row k -> root when true, root -> k otherwise
  std::vector<std::vector<int>> adj_;
  std::vector<int> parent_, depth_;
  std::vector<bool> up_;  // tree arc from node to parent points towards the parent
  std::vector<double> pot_;
  double eps_ = 0.0;
  double art_cost_ = 0.0;
  std::size_t next_ = 0;
  std::vector<int> stack_;
};

void check_dims(const EmpiricalSnapshot& mu, const EmpiricalSnapshot& nu) {
  if (mu.dim() != nu.dim())
    throw ValidationError("dimension mismatch: " + std::to_string(mu.dim()) + " vs " +
                          std::to_string(nu.dim()));
}

void check_exponent(int p) {
  if (p != 1 && p != 2) throw ValidationError("cost exponent must be 1 or 2");
}

double log_or_neg_inf(double v) {
  return v > 0.0 ? std::log(v) : -std::numeric_limits<double>::infinity();
}

}  // namespace

OtMethod parse_ot_method(const std::string& name) {
  if (name == "exact") return OtMethod::exact;
  if (name == "sinkhorn") return OtMethod::sinkhorn;
  throw ValidationError("unknown OT method '" + name + "' (expected exact|sinkhorn)");
}

std::string to_string(OtMethod method) {
  return method == OtMethod::exact ? "exact" : "sinkhorn";
}

void OtConfig::validate() const {
  if (method == OtMethod::sinkhorn && !(epsilon > 0.0))
    throw ValidationError("Sinkhorn epsilon must be positive");
  if (batch_size < 2) throw ValidationError("OT batch size must be at least 2");
  if (max_iters < 1) throw ValidationError("OT max_iters must be positive");
  if (!(tolerance > 0.0)) throw ValidationError("OT tolerance must be positive");
  check_exponent(cost_exponent);
}

std::size_t solver_invocations() { return g_solves.load(); }
void reset_solver_invocations() { g_solves.store(0); }

Eigen::MatrixXd cost_matrix(const Eigen::MatrixXd& source, const Eigen::MatrixXd& target,
                            int exponent) {
  check_exponent(exponent);
  Eigen::MatrixXd c(source.rows(), target.rows());
  for (Index j = 0; j < target.rows(); ++j)
    for (Index i = 0; i < source.rows(); ++i) {
      const double sq = (source.row(i) - target.row(j)).squaredNorm();
      c(i, j) = exponent == 2 ? sq : std::sqrt(sq);
    }
  return c;
}

OtSolution solve_transport(const Eigen::MatrixXd& cost, const Eigen::VectorXd& a,
                           const Eigen::VectorXd& b, std::size_t max_pivots) {
  if (cost.rows() != a.size() || cost.cols() != b.size())
    throw ValidationError("transport problem shape mismatch");
  if (a.size() < 1 || b.size() < 1) throw ValidationError("empty transport problem");
  ++g_solves;
  if ((a.array() < 0.0).any() || (b.array() < 0.0).any())
    throw ValidationError("transport marginals must be nonnegative");
  if (std::abs(a.sum() - b.sum()) > 1e-9 * std::max(1.0, a.sum()))
    throw ValidationError("transport marginals have different totals");
  TransportSimplex simplex(cost, a, b);
  if (max_pivots == 0)
    max_pivots = 1000 * static_cast<std::size_t>(a.size() + b.size()) + 10000;
  const std::size_t pivots = simplex.run(max_pivots);
  if (simplex.artificial_flow() > 1e-9 * std::max(1.0, a.sum()))
    throw SolverError("transportation simplex ended with flow on artificial arcs");
  OtSolution s = simplex.solution();
  s.iterations = pivots;
  return s;
}

OtSolution solve_entropic(const Eigen::MatrixXd& cost, const Eigen::VectorXd& a,
                          const Eigen::VectorXd& b, double epsilon, int max_iters,
                          double tolerance) {
  if (!(epsilon > 0.0)) throw ValidationError("Sinkhorn epsilon must be positive");
  if (cost.rows() != a.size() || cost.cols() != b.size())
    throw ValidationError("transport problem shape mismatch");
  ++g_solves;
  const Index n = a.size(), m = b.size();
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  Eigen::VectorXd loga(n), logb(m);
  for (Index i = 0; i < n; ++i) loga(i) = log_or_neg_inf(a(i));
  for (Index j = 0; j < m; ++j) logb(j) = log_or_neg_inf(b(j));
  Eigen::VectorXd f = Eigen::VectorXd::Zero(n), g = Eigen::VectorXd::Zero(m);
  std::vector<double> z(static_cast<std::size_t>(std::max(n, m)));

  // eps * log sum_k exp((h_k - c_k) / eps), over finite h_k
  auto soft_min = [&](auto&& h, auto&& c, Index len) {
    double mx = kNegInf;
    for (Index k = 0; k < len; ++k) {
      z[k] = (h(k) - c(k)) / epsilon;
      mx = std::max(mx, z[k]);
    }
    if (mx == kNegInf) return kNegInf;
    double s = 0.0;
    for (Index k = 0; k < len; ++k) s += std::exp(z[k] - mx);
    return epsilon * (mx + std::log(s));
  };

  auto row_error = [&]() {
    double err = 0.0;
    for (Index i = 0; i < n; ++i) {
      double r = 0.0;
      if (f(i) != kNegInf)
        for (Index j = 0; j < m; ++j)
          if (g(j) != kNegInf) r += std::exp((f(i) + g(j) - cost(i, j)) / epsilon);
      err += std::abs(r - a(i));
    }
    return err;
  };

  OtSolution sol;
  sol.converged = false;
  int it = 0;
  for (it = 1; it <= max_iters; ++it) {
    for (Index i = 0; i < n; ++i) {
      if (a(i) <= 0.0) {
        f(i) = kNegInf;
        continue;
      }
      f(i) = epsilon * loga(i) - soft_min(g, cost.row(i), m);
    }
    for (Index j = 0; j < m; ++j) {
      if (b(j) <= 0.0) {
        g(j) = kNegInf;
        continue;
      }
      g(j) = epsilon * logb(j) - soft_min(f, cost.col(j), n);
    }
    for (Index i = 0; i < n; ++i)
      if (a(i) > 0.0 && !std::isfinite(f(i)))
        throw SolverError("Sinkhorn kernel underflow (epsilon too small for the cost scale)");
    for (Index j = 0; j < m; ++j)
      if (b(j) > 0.0 && !std::isfinite(g(j)))
        throw SolverError("Sinkhorn kernel underflow (epsilon too small for the cost scale)");
    // Columns are exact right after the g-update; only rows need checking.
    if ((it % 10 == 0 || it == max_iters) && row_error() < tolerance) {
      sol.converged = true;
      break;
    }
  }
  sol.iterations = static_cast<std::size_t>(std::min(it, max_iters));

  Eigen::MatrixXd plan(n, m);
  for (Index j = 0; j < m; ++j)
    for (Index i = 0; i < n; ++i)
      plan(i, j) = (f(i) == kNegInf || g(j) == kNegInf)
                       ? 0.0
                       : std::exp((f(i) + g(j) - cost(i, j)) / epsilon);

  // Round onto the transport polytope: scale rows and columns down, drop
  // negligible entries, then place the leftover mass north-west-corner style.
  for (Index i = 0; i < n; ++i) {
    const double r = plan.row(i).sum();
    if (r > a(i)) plan.row(i) *= a(i) / r;
  }
  for (Index j = 0; j < m; ++j) {
    const double c = plan.col(j).sum();
    if (c > b(j)) plan.col(j) *= b(j) / c;
  }
  plan = (plan.array() < 1e-15).select(0.0, plan);
  Eigen::VectorXd ra = (a - plan.rowwise().sum()).cwiseMax(0.0);
  Eigen::VectorXd rb = (b - plan.colwise().sum().transpose()).cwiseMax(0.0);
  Index i = 0, j = 0;
  while (i < n && j < m) {
    const double t = std::min(ra(i), rb(j));
    plan(i, j) += t;
    ra(i) -= t;
    rb(j) -= t;
    if (ra(i) <= 0.0)
      ++i;
    else
      ++j;
  }

  for (Index r = 0; r < n; ++r)
    for (Index c = 0; c < m; ++c)
      if (plan(r, c) > 0.0) {
        sol.coupling.pairs.push_back({r, c, plan(r, c)});
        sol.objective += plan(r, c) * cost(r, c);
      }
  return sol;
}

OtSolution solve_exact(const EmpiricalSnapshot& mu, const EmpiricalSnapshot& nu,
                       int cost_exponent) {
  check_dims(mu, nu);
  const Eigen::MatrixXd c = cost_matrix(mu.points(), nu.points(), cost_exponent);
  OtSolution s = solve_transport(c, mu.weights(), nu.weights());
  s.coupling.source_time = mu.time_index();
  s.coupling.target_time = mu.time_index() + 1;
  return s;
}

OtSolution solve_sinkhorn(const EmpiricalSnapshot& mu, const EmpiricalSnapshot& nu,
                          int cost_exponent, double epsilon, int max_iters, double tolerance) {
  check_dims(mu, nu);
  const Eigen::MatrixXd c = cost_matrix(mu.points(), nu.points(), cost_exponent);
  OtSolution s = solve_entropic(c, mu.weights(), nu.weights(), epsilon, max_iters, tolerance);
  s.coupling.source_time = mu.time_index();
  s.coupling.target_time = mu.time_index() + 1;
  return s;
}

namespace {

struct Piece {
  Index particle;
  double mass;
};

// Shuffle the particles and cut the mass line into `batches` intervals of
// equal mass, splitting the particles that straddle a cut.
std::vector<std::vector<Piece>> cut_batches(const EmpiricalSnapshot& snap, Index batches,
                                            CounterRng rng) {
  auto order = random_permutation(snap.size(), rng);
  const double target = snap.weights().sum() / static_cast<double>(batches);
  std::vector<std::vector<Piece>> out(static_cast<std::size_t>(batches));
  std::size_t k = 0;
  double filled = 0.0;
  for (Index p : order) {
    double m = snap.weights()(p);
    while (true) {
      const bool last = k + 1 == out.size();
      const double room = target - filled;
      if (last || m <= room * (1.0 + 1e-12)) {
        out[k].push_back({p, m});
        filled += m;
        break;
      }
      if (room > 0.0) {
        out[k].push_back({p, room});
        m -= room;
      }
      ++k;
      filled = 0.0;
    }
  }
  return out;
}

Coupling couple_pair(const EmpiricalSnapshot& src, const EmpiricalSnapshot& tgt,
                     const OtConfig& cfg, std::uint64_t stream) {
  const Index largest = std::max(src.size(), tgt.size());
  const Index batches = (largest + cfg.batch_size - 1) / cfg.batch_size;
  auto solve_sub = [&](const Eigen::MatrixXd& c, const Eigen::VectorXd& a,
                       const Eigen::VectorXd& b) {
    if (cfg.method == OtMethod::exact) return solve_transport(c, a, b);
    return solve_entropic(c, a, b, cfg.epsilon, cfg.max_iters, cfg.tolerance);
  };
  if (batches <= 1) {
    OtSolution s = cfg.method == OtMethod::exact
                       ? solve_exact(src, tgt, cfg.cost_exponent)
                       : solve_sinkhorn(src, tgt, cfg.cost_exponent, cfg.epsilon, cfg.max_iters,
                                        cfg.tolerance);
    s.coupling.source_time = src.time_index();
    s.coupling.target_time = tgt.time_index();
    return std::move(s.coupling);
  }

  const auto src_batches = cut_batches(src, batches, CounterRng(cfg.seed, stream, 0));
  const auto tgt_batches = cut_batches(tgt, batches, CounterRng(cfg.seed, stream, 1));
  std::vector<TransportPair> all;
  for (Index k = 0; k < batches; ++k) {
    const auto& sb = src_batches[static_cast<std::size_t>(k)];
    const auto& tb = tgt_batches[static_cast<std::size_t>(k)];
    const Index ns = static_cast<Index>(sb.size()), nt = static_cast<Index>(tb.size());
    Eigen::MatrixXd sp(ns, src.dim()), tp(nt, tgt.dim());
    Eigen::VectorXd a(ns), b(nt);
    for (Index i = 0; i < ns; ++i) {
      sp.row(i) = src.points().row(sb[i].particle);
      a(i) = sb[i].mass;
    }
    for (Index j = 0; j < nt; ++j) {
      tp.row(j) = tgt.points().row(tb[j].particle);
      b(j) = tb[j].mass;
    }
    const double scale = a.sum();
    a /= scale;
    b /= b.sum();
    const Eigen::MatrixXd c = cost_matrix(sp, tp, cfg.cost_exponent);
    OtSolution s = solve_sub(c, a, b);
    for (const auto& p : s.coupling.pairs)
      all.push_back({sb[p.source].particle, tb[p.target].particle, p.mass * scale});
  }
  std::sort(all.begin(), all.end(), [](const TransportPair& l, const TransportPair& r) {
    return l.source != r.source ? l.source < r.source : l.target < r.target;
  });
  Coupling out;
  out.source_time = src.time_index();
  out.target_time = tgt.time_index();
  for (const auto& p : all) {
    if (!out.pairs.empty() && out.pairs.back().source == p.source &&
        out.pairs.back().target == p.target)
      out.pairs.back().mass += p.mass;
    else
      out.pairs.push_back(p);
  }
  return out;
}

}  // namespace

std::vector<Coupling> couple_trajectory(const PopulationTrajectory& traj, const OtConfig& cfg) {
  cfg.validate();
  if (traj.size() < 2) throw ValidationError("coupling needs at least two snapshots");
  std::vector<Coupling> out(traj.steps());
  parallel_for(traj.steps(), [&](std::size_t t) {
    try {
      out[t] = couple_pair(traj[t], traj[t + 1], cfg, t);
    } catch (const SolverError& e) {
      throw SolverError("coupling " + std::to_string(t) + "->" + std::to_string(t + 1) + ": " +
                        e.what());
    }
  });
  return out;
}

double emd(const EmpiricalSnapshot& mu, const EmpiricalSnapshot& nu) {
  return solve_exact(mu, nu, 1).objective;
}

EmdSummary summarize(std::vector<double> values) {
  EmdSummary s;
  s.per_step = std::move(values);
  if (s.per_step.empty()) return s;
  const double n = static_cast<double>(s.per_step.size());
  s.mean = std::accumulate(s.per_step.begin(), s.per_step.end(), 0.0) / n;
  double var = 0.0;
  for (double v : s.per_step) var += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(var / n);
  return s;
}

EmdSummary trajectory_emd(const PopulationTrajectory& predicted,
                          const PopulationTrajectory& observed) {
  if (predicted.size() != observed.size())
    throw ValidationError("trajectory length mismatch: " + std::to_string(predicted.size()) +
                          " vs " + std::to_string(observed.size()));
  if (predicted.dim() != observed.dim()) throw ValidationError("trajectory dimension mismatch");
  std::vector<double> per(observed.steps());
  parallel_for(per.size(), [&](std::size_t k) { per[k] = emd(predicted[k + 1], observed[k + 1]); });
  return summarize(std::move(per));
}

}  // namespace jkoflow
