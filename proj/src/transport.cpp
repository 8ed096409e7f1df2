#include "sotlab/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

#include "json.hpp"

namespace sotlab {

namespace {

double power_cost(double dist, double k) {
  if (k == 2.0) return dist * dist;
  if (k == 1.0) return dist;
  return std::pow(dist, k);
}

std::vector<int> positive_sites(const GridMeasure& m) {
  std::vector<int> idx;
  for (int i = 0; i < m.site_count(); ++i)
    if (m.weight(i) > 0.0) idx.push_back(i);
  return idx;
}

// ---------------------------------------------------------------------------
// Transportation simplex.
//
// Dense formulation over the positive supports: supplies a (size m), demands
// b (size n), cost matrix c (m x n). The basis is a spanning tree of the
// bipartite node set; entering arc = most negative reduced cost with
// lexicographic tie-break, leaving arc = first minimum-ratio arc along the
// cycle. Both rules are deterministic.
// ---------------------------------------------------------------------------

struct SimplexSolution {
  std::vector<double> flow;  // m*n row-major
  std::vector<double> u, v;  // node potentials, u[0] anchored at 0
  long iterations = 0;
};

class TransportSimplex {
 public:
  TransportSimplex(const std::vector<double>& supply, const std::vector<double>& demand,
                   const std::vector<double>& cost)
      : m_(static_cast<int>(supply.size())),
        n_(static_cast<int>(demand.size())),
        cost_(cost),
        flow_(m_ * n_, 0.0),
        basic_(m_ * n_, 0),
        u_(m_, 0.0),
        v_(n_, 0.0) {
    initial_basis(supply, demand);
  }

  SimplexSolution solve() {
    double scale = 1.0;
    for (double c : cost_) scale = std::max(scale, std::abs(c));
    const double enter_tol = 1e-12 * scale;
    const long max_iters = 2000 + 64L * static_cast<long>(m_ + n_) * (m_ + n_);

    long iter = 0;
    for (;; ++iter) {
      if (iter > max_iters)
        throw SolverError("exact_ot: simplex did not converge", iter);
      compute_potentials();
      int ei = -1, ej = -1;
      double best = -enter_tol;
      for (int i = 0; i < m_; ++i) {
        const double ui = u_[i];
        for (int j = 0; j < n_; ++j) {
          if (basic_[i * n_ + j]) continue;
          double r = cost_[i * n_ + j] - ui - v_[j];
          if (r < best) {
            best = r;
            ei = i;
            ej = j;
          }
        }
      }
      if (ei < 0) break;
      pivot(ei, ej);
    }
    return SimplexSolution{flow_, u_, v_, iter};
  }

 private:
  int m_, n_;
  std::vector<double> cost_, flow_;
  std::vector<char> basic_;
  std::vector<double> u_, v_;

  void initial_basis(std::vector<double> a, std::vector<double> b) {
    // Northwest-corner rule; keeps exactly m+n-1 basic cells, possibly with
    // zero flow.
    int i = 0, j = 0;
    for (int step = 0; step < m_ + n_ - 1; ++step) {
      double q = std::min(a[i], b[j]);
      flow_[i * n_ + j] = q;
      basic_[i * n_ + j] = 1;
      a[i] -= q;
      b[j] -= q;
      if (i == m_ - 1)
        ++j;
      else if (j == n_ - 1)
        ++i;
      else if (a[i] <= b[j])
        ++i;
      else
        ++j;
    }
  }

  void compute_potentials() {
    // Nodes: rows 0..m-1, cols m..m+n-1. Basic cells form a spanning tree.
    const int nodes = m_ + n_;
    std::vector<std::vector<int>> row_cells(m_), col_cells(n_);
    for (int i = 0; i < m_; ++i)
      for (int j = 0; j < n_; ++j)
        if (basic_[i * n_ + j]) {
          row_cells[i].push_back(j);
          col_cells[j].push_back(i);
        }
    std::vector<char> seen(nodes, 0);
    std::vector<int> stack;
    stack.reserve(nodes);
    stack.push_back(0);
    seen[0] = 1;
    u_[0] = 0.0;
    while (!stack.empty()) {
      int node = stack.back();
      stack.pop_back();
      if (node < m_) {
        for (int j : row_cells[node]) {
          if (seen[m_ + j]) continue;
          v_[j] = cost_[node * n_ + j] - u_[node];
          seen[m_ + j] = 1;
          stack.push_back(m_ + j);
        }
      } else {
        int j = node - m_;
        for (int i : col_cells[j]) {
          if (seen[i]) continue;
          u_[i] = cost_[i * n_ + j] - v_[j];
          seen[i] = 1;
          stack.push_back(i);
        }
      }
    }
  }

  void pivot(int ei, int ej) {
    // Unique tree path from row node ei to col node ej; the entering arc
    // closes it into a cycle.
    const int nodes = m_ + n_;
    std::vector<int> parent(nodes, -1);
    std::vector<char> seen(nodes, 0);
    std::vector<int> queue;
    queue.reserve(nodes);
    queue.push_back(ei);
    seen[ei] = 1;
    for (size_t q = 0; q < queue.size(); ++q) {
      int node = queue[q];
      if (node == m_ + ej) break;
      if (node < m_) {
        for (int j = 0; j < n_; ++j)
          if (basic_[node * n_ + j] && !seen[m_ + j]) {
            seen[m_ + j] = 1;
            parent[m_ + j] = node;
            queue.push_back(m_ + j);
          }
      } else {
        int jj = node - m_;
        for (int i = 0; i < m_; ++i)
          if (basic_[i * n_ + jj] && !seen[i]) {
            seen[i] = 1;
            parent[i] = node;
            queue.push_back(i);
          }
      }
    }
    // Cells along the cycle, starting with the entering arc (sign +).
    std::vector<std::pair<int, int>> cycle;
    cycle.emplace_back(ei, ej);
    int node = m_ + ej;
    while (node != ei) {
      int p = parent[node];
      if (node >= m_)
        cycle.emplace_back(p, node - m_);
      else
        cycle.emplace_back(node, p - m_);
      node = p;
    }
    double theta = std::numeric_limits<double>::infinity();
    size_t leaving = 0;
    for (size_t idx = 1; idx < cycle.size(); idx += 2) {
      double f = flow_[cycle[idx].first * n_ + cycle[idx].second];
      if (f < theta) {
        theta = f;
        leaving = idx;
      }
    }
    for (size_t idx = 0; idx < cycle.size(); ++idx) {
      double& f = flow_[cycle[idx].first * n_ + cycle[idx].second];
      f += (idx % 2 == 0) ? theta : -theta;
      if (f < 0.0) f = 0.0;
    }
    basic_[cycle[leaving].first * n_ + cycle[leaving].second] = 0;
    flow_[cycle[leaving].first * n_ + cycle[leaving].second] = 0.0;
    basic_[ei * n_ + ej] = 1;
  }
};

}  // namespace

TransportPlan::TransportPlan(GridMeasure source, GridMeasure target, double cost_exponent,
                             double total_cost, std::vector<PlanEntry> entries,
                             std::vector<double> potential_source,
                             std::vector<double> potential_target)
    : source_(std::move(source)),
      target_(std::move(target)),
      cost_exponent_(cost_exponent),
      total_cost_(total_cost),
      entries_(std::move(entries)),
      potential_source_(std::move(potential_source)),
      potential_target_(std::move(potential_target)) {}

std::vector<double> TransportPlan::source_marginal() const {
  std::vector<double> m(source_.site_count(), 0.0);
  for (const PlanEntry& e : entries_) m[e.source_site] += e.mass;
  return m;
}

std::vector<double> TransportPlan::target_marginal() const {
  std::vector<double> m(target_.site_count(), 0.0);
  for (const PlanEntry& e : entries_) m[e.target_site] += e.mass;
  return m;
}

bool TransportPlan::is_monge(double mass_tol) const {
  std::vector<int> seen(source_.site_count(), 0);
  for (const PlanEntry& e : entries_) {
    if (e.mass <= mass_tol) continue;
    if (++seen[e.source_site] > 1) return false;
  }
  return true;
}

std::vector<double> TransportPlan::dense_coupling() const {
  const int n = source_.site_count();
  std::vector<double> c(static_cast<size_t>(n) * n, 0.0);
  for (const PlanEntry& e : entries_)
    c[static_cast<size_t>(e.source_site) * n + e.target_site] += e.mass;
  return c;
}

std::string TransportPlan::to_json_string(bool include_coupling, int indent) const {
  nlohmann::json j;
  j["cost_exponent"] = cost_exponent_;
  j["total_cost"] = total_cost_;
  j["source_marginal"] = source_marginal();
  j["target_marginal"] = target_marginal();
  j["dual_potential_source"] = potential_source_;
  j["dual_potential_target"] = potential_target_;
  if (include_coupling) j["coupling"] = dense_coupling();
  return j.dump(indent);
}

TransportPlan exact_ot(const GridMeasure& mu, const GridMeasure& nu, double k) {
  if (!(mu.grid() == nu.grid()))
    throw std::invalid_argument("exact_ot: measures on different grids");
  if (k < 1.0) throw std::invalid_argument("exact_ot: cost exponent must be >= 1");

  const TorusGrid& grid = mu.grid();
  const std::vector<int> src = positive_sites(mu);
  const std::vector<int> dst = positive_sites(nu);
  const int m = static_cast<int>(src.size());
  const int n = static_cast<int>(dst.size());

  std::vector<Vec> src_pos(m), dst_pos(n);
  for (int i = 0; i < m; ++i) src_pos[i] = grid.site_position(src[i]);
  for (int j = 0; j < n; ++j) dst_pos[j] = grid.site_position(dst[j]);

  std::vector<double> cost(static_cast<size_t>(m) * n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j)
      cost[i * n + j] = power_cost(periodic_distance(src_pos[i], dst_pos[j], grid.dim), k);

  std::vector<double> supply(m), demand(n);
  for (int i = 0; i < m; ++i) supply[i] = mu.weight(src[i]);
  for (int j = 0; j < n; ++j) demand[j] = nu.weight(dst[j]);

  SimplexSolution sol = TransportSimplex(supply, demand, cost).solve();

  std::vector<PlanEntry> entries;
  double total = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      double f = sol.flow[i * n + j];
      if (f <= 1e-15) continue;
      PlanEntry e;
      e.source_site = src[i];
      e.target_site = dst[j];
      e.mass = f;
      TorusDisplacement d = TorusDisplacement::between(src_pos[i], dst_pos[j], grid.dim);
      e.displacement = d.v;
      e.distance = d.length();
      total += f * power_cost(e.distance, k);
      entries.push_back(e);
    }

  // Extend the node potentials to the whole grid: active sites keep their
  // simplex potentials, inactive sites get the tightest feasible value.
  const int N = grid.site_count();
  std::vector<double> phi(N, 0.0), psi(N, 0.0);
  std::vector<char> dst_active(N, 0);
  for (int j = 0; j < n; ++j) {
    psi[dst[j]] = sol.v[j];
    dst_active[dst[j]] = 1;
  }
  for (int jj = 0; jj < N; ++jj) {
    if (dst_active[jj]) continue;
    Vec p = grid.site_position(jj);
    double best = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i)
      best = std::min(best, power_cost(periodic_distance(src_pos[i], p, grid.dim), k) - sol.u[i]);
    psi[jj] = best;
  }
  std::vector<char> src_active(N, 0);
  for (int i = 0; i < m; ++i) {
    phi[src[i]] = sol.u[i];
    src_active[src[i]] = 1;
  }
  for (int ii = 0; ii < N; ++ii) {
    if (src_active[ii]) continue;
    Vec p = grid.site_position(ii);
    double best = std::numeric_limits<double>::infinity();
    for (int jj = 0; jj < N; ++jj)
      best = std::min(best, power_cost(periodic_distance(p, grid.site_position(jj), grid.dim), k) - psi[jj]);
    phi[ii] = best;
  }
  // Duals are defined up to an additive constant; anchor phi at the first
  // source site carrying mass.
  double shift = phi[src[0]];
  for (double& x : phi) x -= shift;
  for (double& x : psi) x += shift;

  return TransportPlan(mu, nu, k, total, std::move(entries), std::move(phi), std::move(psi));
}

double wasserstein(const GridMeasure& mu, const GridMeasure& nu, double k) {
  double cost = exact_ot(mu, nu, k).total_cost();
  if (k == 1.0) return cost;
  if (k == 2.0) return std::sqrt(cost);
  return std::pow(cost, 1.0 / k);
}

TransportPlan sinkhorn(const GridMeasure& mu, const GridMeasure& nu, double k,
                       double epsilon, int max_iters, double tol) {
  if (!(mu.grid() == nu.grid()))
    throw std::invalid_argument("sinkhorn: measures on different grids");
  if (epsilon <= 0.0) throw std::invalid_argument("sinkhorn: epsilon must be positive");
  if (tol <= 0.0) throw std::invalid_argument("sinkhorn: tol must be positive");

  const TorusGrid& grid = mu.grid();
  const std::vector<int> src = positive_sites(mu);
  const std::vector<int> dst = positive_sites(nu);
  const int m = static_cast<int>(src.size());
  const int n = static_cast<int>(dst.size());

  std::vector<double> cost(static_cast<size_t>(m) * n);
  double max_cost = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      double c = power_cost(
          periodic_distance(grid.site_position(src[i]), grid.site_position(dst[j]), grid.dim), k);
      cost[i * n + j] = c;
      max_cost = std::max(max_cost, c);
    }

  std::vector<double> log_mu(m), log_nu(n);
  for (int i = 0; i < m; ++i) log_mu[i] = std::log(mu.weight(src[i]));
  for (int j = 0; j < n; ++j) log_nu[j] = std::log(nu.weight(dst[j]));

  std::vector<double> f(m, 0.0), g(n, 0.0), tmp(std::max(m, n));

  auto lse_row = [&](int i, double eps) {
    double best = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < n; ++j) {
      tmp[j] = (g[j] - cost[i * n + j]) / eps;
      best = std::max(best, tmp[j]);
    }
    double s = 0.0;
    for (int j = 0; j < n; ++j) s += std::exp(tmp[j] - best);
    return best + std::log(s);
  };
  auto lse_col = [&](int j, double eps) {
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
      tmp[i] = (f[i] - cost[i * n + j]) / eps;
      best = std::max(best, tmp[i]);
    }
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += std::exp(tmp[i] - best);
    return best + std::log(s);
  };
  auto violation = [&](double eps) {
    // After an f-update the row marginals are exact; measure columns.
    double l1 = 0.0;
    for (int j = 0; j < n; ++j) {
      double col = std::exp(g[j] / eps + lse_col(j, eps));
      l1 += std::abs(col - nu.weight(dst[j]));
    }
    return l1;
  };

  // Epsilon-scaling: anneal from a loose regularization down to the target,
  // warm-starting the potentials at each level.
  std::vector<double> levels;
  double e = std::max(epsilon, 0.25 * std::max(max_cost, epsilon));
  while (e > epsilon * 1.0000001) {
    levels.push_back(e);
    e *= 0.25;
  }
  levels.push_back(epsilon);

  long iters = 0;
  double achieved = std::numeric_limits<double>::infinity();
  for (size_t level = 0; level < levels.size(); ++level) {
    double eps = levels[level];
    bool last = (level + 1 == levels.size());
    double level_tol = last ? tol : std::max(tol, 1e-3);
    while (true) {
      if (iters >= max_iters) {
        if (last) {
          achieved = violation(eps);
          if (achieved <= tol) break;
        }
        throw SolverError("sinkhorn: max iterations exceeded", iters, violation(eps));
      }
      for (int i = 0; i < m; ++i) f[i] = eps * log_mu[i] - eps * lse_row(i, eps);
      for (int j = 0; j < n; ++j) g[j] = eps * log_nu[j] - eps * lse_col(j, eps);
      for (int i = 0; i < m; ++i) f[i] = eps * log_mu[i] - eps * lse_row(i, eps);
      ++iters;
      achieved = violation(eps);
      if (achieved <= level_tol) break;
    }
  }

  std::vector<PlanEntry> entries;
  double total = 0.0;
  const double eps = epsilon;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) {
      double pi = std::exp((f[i] + g[j] - cost[i * n + j]) / eps);
      if (pi <= 1e-300) continue;
      PlanEntry entry;
      entry.source_site = src[i];
      entry.target_site = dst[j];
      entry.mass = pi;
      TorusDisplacement d = TorusDisplacement::between(grid.site_position(src[i]),
                                                       grid.site_position(dst[j]), grid.dim);
      entry.displacement = d.v;
      entry.distance = d.length();
      total += pi * cost[i * n + j];
      entries.push_back(entry);
    }

  const int N = grid.site_count();
  std::vector<double> phi(N, 0.0), psi(N, 0.0);
  for (int i = 0; i < m; ++i) phi[src[i]] = f[i];
  for (int j = 0; j < n; ++j) psi[dst[j]] = g[j];

  return TransportPlan(mu, nu, k, total, std::move(entries), std::move(phi), std::move(psi));
}

std::vector<Vec> optimal_velocity_field(const TransportPlan& plan, double remaining_time) {
  if (!(remaining_time > 0.0))
    throw std::invalid_argument("optimal_velocity_field: remaining time must be positive");
  const GridMeasure& mu = plan.source();
  std::vector<Vec> vel(mu.site_count(), Vec{0.0, 0.0});
  std::vector<Vec> bary(mu.site_count(), Vec{0.0, 0.0});
  for (const PlanEntry& e : plan.entries()) {
    bary[e.source_site][0] += e.mass * e.displacement[0];
    bary[e.source_site][1] += e.mass * e.displacement[1];
  }
  for (int i = 0; i < mu.site_count(); ++i) {
    double w = mu.weight(i);
    if (w <= 0.0) continue;
    vel[i][0] = bary[i][0] / w / remaining_time;
    vel[i][1] = bary[i][1] / w / remaining_time;
  }
  return vel;
}

GridMeasure displacement_interpolate(const TransportPlan& plan, double s) {
  if (!(s >= 0.0 && s <= 1.0))
    throw std::invalid_argument("displacement_interpolate: s must lie in [0,1]");
  const TorusGrid& grid = plan.source().grid();
  std::vector<double> out(grid.site_count(), 0.0);
  for (const PlanEntry& e : plan.entries()) {
    Vec p = grid.site_position(e.source_site);
    p[0] += s * e.displacement[0];
    if (grid.dim == 2) p[1] += s * e.displacement[1];
    out[grid.nearest_site(p)] += e.mass;
  }
  return GridMeasure(grid, std::move(out));
}

void SpeedDistribution::validate(int dim) const {
  for (const auto& atoms : site_atoms) {
    if (atoms.empty()) continue;
    double total = 0.0;
    for (const SpeedAtom& a : atoms) {
      if (a.probability < 0.0)
        throw std::invalid_argument("SpeedDistribution: negative probability");
      if (norm(a.velocity, dim) > velocity_bound + 1e-12)
        throw std::invalid_argument("SpeedDistribution: velocity exceeds stated bound");
      total += a.probability;
    }
    if (std::abs(total - 1.0) > 1e-12)
      throw std::invalid_argument("SpeedDistribution: site probabilities must sum to 1");
  }
}

}  // namespace sotlab
