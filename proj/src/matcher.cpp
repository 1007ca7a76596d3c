#include "chainmatch/matcher.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

namespace chainmatch {

using nlohmann::json;

namespace {
// Weight ties below this are genuine ties on cent-grained inputs (adjacent
// objective values differ by >= 0.01 there, float noise is ~1e-15).
constexpr double kTieEps = 1e-9;
}  // namespace

const char* model_name(Model m) {
  switch (m) {
    case Model::MaxService: return "max_service";
    case Model::MaxProfit: return "max_profit";
    case Model::MaxExpectedProfit: return "max_expected_profit";
  }
  return "?";
}

Model model_from_name(const std::string& name) {
  if (name == "max_service" || name == "service") return Model::MaxService;
  if (name == "max_profit" || name == "profit") return Model::MaxProfit;
  if (name == "max_expected_profit" || name == "expected" || name == "proposed")
    return Model::MaxExpectedProfit;
  throw Error(Errc::InvalidField, "unknown model '" + name + "'");
}

const char* solve_status_name(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::TimeoutIncumbent: return "timeout_incumbent";
    case SolveStatus::Heuristic: return "heuristic";
  }
  return "?";
}

double chain_weight(const Instance& inst, const Chain& c, const Objective& obj,
                    std::span<const Money> offered_by_trip) {
  switch (obj.model) {
    case Model::MaxService:
      return static_cast<double>(c.length());
    case Model::MaxProfit:
      return chain_profit(inst, c, offered_by_trip);
    case Model::MaxExpectedProfit:
      return expected_chain_profit(inst, c, offered_by_trip, obj.alpha);
  }
  return 0.0;
}

PackingProblem build_problem(const ChainPool& pool, const Instance& inst, const Objective& obj) {
  PackingProblem p;
  p.objective = obj;
  p.n_trips = inst.trips.size();
  p.offered_by_trip = offered_prices_by_trip(inst, obj.alpha);

  const bool keep_nonpositive = obj.model == Model::MaxService;
  for (std::uint32_t i = 0; i < pool.chains.size(); ++i) {
    double w = chain_weight(inst, pool.chains[i], obj, p.offered_by_trip);
    if (!keep_nonpositive && w <= 0.0) continue;
    p.chain_ids.push_back(i);
    p.chains.push_back(pool.chains[i]);
    p.weights.push_back(w);
  }
  p.chains_by_trip.assign(p.n_trips, {});
  for (std::uint32_t j = 0; j < p.chains.size(); ++j)
    for (std::uint32_t t : p.chains[j].trips) p.chains_by_trip[t].push_back(j);
  return p;
}

namespace {

// Conflict bitmasks over trips, one row per retained chain. Users and trips
// are one-to-one inside an instance, so trip-disjoint equals user-disjoint.
struct ChainMasks {
  std::size_t words = 0;
  std::vector<std::uint64_t> bits;

  explicit ChainMasks(const PackingProblem& p) {
    words = p.n_trips / 64 + 1;
    bits.assign(p.chains.size() * words, 0);
    for (std::size_t j = 0; j < p.chains.size(); ++j)
      for (std::uint32_t t : p.chains[j].trips) bits[j * words + t / 64] |= 1ULL << (t % 64);
  }
  bool conflicts(std::uint32_t j, const std::vector<std::uint64_t>& blocked) const {
    const std::uint64_t* m = &bits[j * words];
    for (std::size_t w = 0; w < words; ++w)
      if (m[w] & blocked[w]) return true;
    return false;
  }
  void apply(std::uint32_t j, std::vector<std::uint64_t>& blocked) const {
    const std::uint64_t* m = &bits[j * words];
    for (std::size_t w = 0; w < words; ++w) blocked[w] |= m[w];
  }
};

// Exact solution of the packing relaxation max{ w x : A x <= 1, x >= 0 } by
// a dense tableau simplex (columns are chains plus one slack per user). The
// duals upper-bound every packing; the caller's bound formula also keeps a
// residual term, so slight numerical infeasibility is harmless.
struct LpResult {
  bool ok = false;
  double value = 0.0;
  std::vector<double> y;  // per-trip dual price
  std::vector<double> x;  // per-chain primal value
};

LpResult packing_lp(const PackingProblem& p, const std::vector<std::uint32_t>& live) {
  LpResult out;
  const std::size_t m = live.size();
  std::vector<std::uint32_t> users;
  std::vector<std::int32_t> row_of(p.n_trips, -1);
  for (std::uint32_t j : live)
    for (std::uint32_t t : p.chains[j].trips)
      if (row_of[t] < 0) {
        row_of[t] = static_cast<std::int32_t>(users.size());
        users.push_back(t);
      }
  const std::size_t n = users.size();
  if (n == 0 || m == 0) {
    out.ok = true;
    out.y.assign(p.n_trips, 0.0);
    out.x.assign(p.chains.size(), 0.0);
    return out;
  }
  const std::size_t cols = m + n;
  const std::size_t stride = cols + 1;  // last column is the rhs

  std::vector<double> tab(n * stride, 0.0);
  std::vector<double> obj(stride, 0.0);  // reduced-cost row
  std::vector<std::int32_t> basis(n);
  for (std::size_t i = 0; i < n; ++i) {
    tab[i * stride + m + i] = 1.0;
    tab[i * stride + cols] = 1.0;
    basis[i] = static_cast<std::int32_t>(m + i);
  }
  for (std::size_t j = 0; j < m; ++j) {
    obj[j] = p.weights[live[j]];
    for (std::uint32_t t : p.chains[live[j]].trips) tab[row_of[t] * stride + j] = 1.0;
  }

  const double eps = 1e-9;
  const int max_iters = 20000;
  for (int it = 0; it < max_iters; ++it) {
    // Dantzig pricing, Bland fallback once degeneracy drags on
    std::size_t enter = cols;
    if (it < 5000) {
      double best = eps;
      for (std::size_t j = 0; j < cols; ++j)
        if (obj[j] > best) {
          best = obj[j];
          enter = j;
        }
    } else {
      for (std::size_t j = 0; j < cols; ++j)
        if (obj[j] > eps) {
          enter = j;
          break;
        }
    }
    if (enter == cols) {
      out.ok = true;
      out.y.assign(p.n_trips, 0.0);
      for (std::size_t i = 0; i < n; ++i) out.y[users[i]] = std::max(0.0, -obj[m + i]);
      out.x.assign(p.chains.size(), 0.0);
      for (std::size_t i = 0; i < n; ++i)
        if (basis[i] < static_cast<std::int32_t>(m))
          out.x[live[basis[i]]] = tab[i * stride + cols];
      for (std::uint32_t j : live) out.value += p.weights[j] * out.x[j];
      return out;
    }
    std::size_t leave = n;
    double best_ratio = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double a = tab[i * stride + enter];
      if (a <= eps) continue;
      double ratio = tab[i * stride + cols] / a;
      if (leave == n || ratio < best_ratio - 1e-12) {
        leave = i;
        best_ratio = ratio;
      }
    }
    if (leave == n) break;  // unbounded: cannot happen with covering rows
    double piv = tab[leave * stride + enter];
    for (std::size_t j = 0; j <= cols; ++j) tab[leave * stride + j] /= piv;
    for (std::size_t i = 0; i < n; ++i) {
      if (i == leave) continue;
      double f = tab[i * stride + enter];
      if (f == 0.0) continue;
      for (std::size_t j = 0; j <= cols; ++j) tab[i * stride + j] -= f * tab[leave * stride + j];
    }
    double f = obj[enter];
    if (f != 0.0)
      for (std::size_t j = 0; j <= cols; ++j) obj[j] -= f * tab[leave * stride + j];
    basis[leave] = static_cast<std::int32_t>(enter);
  }
  return out;  // iteration cap; caller falls back to the subgradient fit
}

// The packing problem is a maximum-weight independent set on the conflict
// graph of the retained chains. The engine is branch-and-reduce: degree-0/1
// reductions (with weighted folding), component splitting at every node, a
// clique-cover bound built from per-user buckets, and cut thresholds threaded
// through the recursion so subtrees that cannot beat the incumbent are
// dropped wholesale.
class ExactEngine {
 public:
  ExactEngine(const PackingProblem& p, std::chrono::steady_clock::time_point deadline)
      : p_(p), deadline_(deadline) {
    adj_.resize(p_.chains.size());
    for (std::uint32_t j = 0; j < p_.chains.size(); ++j) {
      for (std::uint32_t t : p_.chains[j].trips)
        for (std::uint32_t k : p_.chains_by_trip[t])
          if (k != j) adj_[j].push_back(k);
      std::sort(adj_[j].begin(), adj_[j].end());
      adj_[j].erase(std::unique(adj_[j].begin(), adj_[j].end()), adj_[j].end());
    }
    alive_.assign(p_.chains.size(), 0);
    weight_now_ = p_.weights;
    y_.assign(p_.n_trips, 0.0);
    bucket_.assign(p_.n_trips, 0.0);
    bucket_epoch_.assign(p_.n_trips, 0);
    mark_.assign(p_.chains.size() + p_.n_trips, 0);
    // selection values live on a lattice for two of the objectives, letting
    // the bound prune anything short of the next lattice point above the cut
    switch (p_.objective.model) {
      case Model::MaxService: granule_ = 1.0; break;
      case Model::MaxProfit: granule_ = 0.01; break;
      case Model::MaxExpectedProfit: granule_ = 0.0; break;
    }
  }

  void set_dual(std::vector<double> y) { y_ = std::move(y); }

  // True when no achievable value can be both > cut and <= bound. The nudge
  // sits between summation noise (~1e-10) and the deliberate query epsilon
  // (1e-9), so a cut of "lattice point minus kTieEps" still resolves to that
  // lattice point and not the next one.
  bool prunes(double bound, double cut) const {
    if (granule_ <= 0.0) return bound <= cut;
    double next_lattice = granule_ * (std::floor(cut / granule_ + 5e-10) + 1.0);
    return bound < next_lattice - 1e-7;
  }

  struct Result {
    double value = 0.0;
    std::vector<std::uint32_t> sel;
    bool exact = false;  // value is the true max and it exceeds the cut
  };

  bool timed_out() const { return timed_out_; }
  std::uint64_t nodes() const { return nodes_; }

  // Exact max-weight selection among `verts` if it exceeds `cut`; otherwise
  // an inexact result (the true max is then known to be <= cut). Restores
  // weight_now_ on exit, so calls never leak fold reweighting to the caller.
  Result solve(std::vector<std::uint32_t> verts, double cut) {
    std::vector<std::pair<std::uint32_t, double>> snapshot;
    snapshot.reserve(verts.size());
    for (std::uint32_t v : verts) snapshot.emplace_back(v, weight_now_[v]);
    Result r = solve_impl(std::move(verts), cut);
    for (auto& [v, w] : snapshot) weight_now_[v] = w;
    return r;
  }

 private:
  Result solve_impl(std::vector<std::uint32_t> verts, double cut) {
    if (check_time()) return {};
    ++nodes_;

    double acc = 0.0;
    std::vector<std::uint32_t> acc_sel;
    std::vector<std::pair<std::uint32_t, std::uint32_t>> folds;  // (hidden v, carrier u)
    reduce(verts, acc, acc_sel, folds);

    Result out;
    if (verts.empty()) {
      out.value = acc;
      out.sel = std::move(acc_sel);
      out.exact = out.value > cut;
      expand_folds(folds, out.sel);
      return out;
    }

    auto comps = split_components(verts);
    double inner = 0.0;
    std::vector<std::uint32_t> inner_sel;
    bool ok = true;
    if (comps.size() == 1) {
      ok = solve_component(std::move(comps[0]), cut - acc, inner, inner_sel);
    } else {
      std::vector<double> ubs(comps.size());
      double ub_total = 0.0;
      for (std::size_t i = 0; i < comps.size(); ++i) {
        ubs[i] = std::min(clique_bound(comps[i]), dual_bound(comps[i]));
        ub_total += ubs[i];
      }
      if (prunes(acc + ub_total, cut)) return {};
      double later = ub_total;
      for (std::size_t i = 0; i < comps.size() && ok; ++i) {
        later -= ubs[i];
        double cut_i = cut - acc - inner - later;
        double got = 0.0;
        std::vector<std::uint32_t> got_sel;
        ok = solve_component(std::move(comps[i]), cut_i, got, got_sel);
        inner += got;
        inner_sel.insert(inner_sel.end(), got_sel.begin(), got_sel.end());
      }
    }
    if (!ok) return {};

    out.value = acc + inner;
    out.sel = std::move(acc_sel);
    out.sel.insert(out.sel.end(), inner_sel.begin(), inner_sel.end());
    out.exact = out.value > cut;
    if (!out.exact) return {};
    expand_folds(folds, out.sel);
    return out;
  }

  bool check_time() {
    if (timed_out_) return true;
    if ((++ticks_ & 0x3ff) == 0 && std::chrono::steady_clock::now() > deadline_)
      timed_out_ = true;
    return timed_out_;
  }

  void stamp(const std::vector<std::uint32_t>& verts) {
    ++epoch_;
    for (std::uint32_t v : verts) alive_[v] = epoch_;
  }
  bool alive(std::uint32_t v) const { return alive_[v] == epoch_; }

  std::size_t degree(std::uint32_t v) const {
    std::size_t d = 0;
    for (std::uint32_t u : adj_[v])
      if (alive(u)) ++d;
    return d;
  }

  // Degree-0 vertices join the selection; a degree-1 vertex v hanging off u
  // either wins outright (w_v >= w_u) or folds its weight into u: taking u in
  // the reduced graph means u, not taking it means v.
  void reduce(std::vector<std::uint32_t>& verts, double& acc,
              std::vector<std::uint32_t>& acc_sel,
              std::vector<std::pair<std::uint32_t, std::uint32_t>>& folds) {
    bool changed = true;
    while (changed && !verts.empty()) {
      changed = false;
      stamp(verts);
      for (std::uint32_t v : verts) {
        if (!alive(v)) continue;
        std::uint32_t only = 0;
        std::size_t deg = 0;
        for (std::uint32_t u : adj_[v]) {
          if (!alive(u)) continue;
          only = u;
          if (++deg > 1) break;
        }
        if (deg == 0) {
          acc += weight_now_[v];
          acc_sel.push_back(v);
          alive_[v] = 0;
          changed = true;
        } else if (deg == 1) {
          if (weight_now_[v] >= weight_now_[only]) {
            acc += weight_now_[v];
            acc_sel.push_back(v);
            alive_[v] = 0;
            alive_[only] = 0;
          } else {
            acc += weight_now_[v];
            weight_now_[only] -= weight_now_[v];
            folds.emplace_back(v, only);
            alive_[v] = 0;
          }
          changed = true;
        }
      }
      if (changed)
        std::erase_if(verts, [&](std::uint32_t v) { return !alive(v); });
    }
  }

  void expand_folds(const std::vector<std::pair<std::uint32_t, std::uint32_t>>& folds,
                    std::vector<std::uint32_t>& sel) {
    if (folds.empty()) return;
    ++mark_epoch_;
    for (std::uint32_t v : sel) mark_[v] = mark_epoch_;
    for (auto it = folds.rbegin(); it != folds.rend(); ++it) {
      if (mark_[it->second] == mark_epoch_) continue;
      sel.push_back(it->first);
      mark_[it->first] = mark_epoch_;
    }
  }

  std::vector<std::vector<std::uint32_t>> split_components(
      const std::vector<std::uint32_t>& verts) {
    stamp(verts);
    ++mark_epoch_;
    std::vector<std::vector<std::uint32_t>> comps;
    for (std::uint32_t v : verts) {
      if (mark_[v] == mark_epoch_) continue;
      comps.emplace_back();
      auto& comp = comps.back();
      comp.push_back(v);
      mark_[v] = mark_epoch_;
      for (std::size_t head = 0; head < comp.size(); ++head)
        for (std::uint32_t u : adj_[comp[head]])
          if (alive(u) && mark_[u] != mark_epoch_) {
            mark_[u] = mark_epoch_;
            comp.push_back(u);
          }
      std::sort(comp.begin(), comp.end());
    }
    return comps;
  }

  // Chains through one user are pairwise conflicting, so assigning every
  // vertex to one of its users and summing per-user maxima is admissible.
  // Heaviest first; later chains are absorbed when a member already carries
  // at least their weight.
  double clique_bound(std::vector<std::uint32_t> comp) {
    std::sort(comp.begin(), comp.end(), [&](std::uint32_t a, std::uint32_t b) {
      if (weight_now_[a] != weight_now_[b]) return weight_now_[a] > weight_now_[b];
      return a < b;
    });
    ++bound_epoch_;
    double total = 0.0;
    for (std::uint32_t j : comp) {
      double best = 0.0;
      std::uint32_t best_t = p_.chains[j].trips[0];
      for (std::uint32_t t : p_.chains[j].trips) {
        double b = bucket_epoch_[t] == bound_epoch_ ? bucket_[t] : 0.0;
        if (b > best) {
          best = b;
          best_t = t;
        }
      }
      if (best >= weight_now_[j]) continue;
      total += weight_now_[j] - best;
      bucket_[best_t] = weight_now_[j];
      bucket_epoch_[best_t] = bound_epoch_;
    }
    return total;
  }

 public:
  // Lagrangian dual fit by Polyak subgradient over per-user prices. For any
  // y >= 0, every packing S satisfies
  //   w(S) <= sum_c max(0, w_c - sum_{u in c} y_u) + sum_{u free} y_u,
  // which restricts to any vertex subset, so one root fit prices every node
  // of the search. primal_hint (a greedy value) steers the step length.
  void fit_dual(double primal_hint) {
    const std::size_t m = p_.chains.size();
    std::vector<double> y(p_.n_trips, 0.0);
    for (std::uint32_t j = 0; j < m; ++j) {
      double d = p_.weights[j] / p_.chains[j].length();
      for (std::uint32_t t : p_.chains[j].trips) y[t] = std::max(y[t], d);
    }
    std::vector<double> grad(p_.n_trips);
    double best_l = 1e300;
    double lambda = 2.0;
    int stale = 0;
    for (int it = 0; it < 2000; ++it) {
      for (std::uint32_t t = 0; t < p_.n_trips; ++t)
        grad[t] = p_.chains_by_trip[t].empty() ? 0.0 : 1.0;
      double l_value = 0.0;
      for (std::uint32_t t = 0; t < p_.n_trips; ++t)
        if (!p_.chains_by_trip[t].empty()) l_value += y[t];
      for (std::uint32_t j = 0; j < m; ++j) {
        double r = p_.weights[j];
        for (std::uint32_t t : p_.chains[j].trips) r -= y[t];
        if (r > 0.0) {
          l_value += r;
          for (std::uint32_t t : p_.chains[j].trips) grad[t] -= 1.0;
        }
      }
      if (l_value < best_l - 1e-9) {
        best_l = l_value;
        y_ = y;
        stale = 0;
      } else if (++stale >= 30) {
        lambda *= 0.5;
        stale = 0;
        if (lambda < 1e-4) break;
      }
      double norm = 0.0;
      for (std::uint32_t t = 0; t < p_.n_trips; ++t) norm += grad[t] * grad[t];
      if (norm < 1e-12) break;
      double step = lambda * std::max(l_value - primal_hint, 1e-6) / norm;
      for (std::uint32_t t = 0; t < p_.n_trips; ++t)
        y[t] = std::max(0.0, y[t] - step * grad[t]);
    }
    if (std::getenv("CHAINMATCH_STATS"))
      std::fprintf(stderr, "[dual] m=%zu hint=%.3f L=%.3f\n", m, primal_hint, best_l);
  }

 private:
  double dual_bound(const std::vector<std::uint32_t>& comp) {
    ++mark_epoch_;
    double total = 0.0;
    for (std::uint32_t j : comp) {
      double r = weight_now_[j];
      for (std::uint32_t t : p_.chains[j].trips) {
        r -= y_[t];
        if (mark_[t + mark_trip_offset()] != mark_epoch_) {
          mark_[t + mark_trip_offset()] = mark_epoch_;
          total += y_[t];
        }
      }
      if (r > 0.0) total += r;
    }
    return total;
  }

  std::size_t mark_trip_offset() const { return p_.chains.size(); }

  // One connected component, already reduced: bound, then branch on the
  // highest-degree vertex (include it and drop its neighborhood, or drop it).
  bool solve_component(std::vector<std::uint32_t> comp, double cut, double& value,
                       std::vector<std::uint32_t>& sel) {
    if (check_time()) return false;
    if (prunes(dual_bound(comp), cut)) return false;
    if (prunes(clique_bound(comp), cut)) return false;

    stamp(comp);
    std::uint32_t pivot = comp.front();
    std::size_t pivot_deg = 0;
    for (std::uint32_t v : comp) {
      std::size_t d = degree(v);
      if (d > pivot_deg) {
        pivot_deg = d;
        pivot = v;
      }
    }

    const double pivot_w = weight_now_[pivot];
    std::vector<std::uint32_t> without_nbhd;
    std::vector<std::uint32_t> without_pivot;
    without_pivot.reserve(comp.size() - 1);
    ++mark_epoch_;
    mark_[pivot] = mark_epoch_;
    for (std::uint32_t u : adj_[pivot])
      if (alive(u)) mark_[u] = mark_epoch_;
    for (std::uint32_t v : comp) {
      if (v != pivot) without_pivot.push_back(v);
      if (mark_[v] != mark_epoch_) without_nbhd.push_back(v);
    }
    bool have = false;
    Result incl = solve(std::move(without_nbhd), cut - pivot_w);
    if (incl.exact) {
      value = pivot_w + incl.value;
      sel = std::move(incl.sel);
      sel.push_back(pivot);
      have = true;
    }

    double cut2 = have ? std::max(cut, value) : cut;
    Result excl = solve(std::move(without_pivot), cut2);
    if (excl.exact && (!have || excl.value > value)) {
      value = excl.value;
      sel = std::move(excl.sel);
      have = true;
    }
    return have && !timed_out_;
  }

  const PackingProblem& p_;
  std::chrono::steady_clock::time_point deadline_;
  std::vector<std::vector<std::uint32_t>> adj_;

  std::vector<std::uint64_t> alive_;
  std::uint64_t epoch_ = 0;
  std::vector<double> weight_now_;
  std::vector<std::uint64_t> mark_;
  std::uint64_t mark_epoch_ = 0;
  std::vector<double> bucket_;
  std::vector<std::uint64_t> bucket_epoch_;
  std::uint64_t bound_epoch_ = 0;
  std::vector<double> y_;
  double granule_ = 0.0;

  std::uint64_t nodes_ = 0;
  std::uint64_t ticks_ = 0;
  bool timed_out_ = false;
};

std::vector<std::uint32_t> greedy_selection(const PackingProblem& p, const ChainMasks& masks) {
  std::vector<std::uint32_t> order(p.chains.size());
  for (std::uint32_t j = 0; j < order.size(); ++j) order[j] = j;
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    double da = p.weights[a] / p.chains[a].length();
    double db = p.weights[b] / p.chains[b].length();
    if (da != db) return da > db;
    return a < b;
  });
  std::vector<std::uint64_t> blocked(masks.words, 0);
  std::vector<std::uint32_t> sel;
  for (std::uint32_t j : order) {
    if (masks.conflicts(j, blocked)) continue;
    masks.apply(j, blocked);
    sel.push_back(j);
  }
  return sel;
}

double selection_value(const PackingProblem& p, const std::vector<std::uint32_t>& sel) {
  double v = 0.0;
  for (std::uint32_t j : sel) v += p.weights[j];
  return v;
}

// Greedy packing in descending LP-value order; on an integral LP optimum this
// reproduces it exactly.
std::vector<std::uint32_t> lp_rounding(const PackingProblem& p, const ChainMasks& masks,
                                       const std::vector<double>& x) {
  std::vector<std::uint32_t> order(p.chains.size());
  for (std::uint32_t j = 0; j < order.size(); ++j) order[j] = j;
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (x[a] != x[b]) return x[a] > x[b];
    double da = p.weights[a] / p.chains[a].length();
    double db = p.weights[b] / p.chains[b].length();
    if (da != db) return da > db;
    return a < b;
  });
  std::vector<std::uint64_t> blocked(masks.words, 0);
  std::vector<std::uint32_t> sel;
  for (std::uint32_t j : order) {
    if (x[j] <= 1e-9) break;
    if (masks.conflicts(j, blocked)) continue;
    masks.apply(j, blocked);
    sel.push_back(j);
  }
  // fill any remaining room by density
  for (std::uint32_t j : greedy_selection(p, masks)) {
    if (masks.conflicts(j, blocked)) continue;
    masks.apply(j, blocked);
    sel.push_back(j);
  }
  return sel;
}

// Greedy packing of a chain subset in descending LP-value order, starting
// from an already-blocked state.
std::vector<std::uint32_t> round_subset(const PackingProblem& p, const ChainMasks& masks,
                                        const std::vector<std::uint32_t>& subset,
                                        const std::vector<double>& x,
                                        const std::vector<std::uint64_t>& blocked_start) {
  std::vector<std::uint32_t> order = subset;
  std::sort(order.begin(), order.end(), [&](std::uint32_t a, std::uint32_t b) {
    if (x[a] != x[b]) return x[a] > x[b];
    double da = p.weights[a] / p.chains[a].length();
    double db = p.weights[b] / p.chains[b].length();
    if (da != db) return da > db;
    return a < b;
  });
  std::vector<std::uint64_t> blocked(blocked_start);
  std::vector<std::uint32_t> sel;
  for (std::uint32_t j : order) {
    if (masks.conflicts(j, blocked)) continue;
    masks.apply(j, blocked);
    sel.push_back(j);
  }
  return sel;
}

// Single-chain eviction local search: bring in any chain heavier than the
// selected chains it displaces, until no such swap remains.
void improve_selection(const PackingProblem& p, std::vector<std::uint32_t>& sel) {
  std::vector<std::int32_t> owner(p.n_trips, -1);
  std::vector<bool> in_sel(p.chains.size(), false);
  for (std::uint32_t j : sel) {
    in_sel[j] = true;
    for (std::uint32_t t : p.chains[j].trips) owner[t] = static_cast<std::int32_t>(j);
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::uint32_t c = 0; c < p.chains.size(); ++c) {
      if (in_sel[c]) continue;
      double displaced = 0.0;
      std::vector<std::uint32_t> victims;
      for (std::uint32_t t : p.chains[c].trips) {
        std::int32_t o = owner[t];
        if (o < 0) continue;
        if (std::find(victims.begin(), victims.end(), static_cast<std::uint32_t>(o)) ==
            victims.end()) {
          victims.push_back(static_cast<std::uint32_t>(o));
          displaced += p.weights[o];
        }
      }
      if (p.weights[c] > displaced + 1e-9) {
        for (std::uint32_t v : victims) {
          in_sel[v] = false;
          for (std::uint32_t t : p.chains[v].trips) owner[t] = -1;
        }
        in_sel[c] = true;
        for (std::uint32_t t : p.chains[c].trips) owner[t] = static_cast<std::int32_t>(c);
        changed = true;
      }
    }
  }
  sel.clear();
  for (std::uint32_t j = 0; j < p.chains.size(); ++j)
    if (in_sel[j]) sel.push_back(j);
}

Solution finalize(const PackingProblem& p, const Instance& inst,
                  std::vector<std::uint32_t> retained_sel, SolveStatus status) {
  std::sort(retained_sel.begin(), retained_sel.end());
  Solution sol;
  sol.objective = p.objective;
  sol.status = status;
  double value = 0.0;
  for (std::uint32_t j : retained_sel) {
    value += p.weights[j];
    sol.selected.push_back(p.chain_ids[j]);
    const Chain& c = p.chains[j];
    SelectedChain sc;
    sc.pool_index = p.chain_ids[j];
    sc.trip_idx = c.trips;
    for (std::uint32_t t : c.trips) sc.members.push_back(inst.trips[t].user_id);
    sc.inactive_count = c.inactive_count;
    sol.chains.push_back(std::move(sc));
  }
  sol.objective_value = value;
  price_solution(sol, inst, p.objective.alpha);
  assert_disjoint(sol);
  return sol;
}

}  // namespace

Solution solve_exact(const PackingProblem& p, const Instance& inst, const SolveOptions& opts) {
  if (p.chains.empty()) return finalize(p, inst, {}, SolveStatus::Optimal);

  const auto deadline = std::chrono::steady_clock::now() +
                        std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                            std::chrono::duration<double>(opts.timeout_s));
  ChainMasks masks(p);
  ExactEngine engine(p, deadline);

  std::vector<std::uint32_t> live(p.chains.size());
  for (std::uint32_t j = 0; j < live.size(); ++j) live[j] = j;

  // Root repair loop. The relaxation prices the search's bound; its primal
  // guides rounding, its value certifies optimality whenever no lattice point
  // fits above the incumbent, and its reduced costs strike out chains that
  // belong to no optimum, shrinking the relaxation for the next round. Most
  // cells settle here without branching at all.
  LpResult lp;
  std::vector<std::uint32_t> incumbent = greedy_selection(p, masks);
  improve_selection(p, incumbent);
  double z_inc = selection_value(p, incumbent);
  std::vector<std::uint32_t> witness = incumbent;
  double optimum = z_inc;
  bool proven = false;
  for (int round = 0; round < 16; ++round) {
    lp = packing_lp(p, live);
    if (!lp.ok) break;
    std::vector<std::uint32_t> rounded = lp_rounding(p, masks, lp.x);
    improve_selection(p, rounded);
    if (selection_value(p, rounded) > z_inc) {
      incumbent = std::move(rounded);
      z_inc = selection_value(p, incumbent);
      witness = incumbent;
      optimum = z_inc;
    }
    if (engine.prunes(lp.value, z_inc)) {
      proven = true;
      break;
    }
    std::size_t before = live.size();
    std::erase_if(live, [&](std::uint32_t j) {
      double reduced = p.weights[j];
      for (std::uint32_t t : p.chains[j].trips) reduced -= lp.y[t];
      return lp.value + reduced < z_inc - 1e-6;
    });
    if (live.size() == before) break;  // nothing left to fix; branch
  }

  if (lp.ok)
    engine.set_dual(lp.y);
  else
    engine.fit_dual(z_inc);

  if (!proven) {
    // ask the engine for anything strictly better than the incumbent
    ExactEngine::Result root = engine.solve(live, z_inc);
    if (engine.timed_out())
      return finalize(p, inst, std::move(incumbent), SolveStatus::TimeoutIncumbent);
    if (root.exact) {
      optimum = root.value;
      witness = std::move(root.sel);
    }
  }
  if (std::getenv("CHAINMATCH_STATS"))
    std::fprintf(stderr,
                 "[solve] m=%zu live=%zu optimum=%.4f incumbent=%.4f lp=%.4f%s nodes=%llu\n",
                 p.chains.size(), live.size(), optimum, z_inc, lp.ok ? lp.value : -1.0,
                 proven ? " (lp-certified)" : "", static_cast<unsigned long long>(engine.nodes()));

  std::vector<bool> eliminated(p.chains.size(), true);
  for (std::uint32_t j : live) eliminated[j] = false;

  // Phase two: the lexicographically smallest selection achieving the
  // optimum, built front to back; chain j joins iff the optimum stays
  // reachable using only chains after it. Three shortcuts avoid most
  // searches: a chain already on the running optimal witness joins outright;
  // a refreshed relaxation of the surviving chains certifies most other
  // chains out via their reduced cost; only the rest get an engine query.
  std::sort(witness.begin(), witness.end());
  std::vector<bool> in_witness(p.chains.size(), false);
  for (std::uint32_t j : witness) in_witness[j] = true;

  std::vector<std::uint64_t> blocked(masks.words, 0);
  std::vector<std::uint32_t> sel;
  double have = 0.0;
  LpResult lp_live = lp;
  bool lp_stale = false;
  for (std::uint32_t j = 0; j < p.chains.size(); ++j) {
    if (engine.timed_out()) break;
    double needed = optimum - have;
    if (needed <= kTieEps) break;  // weights are positive
    if (eliminated[j]) continue;  // proven to sit in no optimum
    if (masks.conflicts(j, blocked)) continue;

    if (in_witness[j]) {
      sel.push_back(j);
      masks.apply(j, blocked);
      have += p.weights[j];
      in_witness[j] = false;
      std::erase(witness, j);  // witness stays the completion of sel
      lp_stale = true;
      continue;
    }
    if (needed - p.weights[j] <= kTieEps) {
      // j alone completes the optimum
      sel.push_back(j);
      masks.apply(j, blocked);
      have += p.weights[j];
      for (std::uint32_t k : witness) in_witness[k] = false;
      witness.clear();
      lp_stale = true;
      continue;
    }

    if (lp_stale) {
      std::vector<std::uint32_t> survivors;
      for (std::uint32_t k = 0; k < p.chains.size(); ++k)
        if (!eliminated[k] && !masks.conflicts(k, blocked)) survivors.push_back(k);
      lp_live = packing_lp(p, survivors);
      if (lp_live.ok) engine.set_dual(lp_live.y);
      lp_stale = false;
    }
    if (lp_live.ok) {
      double reduced = p.weights[j];
      for (std::uint32_t t : p.chains[j].trips) reduced -= lp_live.y[t];
      if (lp_live.value + reduced < needed - 1e-6) continue;  // j fits no optimum
    }

    std::vector<std::uint64_t> with(blocked);
    masks.apply(j, with);
    std::vector<std::uint32_t> rest;
    for (std::uint32_t k = j + 1; k < p.chains.size(); ++k)
      if (!eliminated[k] && !masks.conflicts(k, with)) rest.push_back(k);

    // The restricted relaxation decides most queries outright: its value
    // certifies "no completion through j", and rounding it usually exhibits
    // one. The engine only arbitrates a genuine integrality gap.
    const double target = needed - p.weights[j];
    bool reachable = false;
    std::vector<std::uint32_t> completion;
    bool decided = false;
    LpResult lp_rest = packing_lp(p, rest);
    if (lp_rest.ok) {
      if (engine.prunes(lp_rest.value, target - kTieEps)) {
        decided = true;  // relaxation already below the needed completion
      } else {
        completion = round_subset(p, masks, rest, lp_rest.x, with);
        if (selection_value(p, completion) >= target - kTieEps) {
          decided = true;
          reachable = true;
        }
      }
      engine.set_dual(lp_rest.y);
    }
    if (!decided) {
      ExactEngine::Result r = engine.solve(std::move(rest), target - kTieEps);
      reachable = r.exact;
      completion = std::move(r.sel);
      if (lp_live.ok) engine.set_dual(lp_live.y);
    }
    if (reachable) {
      sel.push_back(j);
      masks.apply(j, blocked);
      have += p.weights[j];
      // the completion witnesses the rest of the optimum
      for (std::uint32_t k : witness) in_witness[k] = false;
      witness = std::move(completion);
      std::sort(witness.begin(), witness.end());
      for (std::uint32_t k : witness) in_witness[k] = true;
      lp_stale = true;
    }
  }
  if (engine.timed_out() || optimum - have > kTieEps) {
    // ran out of budget mid-reconstruction; sel plus its witness completion
    // is still an optimal selection, just not canonical
    std::vector<std::uint32_t> fallback = sel;
    for (std::uint32_t k : witness)
      if (!masks.conflicts(k, blocked)) {
        fallback.push_back(k);
        masks.apply(k, blocked);
      }
    return finalize(p, inst, std::move(fallback), SolveStatus::TimeoutIncumbent);
  }
  return finalize(p, inst, std::move(sel), SolveStatus::Optimal);
}

Solution solve_greedy(const PackingProblem& p, const Instance& inst) {
  if (p.chains.empty()) return finalize(p, inst, {}, SolveStatus::Heuristic);
  ChainMasks masks(p);
  return finalize(p, inst, greedy_selection(p, masks), SolveStatus::Heuristic);
}

namespace {

// Exhaustive reference: every disjoint subset, value ties resolved to the
// lexicographically smallest index set.
struct OracleSearch {
  const PackingProblem& p;
  std::vector<double> suffix;
  std::vector<std::uint32_t> cur;
  std::vector<std::uint32_t> best_sel;
  double best = 0.0;
  bool any = false;

  bool conflicts(std::uint32_t j, const std::vector<bool>& used) const {
    for (std::uint32_t t : p.chains[j].trips)
      if (used[t]) return true;
    return false;
  }

  void dfs(std::uint32_t k, double w, std::vector<bool>& used) {
    if (!any || w > best + kTieEps ||
        (std::abs(w - best) <= kTieEps &&
         std::lexicographical_compare(cur.begin(), cur.end(), best_sel.begin(), best_sel.end()))) {
      best = std::max(best, w);
      best_sel = cur;
      any = true;
    }
    for (std::uint32_t j = k; j < p.chains.size(); ++j) {
      if (w + suffix[j] < best - kTieEps) return;  // keep ties alive
      if (conflicts(j, used)) continue;
      for (std::uint32_t t : p.chains[j].trips) used[t] = true;
      cur.push_back(j);
      dfs(j + 1, w + p.weights[j], used);
      cur.pop_back();
      for (std::uint32_t t : p.chains[j].trips) used[t] = false;
    }
  }
};

}  // namespace

Solution brute_force_oracle(const PackingProblem& p, const Instance& inst) {
  if (p.chains.size() > 25)
    throw Error(Errc::PoolTooLargeForOracle,
                std::to_string(p.chains.size()) + " chains exceed the oracle cap of 25");
  OracleSearch o{p, {}, {}, {}, 0.0, false};
  o.suffix.assign(p.chains.size() + 1, 0.0);
  for (std::size_t k = p.chains.size(); k-- > 0;) o.suffix[k] = o.suffix[k + 1] + p.weights[k];
  std::vector<bool> used(p.n_trips, false);
  o.dfs(0, 0.0, used);
  return finalize(p, inst, o.best_sel, SolveStatus::Optimal);
}

void price_solution(Solution& sol, const Instance& inst, double alpha) {
  sol.per_chain.clear();
  sol.offered_prices.clear();
  sol.served_user_count = 0;
  sol.clamped_user_count = 0;

  for (const auto& sc : sol.chains) {
    Chain c{sc.trip_idx, sc.inactive_count};
    ChainEval ev;
    std::int64_t cents = 0;
    for (std::uint32_t t : sc.trip_idx) {
      OfferedPrice op = offered_price(inst.trips[t], alpha);
      cents += op.value.cents - inst.trips[t].travel_cost.cents;
      if (op.clamped) ++sol.clamped_user_count;
      sol.offered_prices.push_back(op);
    }
    ev.profit = static_cast<double>(cents) / 100.0;
    ev.activation_probability = activation_probability(c, alpha);
    ev.expected_profit = ev.activation_probability * ev.profit;
    sol.per_chain.push_back(ev);
    sol.served_user_count += c.length();
  }
  std::sort(sol.offered_prices.begin(), sol.offered_prices.end(),
            [](const OfferedPrice& a, const OfferedPrice& b) { return a.user_id < b.user_id; });

  // The objective must be re-derivable from the per-chain evaluations when
  // they are priced at the solution's own risk factor.
  if (alpha == sol.objective.alpha) {
    double recomputed = 0.0;
    for (std::size_t i = 0; i < sol.chains.size(); ++i) {
      switch (sol.objective.model) {
        case Model::MaxService:
          recomputed += sol.chains[i].members.size();
          break;
        case Model::MaxProfit:
          recomputed += sol.per_chain[i].profit;
          break;
        case Model::MaxExpectedProfit:
          recomputed += sol.per_chain[i].expected_profit;
          break;
      }
    }
    if (std::abs(recomputed - sol.objective_value) > 1e-6)
      throw std::logic_error("solution objective drifted from per-chain evaluations: stored " +
                             std::to_string(sol.objective_value) + " recomputed " +
                             std::to_string(recomputed));
  }
}

double cross_expected_profit(const Solution& sol, const Instance& inst, double alpha) {
  double total = 0.0;
  for (const auto& sc : sol.chains) {
    Chain c{sc.trip_idx, sc.inactive_count};
    std::int64_t cents = 0;
    for (std::uint32_t t : sc.trip_idx)
      cents += offered_price(inst.trips[t], alpha).value.cents - inst.trips[t].travel_cost.cents;
    total += activation_probability(c, alpha) * (static_cast<double>(cents) / 100.0);
  }
  return total;
}

void assert_disjoint(const Solution& sol) {
  std::unordered_set<UserId> seen;
  for (const auto& sc : sol.chains)
    for (UserId u : sc.members)
      if (!seen.insert(u).second)
        throw std::logic_error("user " + std::to_string(u) + " served by two chains");
}

std::string solution_to_json(const Solution& sol) {
  json chains = json::array();
  for (std::size_t i = 0; i < sol.chains.size(); ++i) {
    const auto& sc = sol.chains[i];
    const auto& ev = sol.per_chain[i];
    chains.push_back(json{{"pool_index", sc.pool_index},
                          {"members", sc.members},
                          {"inactive_count", sc.inactive_count},
                          {"profit", ev.profit},
                          {"activation_probability", ev.activation_probability},
                          {"expected_profit", ev.expected_profit}});
  }
  json offers = json::array();
  for (const auto& op : sol.offered_prices)
    offers.push_back(json{{"user_id", op.user_id}, {"cents", op.value.cents},
                          {"clamped", op.clamped}});
  json j{{"schema_version", 1},
         {"objective",
          {{"model", model_name(sol.objective.model)},
           {"alpha", sol.objective.alpha},
           {"cost_factor", sol.objective.cost_factor}}},
         {"status", solve_status_name(sol.status)},
         {"objective_value", sol.objective_value},
         {"served_user_count", sol.served_user_count},
         {"clamped_user_count", sol.clamped_user_count},
         {"selected", sol.selected},
         {"chains", chains},
         {"offered_prices", offers}};
  return j.dump(2) + "\n";
}

Solution solution_from_json(const std::string& text, const Instance& inst) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::IoError, std::string("solution parse failed: ") + e.what());
  }
  if (!j.contains("schema_version") || j["schema_version"].get<int>() != 1)
    throw Error(Errc::SchemaVersionMismatch, "unsupported solution schema");

  std::unordered_map<UserId, std::uint32_t> trip_of_user;
  for (std::uint32_t i = 0; i < inst.trips.size(); ++i)
    trip_of_user[inst.trips[i].user_id] = i;

  Solution sol;
  try {
    sol.objective.model = model_from_name(j.at("objective").at("model").get<std::string>());
    sol.objective.alpha = j.at("objective").at("alpha").get<double>();
    sol.objective.cost_factor = j.at("objective").at("cost_factor").get<double>();
    std::string st = j.at("status").get<std::string>();
    sol.status = st == "optimal" ? SolveStatus::Optimal
                 : st == "timeout_incumbent" ? SolveStatus::TimeoutIncumbent
                                             : SolveStatus::Heuristic;
    sol.objective_value = j.at("objective_value").get<double>();
    for (const auto& cj : j.at("chains")) {
      SelectedChain sc;
      sc.pool_index = cj.at("pool_index").get<std::uint32_t>();
      for (const auto& uj : cj.at("members")) {
        UserId u = uj.get<UserId>();
        auto it = trip_of_user.find(u);
        if (it == trip_of_user.end())
          throw Error(Errc::InvalidField,
                      "solution references user " + std::to_string(u) + " not in the instance");
        sc.members.push_back(u);
        sc.trip_idx.push_back(it->second);
        if (inst.trips[it->second].activity == Activity::Inactive) ++sc.inactive_count;
      }
      sol.selected.push_back(sc.pool_index);
      sol.chains.push_back(std::move(sc));
    }
  } catch (const json::exception& e) {
    throw Error(Errc::IoError, std::string("solution fields malformed: ") + e.what());
  }
  price_solution(sol, inst, sol.objective.alpha);
  assert_disjoint(sol);
  return sol;
}

void save_solution(const Solution& sol, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot open " + path + " for writing");
  out << solution_to_json(sol);
  if (!out) throw Error(Errc::IoError, "write to " + path + " failed");
}

Solution load_solution(const std::string& path, const Instance& inst) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return solution_from_json(buf.str(), inst);
}

}  // namespace chainmatch
