#pragma once

// Basin Hopping Evolution: a population of basin-hopping chains combined with
// per-gene crossover and greedy selection, minimising a black-box scalar
// objective over a box (optionally further restricted to a union of boxes).

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <exception>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace advwm::bhe {

using Rng = std::mt19937_64;
using Point = std::vector<double>;

struct GeneBounds {
  double lo = 0.0;
  double hi = 0.0;
  bool integer = false;

  double range() const noexcept { return hi - lo; }
};

/// Axis-aligned box over all genes.
struct Box {
  Point lo;
  Point hi;

  bool contains(std::span<const double> x) const noexcept {
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (x[j] < lo[j] || x[j] > hi[j]) return false;
    }
    return true;
  }
};

/// Per-gene bounds plus an optional feasible region. When `regions` is
/// non-empty a point is feasible only if some region contains it.
class SearchSpace {
 public:
  SearchSpace() = default;

  explicit SearchSpace(std::vector<GeneBounds> genes) : genes_(std::move(genes)) {
    if (genes_.empty()) throw std::invalid_argument("SearchSpace: no genes");
    for (std::size_t j = 0; j < genes_.size(); ++j) {
      const auto& g = genes_[j];
      if (!std::isfinite(g.lo) || !std::isfinite(g.hi) || g.lo > g.hi) {
        throw std::invalid_argument("SearchSpace: gene " + std::to_string(j) + " has empty or inverted bounds [" +
                                    std::to_string(g.lo) + "," + std::to_string(g.hi) + "]");
      }
      if (g.integer && std::ceil(g.lo) > std::floor(g.hi)) {
        throw std::invalid_argument("SearchSpace: integer gene " + std::to_string(j) + " has no integer in bounds");
      }
    }
  }

  /// Convenience: the same bounds on every one of `dim` genes.
  static SearchSpace uniform(std::size_t dim, double lo, double hi, bool integer = false) {
    return SearchSpace(std::vector<GeneBounds>(dim, GeneBounds{lo, hi, integer}));
  }

  std::size_t dim() const noexcept { return genes_.size(); }
  const GeneBounds& gene(std::size_t j) const { return genes_.at(j); }
  std::span<const GeneBounds> genes() const noexcept { return genes_; }
  std::span<const Box> regions() const noexcept { return regions_; }

  void set_bounds(std::size_t j, double lo, double hi) {
    auto genes = genes_;
    genes.at(j).lo = lo;
    genes.at(j).hi = hi;
    *this = SearchSpace(std::move(genes));
  }

  /// Restricts feasibility to the union of `boxes`; each must lie within the
  /// gene bounds and contain at least one snapped point.
  void restrict_to(std::vector<Box> boxes) {
    for (const auto& b : boxes) {
      if (b.lo.size() != dim() || b.hi.size() != dim()) {
        throw std::invalid_argument("restrict_to: box dimension mismatch");
      }
      for (std::size_t j = 0; j < dim(); ++j) {
        const auto& g = genes_[j];
        if (b.lo[j] > b.hi[j] || b.lo[j] < g.lo || b.hi[j] > g.hi ||
            (g.integer && std::ceil(b.lo[j]) > std::floor(b.hi[j]))) {
          throw std::invalid_argument("restrict_to: region outside gene bounds or empty");
        }
      }
    }
    regions_ = std::move(boxes);
  }

  bool in_bounds(std::span<const double> x) const noexcept {
    if (x.size() != dim()) return false;
    for (std::size_t j = 0; j < dim(); ++j) {
      if (!(x[j] >= genes_[j].lo && x[j] <= genes_[j].hi)) return false;
      if (genes_[j].integer && x[j] != std::round(x[j])) return false;
    }
    return true;
  }

  bool feasible(std::span<const double> x) const noexcept {
    if (!in_bounds(x)) return false;
    if (regions_.empty()) return true;
    return std::any_of(regions_.begin(), regions_.end(), [&](const Box& b) { return b.contains(x); });
  }

  /// Clips each gene into its bounds and rounds integer genes to the nearest
  /// in-bounds integer.
  void snap(Point& x) const {
    for (std::size_t j = 0; j < dim(); ++j) x[j] = snap_gene(j, x[j], genes_[j].lo, genes_[j].hi);
  }

  /// Nearest feasible point by coordinate-wise clamping into each region and
  /// keeping the closest (Euclidean) result.
  Point project(Point x) const {
    snap(x);
    if (regions_.empty()) return x;
    Point best;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& b : regions_) {
      Point y = x;
      double d = 0.0;
      for (std::size_t j = 0; j < dim(); ++j) {
        y[j] = snap_gene(j, y[j], b.lo[j], b.hi[j]);
        d += (y[j] - x[j]) * (y[j] - x[j]);
      }
      if (d < best_d) {
        best_d = d;
        best = std::move(y);
      }
    }
    return best;
  }

 private:
  double snap_gene(std::size_t j, double v, double lo, double hi) const {
    if (std::isnan(v)) v = lo;
    if (genes_[j].integer) return std::clamp(std::round(v), std::ceil(lo), std::floor(hi));
    return std::clamp(v, lo, hi);
  }

  std::vector<GeneBounds> genes_;
  std::vector<Box> regions_;
};

struct Individual {
  Point genes;
  std::optional<double> fitness;

  friend bool operator==(const Individual&, const Individual&) = default;
};

struct BheConfig {
  int population = 10;           // M
  int generations = 20;          // N
  int bh_iterations = 3;         // I
  double crossover_prob = 0.9;   // CR
  double step_size = 0.5;        // r, as a fraction of each gene's range
  double success_threshold = 0.05;  // stop once f(best) < threshold
  std::uint64_t seed = 0;
  std::optional<std::uint64_t> query_budget = 10'000;  // distinct objective evaluations
  int local_search_budget = 60;  // evaluations per local-search call
  bool memoize = true;           // re-use values of points already evaluated
  bool bh_only = false;          // single basin-hopping chain, no crossover/selection
  int bh_only_iterations = 450;
  std::optional<Point> initial_point;  // replaces individual 0 of the initial population

  void validate() const {
    if (population < 1) throw std::invalid_argument("BheConfig: population must be >= 1");
    if (generations < 1) throw std::invalid_argument("BheConfig: generations must be >= 1");
    if (bh_iterations < 1) throw std::invalid_argument("BheConfig: bh_iterations must be >= 1");
    if (!(crossover_prob >= 0.0 && crossover_prob <= 1.0)) {
      throw std::invalid_argument("BheConfig: crossover_prob must lie in [0,1]");
    }
    if (!(step_size > 0.0)) throw std::invalid_argument("BheConfig: step_size must be > 0");
    if (local_search_budget < 1) throw std::invalid_argument("BheConfig: local_search_budget must be >= 1");
    if (bh_only_iterations < 1) throw std::invalid_argument("BheConfig: bh_only_iterations must be >= 1");
  }
};

enum class StopReason { none, threshold, generations, budget, predicate, iterations };

inline const char* to_string(StopReason r) noexcept {
  switch (r) {
    case StopReason::none: return "none";
    case StopReason::threshold: return "threshold";
    case StopReason::generations: return "generations";
    case StopReason::budget: return "budget";
    case StopReason::predicate: return "predicate";
    case StopReason::iterations: return "iterations";
  }
  return "unknown";
}

enum class EventKind { bh_accept, bh_reject, select_child, keep_parent };

struct TraceEvent {
  int generation;
  int individual;
  EventKind kind;
  double incumbent;  // f(V) for BH events, f(X) for selection
  double candidate;  // f(S) for BH events, f(U) for selection
};

struct GenerationRecord {
  int gen;
  double best_fitness;
  std::uint64_t evals;
};

struct OptimizeTrace {
  std::vector<GenerationRecord> generations;
  std::vector<TraceEvent> events;
  std::vector<Point> evaluated;  // every point passed to the objective, in order
  std::uint64_t evaluations = 0;
  std::uint64_t bh_passes = 0;
  std::uint64_t crossovers = 0;
  std::uint64_t selections = 0;
  StopReason stop = StopReason::none;
};

struct OptimizeResult {
  std::optional<Individual> best;        // best solution found by the population
  std::optional<Individual> stop_point;  // point that triggered the stop predicate
  OptimizeTrace trace;

  bool failed() const noexcept { return !best.has_value(); }
};

/// Raised when the objective throws; carries the trace up to the failure.
class ObjectiveError : public std::runtime_error {
 public:
  ObjectiveError(std::exception_ptr cause, OptimizeTrace partial, const std::string& what)
      : std::runtime_error(what), cause_(std::move(cause)), partial_(std::move(partial)) {}

  std::exception_ptr cause() const noexcept { return cause_; }
  const OptimizeTrace& partial_trace() const noexcept { return partial_; }
  [[noreturn]] void rethrow_cause() const { std::rethrow_exception(cause_); }

 private:
  std::exception_ptr cause_;
  OptimizeTrace partial_;
};

template <class F>
concept PointObjective = std::invocable<F&, const Point&> &&
                         std::convertible_to<std::invoke_result_t<F&, const Point&>, double>;

/// Evaluates `ind` if it has no cached fitness.
template <PointObjective F>
double fitness_of(Individual& ind, F& f) {
  if (!ind.fitness) ind.fitness = f(ind.genes);
  return *ind.fitness;
}

namespace detail {

inline Point draw_uniform(const SearchSpace& space, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Point x(space.dim());
  for (std::size_t j = 0; j < space.dim(); ++j) {
    const auto& g = space.gene(j);
    x[j] = g.lo + u(rng) * g.range();
  }
  space.snap(x);
  return x;
}

// Draws until `propose` yields a feasible point (at most 16 tries), then
// projects the last draw.
template <class Propose>
Point feasible_draw(const SearchSpace& space, Propose&& propose) {
  constexpr int kTries = 16;
  Point x = propose();
  for (int t = 1; t < kTries && !space.feasible(x); ++t) x = propose();
  return space.feasible(x) ? x : space.project(std::move(x));
}

}  // namespace detail

/// Each gene drawn independently as lo + u*(hi - lo), u ~ U(0,1).
inline std::vector<Individual> init_population(const BheConfig& cfg, const SearchSpace& space, Rng& rng) {
  cfg.validate();
  std::vector<Individual> pop;
  pop.reserve(static_cast<std::size_t>(cfg.population));
  for (int i = 0; i < cfg.population; ++i) {
    pop.push_back({detail::feasible_draw(space, [&] { return detail::draw_uniform(space, rng); }), std::nullopt});
  }
  if (cfg.initial_point) {
    if (cfg.initial_point->size() != space.dim()) {
      throw std::invalid_argument("initial_point dimension mismatch");
    }
    pop.front().genes = space.project(*cfg.initial_point);
  }
  return pop;
}

/// Raw displacement r * d_j * range_j with d ~ N(0, I), before clipping.
inline Point gaussian_step(double r, const SearchSpace& space, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Point d(space.dim());
  for (std::size_t j = 0; j < space.dim(); ++j) d[j] = r * normal(rng) * space.gene(j).range();
  return d;
}

/// New starting point in the Gaussian neighbourhood of `x`, clipped to bounds.
inline Individual neighborhood_sample(const Individual& x, double r, const SearchSpace& space, Rng& rng) {
  if (x.genes.size() != space.dim()) throw std::invalid_argument("neighborhood_sample: dimension mismatch");
  if (r == 0.0) return x;
  Point y = detail::feasible_draw(space, [&] {
    Point c = x.genes;
    const Point d = gaussian_step(r, space, rng);
    for (std::size_t j = 0; j < c.size(); ++j) c[j] += d[j];
    space.snap(c);
    return c;
  });
  if (y == x.genes) return x;
  return {std::move(y), std::nullopt};
}

/// Compass search: probe +/- step along each axis, move on the first strict
/// improvement, halve all steps after a sweep without one. Steps start at 1/8
/// of each gene's range. Integer genes move by max(1, round(step)) and are done
/// once the step drops below 0.5; continuous genes stop below 1e-3 of their
/// range. `budget` caps the objective calls made here (including evaluating
/// `start` if needed).
template <PointObjective F>
Individual local_search(Individual start, F& f, const SearchSpace& space, int budget) {
  if (budget < 1) throw std::invalid_argument("local_search: budget must be >= 1");
  int used = 0;
  if (!start.fitness) {
    start.fitness = f(start.genes);
    ++used;
  }
  const std::size_t dim = space.dim();
  std::vector<double> step(dim);
  auto converged = [&](std::size_t j) {
    const auto& g = space.gene(j);
    if (g.range() <= 0.0) return true;
    return g.integer ? step[j] < 0.5 : step[j] < 1e-3 * g.range();
  };
  for (std::size_t j = 0; j < dim; ++j) step[j] = space.gene(j).range() / 8.0;

  Individual cur = std::move(start);
  auto all_converged = [&] {
    for (std::size_t j = 0; j < dim; ++j) {
      if (!converged(j)) return false;
    }
    return true;
  };
  while (used < budget && !all_converged()) {
    bool improved = false;
    for (std::size_t j = 0; j < dim && !improved && used < budget; ++j) {
      if (converged(j)) continue;
      const double delta = space.gene(j).integer ? std::max(1.0, std::round(step[j])) : step[j];
      for (double sign : {1.0, -1.0}) {
        if (used >= budget) break;
        Point cand = cur.genes;
        cand[j] += sign * delta;
        space.snap(cand);
        if (cand[j] == cur.genes[j] || !space.feasible(cand)) continue;
        const double v = f(cand);
        ++used;
        if (v < *cur.fitness) {
          cur = {std::move(cand), v};
          improved = true;
          break;
        }
      }
    }
    if (!improved) {
      for (double& s : step) s /= 2.0;
    }
  }
  return cur;
}

/// Called after each basin-hopping iteration with the incumbent V, the
/// locally minimised candidate S, and whether S replaced V.
using BhObserver = std::function<void(const Individual& incumbent, const Individual& candidate, bool accepted)>;

/// V <- L(x); repeat I times: S <- L(sample(V)); V <- S if f(S) <= f(V).
template <PointObjective F>
Individual basin_hop(const Individual& x, F& f, const BheConfig& cfg, const SearchSpace& space, Rng& rng,
                     const BhObserver& observer = {}) {
  Individual v = local_search(x, f, space, cfg.local_search_budget);
  for (int it = 0; it < cfg.bh_iterations; ++it) {
    Individual start = neighborhood_sample(v, cfg.step_size, space, rng);
    Individual s = local_search(std::move(start), f, space, cfg.local_search_budget);
    const bool accept = *s.fitness <= *v.fitness;
    if (observer) observer(v, s, accept);
    if (accept) v = std::move(s);
  }
  return v;
}

/// Gene j comes from `v` when u_j <= cr, else from `x`.
inline Individual crossover(const Individual& v, const Individual& x, double cr, Rng& rng) {
  if (v.genes.size() != x.genes.size()) throw std::invalid_argument("crossover: dimension mismatch");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Individual child;
  child.genes.resize(v.genes.size());
  for (std::size_t j = 0; j < v.genes.size(); ++j) child.genes[j] = u(rng) <= cr ? v.genes[j] : x.genes[j];
  return child;
}

/// Greedy selection; ties go to the child.
template <PointObjective F>
Individual select(Individual u, Individual x, F& f) {
  return fitness_of(u, f) <= fitness_of(x, f) ? std::move(u) : std::move(x);
}

namespace detail {

struct Halt {
  StopReason reason;
};

// Budget, memoisation, bookkeeping and the per-evaluation stop predicate.
template <class Objective>
class Evaluator {
 public:
  using StopPredicate = std::function<bool(const Individual&)>;

  Evaluator(Objective& objective, const BheConfig& cfg, const StopPredicate& stop, OptimizeResult& out)
      : objective_(objective), cfg_(cfg), stop_(stop), out_(out) {}

  double operator()(const Point& x) {
    if (cfg_.memoize) {
      if (auto it = memo_.find(x); it != memo_.end()) return it->second;
    }
    if (cfg_.query_budget && out_.trace.evaluations >= *cfg_.query_budget) throw Halt{StopReason::budget};
    out_.trace.evaluated.push_back(x);
    double v;
    if constexpr (std::is_invocable_v<Objective&, std::span<const double>>) {
      v = static_cast<double>(objective_(std::span<const double>(x)));
    } else {
      v = static_cast<double>(objective_(x));
    }
    ++out_.trace.evaluations;
    if (cfg_.memoize) memo_.emplace(x, v);
    if (stop_ && stop_(Individual{x, v})) {
      out_.stop_point = Individual{x, v};
      throw Halt{StopReason::predicate};
    }
    return v;
  }

 private:
  Objective& objective_;
  const BheConfig& cfg_;
  const StopPredicate& stop_;
  OptimizeResult& out_;
  std::map<Point, double> memo_;
};

}  // namespace detail

/// Runs BHE (or the single-chain BH baseline when cfg.bh_only) on `objective`,
/// a callable double(std::span<const double>).
///
/// Terminates when f(best) < cfg.success_threshold, after cfg.generations
/// generations, when the query budget is spent, or as soon as `stop` returns
/// true for any evaluated point. The trace records one generation entry for the
/// initial population (gen 0) and one per completed generation (per BH
/// iteration in bh_only mode).
template <class Objective>
OptimizeResult optimize(Objective&& objective, const SearchSpace& space, const BheConfig& cfg,
                        const std::function<bool(const Individual&)>& stop = {}) {
  cfg.validate();
  if (cfg.initial_point && cfg.initial_point->size() != space.dim()) {
    throw std::invalid_argument("initial_point dimension mismatch");
  }
  OptimizeResult out;
  Rng rng(cfg.seed);
  detail::Evaluator<std::remove_reference_t<Objective>> eval(objective, cfg, stop, out);

  std::optional<Individual> best;
  auto offer_best = [&](const Individual& x) {
    if (!best || *x.fitness <= *best->fitness) best = x;
  };
  auto record = [&](int gen) {
    if (best) out.trace.generations.push_back({gen, *best->fitness, out.trace.evaluations});
  };
  auto below_threshold = [&] { return best && *best->fitness < cfg.success_threshold; };

  try {
    if (cfg.bh_only) {
      BheConfig chain = cfg;
      chain.population = 1;
      chain.bh_iterations = cfg.bh_only_iterations;
      Individual x0 = init_population(chain, space, rng).front();
      fitness_of(x0, eval);
      offer_best(x0);
      record(0);
      int iteration = 0;
      ++out.trace.bh_passes;
      basin_hop(x0, eval, chain, space, rng, [&](const Individual& v, const Individual& s, bool accepted) {
        ++iteration;
        out.trace.events.push_back({iteration, 0, accepted ? EventKind::bh_accept : EventKind::bh_reject,
                                    *v.fitness, *s.fitness});
        offer_best(accepted ? s : v);
        record(iteration);
        if (below_threshold()) throw detail::Halt{StopReason::threshold};
      });
      out.trace.stop = StopReason::iterations;
    } else {
      std::vector<Individual> pop = init_population(cfg, space, rng);
      for (auto& x : pop) {
        fitness_of(x, eval);
        offer_best(x);
      }
      record(0);
      int g = 0;
      while (!below_threshold() && g < cfg.generations) {
        ++g;
        for (int i = 0; i < cfg.population; ++i) {
          Individual& x = pop[static_cast<std::size_t>(i)];
          ++out.trace.bh_passes;
          Individual v = basin_hop(x, eval, cfg, space, rng, [&](const Individual& inc, const Individual& s, bool ok) {
            out.trace.events.push_back({g, i, ok ? EventKind::bh_accept : EventKind::bh_reject, *inc.fitness, *s.fitness});
          });
          Individual u = crossover(v, x, cfg.crossover_prob, rng);
          ++out.trace.crossovers;
          if (!space.feasible(u.genes)) u.genes = space.project(std::move(u.genes));
          if (u.genes == v.genes) {
            u.fitness = v.fitness;
          } else if (u.genes == x.genes) {
            u.fitness = x.fitness;
          }
          const double fu = fitness_of(u, eval);
          const double fx = *x.fitness;
          x = select(std::move(u), x, eval);
          ++out.trace.selections;
          const bool took_child = fu <= fx;
          out.trace.events.push_back({g, i, took_child ? EventKind::select_child : EventKind::keep_parent, fx, fu});
          if (took_child) offer_best(x);
        }
        record(g);
      }
      out.trace.stop = below_threshold() ? StopReason::threshold : StopReason::generations;
    }
  } catch (const detail::Halt& h) {
    out.trace.stop = h.reason;
    if (out.stop_point) offer_best(*out.stop_point);
    if (out.trace.generations.empty() || out.trace.generations.back().evals != out.trace.evaluations) {
      const int last = out.trace.generations.empty() ? 0 : out.trace.generations.back().gen + 1;
      record(last);
    }
  } catch (...) {
    throw ObjectiveError(std::current_exception(), out.trace, "objective evaluation failed");
  }
  out.best = best;
  return out;
}

/// One JSON object per generation: {"gen", "best_fitness", "evals"}.
inline void write_trace_jsonl(const OptimizeTrace& trace, std::ostream& os) {
  for (const auto& g : trace.generations) {
    os << nlohmann::json{{"gen", g.gen}, {"best_fitness", g.best_fitness}, {"evals", g.evals}}.dump() << '\n';
  }
}

}  // namespace advwm::bhe
