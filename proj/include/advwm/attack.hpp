#pragma once

// Untargeted adversarial-watermark attack: choose (p, q, alpha) minimising the
// oracle's probability for the true class of the watermarked host.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "advwm/bhe.hpp"
#include "advwm/error.hpp"
#include "advwm/imaging.hpp"
#include "advwm/oracle.hpp"

namespace advwm {

/// Half-open host rectangle [x0, x1) x [y0, y1).
struct Rect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  friend bool operator==(const Rect&, const Rect&) = default;
};

/// Watermark rectangles must fit entirely inside one of `allowed`.
struct RegionConstraint {
  std::vector<Rect> allowed;

  /// True when the w x h watermark at (p, q) lies inside some allowed rectangle.
  bool admits(int p, int q, int w, int h) const noexcept {
    for (const auto& r : allowed) {
      if (p >= r.x0 && q >= r.y0 && p + w <= r.x1 && q + h <= r.y1) return true;
    }
    return false;
  }
};

struct AttackSpec {
  RasterImage host;
  WatermarkAsset watermark;        // unscaled asset
  double scale = 0.25;             // sl
  std::optional<int> true_class;   // default: oracle argmax on the clean host
  bhe::BheConfig optimizer;
  std::optional<RegionConstraint> region;
  int alpha_min = 100;
  int alpha_max = 200;             // upper transparency limit
  bool pin_initial = false;        // seed individual 0 with (0, 0, alpha_min)
};

struct AttackOutcome {
  bool success = false;
  std::optional<Placement> best;   // empty when the budget allowed no evaluation
  int true_class = 0;
  double clean_prob_t = 0.0;
  double final_prob_t = 0.0;
  int final_class = 0;
  std::uint64_t queries = 0;           // oracle queries spent by the search
  std::uint64_t baseline_queries = 0;  // oracle queries spent classifying the clean host
  std::uint64_t placements_evaluated = 0;
  ScaleSpec scale;
  RasterImage adversarial;
  bhe::OptimizeTrace trace;
};

inline Placement to_placement(std::span<const double> genes) {
  return {static_cast<int>(genes[0]), static_cast<int>(genes[1]), static_cast<int>(genes[2])};
}

/// f_t of the host composited with the (already scaled) watermark at a
/// placement. Predictions are memoised per placement.
class AttackObjective {
 public:
  AttackObjective(const RasterImage& host, WatermarkAsset scaled, Oracle& oracle, int true_class)
      : host_(&host), wm_(std::move(scaled)), oracle_(&oracle), true_class_(true_class) {}

  double operator()(std::span<const double> genes) { return evaluate(to_placement(genes)); }

  double evaluate(const Placement& at) { return prediction(at).prob(true_class_); }

  const Prediction& prediction(const Placement& at) {
    if (auto it = memo_.find(at); it != memo_.end()) return it->second;
    return memo_.emplace(at, oracle_->predict(composite(*host_, wm_, at))).first->second;
  }

  std::size_t distinct_placements() const noexcept { return memo_.size(); }
  const WatermarkAsset& watermark() const noexcept { return wm_; }
  int true_class() const noexcept { return true_class_; }

 private:
  const RasterImage* host_;
  WatermarkAsset wm_;
  Oracle* oracle_;
  int true_class_;
  std::map<Placement, Prediction> memo_;
};

/// Genes (p, q, alpha), all integer: p in [0, W_h - W_sw], q in [0, H_h - H_sw].
inline bhe::SearchSpace make_search_space(int host_w, int host_h, int wm_w, int wm_h, int alpha_min,
                                          int alpha_max) {
  if (alpha_min < 0 || alpha_max > 255 || alpha_min > alpha_max) {
    throw std::invalid_argument("alpha range must satisfy 0 <= min <= max <= 255");
  }
  if (wm_w > host_w || wm_h > host_h) throw std::invalid_argument("watermark larger than host");
  return bhe::SearchSpace({{0.0, static_cast<double>(host_w - wm_w), true},
                           {0.0, static_cast<double>(host_h - wm_h), true},
                           {static_cast<double>(alpha_min), static_cast<double>(alpha_max), true}});
}

/// Shrinks the (p, q) bounds to the bounding box of the placements admitted by
/// `constraint` and installs the exact union as the feasible region.
inline bhe::SearchSpace constrain_space(bhe::SearchSpace space, const RegionConstraint& constraint, int host_w,
                                        int host_h, int wm_w, int wm_h) {
  const auto& alpha = space.gene(2);
  std::vector<bhe::Box> boxes;
  for (const auto& r : constraint.allowed) {
    if (r.x0 < 0 || r.y0 < 0 || r.x1 > host_w || r.y1 > host_h || r.x0 >= r.x1 || r.y0 >= r.y1) {
      throw std::invalid_argument("region (" + std::to_string(r.x0) + "," + std::to_string(r.y0) + "," +
                                  std::to_string(r.x1) + "," + std::to_string(r.y1) +
                                  ") is empty or outside the host");
    }
    const int p_hi = r.x1 - wm_w;
    const int q_hi = r.y1 - wm_h;
    if (p_hi < r.x0 || q_hi < r.y0) continue;
    boxes.push_back({{double(r.x0), double(r.y0), alpha.lo}, {double(p_hi), double(q_hi), alpha.hi}});
  }
  if (boxes.empty()) throw std::invalid_argument("region constraint admits no placement of the watermark");

  bhe::Box hull = boxes.front();
  for (const auto& b : boxes) {
    for (std::size_t j = 0; j < 2; ++j) {
      hull.lo[j] = std::min(hull.lo[j], b.lo[j]);
      hull.hi[j] = std::max(hull.hi[j], b.hi[j]);
    }
  }
  space.set_bounds(0, hull.lo[0], hull.hi[0]);
  space.set_bounds(1, hull.lo[1], hull.hi[1]);
  const bool single_full = boxes.size() == 1 && boxes.front().lo == hull.lo && boxes.front().hi == hull.hi;
  if (!single_full) space.restrict_to(std::move(boxes));
  return space;
}

/// Scaled watermark, search space and objective for one attack.
struct AttackProblem {
  ScaleSpec scale;
  bhe::SearchSpace space;
  AttackObjective objective;
};

inline AttackProblem build_objective(const AttackSpec& spec, Oracle& oracle, int true_class) {
  const ScaleSpec s = compute_scale(spec.watermark.width(), spec.watermark.height(), spec.host.width(),
                                    spec.host.height(), spec.scale);
  WatermarkAsset scaled = scale_watermark(spec.watermark, spec.host.width(), spec.host.height(), spec.scale);
  auto space = make_search_space(spec.host.width(), spec.host.height(), s.width, s.height, spec.alpha_min,
                                 spec.alpha_max);
  if (spec.region) space = constrain_space(std::move(space), *spec.region, spec.host.width(), spec.host.height(),
                                           s.width, s.height);
  return {s, std::move(space), AttackObjective(spec.host, std::move(scaled), oracle, true_class)};
}

/// Runs BHE until the oracle's argmax leaves the true class, the budget is
/// spent, or the generation limit is reached. Budget exhaustion yields an
/// unsuccessful outcome rather than an error.
inline AttackOutcome run_attack(const AttackSpec& spec, Oracle& oracle) {
  AttackOutcome out;
  const auto before_clean = oracle.ledger().total_queries;
  const Prediction clean = oracle.predict(spec.host);
  out.baseline_queries = oracle.ledger().total_queries - before_clean;
  const int t = spec.true_class.value_or(clean.argmax());
  if (t < 0 || t >= clean.num_classes()) {
    throw std::invalid_argument("true class " + std::to_string(t) + " outside oracle's class range");
  }
  if (clean.argmax() != t) {
    throw PreconditionError("clean host is classified as " + std::to_string(clean.argmax()) + ", not class " +
                            std::to_string(t));
  }
  out.true_class = t;
  out.clean_prob_t = clean.prob(t);

  AttackProblem problem = build_objective(spec, oracle, t);
  out.scale = problem.scale;
  bhe::BheConfig cfg = spec.optimizer;
  if (spec.pin_initial) cfg.initial_point = bhe::Point{0.0, 0.0, double(spec.alpha_min)};

  auto& objective = problem.objective;
  const auto before_search = oracle.ledger().total_queries;
  auto result = bhe::optimize(objective, problem.space, cfg, [&](const bhe::Individual& x) {
    return objective.prediction(to_placement(x.genes)).argmax() != t;
  });
  out.trace = std::move(result.trace);
  out.placements_evaluated = objective.distinct_placements();

  const auto& chosen = result.stop_point ? result.stop_point : result.best;
  if (chosen) {
    out.best = to_placement(chosen->genes);
    out.adversarial = composite(spec.host, objective.watermark(), *out.best);
    const Prediction& final_pred = objective.prediction(*out.best);  // already evaluated by the search
    out.final_prob_t = final_pred.prob(t);
    out.final_class = final_pred.argmax();
  } else {
    out.adversarial = spec.host;
    out.final_prob_t = out.clean_prob_t;
    out.final_class = clean.argmax();
  }
  out.success = out.final_class != t;
  out.queries = oracle.ledger().total_queries - before_search;
  return out;
}

struct GridStrides {
  int p = 4;
  int q = 4;
  int alpha = 10;
};

struct GridResult {
  Placement best;
  double value = 0.0;
  std::uint64_t evaluations = 0;
};

/// Exhaustive minimum of `objective` over {lo, lo+s, ...} on each gene of
/// `space`, skipping infeasible points. Rejects grids above 10^6 points.
template <class PlacementObjective>
GridResult brute_force_grid(PlacementObjective&& objective, const bhe::SearchSpace& space, GridStrides strides) {
  if (strides.p < 1 || strides.q < 1 || strides.alpha < 1) throw std::invalid_argument("grid strides must be >= 1");
  const int stride[3] = {strides.p, strides.q, strides.alpha};
  std::uint64_t counts[3];
  for (std::size_t j = 0; j < 3; ++j) {
    counts[j] = static_cast<std::uint64_t>((space.gene(j).hi - space.gene(j).lo) / stride[j]) + 1;
  }
  if (counts[0] * counts[1] * counts[2] > 1'000'000) {
    throw std::invalid_argument("grid of " + std::to_string(counts[0] * counts[1] * counts[2]) +
                                " points exceeds the 10^6 limit");
  }
  GridResult out;
  bool have = false;
  for (std::uint64_t i = 0; i < counts[0]; ++i) {
    for (std::uint64_t k = 0; k < counts[1]; ++k) {
      for (std::uint64_t a = 0; a < counts[2]; ++a) {
        const bhe::Point x{space.gene(0).lo + double(i * stride[0]), space.gene(1).lo + double(k * stride[1]),
                           space.gene(2).lo + double(a * stride[2])};
        if (!space.feasible(x)) continue;
        const Placement at = to_placement(x);
        const double v = objective(at);
        ++out.evaluations;
        if (!have || v < out.value) {
          out.best = at;
          out.value = v;
          have = true;
        }
      }
    }
  }
  if (!have) throw std::invalid_argument("grid contains no feasible point");
  return out;
}

/// Grid search for an attack spec against `true_class`.
inline GridResult brute_force_grid(const AttackSpec& spec, Oracle& oracle, int true_class, GridStrides strides) {
  AttackProblem problem = build_objective(spec, oracle, true_class);
  return brute_force_grid([&](const Placement& at) { return problem.objective.evaluate(at); }, problem.space,
                          strides);
}

struct RecordMeta {
  std::string host;
  std::string watermark;
  std::uint64_t seed = 0;
};

/// Attack result record as written by the CLI.
inline nlohmann::json to_record(const AttackOutcome& o, const RecordMeta& meta, double scale) {
  nlohmann::json j;
  j["host"] = meta.host;
  j["watermark"] = meta.watermark;
  j["scale"] = scale;
  j["success"] = o.success;
  if (o.best) {
    j["p"] = o.best->p;
    j["q"] = o.best->q;
    j["alpha"] = o.best->alpha;
  } else {
    j["p"] = nullptr;
    j["q"] = nullptr;
    j["alpha"] = nullptr;
  }
  j["clean_prob_t"] = o.clean_prob_t;
  j["final_prob_t"] = o.final_prob_t;
  j["final_class"] = o.final_class;
  j["queries"] = o.queries;
  j["seed"] = meta.seed;
  return j;
}

}  // namespace advwm
