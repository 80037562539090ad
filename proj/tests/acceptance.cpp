// Acceptance checks. Prints one PASS/FAIL line per criterion; exit status is
// the number of failed criteria.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "advwm/analysis.hpp"
#include "advwm/attack.hpp"
#include "advwm/test_functions.hpp"

using namespace advwm;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const std::function<Verdict()>& check) {
  const auto t0 = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = check();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!v.pass) ++failures;
  std::cout << (v.pass ? "PASS" : "FAIL") << " [" << id << "] " << name << ": " << v.detail << " (" << secs
            << " s)" << std::endl;
}

double elapsed_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

RasterImage noisy_gray(int w, int h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> d(118, 138);
  RasterImage img(w, h, 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const auto v = static_cast<std::uint8_t>(d(rng));
      for (int c = 0; c < 3; ++c) img.at(x, y, c) = v;
    }
  return img;
}

WatermarkAsset black_square(int n) {
  RasterImage img(n, n, 4, 0);
  for (int y = 0; y < n; ++y)
    for (int x = 0; x < n; ++x) img.at(x, y, 3) = 255;
  return WatermarkAsset(img);
}

AttackSpec synthetic_spec(std::uint64_t instance, std::uint64_t budget) {
  AttackSpec spec;
  spec.host = noisy_gray(32, 32, 1000 + instance);
  spec.watermark = black_square(8);
  spec.scale = 0.25;
  spec.optimizer.query_budget = budget;
  spec.optimizer.seed = instance;
  return spec;
}

std::shared_ptr<const Model> builtin4() { return std::make_shared<FragileClassifier>(4, 8.0); }

Verdict compositing() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(2024);
  auto uni = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  long mismatches = 0;
  long outside_changed = 0;
  long pixels = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int hw = uni(1, 40), hh = uni(1, 40);
    const int ww = uni(1, hw), wh = uni(1, hh);
    RasterImage host(hw, hh, 3), wm(ww, wh, 4);
    for (auto& b : host.pixels()) b = static_cast<std::uint8_t>(uni(0, 255));
    for (auto& b : wm.pixels()) b = static_cast<std::uint8_t>(uni(0, 255));
    const Placement at{uni(0, hw - ww), uni(0, hh - wh), uni(0, 255)};
    const RasterImage out = composite(host, WatermarkAsset(wm), at);
    for (int y = 0; y < hh; ++y)
      for (int x = 0; x < hw; ++x)
        for (int c = 0; c < 3; ++c) {
          ++pixels;
          const bool inside = x >= at.p && x < at.p + ww && y >= at.q && y < at.q + wh;
          if (!inside) {
            outside_changed += out.at(x, y, c) != host.at(x, y, c);
            continue;
          }
          const double a = at.alpha * wm.at(x - at.p, y - at.q, 3) / 255.0;
          const double v = (wm.at(x - at.p, y - at.q, c) * a + host.at(x, y, c) * (255.0 - a)) / 255.0;
          mismatches += out.at(x, y, c) != static_cast<int>(std::lround(v));
        }
  }
  const double secs = elapsed_since(t0);
  std::ostringstream d;
  d << pixels << " channel values, " << mismatches << " mismatches, " << outside_changed
    << " changed outside rectangle, " << secs << " s (limit 1 s)";
  return {mismatches == 0 && outside_changed == 0 && secs < 1.0, d.str()};
}

Verdict scaling() {
  struct Case {
    int ww, wh, hw, hh;
    double sl;
    int ew, eh;
  };
  const Case cases[] = {{100, 50, 224, 224, 0.25, 56, 28}, {224, 224, 224, 224, 1.0, 224, 224},
                        {260, 100, 224, 224, 0.5, 112, 43}};
  std::ostringstream d;
  bool ok = true;
  for (const auto& c : cases) {
    const auto s = compute_scale(c.ww, c.wh, c.hw, c.hh, c.sl);
    RasterImage wm(c.ww, c.wh, 4, 255);
    const auto scaled = scale_watermark(WatermarkAsset(wm), c.hw, c.hh, c.sl);
    const bool hit = s.width == c.ew && s.height == c.eh && scaled.width() == c.ew && scaled.height() == c.eh;
    ok = ok && hit;
    d << c.ww << "x" << c.wh << "@" << c.sl << "->" << s.width << "x" << s.height << (hit ? " ok; " : " WRONG; ");
  }
  return {ok, d.str()};
}

Verdict sphere() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto space = bhe::SearchSpace::uniform(3, -5.0, 5.0);
  int solved = 0;
  bool monotone = true;
  double worst = 0.0;
  std::uint64_t max_evals = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    bhe::BheConfig cfg;
    cfg.seed = seed;
    cfg.success_threshold = 1e-2;
    cfg.query_budget = 5000;
    const auto res = bhe::optimize(benchmarks::sphere, space, cfg);
    const double best = res.best ? *res.best->fitness : INFINITY;
    worst = std::max(worst, best);
    max_evals = std::max(max_evals, res.trace.evaluations);
    solved += best < 1e-2 && res.trace.evaluations <= 5000;
    for (std::size_t g = 1; g < res.trace.generations.size(); ++g) {
      monotone = monotone && res.trace.generations[g].best_fitness <= res.trace.generations[g - 1].best_fitness;
    }
  }
  const double secs = elapsed_since(t0);
  std::ostringstream d;
  d << solved << "/10 seeds below 1e-2, worst best " << worst << ", max evals " << max_evals
    << ", trace non-increasing " << (monotone ? "yes" : "no") << ", " << secs << " s (limit 10 s)";
  return {solved == 10 && monotone && secs < 10.0, d.str()};
}

Verdict bhe_vs_bh() {
  const auto t0 = std::chrono::steady_clock::now();
  int bhe_ok = 0, bh_ok = 0;
  for (std::uint64_t i = 0; i < 30; ++i) {
    auto spec = synthetic_spec(i, 2000);
    Oracle o1(builtin4());
    bhe_ok += run_attack(spec, o1).success;
    spec.optimizer.bh_only = true;
    Oracle o2(builtin4());
    bh_ok += run_attack(spec, o2).success;
  }
  const double secs = elapsed_since(t0);
  std::ostringstream d;
  d << "BHE " << bhe_ok << "/30, BH-only " << bh_ok << "/30, " << secs << " s (limit 120 s)";
  return {bhe_ok >= bh_ok && secs < 120.0, d.str()};
}

Verdict versus_grid() {
  int within = 0;
  std::ostringstream d;
  for (std::uint64_t i = 0; i < 10; ++i) {
    auto spec = synthetic_spec(100 + i, 2000);
    Oracle o1(builtin4());
    const int t = o1.predict(spec.host).argmax();
    auto problem = build_objective(spec, o1, t);
    auto cfg = spec.optimizer;
    cfg.success_threshold = 0.0;
    const auto res = bhe::optimize(problem.objective, problem.space, cfg);
    Oracle o2(builtin4());
    const auto grid = brute_force_grid(spec, o2, t, {4, 4, 10});
    const double gap = *res.best->fitness - grid.value;
    within += gap <= 0.02;
    d << (i ? " " : "") << std::setprecision(3) << gap;
  }
  return {within >= 8, std::to_string(within) + "/10 within grid+0.02 (BHE-grid gaps: " + d.str() + ")"};
}

Verdict query_accounting() {
  bool ok = true;
  std::ostringstream d;
  for (std::uint64_t i = 0; i < 5; ++i) {
    const auto spec = synthetic_spec(200 + i, 2000);
    Oracle uncached(builtin4(), false);
    const auto out = run_attack(spec, uncached);
    const auto ledger_search = uncached.ledger().total_queries - out.baseline_queries;
    ok = ok && out.queries == ledger_search && out.queries == out.placements_evaluated &&
         out.queries == out.trace.evaluations;
    Oracle cached(builtin4());
    const auto again = run_attack(spec, cached);
    ok = ok && again.queries + cached.ledger().cache_hits == again.placements_evaluated;
    d << (i ? "; " : "") << out.queries << "/" << ledger_search << "/" << out.placements_evaluated;
  }
  return {ok, "queries/ledger/distinct placements: " + d.str()};
}

Verdict region_constraint() {
  AttackSpec spec;
  spec.host = noisy_gray(64, 32, 7);
  spec.watermark = black_square(8);
  spec.scale = 0.25;
  spec.optimizer.query_budget = 2000;
  spec.optimizer.success_threshold = 0.0;
  const RegionConstraint strips{{{0, 0, 16, 32}, {48, 0, 64, 32}}};
  spec.region = strips;
  std::size_t outside = 0, total = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    spec.optimizer.seed = seed;
    Oracle o(builtin4());
    const auto out = run_attack(spec, o);
    for (const auto& x : out.trace.evaluated) {
      const auto at = to_placement(x);
      ++total;
      outside += !strips.admits(at.p, at.q, 8, 8);
    }
    if (out.best) outside += !strips.admits(out.best->p, out.best->q, 8, 8);
  }
  return {outside == 0 && total > 0,
          std::to_string(total) + " evaluated placements, " + std::to_string(outside) + " outside the strips"};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int sh(const std::string& cmd) { return std::system((cmd + " > /dev/null 2>&1").c_str()); }

Verdict determinism() {
  const fs::path dir = fs::temp_directory_path() / ("advwm_accept_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  const std::string cli = ADVWM_CLI_PATH;
  const std::string d = dir.string();
  if (sh(cli + " synth --count 4 --seed 3 --out " + d + "/data") != 0) return {false, "synth failed"};
  const std::string args = " attack --host " + d + "/data/hosts --watermark " + d +
                           "/data/watermark.png --scale 1/4 --budget 1500 --seed 11 --jobs 2";
  if (sh(cli + args + " --out " + d + "/a") != 0 || sh(cli + args + " --out " + d + "/b") != 0) {
    return {false, "attack run failed"};
  }
  if (sh(cli + " replay " + d + "/a/manifest.json --out " + d + "/c") != 0) return {false, "replay failed"};
  const auto a = slurp(dir / "a/results.jsonl");
  const bool same = !a.empty() && a == slurp(dir / "b/results.jsonl") && a == slurp(dir / "c/results.jsonl") &&
                    slurp(dir / "a/summary.json") == slurp(dir / "c/summary.json");
  fs::remove_all(dir);
  return {same, same ? "repeat run and manifest replay give byte-identical results.jsonl and summary.json"
                     : "results differ between runs"};
}

Verdict perturbation_examples() {
  bool ok = perturbation_level({"l", {3, 4}}, {"l", {3, 4}}) == 0.0;
  ok = ok && perturbation_level({"l", {0, 0}}, {"l", {3, 4}}) == 1.0;
  ok = ok && std::abs(perturbation_level({"l", {6, 8}}, {"l", {3, 4}}) - 1.0) < 1e-12;
  ok = ok && std::abs(perturbation_level({"l", {1, 1}}, {"l", {1, 0}}) - 1.0) < 1e-12;
  ok = ok && perturbation_level({"l", {3, 4.000001}}, {"l", {3, 4}}) > 0.0;
  bool rejected = false;
  try {
    perturbation_level({"l", {1, 2}}, {"l", {0, 0}});
  } catch (const DegenerateReference&) {
    rejected = true;
  }
  return {ok && rejected, std::string("hand examples ") + (ok ? "match" : "differ") + ", zero-norm reference " +
                              (rejected ? "rejected" : "accepted")};
}

}  // namespace

int main() {
  std::cout << std::setprecision(4);
  report(1, "compositing exactness", compositing);
  report(2, "watermark scaling", scaling);
  report(3, "BHE on 3-d sphere", sphere);
  report(4, "BHE vs BH-only on 30 synthetic instances", bhe_vs_bh);
  report(5, "BHE vs grid search on 10 tiny instances", versus_grid);
  report(6, "query accounting", query_accounting);
  report(7, "region constraint", region_constraint);
  report(8, "determinism", determinism);
  report(9, "perturbation level", perturbation_examples);
  std::cout << (failures == 0 ? "ALL PASS" : std::to_string(failures) + " FAILED") << std::endl;
  return failures;
}
