// advwm: command-line front end.
//
//   advwm attack    run the watermark attack on one image or a directory
//   advwm bench     BHE vs single-chain BH on sphere/rastrigin/ackley
//   advwm composite blend a watermark at an explicit placement
//   advwm analyze   layer-wise perturbation profiles
//   advwm synth     write synthetic hosts and a black watermark
//   advwm replay    re-run a command from its manifest.json
//
// Exit codes: 0 completed, 2 usage/input error, 3 oracle/transport error.

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "advwm/analysis.hpp"
#include "advwm/attack.hpp"
#include "advwm/image_io.hpp"
#include "advwm/oracle_config.hpp"
#include "advwm/test_functions.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitOracle = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

double parse_scale(const std::string& text) {
  try {
    std::size_t used = 0;
    if (auto slash = text.find('/'); slash != std::string::npos) {
      const double num = std::stod(text.substr(0, slash), &used);
      if (used != slash) throw std::invalid_argument("");
      const std::string den_text = text.substr(slash + 1);
      const double den = std::stod(den_text, &used);
      if (used != den_text.size() || den == 0.0) throw std::invalid_argument("");
      return num / den;
    }
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument("");
    return v;
  } catch (const std::exception&) {
    throw UsageError("invalid scale '" + text + "' (use a fraction like 1/4 or a decimal)");
  }
}

advwm::Rect parse_region(const std::string& text) {
  advwm::Rect r;
  char c1 = 0, c2 = 0, c3 = 0;
  std::istringstream is(text);
  if (!(is >> r.x0 >> c1 >> r.y0 >> c2 >> r.x1 >> c3 >> r.y1) || c1 != ',' || c2 != ',' || c3 != ',' ||
      is.peek() != std::char_traits<char>::eof()) {
    throw UsageError("invalid region '" + text + "' (expected x0,y0,x1,y1)");
  }
  return r;
}

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw advwm::IoError(path.string() + ": cannot open for writing");
  out << text;
}

std::vector<fs::path> list_images(const fs::path& path) {
  if (!fs::exists(path)) throw UsageError(path.string() + ": no such file or directory");
  if (!fs::is_directory(path)) return {path};
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(path)) {
    const auto ext = e.path().extension();
    if (e.is_regular_file() && (ext == ".png" || ext == ".ppm")) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  if (out.empty()) throw UsageError(path.string() + ": no .png or .ppm images");
  return out;
}

// Every option of the subcommand with its effective value (given or default).
json resolved_params(const CLI::App& sub) {
  json params = json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string name = opt->get_lnames().front();
    if (name == "help" || name == "out") continue;
    if (opt->get_type_size() == 0) {
      params[name] = opt->count() > 0;
    } else if (opt->count() > 0) {
      params[name] = opt->results();
    } else if (const auto def = opt->get_default_str(); !def.empty() && def != "{}" && def != "[]") {
      params[name] = std::vector<std::string>{def};
    }
  }
  return params;
}

struct Manifest {
  std::string command;
  json params;
  std::string started_at = utc_now();

  void write(const fs::path& dir, std::uint64_t seed) const {
    json j{{"command", command},
           {"params", params},
           {"seed", seed},
           {"version", ADVWM_VERSION},
           {"started_at", started_at},
           {"finished_at", utc_now()}};
    write_text(dir / "manifest.json", j.dump(2) + "\n");
  }
};

// ---- shared option groups -------------------------------------------------

struct OracleOpts {
  std::string oracle = "builtin";
  int classes = 4;
  double temperature = 8.0;
  bool no_cache = false;

  void add(CLI::App& app) {
    app.add_option("--oracle", oracle, "'builtin' or an http:// endpoint");
    app.add_option("--classes", classes, "builtin oracle: number of classes")->check(CLI::Range(2, 1 << 20));
    app.add_option("--temperature", temperature, "builtin oracle: logit scale")->check(CLI::PositiveNumber);
    app.add_flag("--no-cache", no_cache, "disable prediction caching");
  }

  advwm::OracleConfig config() const {
    advwm::OracleConfig cfg;
    cfg.cache_enabled = !no_cache;
    if (oracle == "builtin") {
      cfg.kind = advwm::OracleConfig::Kind::builtin;
      cfg.num_classes = classes;
      cfg.temperature = temperature;
    } else {
      cfg.kind = advwm::OracleConfig::Kind::http;
      cfg.endpoint = oracle;
      try {
        advwm::split_endpoint(oracle);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
    }
    return cfg;
  }
};

struct OptimizerOpts {
  int population = 10;
  int generations = 20;
  int bh_iters = 3;
  double cr = 0.9;
  double step = 0.5;
  double epsilon = 0.05;
  std::uint64_t seed = 0;
  std::uint64_t budget = 10'000;
  int local_budget = 60;
  bool bh_only = false;
  int bh_only_iters = 450;

  void add(CLI::App& app) {
    app.add_option("--population", population, "population size M")->check(CLI::PositiveNumber);
    app.add_option("--generations", generations, "generation cap N")->check(CLI::PositiveNumber);
    app.add_option("--bh-iters", bh_iters, "basin-hopping iterations I")->check(CLI::PositiveNumber);
    app.add_option("--cr", cr, "crossover probability")->check(CLI::Range(0.0, 1.0));
    app.add_option("--step", step, "neighbourhood step r (fraction of gene range)")->check(CLI::PositiveNumber);
    app.add_option("--epsilon", epsilon, "stop once the objective drops below this");
    app.add_option("--seed", seed, "RNG seed");
    app.add_option("--budget", budget, "objective evaluation (query) budget");
    app.add_option("--local-budget", local_budget, "evaluations per local search")->check(CLI::PositiveNumber);
    app.add_flag("--bh-only", bh_only, "single basin-hopping chain instead of BHE");
    app.add_option("--bh-only-iters", bh_only_iters, "iterations of the single BH chain")->check(CLI::PositiveNumber);
  }

  advwm::bhe::BheConfig config(std::uint64_t seed_offset = 0) const {
    advwm::bhe::BheConfig c;
    c.population = population;
    c.generations = generations;
    c.bh_iterations = bh_iters;
    c.crossover_prob = cr;
    c.step_size = step;
    c.success_threshold = epsilon;
    c.seed = seed + seed_offset;
    c.query_budget = budget;
    c.local_search_budget = local_budget;
    c.bh_only = bh_only;
    c.bh_only_iterations = bh_only_iters;
    return c;
  }
};

struct AttackOpts {
  std::string host;
  std::string watermark;
  std::string scale = "1/4";
  int alpha_min = 100;
  int alpha_max = 200;
  std::vector<std::string> regions;
  std::optional<int> true_class;
  bool pin_initial = false;

  void add(CLI::App& app) {
    app.add_option("--host", host, "host image or directory of images")->required();
    app.add_option("--watermark", watermark, "watermark image (RGBA or RGB)")->required();
    app.add_option("--scale", scale, "watermark scale factor, e.g. 1/4 or 0.25");
    app.add_option("--alpha-min", alpha_min, "lower transparency bound")->check(CLI::Range(0, 255));
    app.add_option("--alpha-max", alpha_max, "upper transparency bound")->check(CLI::Range(0, 255));
    app.add_option("--region", regions, "allowed rectangle x0,y0,x1,y1 (repeatable)");
    app.add_option("--true-class", true_class, "true class (default: clean argmax)");
    app.add_flag("--pin-initial", pin_initial, "start one individual at (0, 0, alpha-min)");
  }

  advwm::AttackSpec spec(const advwm::RasterImage& host_img, const advwm::WatermarkAsset& wm,
                         const advwm::bhe::BheConfig& cfg) const {
    advwm::AttackSpec s;
    s.host = host_img;
    s.watermark = wm;
    s.scale = parse_scale(scale);
    s.true_class = true_class;
    s.optimizer = cfg;
    s.alpha_min = alpha_min;
    s.alpha_max = alpha_max;
    s.pin_initial = pin_initial;
    if (!regions.empty()) {
      advwm::RegionConstraint rc;
      for (const auto& r : regions) rc.allowed.push_back(parse_region(r));
      s.region = rc;
    }
    return s;
  }
};

// Runs fn(i) for i in [0, n) on up to `jobs` threads; rethrows the first error.
template <class Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  const int threads = std::max(1, std::min<int>(jobs, static_cast<int>(n)));
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

// ---- attack ----------------------------------------------------------------

struct AttackCommand {
  OracleOpts oracle;
  OptimizerOpts opt;
  AttackOpts attack;
  std::string out = "advwm_out";
  int jobs = 1;
  bool save_images = false;
  CLI::App* app = nullptr;

  void add(CLI::App& root) {
    app = root.add_subcommand("attack", "search watermark position/transparency that flips the classifier");
    attack.add(*app);
    oracle.add(*app);
    opt.add(*app);
    app->add_option("--out", out, "output directory");
    app->add_option("--jobs", jobs, "images attacked in parallel")->check(CLI::PositiveNumber);
    app->add_flag("--save-images", save_images, "write adversarial images");
  }

  int run() {
    Manifest manifest{"attack", resolved_params(*app)};
    const auto hosts = list_images(attack.host);
    const auto wm = advwm::load_watermark(attack.watermark);
    const auto oracle_cfg = oracle.config();
    const double scale = parse_scale(attack.scale);
    for (const auto& r : attack.regions) parse_region(r);
    fs::create_directories(fs::path(out) / "traces");
    if (save_images) fs::create_directories(fs::path(out) / "images");

    std::vector<json> records(hosts.size());
    parallel_for(hosts.size(), jobs, [&](std::size_t i) {
      const auto host = advwm::load_image(hosts[i]);
      const auto cfg = opt.config(i);
      auto o = advwm::make_oracle(oracle_cfg);
      const auto outcome = advwm::run_attack(attack.spec(host, wm, cfg), *o);
      records[i] = advwm::to_record(outcome, {hosts[i].string(), attack.watermark, cfg.seed}, scale);
      const auto stem = hosts[i].stem().string() + "_" + std::to_string(i);
      std::ofstream trace(fs::path(out) / "traces" / (stem + ".jsonl"));
      advwm::bhe::write_trace_jsonl(outcome.trace, trace);
      if (save_images) advwm::save_image(outcome.adversarial, fs::path(out) / "images" / (stem + ".png"));
    });

    std::ostringstream lines;
    std::size_t successes = 0;
    for (const auto& r : records) {
      lines << r.dump() << '\n';
      successes += r["success"].get<bool>() ? 1 : 0;
    }
    write_text(fs::path(out) / "results.jsonl", lines.str());
    const double rate = static_cast<double>(successes) / static_cast<double>(records.size());
    const json summary{{"success_rate", rate}, {"images", records.size()}, {"successes", successes}};
    write_text(fs::path(out) / "summary.json", summary.dump(2) + "\n");
    manifest.write(out, opt.seed);
    std::cout << "attacked " << records.size() << " image(s), success_rate " << rate << "\n";
    if (records.size() == 1) std::cout << records.front().dump() << "\n";
    return kExitOk;
  }
};

// ---- bench -----------------------------------------------------------------

struct BenchCommand {
  OptimizerOpts opt;
  std::string function = "sphere";
  int dim = 3;
  int seeds = 10;
  bool list = false;
  std::string out = "advwm_bench";
  CLI::App* app = nullptr;

  void add(CLI::App& root) {
    app = root.add_subcommand("bench", "compare BHE and single-chain BH on standard test functions");
    opt.add(*app);
    opt.epsilon = 0.0;
    opt.budget = 5000;
    app->add_option("--function", function, "test function name");
    app->add_option("--dim", dim, "dimension")->check(CLI::PositiveNumber);
    app->add_option("--seeds", seeds, "number of seeds (seed, seed+1, ...)")->check(CLI::PositiveNumber);
    app->add_flag("--list", list, "list available functions");
    app->add_option("--out", out, "output directory");
  }

  static double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  }

  int run() {
    if (list) {
      for (const auto& f : advwm::benchmarks::kFunctions) {
        std::cout << f.name << "  [" << f.lo << ", " << f.hi << "]^d\n";
      }
      return kExitOk;
    }
    const auto fn = advwm::benchmarks::find_function(function);
    if (!fn) throw UsageError("unknown function '" + function + "' (see --list)");
    Manifest manifest{"bench", resolved_params(*app)};
    fs::create_directories(fs::path(out) / "traces");
    const auto space = advwm::bhe::SearchSpace::uniform(static_cast<std::size_t>(dim), fn->lo, fn->hi);

    json summary = json::object();
    std::cout << std::left << std::setw(8) << "mode" << std::setw(16) << "median_best" << std::setw(16) << "min_best"
              << std::setw(16) << "max_best" << "mean_evals\n";
    for (bool bh_only : {false, true}) {
      const std::string mode = bh_only ? "bh" : "bhe";
      std::vector<double> bests;
      double evals = 0.0;
      json per_seed = json::array();
      for (int s = 0; s < seeds; ++s) {
        auto cfg = opt.config(static_cast<std::uint64_t>(s));
        cfg.bh_only = bh_only;
        const auto res = advwm::bhe::optimize(fn->fn, space, cfg);
        const double best = res.best ? *res.best->fitness : std::numeric_limits<double>::infinity();
        bests.push_back(best);
        evals += static_cast<double>(res.trace.evaluations);
        per_seed.push_back({{"seed", cfg.seed}, {"best", best}, {"evals", res.trace.evaluations}});
        std::ofstream trace(fs::path(out) / "traces" / (function + "_" + mode + "_seed" + std::to_string(cfg.seed) + ".jsonl"));
        advwm::bhe::write_trace_jsonl(res.trace, trace);
      }
      const double med = median(bests);
      summary[mode] = {{"median_best", med},
                       {"min_best", *std::min_element(bests.begin(), bests.end())},
                       {"max_best", *std::max_element(bests.begin(), bests.end())},
                       {"mean_evals", evals / seeds},
                       {"runs", per_seed}};
      std::cout << std::setw(8) << mode << std::setw(16) << med << std::setw(16)
                << *std::min_element(bests.begin(), bests.end()) << std::setw(16)
                << *std::max_element(bests.begin(), bests.end()) << evals / seeds << "\n";
    }
    summary["function"] = function;
    summary["dim"] = dim;
    write_text(fs::path(out) / "summary.json", summary.dump(2) + "\n");
    manifest.write(out, opt.seed);
    return kExitOk;
  }
};

// ---- composite -------------------------------------------------------------

struct CompositeCommand {
  std::string host;
  std::string watermark;
  std::string scale = "1/4";
  int p = 0;
  int q = 0;
  int alpha = 150;
  std::string out;
  CLI::App* app = nullptr;

  void add(CLI::App& root) {
    app = root.add_subcommand("composite", "blend a watermark at an explicit placement");
    app->add_option("--host", host, "host image")->required();
    app->add_option("--watermark", watermark, "watermark image")->required();
    app->add_option("--scale", scale, "watermark scale factor");
    app->add_option("--p", p, "horizontal offset")->required();
    app->add_option("--q", q, "vertical offset")->required();
    app->add_option("--alpha", alpha, "transparency 0..255")->required();
    app->add_option("--out", out, "output image (.png or .ppm)")->required();
  }

  int run() {
    const auto host_img = advwm::load_image(host);
    const auto wm = advwm::load_watermark(watermark);
    const auto scaled = advwm::scale_watermark(wm, host_img.width(), host_img.height(), parse_scale(scale));
    std::cout << scaled.width() << "x" << scaled.height() << "\n";
    advwm::save_image(advwm::composite(host_img, scaled, {p, q, alpha}), out);
    return kExitOk;
  }
};

// ---- analyze ---------------------------------------------------------------

struct AnalyzeCommand {
  OracleOpts oracle;
  OptimizerOpts opt;
  AttackOpts attack;
  std::string clean;
  std::string watermarked;
  std::string out = "advwm_analysis";
  CLI::App* app = nullptr;

  void add(CLI::App& root) {
    app = root.add_subcommand("analyze", "layer-wise perturbation profiles (adversarial vs random placement)");
    oracle.add(*app);
    opt.add(*app);
    app->add_option("--host", attack.host, "host image or directory");
    app->add_option("--watermark", attack.watermark, "watermark image");
    app->add_option("--scale", attack.scale, "watermark scale factor");
    app->add_option("--alpha-min", attack.alpha_min, "lower transparency bound")->check(CLI::Range(0, 255));
    app->add_option("--alpha-max", attack.alpha_max, "upper transparency bound")->check(CLI::Range(0, 255));
    app->add_option("--clean", clean, "single pair mode: clean image");
    app->add_option("--watermarked", watermarked, "single pair mode: watermarked image");
    app->add_option("--out", out, "output directory");
  }

  static void write_profile(const fs::path& stem, const advwm::PerturbationProfile& p) {
    std::ostringstream csv;
    advwm::write_profile_csv(p, csv);
    write_text(stem.string() + ".csv", csv.str());
    write_text(stem.string() + ".json", advwm::profile_to_json(p).dump(2) + "\n");
  }

  int run() {
    Manifest manifest{"analyze", resolved_params(*app)};
    const bool pair_mode = !clean.empty() || !watermarked.empty();
    if (pair_mode && (clean.empty() || watermarked.empty())) {
      throw UsageError("--clean and --watermarked must be given together");
    }
    if (!pair_mode && (attack.host.empty() || attack.watermark.empty())) {
      throw UsageError("give either --clean/--watermarked or --host/--watermark");
    }
    auto o = advwm::make_oracle(oracle.config());
    if (!o->has_activations()) throw advwm::UnsupportedCapability("oracle does not expose activations");
    fs::create_directories(out);

    if (pair_mode) {
      const auto prof = advwm::profile(advwm::load_image(clean), advwm::load_image(watermarked), *o);
      write_profile(fs::path(out) / "profile", prof);
      manifest.write(out, opt.seed);
      advwm::write_profile_csv(prof, std::cout);
      return kExitOk;
    }

    const auto hosts = list_images(attack.host);
    const auto wm = advwm::load_watermark(attack.watermark);
    std::vector<advwm::PerturbationProfile> adv_profiles, rnd_profiles;
    std::ostringstream per_image;
    per_image << "image,kind,layer,E_l\n" << std::setprecision(17);
    for (std::size_t i = 0; i < hosts.size(); ++i) {
      const auto host = advwm::load_image(hosts[i]);
      const auto cfg = opt.config(i);
      const auto spec = attack.spec(host, wm, cfg);
      auto attack_oracle = advwm::make_oracle(oracle.config());
      const auto outcome = advwm::run_attack(spec, *attack_oracle);
      if (!outcome.best) continue;

      // same transparency, uniformly random position
      auto problem = advwm::build_objective(spec, *attack_oracle, outcome.true_class);
      std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
      std::uniform_int_distribution<int> pd(0, static_cast<int>(problem.space.gene(0).hi));
      std::uniform_int_distribution<int> qd(0, static_cast<int>(problem.space.gene(1).hi));
      const advwm::Placement random_at{pd(rng), qd(rng), outcome.best->alpha};
      const auto random_img = advwm::composite(host, problem.objective.watermark(), random_at);

      const auto adv = advwm::profile(host, outcome.adversarial, *o);
      const auto rnd = advwm::profile(host, random_img, *o);
      for (const auto& [kind, prof] : {std::pair{"adversarial", &adv}, std::pair{"random", &rnd}}) {
        for (const auto& l : *prof) per_image << hosts[i].filename().string() << ',' << kind << ',' << l.layer << ',' << l.level << '\n';
      }
      adv_profiles.push_back(adv);
      rnd_profiles.push_back(rnd);
    }
    write_text(fs::path(out) / "per_image.csv", per_image.str());
    write_profile(fs::path(out) / "adversarial_mean", advwm::mean_profile(adv_profiles));
    write_profile(fs::path(out) / "random_mean", advwm::mean_profile(rnd_profiles));
    manifest.write(out, opt.seed);
    std::cout << "profiled " << adv_profiles.size() << " image(s)\n";
    return kExitOk;
  }
};

// ---- synth -----------------------------------------------------------------

struct SynthCommand {
  std::string out = "advwm_synth";
  int count = 20;
  int size = 32;
  int wm_size = 8;
  int noise = 10;
  std::uint64_t seed = 0;
  CLI::App* app = nullptr;

  void add(CLI::App& root) {
    app = root.add_subcommand("synth", "write mid-gray-plus-noise hosts and a black watermark");
    app->add_option("--out", out, "output directory");
    app->add_option("--count", count, "number of hosts")->check(CLI::PositiveNumber);
    app->add_option("--size", size, "host width and height")->check(CLI::PositiveNumber);
    app->add_option("--wm-size", wm_size, "watermark width and height")->check(CLI::PositiveNumber);
    app->add_option("--noise", noise, "uniform noise half-width around 128")->check(CLI::Range(0, 127));
    app->add_option("--seed", seed, "RNG seed");
  }

  int run() {
    fs::create_directories(fs::path(out) / "hosts");
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<int> d(128 - noise, 128 + noise);
    for (int i = 0; i < count; ++i) {
      advwm::RasterImage img(size, size, 3);
      for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
          const auto v = static_cast<std::uint8_t>(d(rng));
          for (int c = 0; c < 3; ++c) img.at(x, y, c) = v;
        }
      std::ostringstream name;
      name << "host_" << std::setw(3) << std::setfill('0') << i << ".png";
      advwm::save_image(img, fs::path(out) / "hosts" / name.str());
    }
    advwm::RasterImage wm(wm_size, wm_size, 4, 0);
    for (int y = 0; y < wm_size; ++y)
      for (int x = 0; x < wm_size; ++x) wm.at(x, y, 3) = 255;
    advwm::save_image(wm, fs::path(out) / "watermark.png");
    std::cout << "wrote " << count << " hosts to " << (fs::path(out) / "hosts").string() << "\n";
    return kExitOk;
  }
};

int run_cli(std::vector<std::string> args);

int replay(const std::string& manifest_path, const std::string& out) {
  std::ifstream in(manifest_path);
  if (!in) throw UsageError(manifest_path + ": cannot open manifest");
  json m;
  try {
    m = json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError(manifest_path + ": " + e.what());
  }
  std::vector<std::string> args{m.at("command").get<std::string>()};
  for (const auto& [name, value] : m.at("params").items()) {
    if (value.is_boolean()) {
      if (value.get<bool>()) args.push_back("--" + name);
      continue;
    }
    for (const auto& v : value) {
      args.push_back("--" + name);
      args.push_back(v.get<std::string>());
    }
  }
  args.push_back("--out");
  args.push_back(out);
  return run_cli(std::move(args));
}

int run_cli(std::vector<std::string> args) {
  CLI::App app{"advwm: adversarial visible-watermark toolkit"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.set_version_flag("--version", ADVWM_VERSION);

  AttackCommand attack;
  BenchCommand bench;
  CompositeCommand comp;
  AnalyzeCommand analyze;
  SynthCommand synth;
  attack.add(app);
  bench.add(app);
  comp.add(app);
  analyze.add(app);
  synth.add(app);
  std::string manifest_path, replay_out = "advwm_replay";
  auto* replay_cmd = app.add_subcommand("replay", "re-run a command from its manifest.json");
  replay_cmd->add_option("manifest", manifest_path, "manifest.json of an earlier run")->required();
  replay_cmd->add_option("--out", replay_out, "output directory");

  try {
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    try {
      if (*attack.app) return attack.run();
      if (*bench.app) return bench.run();
      if (*comp.app) return comp.run();
      if (*analyze.app) return analyze.run();
      if (*synth.app) return synth.run();
      if (*replay_cmd) return replay(manifest_path, replay_out);
    } catch (const advwm::bhe::ObjectiveError& e) {
      e.rethrow_cause();
    }
  } catch (const advwm::OracleUnavailable& e) {
    std::cerr << "oracle unavailable: " << e.what() << "\n";
    return kExitOracle;
  } catch (const advwm::ProtocolError& e) {
    std::cerr << "oracle protocol error: " << e.what() << "\n";
    return kExitOracle;
  } catch (const advwm::UnsupportedCapability& e) {
    std::cerr << "oracle capability: " << e.what() << "\n";
    return kExitOracle;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run_cli(std::move(args));
}
