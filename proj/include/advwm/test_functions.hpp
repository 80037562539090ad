#pragma once

// Standard continuous benchmark objectives for exercising the optimizer.

#include <cmath>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace advwm::benchmarks {

inline double sphere(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

inline double rastrigin(std::span<const double> x) {
  double s = 10.0 * static_cast<double>(x.size());
  for (double v : x) s += v * v - 10.0 * std::cos(2.0 * std::numbers::pi * v);
  return s;
}

inline double ackley(std::span<const double> x) {
  const double n = static_cast<double>(x.size());
  double sq = 0.0;
  double cs = 0.0;
  for (double v : x) {
    sq += v * v;
    cs += std::cos(2.0 * std::numbers::pi * v);
  }
  return -20.0 * std::exp(-0.2 * std::sqrt(sq / n)) - std::exp(cs / n) + 20.0 + std::numbers::e;
}

struct TestFunction {
  std::string_view name;
  double lo;
  double hi;
  double (*fn)(std::span<const double>);
};

inline constexpr TestFunction kFunctions[] = {
    {"sphere", -5.0, 5.0, &sphere},
    {"rastrigin", -5.12, 5.12, &rastrigin},
    {"ackley", -32.768, 32.768, &ackley},
};

inline std::optional<TestFunction> find_function(std::string_view name) {
  for (const auto& f : kFunctions) {
    if (f.name == name) return f;
  }
  return std::nullopt;
}

}  // namespace advwm::benchmarks
