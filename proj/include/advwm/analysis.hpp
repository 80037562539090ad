#pragma once

// Layer-wise perturbation level: E_l = ||f_l(x_w) - f_l(x)|| / ||f_l(x)||.

#include <cmath>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "advwm/error.hpp"
#include "advwm/oracle.hpp"

namespace advwm {

struct LayerPerturbation {
  std::string layer;
  double level = 0.0;
};

using PerturbationProfile = std::vector<LayerPerturbation>;

/// Relative L2 change of `perturbed` against `reference`.
inline double perturbation_level(const ActivationVector& perturbed, const ActivationVector& reference) {
  if (perturbed.values.size() != reference.values.size()) {
    throw std::invalid_argument("perturbation_level: layer '" + reference.name + "' length " +
                                std::to_string(reference.values.size()) + " vs " +
                                std::to_string(perturbed.values.size()));
  }
  double diff = 0.0;
  double ref = 0.0;
  for (std::size_t i = 0; i < reference.values.size(); ++i) {
    const double a = reference.values[i];
    const double b = perturbed.values[i];
    if (!std::isfinite(a) || !std::isfinite(b)) {
      throw std::invalid_argument("perturbation_level: non-finite activation in '" + reference.name + "'");
    }
    diff += (b - a) * (b - a);
    ref += a * a;
  }
  if (ref == 0.0) throw DegenerateReference("perturbation_level: reference '" + reference.name + "' has zero norm");
  return std::sqrt(diff) / std::sqrt(ref);
}

/// One E_l per layer the oracle exposes, shallow to deep.
inline PerturbationProfile profile(const RasterImage& clean, const RasterImage& watermarked, const Oracle& oracle) {
  if (!oracle.has_activations()) {
    throw UnsupportedCapability(oracle.model().describe() + " does not expose activations");
  }
  const auto ref = oracle.activations(clean);
  const auto cur = oracle.activations(watermarked);
  if (ref.size() != cur.size()) throw ProtocolError("activation layer count changed between queries");
  PerturbationProfile out;
  out.reserve(ref.size());
  for (std::size_t l = 0; l < ref.size(); ++l) {
    if (ref[l].name != cur[l].name) throw ProtocolError("activation layer order changed between queries");
    out.push_back({ref[l].name, perturbation_level(cur[l], ref[l])});
  }
  return out;
}

/// Layer-wise arithmetic mean. All profiles must list the same layers.
inline PerturbationProfile mean_profile(const std::vector<PerturbationProfile>& profiles) {
  if (profiles.empty()) return {};
  PerturbationProfile out = profiles.front();
  for (auto& l : out) l.level = 0.0;
  for (const auto& p : profiles) {
    if (p.size() != out.size()) throw std::invalid_argument("mean_profile: layer count mismatch");
    for (std::size_t l = 0; l < p.size(); ++l) {
      if (p[l].layer != out[l].layer) throw std::invalid_argument("mean_profile: layer name mismatch");
      out[l].level += p[l].level;
    }
  }
  for (auto& l : out) l.level /= static_cast<double>(profiles.size());
  return out;
}

inline void write_profile_csv(const PerturbationProfile& p, std::ostream& os) {
  os << "layer,E_l\n";
  const auto old = os.precision(17);
  for (const auto& l : p) os << l.layer << ',' << l.level << '\n';
  os.precision(old);
}

inline nlohmann::json profile_to_json(const PerturbationProfile& p) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& l : p) arr.push_back({{"layer", l.layer}, {"E_l", l.level}});
  return arr;
}

}  // namespace advwm
