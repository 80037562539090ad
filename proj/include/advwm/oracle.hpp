#pragma once

// Model oracles: the classifier abstraction the attack queries, a synthetic
// band-statistics classifier, and a thread-safe query-counting cache.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <memory>
#include <mutex>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "advwm/codec.hpp"
#include "advwm/error.hpp"
#include "advwm/imaging.hpp"

namespace advwm {

struct Prediction {
  std::vector<double> probs;
  std::vector<std::string> labels;  // empty or one per class

  int num_classes() const noexcept { return static_cast<int>(probs.size()); }

  int argmax() const noexcept {
    return static_cast<int>(std::max_element(probs.begin(), probs.end()) - probs.begin());
  }

  double prob(int cls) const {
    if (cls < 0 || cls >= num_classes()) {
      throw std::out_of_range("class index " + std::to_string(cls) + " outside [0," +
                              std::to_string(num_classes()) + ")");
    }
    return probs[static_cast<std::size_t>(cls)];
  }

  /// Throws ProtocolError unless probs are a distribution (sum within 1e-3).
  void validate() const {
    if (probs.empty()) throw ProtocolError("prediction has no classes");
    double sum = 0.0;
    for (double p : probs) {
      if (!std::isfinite(p) || p < 0.0) throw ProtocolError("prediction has invalid probability");
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-3) {
      throw ProtocolError("probabilities sum to " + std::to_string(sum));
    }
    if (!labels.empty() && labels.size() != probs.size()) {
      throw ProtocolError("label count does not match probability count");
    }
  }

  friend bool operator==(const Prediction&, const Prediction&) = default;
};

/// One named layer of activations, flattened.
struct ActivationVector {
  std::string name;
  std::vector<double> values;
};

struct QueryLedger {
  std::uint64_t total_queries = 0;
  std::uint64_t cache_hits = 0;

  friend bool operator==(const QueryLedger&, const QueryLedger&) = default;
};

/// Something that maps an image to class probabilities. Implementations must
/// tolerate concurrent calls.
class Model {
 public:
  virtual ~Model() = default;

  virtual Prediction evaluate(const RasterImage& image) const = 0;

  virtual bool has_activations() const { return false; }

  /// Layers ordered shallow to deep.
  virtual std::vector<ActivationVector> activations(const RasterImage&) const {
    throw UnsupportedCapability(describe() + " does not expose activations");
  }

  virtual std::string describe() const = 0;
};

/// Deterministic synthetic classifier.
///
/// The image is split into K equal-width vertical bands (band k covers columns
/// [floor(k*W/K), floor((k+1)*W/K))). Each band's mean luma, with
/// luma = round(0.299R + 0.587G + 0.114B), gives logit_k = tau * mean_k / 255,
/// and the probabilities are softmax(logits). The brightest band wins.
class FragileClassifier final : public Model {
 public:
  FragileClassifier(int num_classes, double temperature)
      : num_classes_(num_classes), temperature_(temperature) {
    if (num_classes < 2) throw std::invalid_argument("FragileClassifier: need at least 2 classes");
    if (!(temperature > 0.0)) throw std::invalid_argument("FragileClassifier: temperature must be > 0");
  }

  int num_classes() const noexcept { return num_classes_; }
  double temperature() const noexcept { return temperature_; }

  static int luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept {
    return (299 * r + 587 * g + 114 * b + 500) / 1000;
  }

  /// Band mean luma, normalised to [0,1].
  std::vector<double> band_means(const RasterImage& image) const {
    if (num_classes_ > image.width()) {
      throw std::invalid_argument("FragileClassifier: " + std::to_string(num_classes_) +
                                  " bands exceed image width " + std::to_string(image.width()));
    }
    std::vector<double> means(static_cast<std::size_t>(num_classes_));
    const long w = image.width();
    for (int k = 0; k < num_classes_; ++k) {
      const int x0 = static_cast<int>(k * w / num_classes_);
      const int x1 = static_cast<int>((k + 1) * w / num_classes_);
      std::uint64_t sum = 0;
      for (int y = 0; y < image.height(); ++y) {
        for (int x = x0; x < x1; ++x) {
          sum += static_cast<std::uint64_t>(luma(image.at(x, y, 0), image.at(x, y, 1), image.at(x, y, 2)));
        }
      }
      const double count = static_cast<double>(x1 - x0) * image.height();
      means[static_cast<std::size_t>(k)] = static_cast<double>(sum) / count / 255.0;
    }
    return means;
  }

  Prediction evaluate(const RasterImage& image) const override {
    const auto means = band_means(image);
    Prediction out;
    out.probs.resize(means.size());
    const double top = *std::max_element(means.begin(), means.end()) * temperature_;
    double z = 0.0;
    for (std::size_t k = 0; k < means.size(); ++k) {
      out.probs[k] = std::exp(temperature_ * means[k] - top);
      z += out.probs[k];
    }
    for (double& p : out.probs) p /= z;
    return out;
  }

  bool has_activations() const override { return true; }

  std::vector<ActivationVector> activations(const RasterImage& image) const override {
    return {ActivationVector{"band_means", band_means(image)}};
  }

  std::string describe() const override {
    return "builtin(K=" + std::to_string(num_classes_) + ",tau=" + std::to_string(temperature_) + ")";
  }

 private:
  int num_classes_;
  double temperature_;
};

/// Counts queries against a Model and optionally memoises predictions by image
/// content (SHA-256 of dimensions + pixels). Safe for concurrent use.
class Oracle {
 public:
  explicit Oracle(std::shared_ptr<const Model> model, bool cache_enabled = true)
      : model_(std::move(model)), cache_enabled_(cache_enabled) {
    if (!model_) throw std::invalid_argument("Oracle: null model");
  }

  Oracle(const Oracle&) = delete;
  Oracle& operator=(const Oracle&) = delete;

  Prediction predict(const RasterImage& image) {
    if (!cache_enabled_) return evaluate_counted(image);
    const std::string key = content_key(image);
    {
      std::lock_guard lock(mutex_);
      if (auto it = cache_.find(key); it != cache_.end()) {
        cache_hits_.fetch_add(1, std::memory_order_relaxed);
        return it->second;
      }
    }
    Prediction pred = evaluate_counted(image);
    std::lock_guard lock(mutex_);
    cache_.emplace(key, pred);
    return pred;
  }

  std::vector<ActivationVector> activations(const RasterImage& image) const {
    return model_->activations(image);
  }

  bool has_activations() const { return model_->has_activations(); }

  QueryLedger ledger() const noexcept {
    return {total_queries_.load(std::memory_order_relaxed), cache_hits_.load(std::memory_order_relaxed)};
  }

  /// Zeroes the counters and returns their previous values. Cached entries stay.
  QueryLedger reset_ledger() noexcept {
    return {total_queries_.exchange(0), cache_hits_.exchange(0)};
  }

  bool cache_enabled() const noexcept { return cache_enabled_; }
  const Model& model() const noexcept { return *model_; }

 private:
  static std::string content_key(const RasterImage& image) {
    const std::int32_t dims[3] = {image.width(), image.height(), image.channels()};
    return codec::sha256({std::span(reinterpret_cast<const std::uint8_t*>(dims), sizeof(dims)),
                          image.pixels()});
  }

  Prediction evaluate_counted(const RasterImage& image) {
    total_queries_.fetch_add(1, std::memory_order_relaxed);
    Prediction pred = model_->evaluate(image);
    pred.validate();
    return pred;
  }

  std::shared_ptr<const Model> model_;
  bool cache_enabled_;
  std::atomic<std::uint64_t> total_queries_{0};
  std::atomic<std::uint64_t> cache_hits_{0};
  std::mutex mutex_;
  std::unordered_map<std::string, Prediction> cache_;
};

}  // namespace advwm
