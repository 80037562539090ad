#pragma once

// Client for a remote classifier speaking the JSON prediction protocol:
//   GET  {endpoint}/info         -> {"num_classes": int, "input_size": [w,h]?}
//   POST {endpoint}/predict      {"image_png_b64": ...} -> {"probs": [...], "labels": [...]?}
//   POST {endpoint}/activations  {"image_png_b64": ...} -> {"layers": [{"name", "values"}...]}
// Non-200 replies carry {"error": string}.

#include <httplib.h>
#include <json.hpp>

#include <chrono>
#include <optional>
#include <regex>
#include <semaphore>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "advwm/codec.hpp"
#include "advwm/error.hpp"
#include "advwm/image_io.hpp"
#include "advwm/oracle.hpp"

namespace advwm {

struct HttpOptions {
  std::chrono::milliseconds timeout{30'000};
  int retries = 2;
  std::chrono::milliseconds backoff{250};  // doubled after each failed attempt
  int max_in_flight = 4;
};

struct ServerInfo {
  int num_classes = 0;
  std::optional<std::pair<int, int>> input_size;
};

/// Splits "http://host[:port][/prefix]" into origin and path prefix.
/// Throws std::invalid_argument for anything else.
inline std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
  static const std::regex re(R"(^(http://[A-Za-z0-9.\-]+|http://\[[0-9A-Fa-f:.]+\])(:[0-9]{1,5})?(/[^\s]*)?$)");
  std::smatch m;
  if (!std::regex_match(endpoint, m, re)) {
    throw std::invalid_argument("invalid oracle endpoint '" + endpoint + "' (expected http://host[:port][/path])");
  }
  std::string prefix = m[3].str();
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {m[1].str() + m[2].str(), prefix};
}

class HttpModel final : public Model {
 public:
  explicit HttpModel(std::string endpoint, HttpOptions options = {})
      : endpoint_(std::move(endpoint)),
        options_(options),
        slots_(std::max(1, options.max_in_flight)) {
    std::tie(origin_, prefix_) = split_endpoint(endpoint_);
  }

  ServerInfo info() const {
    const auto body = request("GET", "/info", "");
    ServerInfo out;
    try {
      out.num_classes = body.at("num_classes").get<int>();
      if (body.contains("input_size") && !body["input_size"].is_null()) {
        const auto& sz = body["input_size"];
        out.input_size = std::pair{sz.at(0).get<int>(), sz.at(1).get<int>()};
      }
    } catch (const nlohmann::json::exception& e) {
      throw ProtocolError(endpoint_ + "/info: " + e.what());
    }
    return out;
  }

  Prediction evaluate(const RasterImage& image) const override {
    const auto body = request("POST", "/predict", image_payload(image));
    Prediction out;
    try {
      out.probs = body.at("probs").get<std::vector<double>>();
      if (body.contains("labels") && !body["labels"].is_null()) {
        out.labels = body["labels"].get<std::vector<std::string>>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw ProtocolError(endpoint_ + "/predict: " + e.what());
    }
    out.validate();
    return out;
  }

  bool has_activations() const override { return true; }

  std::vector<ActivationVector> activations(const RasterImage& image) const override {
    const auto body = request("POST", "/activations", image_payload(image));
    std::vector<ActivationVector> layers;
    try {
      for (const auto& layer : body.at("layers")) {
        layers.push_back({layer.at("name").get<std::string>(),
                          layer.at("values").get<std::vector<double>>()});
      }
    } catch (const nlohmann::json::exception& e) {
      throw ProtocolError(endpoint_ + "/activations: " + e.what());
    }
    return layers;
  }

  std::string describe() const override { return endpoint_; }

  static std::string image_payload(const RasterImage& image) {
    return nlohmann::json{{"image_png_b64", codec::base64_encode(encode_png(image))}}.dump();
  }

 private:
  nlohmann::json request(const std::string& method, const std::string& path,
                         const std::string& payload) const {
    struct Slot {
      std::counting_semaphore<>& s;
      explicit Slot(std::counting_semaphore<>& sem) : s(sem) { s.acquire(); }
      ~Slot() { s.release(); }
    } slot(slots_);

    const std::string url = prefix_ + path;
    auto delay = options_.backoff;
    std::string last_error;
    for (int attempt = 0; attempt <= options_.retries; ++attempt) {
      if (attempt > 0) {
        std::this_thread::sleep_for(delay);
        delay *= 2;
      }
      httplib::Client cli(origin_);
      const auto secs = std::chrono::duration_cast<std::chrono::seconds>(options_.timeout);
      const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(options_.timeout - secs);
      cli.set_connection_timeout(secs.count(), usecs.count());
      cli.set_read_timeout(secs.count(), usecs.count());
      cli.set_write_timeout(secs.count(), usecs.count());

      auto res = method == "GET" ? cli.Get(url) : cli.Post(url, payload, "application/json");
      if (!res) {
        last_error = httplib::to_string(res.error());
        continue;
      }
      if (res->status == 404 && path == "/activations") {
        throw UnsupportedCapability(endpoint_ + " does not expose activations");
      }
      if (res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status) + " " + error_text(res->body);
        continue;
      }
      if (res->status != 200) {
        throw ProtocolError(endpoint_ + path + ": HTTP " + std::to_string(res->status) + " " +
                            error_text(res->body));
      }
      try {
        return nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::exception& e) {
        throw ProtocolError(endpoint_ + path + ": malformed JSON: " + e.what());
      }
    }
    throw OracleUnavailable(endpoint_ + path + ": " + last_error);
  }

  static std::string error_text(const std::string& body) {
    auto j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_object() && j.contains("error") && j["error"].is_string()) return j["error"].get<std::string>();
    return body.substr(0, 200);
  }

  std::string endpoint_;
  std::string origin_;
  std::string prefix_;
  HttpOptions options_;
  mutable std::counting_semaphore<> slots_;
};

}  // namespace advwm
