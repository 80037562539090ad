#pragma once

#include <memory>
#include <stdexcept>
#include <string>

#include "advwm/http_model.hpp"
#include "advwm/oracle.hpp"

namespace advwm {

struct OracleConfig {
  enum class Kind { builtin, http };

  Kind kind = Kind::builtin;
  std::string endpoint;      // http only
  int num_classes = 4;       // builtin only
  double temperature = 8.0;  // builtin only
  bool cache_enabled = true;
  HttpOptions http;
};

inline std::shared_ptr<const Model> make_model(const OracleConfig& cfg) {
  switch (cfg.kind) {
    case OracleConfig::Kind::builtin:
      return std::make_shared<FragileClassifier>(cfg.num_classes, cfg.temperature);
    case OracleConfig::Kind::http:
      return std::make_shared<HttpModel>(cfg.endpoint, cfg.http);
  }
  throw std::invalid_argument("unknown oracle kind");
}

inline std::unique_ptr<Oracle> make_oracle(const OracleConfig& cfg) {
  return std::make_unique<Oracle>(make_model(cfg), cfg.cache_enabled);
}

}  // namespace advwm
