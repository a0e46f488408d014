#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "lsa/util/keyvalue.hpp"
#include "lsa/window/model.hpp"

namespace lsa::training {

// One training run. Serialized as flat key = value text; the keys are the
// field names below and the CLI flags use the same names.
struct TrainConfig {
  window::Variant variant = window::Variant::kToken;
  std::size_t k = 1;
  double alpha = window::kDefaultAlpha;
  std::size_t max_len = 80;
  std::size_t batch = 16;
  double lr = 1e-3;  // encoder and head parameters
  double eta_lr = 0.01;
  double lambda = 1e-5;
  double lambda_star = 1e-5;
  std::size_t epochs = 20;
  std::uint64_t seed = 1;

  bool no_dwa = false;
  bool la_only = false;
  bool ra_only = false;
  bool backbone_only = false;
  double static_eta_l = 1.0;  // used when no_dwa
  double static_eta_r = 1.0;
  bool freeze_encoder = false;  // only η is optimized

  std::size_t d_model = 64;
  std::size_t layers = 2;
  std::size_t heads = 4;
  std::size_t ff_dim = 0;

  std::string train;  // dataset paths
  std::string val;
  std::string test;
  std::string parses;
  double val_fraction = 0.1;  // holdout share of train when no val path

  // UsageError on non-positive sizes, negative rates, la_only together with
  // ra_only, or an architecture that cannot be built.
  void validate() const;

  KeyValues to_key_values() const;
  // Starts from `base` and overrides every key present; unknown keys are a
  // SchemaError.
  static TrainConfig from_key_values(const KeyValues& kv, TrainConfig base);
  static TrainConfig from_key_values(const KeyValues& kv);
  // Canonical text: sorted keys, shortest round-trip numbers.
  std::string to_text() const;
  std::string hash() const;

  window::ModelConfig model_config(std::size_t vocab_size) const;
};

}  // namespace lsa::training
