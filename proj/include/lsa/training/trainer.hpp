#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lsa/autodiff/checkpoint.hpp"
#include "lsa/autodiff/parameters.hpp"
#include "lsa/corpus/types.hpp"
#include "lsa/distance/distance.hpp"
#include "lsa/encoder/vocabulary.hpp"
#include "lsa/training/config.hpp"
#include "lsa/training/metrics.hpp"
#include "lsa/window/model.hpp"

namespace lsa::training {

// Cross-entropy summed over the pairs, plus lambda·‖Θ‖² over every parameter
// except η and lambda_star·(η_l² + η_r²).
double total_loss(std::span<const ad::Tensor> probs, std::span<const std::size_t> gold,
                  const ad::ParameterSet& params, double lambda, double lambda_star);
double regularization(const ad::ParameterSet& params, double lambda, double lambda_star);

struct EtaRecord {
  std::uint64_t step = 0;
  double eta_l = 1.0;
  double eta_r = 1.0;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  std::string split;  // "val" | "test"
  Metrics metrics;
};

struct TrainData {
  corpus::Dataset train;
  std::optional<corpus::Dataset> val;
  std::optional<corpus::Dataset> test;
  std::optional<distance::ParseMap> parses;
  std::string train_hash, val_hash, test_hash, parses_hash;  // content hashes, when loaded from files
};

// Loads the files named by the config. Errors carry the file name.
TrainData load_train_data(const TrainConfig& config);

// The validation data train() selects on: the val split, else the seeded holdout.
std::optional<corpus::Dataset> validation_split(const TrainConfig& config, const TrainData& data);

struct TrainResult {
  ad::Checkpoint checkpoint;  // best epoch by validation accuracy
  std::size_t best_epoch = 0;
  std::vector<EtaRecord> trajectory;
  std::vector<EpochMetrics> metrics;
  std::vector<double> epoch_loss;  // mean total loss per step, one per epoch
  std::size_t syntax_fallbacks = 0;
};

// Deterministic in (config, data). Epoch 0 is the initialized model; it is
// evaluated too, so with epochs = 0 the checkpoint is the initialization.
// NumericError on a non-finite loss.
TrainResult train(const TrainConfig& config, const TrainData& data);

// A trained model restored from its checkpoint.
struct LoadedModel {
  TrainConfig config;
  encoder::Vocabulary vocab;
  ad::ParameterSet params;
  window::ModelConfig model_config() const { return config.model_config(vocab.size()); }
};
LoadedModel restore(const ad::Checkpoint& checkpoint);

Metrics evaluate(const window::LsaModel& model, const window::PreparedDataset& data,
                 const Slice& slice = {});
// DataError when the slice selects nothing; UsageError when the checkpoint's
// vocabulary does not fit its parameters.
Metrics evaluate(const ad::Checkpoint& checkpoint, const corpus::Dataset& dataset,
                 const Slice& slice = {}, const distance::ParseMap* parses = nullptr);

// Run directory layout.
inline constexpr const char* kMetricsFile = "metrics.csv";
inline constexpr const char* kTrajectoryFile = "eta_trajectory.csv";
inline constexpr const char* kCheckpointFile = "model.ckpt";
inline constexpr const char* kManifestFile = "manifest.json";

std::string metrics_csv(const std::vector<EpochMetrics>& rows);
std::string trajectory_csv(const std::vector<EtaRecord>& trajectory);
// The full-run η trajectory saved in a checkpoint's metadata.
std::vector<EtaRecord> stored_trajectory(const ad::Checkpoint& checkpoint);
void write_train_outputs(const TrainResult& result, const std::filesystem::path& dir);

}  // namespace lsa::training
