#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lsa/training/trainer.hpp"

namespace lsa::training {

// "start:stop:step", inclusive of stop (within rounding). UsageError on a
// malformed or empty grid.
std::vector<double> parse_grid(const std::string& text);

struct EtaSweepRow {
  double eta_l = 0.0;
  double eta_r = 0.0;  // always 1 - eta_l
  Metrics metrics;
};

// One run per grid point with DWA disabled and η fixed at (η_l, 1 - η_l).
// Scored on the test split of the best checkpoint (validation split if no test).
std::vector<EtaSweepRow> static_eta_sweep(const TrainConfig& config, const TrainData& data,
                                          const std::vector<double>& grid);
std::string eta_sweep_csv(const std::vector<EtaSweepRow>& rows);

struct SeedRun {
  std::uint64_t seed = 0;
  Metrics metrics;
  TrainResult result;
};

struct SeedSummary {
  std::vector<SeedRun> runs;
  double accuracy_median = 0.0, accuracy_iqr = 0.0;
  double macro_f1_median = 0.0, macro_f1_iqr = 0.0;
};

// Needs at least two seeds (UsageError).
SeedSummary seed_sweep(const TrainConfig& config, const TrainData& data,
                       const std::vector<std::uint64_t>& seeds, const Slice& slice = {});
std::string seed_sweep_csv(const SeedSummary& summary);

// Metrics of a finished run's best checkpoint on the test split, or the
// validation split when there is no test data.
Metrics score_run(const TrainResult& result, const TrainData& data, const Slice& slice = {});

}  // namespace lsa::training
