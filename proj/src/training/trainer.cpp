#include "lsa/training/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "lsa/autodiff/optimizer.hpp"
#include "lsa/corpus/analysis.hpp"
#include "lsa/corpus/dataset_io.hpp"
#include "lsa/errors.hpp"
#include "lsa/util/keyvalue.hpp"
#include "lsa/util/rng.hpp"

namespace lsa::training {

using ad::Tensor;
using nlohmann::json;

namespace {

constexpr std::uint64_t kShuffleStream = 0x9e3779b97f4a7c15ULL;
constexpr std::uint64_t kHoldoutStream = 0xc2b2ae3d27d4eb4fULL;

bool is_eta(const std::string& name) { return name == window::kEtaLeft || name == window::kEtaRight; }

std::size_t argmax(std::span<const double> v) {
  return static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
}

bool in_slice(const window::PreparedExample& ex, const window::PreparedAspect& a, const Slice& s) {
  switch (s.kind) {
    case Slice::Kind::kAll: return true;
    case Slice::Kind::kImplicit: return a.implicit;
    case Slice::Kind::kMono: return ex.aspects.size() == 1;
    case Slice::Kind::kCluster:
      return corpus::ClusterHistogram::bucket_for_size(a.cluster_size) + 1 == s.cluster_bucket;
  }
  return false;
}

// Splits `train` into (fit, holdout) with a seeded shuffle; both keep file order.
std::pair<corpus::Dataset, corpus::Dataset> holdout_split(const corpus::Dataset& train, double fraction,
                                                           std::uint64_t seed) {
  const std::size_t n = train.examples.size();
  std::size_t n_val = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  n_val = std::clamp<std::size_t>(n_val, 1, n - 1);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed ^ kHoldoutStream);
  rng.shuffle(order);
  std::vector<bool> held(n, false);
  for (std::size_t i = 0; i < n_val; ++i) held[order[i]] = true;
  corpus::Dataset fit, val;
  for (std::size_t i = 0; i < n; ++i) (held[i] ? val : fit).examples.push_back(train.examples[i]);
  return {std::move(fit), std::move(val)};
}

bool uses_holdout(const TrainConfig& config, const TrainData& data) {
  return !data.val && config.val_fraction > 0 && data.train.examples.size() >= 2;
}

json config_json(const TrainConfig& config) {
  json j = json::object();
  for (const auto& [k, v] : config.to_key_values()) j[k] = v;
  return j;
}

}  // namespace

std::optional<corpus::Dataset> validation_split(const TrainConfig& config, const TrainData& data) {
  if (uses_holdout(config, data)) return holdout_split(data.train, config.val_fraction, config.seed).second;
  return data.val;
}

double regularization(const ad::ParameterSet& params, double lambda, double lambda_star) {
  double theta = 0.0, eta = 0.0;
  for (const auto& [name, t] : params.entries()) {
    double s = 0.0;
    for (double v : t.values()) s += v * v;
    (is_eta(name) ? eta : theta) += s;
  }
  return lambda * theta + lambda_star * eta;
}

double total_loss(std::span<const Tensor> probs, std::span<const std::size_t> gold,
                  const ad::ParameterSet& params, double lambda, double lambda_star) {
  if (probs.size() != gold.size()) throw UsageError("total_loss: probs and gold differ in length");
  double ce = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) ce += ad::cross_entropy(probs[i], gold[i]).item();
  return ce + regularization(params, lambda, lambda_star);
}

TrainData load_train_data(const TrainConfig& config) {
  if (config.train.empty()) throw UsageError("no training dataset given (train)");
  TrainData data;
  data.train = corpus::load_dataset(config.train);
  data.train_hash = fnv1a_hex(read_file(config.train));
  if (!config.val.empty()) {
    data.val = corpus::load_dataset(config.val);
    data.val_hash = fnv1a_hex(read_file(config.val));
  }
  if (!config.test.empty()) {
    data.test = corpus::load_dataset(config.test);
    data.test_hash = fnv1a_hex(read_file(config.test));
  }
  if (!config.parses.empty()) {
    data.parses = distance::load_parses(config.parses);
    data.parses_hash = fnv1a_hex(read_file(config.parses));
  }
  return data;
}

Metrics evaluate(const window::LsaModel& model, const window::PreparedDataset& data, const Slice& slice) {
  std::vector<std::size_t> gold, pred;
  for (const auto& ex : data.examples) {
    if (std::none_of(ex.aspects.begin(), ex.aspects.end(),
                     [&](const auto& a) { return in_slice(ex, a, slice); })) {
      continue;
    }
    const auto out = model.forward(ex);
    for (std::size_t a = 0; a < ex.aspects.size(); ++a) {
      if (!in_slice(ex, ex.aspects[a], slice)) continue;
      gold.push_back(ex.aspects[a].gold);
      pred.push_back(argmax(out[a].values()));
    }
  }
  if (gold.empty()) throw DataError("evaluation slice '" + slice.name() + "' selects no aspects");
  return compute_metrics(gold, pred);
}

LoadedModel restore(const ad::Checkpoint& checkpoint) {
  const auto& meta = checkpoint.metadata;
  if (!meta.contains("config") || !meta.contains("vocabulary")) {
    throw SchemaError("checkpoint metadata lacks config or vocabulary");
  }
  KeyValues kv;
  for (const auto& [k, v] : meta.at("config").items()) kv[k] = v.get<std::string>();
  LoadedModel m;
  m.config = TrainConfig::from_key_values(kv);
  m.vocab = encoder::Vocabulary::from_tokens(meta.at("vocabulary").get<std::vector<std::string>>());
  m.params = checkpoint.parameters.clone();
  const auto& emb = m.params.get("encoder.token_embedding");
  if (emb.rows() != m.vocab.size()) {
    throw UsageError("checkpoint vocabulary has " + std::to_string(m.vocab.size()) +
                     " entries but the embedding has " + std::to_string(emb.rows()) + " rows");
  }
  return m;
}

Metrics evaluate(const ad::Checkpoint& checkpoint, const corpus::Dataset& dataset, const Slice& slice,
                 const distance::ParseMap* parses) {
  const auto loaded = restore(checkpoint);
  const auto config = loaded.model_config();
  const window::LsaModel model(config, loaded.params);
  return evaluate(model, window::prepare_dataset(dataset, loaded.vocab, config, parses), slice);
}

TrainResult train(const TrainConfig& config, const TrainData& data) {
  config.validate();
  corpus::Dataset fit = data.train;
  std::optional<corpus::Dataset> val = data.val;
  if (uses_holdout(config, data)) {
    auto [f, v] = holdout_split(data.train, config.val_fraction, config.seed);
    fit = std::move(f);
    val = std::move(v);
  }

  std::vector<std::vector<std::string>> token_lists;
  for (const auto& ex : fit.examples) token_lists.push_back(ex.tokens);
  const auto vocab = encoder::Vocabulary::build(token_lists);
  const auto model_config = config.model_config(vocab.size());
  const auto* parses = data.parses ? &*data.parses : nullptr;

  TrainResult result;
  const auto train_set = window::prepare_dataset(fit, vocab, model_config, parses);
  result.syntax_fallbacks = train_set.syntax_fallbacks;
  std::optional<window::PreparedDataset> val_set, test_set;
  if (val) val_set = window::prepare_dataset(*val, vocab, model_config, parses);
  if (data.test) test_set = window::prepare_dataset(*data.test, vocab, model_config, parses);

  ad::ParameterSet params = window::LsaModel::initialize(model_config, config.seed);
  const window::LsaModel model(model_config, params);

  std::vector<ad::ParamGroup> groups;
  ad::ParamGroup main{"encoder", {}, config.lr, config.lambda};
  ad::ParamGroup eta{"eta", {}, config.eta_lr, config.lambda_star};
  for (const auto& [name, t] : params.entries()) {
    if (is_eta(name)) {
      if (model_config.dwa) eta.params.push_back(t);
    } else if (!config.freeze_encoder) {
      main.params.push_back(t);
    }
  }
  if (!main.params.empty()) groups.push_back(std::move(main));
  if (!eta.params.empty()) groups.push_back(std::move(eta));
  ad::AdamW optimizer(std::move(groups));

  auto record_eta = [&] {
    result.trajectory.push_back({optimizer.step_count(), model.eta_l().item(), model.eta_r().item()});
  };
  record_eta();

  std::optional<double> best_acc;
  auto end_epoch = [&](std::size_t epoch) {
    std::optional<double> val_acc;
    if (val_set && val_set->pair_count() > 0) {
      const auto m = evaluate(model, *val_set);
      result.metrics.push_back({epoch, "val", m});
      val_acc = m.accuracy;
    }
    if (test_set && test_set->pair_count() > 0) {
      result.metrics.push_back({epoch, "test", evaluate(model, *test_set)});
    }
    // Without validation data the last epoch is kept.
    const bool better = val_acc ? (!best_acc || *val_acc > *best_acc) : true;
    if (better) {
      best_acc = val_acc;
      result.best_epoch = epoch;
      result.checkpoint.parameters = params.clone();
    }
  };
  end_epoch(0);

  std::vector<std::size_t> order(train_set.examples.size());
  std::iota(order.begin(), order.end(), 0);
  Rng shuffle_rng(config.seed ^ kShuffleStream);

  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double loss_sum = 0.0;
    std::size_t steps = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += config.batch) {
      const std::size_t end = std::min(order.size(), begin + config.batch);
      ad::Tape tape;
      Tensor loss;
      {
        ad::TapeScope scope(tape);
        for (std::size_t i = begin; i < end; ++i) {
          const auto& ex = train_set.examples[order[i]];
          const auto out = model.forward(ex);
          for (std::size_t a = 0; a < out.size(); ++a) {
            const Tensor ce = ad::cross_entropy(ad::softmax(out[a]), ex.aspects[a].gold);
            loss = loss.defined() ? ad::add(loss, ce) : ce;
          }
        }
      }
      if (!loss.defined()) continue;
      const double ce = loss.item();
      if (!std::isfinite(ce)) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                           std::to_string(optimizer.step_count() + 1));
      }
      loss_sum += ce + regularization(params, config.lambda, config.lambda_star);
      params.zero_grad();
      tape.backward(loss);
      optimizer.step();
      ++steps;
      record_eta();
    }
    result.epoch_loss.push_back(steps ? loss_sum / static_cast<double>(steps) : 0.0);
    end_epoch(epoch);
  }

  json trajectory = json::array();
  for (const auto& r : result.trajectory) trajectory.push_back({r.step, r.eta_l, r.eta_r});
  result.checkpoint.metadata = {{"config", config_json(config)},
                                {"vocabulary", vocab.tokens()},
                                {"best_epoch", result.best_epoch},
                                {"eta_trajectory", std::move(trajectory)}};
  return result;
}

std::string metrics_csv(const std::vector<EpochMetrics>& rows) {
  std::ostringstream out;
  out << "epoch,split,acc,macro_f1\n";
  for (const auto& r : rows) {
    out << r.epoch << ',' << r.split << ',' << format_double(r.metrics.accuracy) << ','
        << format_double(r.metrics.macro_f1) << '\n';
  }
  return out.str();
}

std::string trajectory_csv(const std::vector<EtaRecord>& trajectory) {
  std::ostringstream out;
  out << "step,eta_l,eta_r\n";
  for (const auto& r : trajectory) {
    out << r.step << ',' << format_double(r.eta_l) << ',' << format_double(r.eta_r) << '\n';
  }
  return out.str();
}

std::vector<EtaRecord> stored_trajectory(const ad::Checkpoint& checkpoint) {
  const auto it = checkpoint.metadata.find("eta_trajectory");
  if (it == checkpoint.metadata.end()) throw SchemaError("checkpoint carries no eta trajectory");
  std::vector<EtaRecord> out;
  for (const auto& r : *it) {
    out.push_back({r.at(0).get<std::uint64_t>(), r.at(1).get<double>(), r.at(2).get<double>()});
  }
  return out;
}

void write_train_outputs(const TrainResult& result, const std::filesystem::path& dir) {
  write_file(dir / kMetricsFile, metrics_csv(result.metrics));
  write_file(dir / kTrajectoryFile, trajectory_csv(result.trajectory));
  ad::save_checkpoint(result.checkpoint, dir / kCheckpointFile);
}

}  // namespace lsa::training
