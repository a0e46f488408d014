#include "lsa/cli/commands.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <iomanip>
#include <sstream>

#include <CLI11.hpp>

#include "lsa/autodiff/checkpoint.hpp"
#include "lsa/corpus/analysis.hpp"
#include "lsa/corpus/dataset_io.hpp"
#include "lsa/corpus/synthetic.hpp"
#include "lsa/errors.hpp"
#include "lsa/training/sweeps.hpp"
#include "lsa/util/keyvalue.hpp"

namespace lsa::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::vector<std::string> kPathKeys = {"train", "val", "test", "parses"};

KeyValues to_kv(const json& obj) {
  KeyValues kv;
  for (const auto& [k, v] : obj.items()) {
    if (!v.is_string()) throw SchemaError("inputs: value of '" + k + "' must be a string");
    kv[k] = v.get<std::string>();
  }
  return kv;
}

json to_json(const KeyValues& kv) {
  json j = json::object();
  for (const auto& [k, v] : kv) j[k] = v;
  return j;
}

std::string input_string(const json& inputs, const char* key) {
  const auto it = inputs.find(key);
  if (it == inputs.end() || !it->is_string()) throw UsageError(std::string("missing input '") + key + "'");
  return it->get<std::string>();
}

training::TrainConfig config_from(const json& inputs) {
  const auto it = inputs.find("config");
  if (it == inputs.end()) throw UsageError("missing input 'config'");
  auto config = training::TrainConfig::from_key_values(to_kv(*it));
  config.validate();
  return config;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

// Content hashes of every file a command reads.
json input_hashes(const std::string& command, const json& inputs) {
  json hashes = json::object();
  auto add = [&](const std::string& path) {
    if (!path.empty() && fs::exists(path)) hashes[path] = fnv1a_hex(read_file(path));
  };
  for (const char* key : {"dataset", "checkpoint", "parses"}) {
    if (inputs.contains(key) && inputs[key].is_string()) add(inputs[key].get<std::string>());
  }
  if (command != "synth" && inputs.contains("config")) {
    for (const auto& key : kPathKeys) {
      if (inputs["config"].contains(key)) add(inputs["config"][key].get<std::string>());
    }
  }
  return hashes;
}

void write_manifest(const std::string& command, const json& inputs, const fs::path& out_dir) {
  write_file(out_dir / training::kManifestFile, manifest_text(command, inputs));
}

void print_metrics(std::ostream& out, const std::string& label, const training::Metrics& m) {
  out << std::fixed << std::setprecision(4) << label << ": acc " << m.accuracy << "  macro-F1 "
      << m.macro_f1 << "  (" << m.n_examples << " aspects)\n";
  out.unsetf(std::ios::floatfield);
}

void cmd_analyze_clusters(const json& inputs, const fs::path& out_dir, std::ostream& out) {
  const auto path = input_string(inputs, "dataset");
  const auto dataset = corpus::load_dataset(path);
  const auto h = corpus::cluster_histogram(dataset);
  static const char* labels[] = {"1", "2", "3", "4", ">=5"};
  out << "cluster size  aspects\n";
  for (std::size_t b = 0; b < corpus::kClusterBuckets; ++b) {
    out << std::setw(12) << labels[b] << "  " << h.counts[b] << "\n";
  }
  out << std::setw(12) << "sum" << "  " << h.sum << "\n";
  if (dataset.skipped_aspects) out << "skipped conflict aspects: " << dataset.skipped_aspects << "\n";
  write_file(out_dir / "clusters.csv", corpus::cluster_histogram_csv(h));
}

void cmd_synth(const json& inputs, const fs::path& out_dir, std::ostream& out) {
  const auto spec = corpus::SynthSpec::from_key_values(to_kv(inputs.at("spec")));
  const auto seed = inputs.at("seed").get<std::uint64_t>();
  const auto dataset = corpus::generate_synthetic_corpus(spec, seed);
  corpus::save_dataset(dataset, out_dir / "dataset.json");
  std::size_t implicit = 0;
  for (const auto& ex : dataset.examples) {
    for (const auto& a : ex.aspects) implicit += a.implicit;
  }
  out << "wrote " << dataset.examples.size() << " examples, " << dataset.pair_count() << " aspects ("
      << implicit << " implicit) to " << (out_dir / "dataset.json").string() << "\n";
}

void cmd_train(const json& inputs, const fs::path& out_dir, std::ostream& out) {
  const auto config = config_from(inputs);
  const auto data = training::load_train_data(config);
  const auto result = training::train(config, data);
  training::write_train_outputs(result, out_dir);
  write_file(out_dir / "config.txt", config.to_text());
  out << "trained " << window::variant_name(config.variant) << " for " << config.epochs
      << " epochs; best epoch " << result.best_epoch << "\n";
  for (const auto& row : result.metrics) {
    if (row.epoch == result.best_epoch) print_metrics(out, row.split, row.metrics);
  }
  const auto& last = result.trajectory.back();
  out << "final eta_l " << last.eta_l << "  eta_r " << last.eta_r << "\n";
  if (result.syntax_fallbacks) {
    out << "positional fallback for " << result.syntax_fallbacks << " examples without a usable parse\n";
  }
}

void cmd_eval(const json& inputs, const fs::path& out_dir, std::ostream& out) {
  const auto checkpoint = ad::load_checkpoint(input_string(inputs, "checkpoint"));
  const auto dataset = corpus::load_dataset(input_string(inputs, "dataset"));
  const auto slice = training::Slice::parse(inputs.value("slice", "all"));
  std::optional<distance::ParseMap> parses;
  if (const auto p = inputs.value("parses", ""); !p.empty()) parses = distance::load_parses(p);
  const auto m = training::evaluate(checkpoint, dataset, slice, parses ? &*parses : nullptr);
  print_metrics(out, slice.name(), m);
  std::ostringstream csv;
  csv << "slice,n,acc,macro_f1\n"
      << slice.name() << ',' << m.n_examples << ',' << format_double(m.accuracy) << ','
      << format_double(m.macro_f1) << '\n';
  write_file(out_dir / "eval.csv", csv.str());
}

void cmd_sweep_eta(const json& inputs, const fs::path& out_dir, std::ostream& out) {
  const auto config = config_from(inputs);
  const auto grid = training::parse_grid(input_string(inputs, "grid"));
  const auto data = training::load_train_data(config);
  const auto rows = training::static_eta_sweep(config, data, grid);
  for (const auto& r : rows) {
    out << "eta_l " << format_double(r.eta_l) << "  eta_r " << format_double(r.eta_r) << "  ";
    print_metrics(out, "acc/f1", r.metrics);
  }
  write_file(out_dir / "eta_sweep.csv", training::eta_sweep_csv(rows));
}

void cmd_sweep_seeds(const json& inputs, const fs::path& out_dir, std::ostream& out) {
  const auto config = config_from(inputs);
  const auto seeds = inputs.at("seeds").get<std::vector<std::uint64_t>>();
  const auto slice = training::Slice::parse(inputs.value("slice", "all"));
  const auto data = training::load_train_data(config);
  const auto summary = training::seed_sweep(config, data, seeds, slice);
  for (const auto& run : summary.runs) {
    training::write_train_outputs(run.result, out_dir / ("seed_" + std::to_string(run.seed)));
    print_metrics(out, "seed " + std::to_string(run.seed), run.metrics);
  }
  out << std::fixed << std::setprecision(4) << "median acc " << summary.accuracy_median << " (IQR "
      << summary.accuracy_iqr << ")  median macro-F1 " << summary.macro_f1_median << " (IQR "
      << summary.macro_f1_iqr << ")\n";
  out.unsetf(std::ios::floatfield);
  write_file(out_dir / "seed_sweep.csv", training::seed_sweep_csv(summary));
}

void cmd_export_trajectory(const json& inputs, const fs::path& out_dir, std::ostream& out) {
  const auto checkpoint = ad::load_checkpoint(input_string(inputs, "checkpoint"));
  const auto trajectory = training::stored_trajectory(checkpoint);
  write_file(out_dir / training::kTrajectoryFile, training::trajectory_csv(trajectory));
  out << "exported " << trajectory.size() << " trajectory records\n";
}

// CLI flags for every TrainConfig key; booleans become flags.
struct ConfigFlags {
  std::string config_file;
  std::map<std::string, std::string> values;
  std::map<std::string, bool> flags;

  void attach(CLI::App* app) {
    app->add_option("--config", config_file, "key = value run configuration file");
    for (const auto& [key, value] : training::TrainConfig{}.to_key_values()) {
      if (value == "true" || value == "false") {
        flags[key] = false;
        std::string names = "--" + key;
        if (key.find('_') != std::string::npos) {
          std::string dashed = key;
          std::replace(dashed.begin(), dashed.end(), '_', '-');
          names += ",--" + dashed;
        }
        app->add_flag(names, flags[key], "overrides '" + key + "'");
      } else {
        values[key];
        app->add_option("--" + key, values[key], "overrides '" + key + "'");
      }
    }
  }

  json resolve(const CLI::App* app) const {
    training::TrainConfig base;
    if (!config_file.empty()) base = training::TrainConfig::from_key_values(read_key_values(config_file));
    KeyValues kv;
    for (const auto& [key, value] : values) {
      if (app->count("--" + key)) kv[key] = value;
    }
    for (const auto& [key, value] : flags) {
      if (app->count("--" + key)) kv[key] = value ? "true" : "false";
    }
    // A malformed file is a data problem, a malformed flag a usage one.
    training::TrainConfig config;
    try {
      config = training::TrainConfig::from_key_values(kv, base);
    } catch (const DataError& e) {
      throw UsageError(e.what());
    }
    for (const auto& key : kPathKeys) {
      auto* field = key == "train" ? &config.train
                    : key == "val" ? &config.val
                    : key == "test" ? &config.test : &config.parses;
      if (!field->empty()) *field = fs::absolute(*field).lexically_normal().string();
    }
    config.validate();
    return to_json(config.to_key_values());
  }
};

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
  std::vector<std::uint64_t> seeds;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      seeds.push_back(std::stoull(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw UsageError("--seeds: '" + item + "' is not a seed");
    }
  }
  return seeds;
}

std::string absolute(const std::string& path) {
  return path.empty() ? path : fs::absolute(path).lexically_normal().string();
}

}  // namespace

std::string manifest_text(const std::string& command, const json& inputs) {
  json m = {{"command", command},
            {"inputs", inputs},
            {"code_version", kCodeVersion},
            {"input_hashes", input_hashes(command, inputs)},
            {"created_utc", utc_now()}};
  if (inputs.contains("config")) {
    const auto config = training::TrainConfig::from_key_values(to_kv(inputs["config"]));
    m["config_hash"] = config.hash();
    m["seed"] = config.seed;
  } else if (inputs.contains("seed")) {
    m["seed"] = inputs["seed"];
  }
  return m.dump(2) + "\n";
}

void run_command(const std::string& command, const json& inputs, const fs::path& out_dir, std::ostream& out) {
  fs::create_directories(out_dir);
  if (command == "analyze-clusters") {
    cmd_analyze_clusters(inputs, out_dir, out);
  } else if (command == "synth") {
    cmd_synth(inputs, out_dir, out);
  } else if (command == "train") {
    cmd_train(inputs, out_dir, out);
  } else if (command == "eval") {
    cmd_eval(inputs, out_dir, out);
  } else if (command == "sweep-eta") {
    cmd_sweep_eta(inputs, out_dir, out);
  } else if (command == "sweep-seeds") {
    cmd_sweep_seeds(inputs, out_dir, out);
  } else if (command == "export-trajectory") {
    cmd_export_trajectory(inputs, out_dir, out);
  } else {
    throw UsageError("unknown command '" + command + "'");
  }
  write_manifest(command, inputs, out_dir);
}

void replay(const fs::path& manifest, const fs::path& out_dir, std::ostream& out) {
  json m;
  try {
    m = json::parse(read_file(manifest));
  } catch (const json::parse_error& e) {
    throw SchemaError(manifest.string() + ": malformed manifest: " + e.what());
  }
  if (!m.contains("command") || !m.contains("inputs")) {
    throw SchemaError(manifest.string() + ": manifest lacks command or inputs");
  }
  run_command(m["command"].get<std::string>(), m["inputs"], out_dir, out);
}

fs::path resolve_output(const std::string& command, const std::string& out_flag) {
  const char* root = std::getenv(kOutputRootEnv);
  const fs::path base = root && *root ? fs::path(root) : fs::path("lsa_runs");
  if (out_flag.empty()) return base / command;
  const fs::path p(out_flag);
  if (p.is_relative() && root && *root) return base / p;
  return p;
}

int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Local sentiment aggregation for aspect-based sentiment classification"};
  app.require_subcommand(1);
  std::string out_flag;
  auto add_out = [&](CLI::App* sub) {
    sub->add_option("--out", out_flag, "output directory (default $" + std::string(kOutputRootEnv) + "/<command>)");
  };

  std::string dataset, spec_file, checkpoint, slice = "all", parses, grid = "0:1:0.1", seeds = "1,2,3,4,5",
              manifest;
  std::uint64_t seed = 1;

  auto* analyze = app.add_subcommand("analyze-clusters", "sentiment cluster histogram of a dataset");
  analyze->add_option("dataset", dataset, "absa-json or SemEval XML file")->required();
  add_out(analyze);

  auto* synth = app.add_subcommand("synth", "generate a synthetic coherency corpus");
  synth->add_option("--spec", spec_file, "key = value corpus spec")->required();
  synth->add_option("--seed", seed, "generator seed");
  add_out(synth);

  ConfigFlags train_flags, eta_flags, seed_flags;
  auto* train = app.add_subcommand("train", "train one model");
  train_flags.attach(train);
  add_out(train);

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  eval->add_option("--checkpoint", checkpoint)->required();
  eval->add_option("--dataset", dataset)->required();
  eval->add_option("--slice", slice, "all | implicit | mono | cluster1..cluster5");
  eval->add_option("--parses", parses, "CoNLL-U parses for lsa_s");
  add_out(eval);

  auto* sweep_eta = app.add_subcommand("sweep-eta", "static η sweep with η_r = 1 - η_l");
  eta_flags.attach(sweep_eta);
  sweep_eta->add_option("--grid", grid, "start:stop:step over η_l");
  add_out(sweep_eta);

  auto* sweep_seeds = app.add_subcommand("sweep-seeds", "median and IQR over seeds");
  seed_flags.attach(sweep_seeds);
  sweep_seeds->add_option("--seeds", seeds, "comma-separated seeds");
  sweep_seeds->add_option("--slice", slice, "evaluation slice");
  add_out(sweep_seeds);

  auto* export_traj = app.add_subcommand("export-trajectory", "write a checkpoint's η trajectory as CSV");
  export_traj->add_option("--checkpoint", checkpoint)->required();
  add_out(export_traj);

  auto* replay_cmd = app.add_subcommand("replay", "re-run a command from its manifest.json");
  replay_cmd->add_option("manifest", manifest)->required();
  add_out(replay_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kOk;
    }
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  }

  try {
    auto* sub = app.get_subcommands().front();
    const std::string command = sub->get_name();
    const auto out_dir = resolve_output(command, out_flag);
    if (command == "replay") {
      replay(manifest, out_dir, out);
      return kOk;
    }
    json inputs;
    if (command == "analyze-clusters") {
      inputs = {{"dataset", absolute(dataset)}};
    } else if (command == "synth") {
      const auto spec = corpus::SynthSpec::from_key_values(read_key_values(spec_file));
      spec.validate();
      inputs = {{"spec", to_json(spec.to_key_values())}, {"seed", seed}};
    } else if (command == "train") {
      inputs = {{"config", train_flags.resolve(sub)}};
    } else if (command == "eval") {
      inputs = {{"checkpoint", absolute(checkpoint)},
                {"dataset", absolute(dataset)},
                {"slice", training::Slice::parse(slice).name()},
                {"parses", absolute(parses)}};
    } else if (command == "sweep-eta") {
      training::parse_grid(grid);
      inputs = {{"config", eta_flags.resolve(sub)}, {"grid", grid}};
    } else if (command == "sweep-seeds") {
      inputs = {{"config", seed_flags.resolve(sub)},
                {"seeds", parse_seeds(seeds)},
                {"slice", training::Slice::parse(slice).name()}};
    } else if (command == "export-trajectory") {
      inputs = {{"checkpoint", absolute(checkpoint)}};
    }
    run_command(command, inputs, out_dir, out);
    return kOk;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << "\n";
    return kNumericFailure;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kDataFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kDataFailure;
  }
}

}  // namespace lsa::cli
