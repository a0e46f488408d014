#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "lsa/autodiff/checkpoint.hpp"
#include "lsa/cli/commands.hpp"
#include "lsa/corpus/analysis.hpp"
#include "lsa/corpus/dataset_io.hpp"
#include "lsa/corpus/synthetic.hpp"
#include "lsa/distance/distance.hpp"
#include "lsa/encoder/tokenizer.hpp"
#include "lsa/encoder/vocabulary.hpp"
#include "lsa/errors.hpp"
#include "lsa/training/sweeps.hpp"
#include "lsa/window/window.hpp"

namespace py = pybind11;
using namespace lsa;

namespace {

KeyValues to_kv(const py::dict& d) {
  KeyValues kv;
  for (const auto& [k, v] : d) {
    const auto key = py::str(k).cast<std::string>();
    if (py::isinstance<py::bool_>(v)) {
      kv[key] = v.cast<bool>() ? "true" : "false";
    } else if (py::isinstance<py::float_>(v)) {
      kv[key] = format_double(v.cast<double>());
    } else {
      kv[key] = py::str(v).cast<std::string>();
    }
  }
  return kv;
}

py::dict metrics_dict(const training::Metrics& m) {
  py::dict d;
  d["accuracy"] = m.accuracy;
  d["macro_f1"] = m.macro_f1;
  d["precision"] = std::vector<double>(m.precision.begin(), m.precision.end());
  d["recall"] = std::vector<double>(m.recall.begin(), m.recall.end());
  d["f1"] = std::vector<double>(m.f1.begin(), m.f1.end());
  d["n_examples"] = m.n_examples;
  return d;
}

distance::DependencyTree tree_from(const std::vector<int>& heads) {
  return distance::DependencyTree::from_heads(heads);
}

}  // namespace

PYBIND11_MODULE(_lsa, m) {
  m.doc() = "Local sentiment aggregation core";

  auto base = py::register_exception<Error>(m, "LsaError");
  py::register_exception<UsageError>(m, "UsageError", base.ptr());
  auto data = py::register_exception<DataError>(m, "DataError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<SchemaError>(m, "SchemaError", data.ptr());
  py::register_exception<ParseError>(m, "ParseError", data.ptr());
  py::register_exception<AlignmentError>(m, "AlignmentError", data.ptr());

  m.def("tokenize", &encoder::tokenize, py::arg("text"));
  m.def(
      "build_spc_input",
      [](const std::vector<std::int32_t>& context, const std::vector<std::int32_t>& aspect, std::size_t max_len) {
        return encoder::build_spc_input(context, aspect, max_len);
      },
      py::arg("context"), py::arg("aspect"), py::arg("max_len") = 80);

  m.def("position_weight", &window::position_weight, py::arg("distance"), py::arg("alpha"), py::arg("n"));
  m.def(
      "relative_token_distance",
      [](std::size_t token, const std::vector<std::size_t>& aspect) {
        return distance::relative_token_distance(token, aspect);
      },
      py::arg("token"), py::arg("aspect_positions"));
  m.def(
      "tree_shortest_distance",
      [](const std::vector<int>& heads, std::size_t i, std::size_t j) {
        return distance::tree_shortest_distance(tree_from(heads), i, j);
      },
      py::arg("heads"), py::arg("word_i"), py::arg("word_j"),
      "heads[i] is the 0-based head of word i, or -1 for the root");
  m.def(
      "syntactic_distance",
      [](const std::vector<int>& heads, const std::vector<std::size_t>& token_to_word, std::size_t token,
         const std::vector<std::size_t>& aspect_tokens) {
        return distance::syntactic_distance(tree_from(heads), distance::TokenAlignment(token_to_word), token,
                                            aspect_tokens);
      },
      py::arg("heads"), py::arg("token_to_word"), py::arg("token"), py::arg("aspect_tokens"));

  m.def(
      "cluster_histogram",
      [](const std::string& path) {
        const auto h = corpus::cluster_histogram(corpus::load_dataset(path));
        return std::vector<std::size_t>(h.counts.begin(), h.counts.end());
      },
      py::arg("path"), "aspect counts for cluster sizes 1, 2, 3, 4, >=5");
  m.def(
      "synthesize",
      [](const py::dict& spec, std::uint64_t seed) {
        return corpus::serialize_dataset(corpus::generate_synthetic_corpus(
            corpus::SynthSpec::from_key_values(to_kv(spec)), seed));
      },
      py::arg("spec"), py::arg("seed"), "absa-json text of a synthetic corpus");

  m.def(
      "compute_metrics",
      [](const std::vector<std::size_t>& gold, const std::vector<std::size_t>& pred) {
        return metrics_dict(training::compute_metrics(gold, pred));
      },
      py::arg("gold"), py::arg("predicted"));
  m.def("median", &training::median);
  m.def("iqr", &training::iqr);
  m.def("parse_grid", &training::parse_grid);

  m.def(
      "train",
      [](const py::dict& config, const std::string& out_dir) {
        const auto c = training::TrainConfig::from_key_values(to_kv(config));
        training::TrainResult result;
        {
          py::gil_scoped_release release;
          result = training::train(c, training::load_train_data(c));
          if (!out_dir.empty()) training::write_train_outputs(result, out_dir);
        }
        py::dict d;
        d["best_epoch"] = result.best_epoch;
        d["epoch_loss"] = result.epoch_loss;
        py::list traj;
        for (const auto& r : result.trajectory) traj.append(py::make_tuple(r.step, r.eta_l, r.eta_r));
        d["eta_trajectory"] = traj;
        py::list rows;
        for (const auto& r : result.metrics) {
          auto row = metrics_dict(r.metrics);
          row["epoch"] = r.epoch;
          row["split"] = r.split;
          rows.append(row);
        }
        d["metrics"] = rows;
        return d;
      },
      py::arg("config"), py::arg("out_dir") = "",
      "Train from a dict of config keys; writes run files when out_dir is given");
  m.def(
      "evaluate",
      [](const std::string& checkpoint, const std::string& dataset, const std::string& slice) {
        return metrics_dict(training::evaluate(ad::load_checkpoint(checkpoint), corpus::load_dataset(dataset),
                                               training::Slice::parse(slice)));
      },
      py::arg("checkpoint"), py::arg("dataset"), py::arg("slice") = "all");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::vector<const char*> argv{"lsa"};
        for (const auto& a : args) argv.push_back(a.c_str());
        std::ostringstream out, err;
        const int code = cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command line; returns (exit code, stdout, stderr)");
}
