#include "lsa/training/sweeps.hpp"

#include <cmath>
#include <sstream>

#include "lsa/errors.hpp"
#include "lsa/util/keyvalue.hpp"

namespace lsa::training {

std::vector<double> parse_grid(const std::string& text) {
  std::vector<double> parts;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ':')) {
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw UsageError("grid '" + text + "': '" + item + "' is not a number");
    }
  }
  if (parts.size() != 3) throw UsageError("grid '" + text + "' must be start:stop:step");
  const double start = parts[0], stop = parts[1], step = parts[2];
  if (!(step > 0) || stop < start) throw UsageError("grid '" + text + "' is empty");
  const auto count = static_cast<std::size_t>(std::floor((stop - start) / step + 1e-9)) + 1;
  std::vector<double> grid;
  for (std::size_t i = 0; i < count; ++i) {
    double v = start + static_cast<double>(i) * step;
    if (std::abs(v - stop) < 1e-9) v = stop;
    grid.push_back(v);
  }
  return grid;
}

Metrics score_run(const TrainResult& result, const TrainData& data, const Slice& slice) {
  const auto* parses = data.parses ? &*data.parses : nullptr;
  if (data.test) return evaluate(result.checkpoint, *data.test, slice, parses);
  if (const auto val = validation_split(restore(result.checkpoint).config, data)) {
    return evaluate(result.checkpoint, *val, slice, parses);
  }
  throw DataError("no test or validation split to score the run on");
}

std::vector<EtaSweepRow> static_eta_sweep(const TrainConfig& config, const TrainData& data,
                                          const std::vector<double>& grid) {
  if (grid.empty()) throw UsageError("static eta sweep: empty grid");
  std::vector<EtaSweepRow> rows;
  for (double eta_l : grid) {
    TrainConfig c = config;
    c.no_dwa = true;
    c.static_eta_l = eta_l;
    c.static_eta_r = 1.0 - eta_l;
    const auto result = train(c, data);
    rows.push_back({c.static_eta_l, c.static_eta_r, score_run(result, data)});
  }
  return rows;
}

std::string eta_sweep_csv(const std::vector<EtaSweepRow>& rows) {
  std::ostringstream out;
  out << "eta_l,eta_r,acc,macro_f1\n";
  for (const auto& r : rows) {
    out << format_double(r.eta_l) << ',' << format_double(r.eta_r) << ','
        << format_double(r.metrics.accuracy) << ',' << format_double(r.metrics.macro_f1) << '\n';
  }
  return out.str();
}

SeedSummary seed_sweep(const TrainConfig& config, const TrainData& data,
                       const std::vector<std::uint64_t>& seeds, const Slice& slice) {
  if (seeds.size() < 2) throw UsageError("seed sweep needs at least two seeds");
  SeedSummary s;
  std::vector<double> acc, f1;
  for (auto seed : seeds) {
    TrainConfig c = config;
    c.seed = seed;
    auto result = train(c, data);
    const auto m = score_run(result, data, slice);
    acc.push_back(m.accuracy);
    f1.push_back(m.macro_f1);
    s.runs.push_back({seed, m, std::move(result)});
  }
  s.accuracy_median = median(acc);
  s.accuracy_iqr = iqr(acc);
  s.macro_f1_median = median(f1);
  s.macro_f1_iqr = iqr(f1);
  return s;
}

std::string seed_sweep_csv(const SeedSummary& summary) {
  std::ostringstream out;
  out << "seed,acc,macro_f1\n";
  for (const auto& r : summary.runs) {
    out << r.seed << ',' << format_double(r.metrics.accuracy) << ',' << format_double(r.metrics.macro_f1)
        << '\n';
  }
  out << "median," << format_double(summary.accuracy_median) << ','
      << format_double(summary.macro_f1_median) << '\n';
  out << "iqr," << format_double(summary.accuracy_iqr) << ',' << format_double(summary.macro_f1_iqr) << '\n';
  return out.str();
}

}  // namespace lsa::training
