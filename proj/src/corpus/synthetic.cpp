#include "lsa/corpus/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "lsa/encoder/tokenizer.hpp"
#include "lsa/errors.hpp"
#include "lsa/util/rng.hpp"

namespace lsa::corpus {

namespace {

constexpr std::array<const char*, kNumPolarities> kCuePrefix = {"good", "bad", "meh"};

struct Lexicon {
  std::size_t entities;
  std::size_t cues_per_polarity;
  std::size_t fillers;
};

Lexicon split_vocabulary(std::size_t vocab) {
  Lexicon lex;
  lex.cues_per_polarity = std::max<std::size_t>(1, vocab / 24);
  lex.entities = std::max<std::size_t>(1, vocab / 4);
  lex.fillers = vocab - kNumPolarities * lex.cues_per_polarity - lex.entities;
  return lex;
}

struct Plan {
  std::vector<Polarity> polarity;
  std::vector<bool> implicit;
};

bool implicit_allowed(const std::vector<bool>& implicit, std::size_t candidate) {
  auto marked = implicit;
  marked[candidate] = true;
  const std::size_t m = marked.size();
  for (std::size_t j = 0; j < m; ++j) {
    if (!marked[j]) continue;
    const bool left_explicit = j > 0 && !marked[j - 1];
    const bool right_explicit = j + 1 < m && !marked[j + 1];
    if (!left_explicit && !right_explicit) return false;
  }
  return true;
}

struct Unit {
  bool is_aspect;
  Polarity polarity;
  bool implicit;
};

}  // namespace

void SynthSpec::validate() const {
  if (examples == 0) throw UsageError("synth: examples must be positive");
  if (vocab_size < 8) throw UsageError("synth: vocab_size must be at least 8");
  if (min_aspects > max_aspects) throw UsageError("synth: min_aspects exceeds max_aspects");
  if (!(coherence >= 0.0 && coherence <= 1.0)) throw UsageError("synth: coherence must be in [0, 1]");
  if (!(implicit_fraction >= 0.0 && implicit_fraction < 1.0)) {
    throw UsageError("synth: implicit_fraction must be in [0, 1)");
  }
  if (implicit_fraction > 0.0 && coherence == 0.0) {
    throw UsageError("synth: implicit aspects with coherence 0 have unlearnable labels");
  }
  if (implicit_fraction > 0.0 && max_aspects < 2) {
    throw UsageError("synth: implicit aspects need examples with at least two aspects");
  }
  if (min_gap > max_gap) throw UsageError("synth: min_gap exceeds max_gap");
}

KeyValues SynthSpec::to_key_values() const {
  return {{"vocab_size", std::to_string(vocab_size)},
          {"examples", std::to_string(examples)},
          {"min_aspects", std::to_string(min_aspects)},
          {"max_aspects", std::to_string(max_aspects)},
          {"coherence", format_double(coherence)},
          {"implicit_fraction", format_double(implicit_fraction)},
          {"balance_cues", balance_cues ? "true" : "false"},
          {"min_gap", std::to_string(min_gap)},
          {"max_gap", std::to_string(max_gap)}};
}

SynthSpec SynthSpec::from_key_values(const KeyValues& kv) {
  static const std::array<const char*, 9> kKnown = {
      "vocab_size", "examples", "min_aspects", "max_aspects", "coherence",
      "implicit_fraction", "balance_cues", "min_gap", "max_gap"};
  for (const auto& [k, _] : kv) {
    if (std::find_if(kKnown.begin(), kKnown.end(), [&](const char* s) { return k == s; }) ==
        kKnown.end()) {
      throw SchemaError("synth spec: unknown key '" + k + "'");
    }
  }
  SynthSpec s;
  auto count = [&](const char* key, std::size_t& dst) {
    if (!kv.count(key)) return;
    const auto v = kv_int(kv, key);
    if (v < 0) throw SchemaError(std::string("synth spec: '") + key + "' must be non-negative");
    dst = static_cast<std::size_t>(v);
  };
  count("vocab_size", s.vocab_size);
  count("examples", s.examples);
  count("min_aspects", s.min_aspects);
  count("max_aspects", s.max_aspects);
  count("min_gap", s.min_gap);
  count("max_gap", s.max_gap);
  if (kv.count("coherence")) s.coherence = kv_double(kv, "coherence");
  if (kv.count("implicit_fraction")) s.implicit_fraction = kv_double(kv, "implicit_fraction");
  if (kv.count("balance_cues")) s.balance_cues = kv_bool(kv, "balance_cues");
  return s;
}

Dataset generate_synthetic_corpus(const SynthSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng rng(seed);
  const Lexicon lex = split_vocabulary(spec.vocab_size);

  std::vector<Plan> plans(spec.examples);
  std::size_t total_aspects = 0;
  for (auto& plan : plans) {
    const auto m = static_cast<std::size_t>(
        rng.uniform_int(static_cast<int>(spec.min_aspects), static_cast<int>(spec.max_aspects)));
    for (std::size_t i = 0; i < m; ++i) {
      if (i == 0 || !rng.bernoulli(spec.coherence)) {
        plan.polarity.push_back(static_cast<Polarity>(rng.uniform_index(kNumPolarities)));
      } else {
        plan.polarity.push_back(plan.polarity.back());
      }
    }
    plan.implicit.assign(m, false);
    total_aspects += m;
  }

  // Exact implicit count, greedily placed in shuffled order with edge aspects
  // first (an interior implicit aspect blocks both of its neighbours).
  const auto target = static_cast<std::size_t>(
      std::llround(spec.implicit_fraction * static_cast<double>(total_aspects)));
  if (target > 0) {
    std::vector<std::pair<std::size_t, std::size_t>> candidates;
    for (std::size_t e = 0; e < plans.size(); ++e) {
      const auto m = plans[e].polarity.size();
      if (m < 2) continue;
      for (std::size_t i = 0; i < m; ++i) candidates.emplace_back(e, i);
    }
    rng.shuffle(candidates);
    std::stable_sort(candidates.begin(), candidates.end(), [&](const auto& a, const auto& b) {
      auto interior = [&](const auto& c) {
        return c.second > 0 && c.second + 1 < plans[c.first].polarity.size();
      };
      return !interior(a) && interior(b);
    });
    std::size_t placed = 0;
    for (const auto& [e, i] : candidates) {
      if (placed == target) break;
      if (implicit_allowed(plans[e].implicit, i)) {
        plans[e].implicit[i] = true;
        ++placed;
      }
    }
    if (placed < target) {
      throw DataError("synth: only " + std::to_string(placed) + " of " + std::to_string(target) +
                      " implicit aspects could be placed; lower implicit_fraction or raise "
                      "max_aspects");
    }
  }

  auto entity = [&] { return "item" + std::to_string(rng.uniform_index(lex.entities)); };
  auto cue = [&](Polarity p) {
    return kCuePrefix[polarity_index(p)] + std::to_string(rng.uniform_index(lex.cues_per_polarity));
  };
  auto filler = [&] { return "w" + std::to_string(rng.uniform_index(lex.fillers)); };

  Dataset out;
  out.examples.reserve(plans.size());
  for (const auto& plan : plans) {
    std::vector<Unit> units;
    std::array<std::size_t, kNumPolarities> cue_counts{};
    bool has_implicit = false;
    for (std::size_t i = 0; i < plan.polarity.size(); ++i) {
      units.push_back({true, plan.polarity[i], plan.implicit[i]});
      if (plan.implicit[i]) {
        has_implicit = true;
      } else {
        ++cue_counts[polarity_index(plan.polarity[i])];
      }
    }
    if (spec.balance_cues && has_implicit) {
      const auto most = *std::max_element(cue_counts.begin(), cue_counts.end());
      for (std::size_t p = 0; p < kNumPolarities; ++p) {
        for (auto c = cue_counts[p]; c < most; ++c) {
          const auto at = rng.uniform_index(units.size() + 1);
          units.insert(units.begin() + static_cast<std::ptrdiff_t>(at),
                       Unit{false, static_cast<Polarity>(p), false});
        }
      }
    }

    Example ex;
    for (int f = rng.uniform_int(0, 2); f > 0; --f) ex.tokens.push_back(filler());
    for (std::size_t u = 0; u < units.size(); ++u) {
      if (u > 0) {
        const int gap = rng.uniform_int(static_cast<int>(spec.min_gap), static_cast<int>(spec.max_gap));
        for (int f = 0; f < gap; ++f) ex.tokens.push_back(filler());
      }
      const std::size_t start = ex.tokens.size();
      ex.tokens.push_back(entity());
      if (units[u].is_aspect) {
        AspectAnnotation a;
        a.start = start;
        a.end = start + 1;
        a.term = {ex.tokens.back()};
        a.polarity = units[u].polarity;
        a.implicit = units[u].implicit;
        ex.aspects.push_back(std::move(a));
      }
      if (!units[u].implicit) ex.tokens.push_back(cue(units[u].polarity));
    }
    for (int f = rng.uniform_int(0, 2); f > 0; --f) ex.tokens.push_back(filler());
    if (ex.tokens.empty()) ex.tokens.push_back(filler());
    ex.text = encoder::join_tokens(ex.tokens);
    out.examples.push_back(std::move(ex));
  }
  return out;
}

}  // namespace lsa::corpus
