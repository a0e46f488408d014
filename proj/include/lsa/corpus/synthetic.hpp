#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "lsa/corpus/types.hpp"
#include "lsa/util/keyvalue.hpp"

namespace lsa::corpus {

// Controlled corpus for coherency experiments. Each example is a sequence of
// "units" separated by filler words: an explicit aspect is an entity word
// followed by a cue word of its polarity, an implicit aspect is a bare entity.
// Polarities follow a chain: the first is uniform, each next one copies its left
// neighbour with probability `coherence` and is redrawn uniformly otherwise.
struct SynthSpec {
  std::size_t vocab_size = 120;  // entities + cue words + fillers
  std::size_t examples = 1000;
  std::size_t min_aspects = 1;
  std::size_t max_aspects = 3;
  double coherence = 1.0;
  // Exact share of all aspects made implicit. Every implicit aspect keeps at
  // least one explicit neighbour, so it is recoverable from coherency alone.
  double implicit_fraction = 0.0;
  // In examples with an implicit aspect, add distractor units (non-aspect
  // entity + cue) until every polarity has the same number of cues. The global
  // cue inventory then carries no information about the implicit label.
  bool balance_cues = true;
  std::size_t min_gap = 3;  // filler words between units
  std::size_t max_gap = 6;

  void validate() const;
  KeyValues to_key_values() const;
  static SynthSpec from_key_values(const KeyValues& kv);
};

// Deterministic in (spec, seed). Throws DataError when the requested implicit
// fraction cannot be placed under the neighbour constraint.
Dataset generate_synthetic_corpus(const SynthSpec& spec, std::uint64_t seed);

}  // namespace lsa::corpus
