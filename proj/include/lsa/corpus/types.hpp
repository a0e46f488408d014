#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace lsa::corpus {

inline constexpr std::size_t kNumPolarities = 3;

enum class Polarity : std::size_t { kPositive = 0, kNegative = 1, kNeutral = 2 };

std::string_view polarity_name(Polarity p);
// Accepts "positive" | "negative" | "neutral"; nullopt otherwise.
std::optional<Polarity> parse_polarity(std::string_view name);
inline std::size_t polarity_index(Polarity p) { return static_cast<std::size_t>(p); }

struct AspectAnnotation {
  std::size_t start = 0;  // token span [start, end)
  std::size_t end = 0;
  std::vector<std::string> term;
  Polarity polarity = Polarity::kNeutral;
  bool implicit = false;  // no sentiment cue in the aspect's own local context

  std::size_t length() const { return end - start; }
};

struct Example {
  std::string text;
  std::vector<std::string> tokens;
  std::vector<AspectAnnotation> aspects;  // sorted by (start, end), non-overlapping
  std::optional<std::string> parse_ref;
};

struct Dataset {
  std::vector<Example> examples;
  // SemEval "conflict" aspects dropped by the XML adapter.
  std::size_t skipped_aspects = 0;

  // Number of (example, aspect) classification pairs.
  std::size_t pair_count() const;
};

// Checks the Example invariants (bounds, term/span agreement, ordering, no
// overlap) and throws SchemaError / SpanMismatchError naming `where`.
void validate_example(const Example& example, const std::string& where);

// Sorts aspects by (start, end) in place.
void sort_aspects(Example& example);

}  // namespace lsa::corpus
