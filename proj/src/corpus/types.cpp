#include "lsa/corpus/types.hpp"

#include <algorithm>

#include "lsa/errors.hpp"

namespace lsa::corpus {

std::string_view polarity_name(Polarity p) {
  switch (p) {
    case Polarity::kPositive:
      return "positive";
    case Polarity::kNegative:
      return "negative";
    case Polarity::kNeutral:
      return "neutral";
  }
  return "neutral";
}

std::optional<Polarity> parse_polarity(std::string_view name) {
  if (name == "positive") return Polarity::kPositive;
  if (name == "negative") return Polarity::kNegative;
  if (name == "neutral") return Polarity::kNeutral;
  return std::nullopt;
}

std::size_t Dataset::pair_count() const {
  std::size_t n = 0;
  for (const auto& ex : examples) n += ex.aspects.size();
  return n;
}

void sort_aspects(Example& example) {
  std::stable_sort(example.aspects.begin(), example.aspects.end(),
                   [](const AspectAnnotation& a, const AspectAnnotation& b) {
                     return a.start != b.start ? a.start < b.start : a.end < b.end;
                   });
}

void validate_example(const Example& example, const std::string& where) {
  if (example.tokens.empty()) throw SchemaError(where + ": example has no tokens");
  const std::size_t n = example.tokens.size();
  for (std::size_t i = 0; i < example.aspects.size(); ++i) {
    const auto& a = example.aspects[i];
    const std::string at = where + ".aspects[" + std::to_string(i) + "]";
    if (a.start >= a.end || a.end > n) {
      throw SchemaError(at + ": span [" + std::to_string(a.start) + ", " + std::to_string(a.end) +
                        ") invalid for " + std::to_string(n) + " tokens");
    }
    if (!std::equal(a.term.begin(), a.term.end(), example.tokens.begin() + a.start,
                    example.tokens.begin() + a.end) ||
        a.term.size() != a.length()) {
      std::string got;
      for (auto k = a.start; k < a.end; ++k) got += (k > a.start ? " " : "") + example.tokens[k];
      std::string want;
      for (std::size_t k = 0; k < a.term.size(); ++k) want += (k ? " " : "") + a.term[k];
      throw SpanMismatchError(at + ": term '" + want + "' does not match span text '" + got + "'");
    }
    if (i > 0) {
      const auto& prev = example.aspects[i - 1];
      if (a.start < prev.start || (a.start == prev.start && a.end < prev.end)) {
        throw SchemaError(at + ": aspects are not sorted by start");
      }
      if (a.start < prev.end) {
        throw SchemaError(at + ": span overlaps or nests inside the previous aspect");
      }
    }
  }
}

}  // namespace lsa::corpus
