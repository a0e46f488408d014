#include "lsa/corpus/dataset_io.hpp"

#include <algorithm>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <json.hpp>

#include "lsa/encoder/tokenizer.hpp"
#include "lsa/errors.hpp"
#include "lsa/util/keyvalue.hpp"

namespace lsa::corpus {

using nlohmann::json;

namespace {

std::size_t line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + offset, '\n'));
}

const json& field(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(where + ": missing field '" + key + "'");
  return *it;
}

std::string as_string(const json& j, const std::string& where) {
  if (!j.is_string()) throw SchemaError(where + ": expected a string");
  return j.get<std::string>();
}

std::size_t as_index(const json& j, const std::string& where) {
  if (!j.is_number_integer() || j.get<long long>() < 0) {
    throw SchemaError(where + ": expected a non-negative integer");
  }
  return j.get<std::size_t>();
}

std::vector<std::string> as_string_list(const json& j, const std::string& where) {
  if (!j.is_array()) throw SchemaError(where + ": expected an array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(as_string(j[i], where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

AspectAnnotation parse_aspect(const json& j, const std::string& where) {
  if (!j.is_object()) throw SchemaError(where + ": expected an object");
  AspectAnnotation a;
  const auto& span = field(j, "span", where);
  if (!span.is_array() || span.size() != 2) {
    throw SchemaError(where + ".span: expected [start, end]");
  }
  a.start = as_index(span[0], where + ".span[0]");
  a.end = as_index(span[1], where + ".span[1]");
  a.term = as_string_list(field(j, "term", where), where + ".term");
  const auto pol = as_string(field(j, "polarity", where), where + ".polarity");
  const auto parsed = parse_polarity(pol);
  if (!parsed) {
    throw SchemaError(where + ".polarity: unknown polarity '" + pol + "'");
  }
  a.polarity = *parsed;
  if (auto it = j.find("implicit"); it != j.end()) {
    if (!it->is_boolean()) throw SchemaError(where + ".implicit: expected a boolean");
    a.implicit = it->get<bool>();
  }
  return a;
}

Example parse_example(const json& j, const std::string& where) {
  if (!j.is_object()) throw SchemaError(where + ": expected an object");
  Example ex;
  ex.text = as_string(field(j, "text", where), where + ".text");
  ex.tokens = as_string_list(field(j, "tokens", where), where + ".tokens");
  const auto& aspects = field(j, "aspects", where);
  if (!aspects.is_array()) throw SchemaError(where + ".aspects: expected an array");
  for (std::size_t i = 0; i < aspects.size(); ++i) {
    ex.aspects.push_back(parse_aspect(aspects[i], where + ".aspects[" + std::to_string(i) + "]"));
  }
  if (auto it = j.find("parse_ref"); it != j.end()) {
    ex.parse_ref = as_string(*it, where + ".parse_ref");
  }
  sort_aspects(ex);
  validate_example(ex, where);
  return ex;
}

}  // namespace

DatasetFormat format_for_path(const std::filesystem::path& path) {
  return path.extension() == ".xml" ? DatasetFormat::kSemEvalXml : DatasetFormat::kAbsaJson;
}

Dataset parse_absa_json(const std::string& text, const std::string& source) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError(source + ":" + std::to_string(line_of_offset(text, e.byte)) +
                      ": malformed JSON: " + e.what());
  }
  if (!root.is_object()) throw SchemaError(source + ": top level must be an object");
  const auto& version = field(root, "version", source);
  if (!version.is_number_integer() || version.get<int>() != 1) {
    throw SchemaError(source + ".version: only version 1 is supported");
  }
  const auto& examples = field(root, "examples", source);
  if (!examples.is_array()) throw SchemaError(source + ".examples: expected an array");
  Dataset out;
  out.examples.reserve(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    out.examples.push_back(
        parse_example(examples[i], source + ".examples[" + std::to_string(i) + "]"));
  }
  return out;
}

Dataset parse_semeval_xml(const std::string& text, const std::string& source) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  try {
    std::istringstream in(text);
    pt::read_xml(in, tree);
  } catch (const pt::xml_parser_error& e) {
    throw SchemaError(source + ":" + std::to_string(e.line()) + ": malformed XML: " + e.message());
  }
  const auto sentences = tree.get_child_optional("sentences");
  if (!sentences) throw SchemaError(source + ": missing <sentences> root");

  Dataset out;
  std::size_t index = 0;
  for (const auto& [tag, sentence] : *sentences) {
    if (tag != "sentence") continue;
    const std::string where = source + ".sentence[" + std::to_string(index++) + "]";
    Example ex;
    ex.text = sentence.get<std::string>("text", "");
    if (auto id = sentence.get_optional<std::string>("<xmlattr>.id")) ex.parse_ref = *id;
    const auto spans = encoder::tokenize_with_offsets(ex.text);
    for (const auto& s : spans) ex.tokens.push_back(s.text);
    if (ex.tokens.empty()) throw SchemaError(where + ": empty <text>");

    if (const auto terms = sentence.get_child_optional("aspectTerms")) {
      for (const auto& [ttag, term] : *terms) {
        if (ttag != "aspectTerm") continue;
        const auto polarity = term.get<std::string>("<xmlattr>.polarity", "");
        const auto parsed = parse_polarity(polarity);
        if (!parsed) {
          if (polarity == "conflict") {
            ++out.skipped_aspects;
            continue;
          }
          throw SchemaError(where + ": unknown polarity '" + polarity + "'");
        }
        const auto from = term.get<std::size_t>("<xmlattr>.from", 0);
        const auto to = term.get<std::size_t>("<xmlattr>.to", 0);
        const auto surface = term.get<std::string>("<xmlattr>.term", "");
        AspectAnnotation a;
        a.polarity = *parsed;
        a.start = spans.size();
        for (std::size_t k = 0; k < spans.size(); ++k) {
          if (spans[k].end > from && spans[k].begin < to) {
            if (a.start == spans.size()) a.start = k;
            a.end = k + 1;
          }
        }
        if (a.start == spans.size()) {
          throw SpanMismatchError(where + ": aspect '" + surface + "' [" + std::to_string(from) +
                                  ", " + std::to_string(to) + ") covers no token");
        }
        a.term = encoder::tokenize(surface);
        ex.aspects.push_back(std::move(a));
      }
    }
    sort_aspects(ex);
    validate_example(ex, where);
    out.examples.push_back(std::move(ex));
  }
  return out;
}

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format) {
  const auto text = read_file(path);
  return format == DatasetFormat::kSemEvalXml ? parse_semeval_xml(text, path.string())
                                              : parse_absa_json(text, path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
  return load_dataset(path, format_for_path(path));
}

std::string serialize_dataset(const Dataset& dataset) {
  json examples = json::array();
  for (const auto& ex : dataset.examples) {
    json aspects = json::array();
    for (const auto& a : ex.aspects) {
      aspects.push_back({{"span", {a.start, a.end}},
                         {"term", a.term},
                         {"polarity", std::string(polarity_name(a.polarity))},
                         {"implicit", a.implicit}});
    }
    json e = {{"text", ex.text}, {"tokens", ex.tokens}, {"aspects", std::move(aspects)}};
    if (ex.parse_ref) e["parse_ref"] = *ex.parse_ref;
    examples.push_back(std::move(e));
  }
  json root = {{"version", 1}, {"examples", std::move(examples)}};
  return root.dump(2) + "\n";
}

void save_dataset(const Dataset& dataset, const std::filesystem::path& path) {
  write_file(path, serialize_dataset(dataset));
}

}  // namespace lsa::corpus
