#pragma once

#include <filesystem>
#include <string>

#include "lsa/corpus/types.hpp"

namespace lsa::corpus {

enum class DatasetFormat { kAbsaJson, kSemEvalXml };

// Picks the format from the extension: ".xml" -> SemEval, anything else -> absa-json.
DatasetFormat format_for_path(const std::filesystem::path& path);

Dataset load_dataset(const std::filesystem::path& path, DatasetFormat format);
Dataset load_dataset(const std::filesystem::path& path);

// absa-json text <-> Dataset. `source` prefixes error messages.
Dataset parse_absa_json(const std::string& text, const std::string& source = "<json>");
// SemEval-2014 aspect-term XML. Character offsets are mapped to token spans via
// the tokenizer; "conflict" aspects are skipped and counted.
Dataset parse_semeval_xml(const std::string& text, const std::string& source = "<xml>");

// Canonical absa-json (sorted keys, 2-space indent, trailing newline). Loading
// the output and serializing again yields identical bytes.
std::string serialize_dataset(const Dataset& dataset);
void save_dataset(const Dataset& dataset, const std::filesystem::path& path);

}  // namespace lsa::corpus
