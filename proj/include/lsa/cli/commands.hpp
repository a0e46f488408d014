#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

namespace lsa::cli {

inline constexpr const char* kCodeVersion = "0.1.0";
inline constexpr const char* kOutputRootEnv = "LSA_OUTPUT_ROOT";

enum ExitCode : int { kOk = 0, kUsage = 1, kDataFailure = 2, kNumericFailure = 3 };

// Every command is a pure function of its JSON inputs and writes into `out_dir`,
// together with a manifest.json that is enough to replay it.
//
//   analyze-clusters  {"dataset"}
//   synth             {"spec": {key: value}, "seed"}
//   train             {"config": {key: value}}
//   eval              {"checkpoint", "dataset", "slice", "parses"}
//   sweep-eta         {"config", "grid"}
//   sweep-seeds       {"config", "seeds", "slice"}
//   export-trajectory {"checkpoint"}
void run_command(const std::string& command, const nlohmann::json& inputs,
                 const std::filesystem::path& out_dir, std::ostream& out);

// Re-runs the command recorded in a manifest into `out_dir`.
void replay(const std::filesystem::path& manifest, const std::filesystem::path& out_dir, std::ostream& out);

// Manifest text for a command; keys sorted, so re-serializing is byte-stable.
std::string manifest_text(const std::string& command, const nlohmann::json& inputs);

// Where a command writes when no --out is given: $LSA_OUTPUT_ROOT/<command>,
// or ./lsa_runs/<command>. A relative --out is taken under the root when the
// variable is set.
std::filesystem::path resolve_output(const std::string& command, const std::string& out_flag);

// Full command line entry point: parses argv, runs, maps errors to exit codes.
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace lsa::cli
