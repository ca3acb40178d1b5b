// `tracelens` subcommands. Run() parses argv, dispatches and maps errors to
// exit codes; failures also print one JSON line on the error stream.

#ifndef TRACELENS_CLI_H_
#define TRACELENS_CLI_H_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "tracelens/analyze.h"

namespace tracelens::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,
  kExitIo = 3,
  kExitInternal = 4,
};

struct IngestArgs {
  std::filesystem::path trace_root;
  std::filesystem::path out;
  std::optional<std::int64_t> window_start;  // microseconds
  std::optional<std::int64_t> window_end;
  std::optional<std::filesystem::path> colmap;
};

struct AnalyzeArgs {
  std::filesystem::path jobs;
  std::filesystem::path out_dir;
  analyze::AnalyzeOptions options;
};

struct GenerateArgs {
  std::filesystem::path spec;
  std::filesystem::path out_dir;
};

// Each writes result paths to `out` and throws on failure.
int RunIngest(const IngestArgs& args, std::ostream& out);
int RunAnalyze(const AnalyzeArgs& args, std::ostream& out);
int RunGenerate(const GenerateArgs& args, std::ostream& out);

int Run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tracelens::cli

#endif  // TRACELENS_CLI_H_
