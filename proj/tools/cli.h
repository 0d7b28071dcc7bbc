#ifndef SURPLUS_TOOLS_CLI_H_
#define SURPLUS_TOOLS_CLI_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "surplus/dataset.h"
#include "surplus/evaluation.h"
#include "surplus/importance.h"

namespace surplus::cli {

enum class Command { kSimulate, kAnalyze, kEvaluate, kConsistency, kCompare };

std::string_view command_name(Command c);

struct RunConfig {
  Command command = Command::kAnalyze;
  // Exactly one of these is the dataset source (compare uses `datasets`).
  std::optional<DgpSpec> dgp;
  std::optional<std::filesystem::path> csv;
  std::string target = "y";

  MethodConfig method;
  std::filesystem::path out;
  std::uint64_t seed = 0;
  int jobs = 1;
  bool clip = true;

  // consistency
  std::size_t trials = 5;
  // compare
  std::vector<DgpId> datasets;
  std::vector<Method> methods;
  std::size_t seeds = 10;
  std::size_t truth_n = 20000;
};

// Throws ValidationError for anything that does not describe a valid run.
void validate(const RunConfig& cfg);

// Full resolved configuration, sufficient to reproduce the run.
nlohmann::json manifest(const RunConfig& cfg);

// Parses argv. Throws ValidationError on bad usage. Returns nullopt when
// help was requested (already printed to `out`).
std::optional<RunConfig> parse_command_line(int argc, const char* const* argv,
                                            std::ostream& out);

// Executes a validated run and writes its artifacts. Throws on failure.
void run(const RunConfig& cfg, std::ostream& out);

// argv in, exit status out: 0 success, 2 configuration error, 1 runtime
// error. Failures print {"error": {...}} JSON to `err`.
int main_entry(int argc, const char* const* argv, std::ostream& out,
               std::ostream& err);

}  // namespace surplus::cli

#endif  // SURPLUS_TOOLS_CLI_H_
