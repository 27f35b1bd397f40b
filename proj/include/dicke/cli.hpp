#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace dicke::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitPartial = 3,
  kExitNonConvergence = 4,
};

/// Fully merged run configuration: command defaults, then the --config file,
/// then command-line flags. `values` holds every key the command reads; it is
/// what gets hashed and echoed into output headers.
struct RunConfig {
  std::string command;
  nlohmann::json values = nlohmann::json::object();
  std::filesystem::path out_dir = ".";
  std::string format;

  double real(const std::string& key) const;
  long long integer(const std::string& key) const;
  bool has(const std::string& key) const { return values.contains(key); }
  std::uint64_t seed() const;
};

/// Thrown for anything that should end the run with exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::string> command_names();

/// Defaults of a command as a JSON object (no seed).
nlohmann::json command_defaults(const std::string& command);

/// Merges `file` and `flags` onto the command defaults and validates the
/// result. Setting eps in a layer drops an inherited delta_eps_rel and vice
/// versa. Throws ConfigError.
RunConfig resolve_config(const std::string& command, const nlohmann::json& file, const nlohmann::json& flags);

/// Runs a resolved configuration and writes its output files. Progress goes
/// to `log`, failures to `err`. Returns the exit code.
int execute(const RunConfig& cfg, std::ostream& log, std::ostream& err);

/// Entry point used by the executable; args exclude the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dicke::cli
