#pragma once

// Command implementations behind the `nfcav` executable.

#include <iosfwd>
#include <set>
#include <string>
#include <vector>

#include "nfcav/app/io.hpp"

namespace nfcav::app {

enum ExitCode : int { kExitOk = 0, kExitInput = 2, kExitGuard = 3, kExitInternal = 4 };

std::string version();

/// Environment variable naming the default config file.
inline constexpr const char* kConfigEnv = "NFCAV_CONFIG";

/// Resolved command configuration, layered defaults < file < flags. Every
/// key has a default; "none" marks an unset optional value.
class RunConfig {
 public:
  explicit RunConfig(KeyValues defaults);

  /// Applies the keys this command knows; keys that belong to no command
  /// are rejected, keys of other commands are skipped.
  void apply_file(const KeyValues& kv, const std::string& source);
  void set(const std::string& key, const std::string& value);

  const KeyValues& values() const { return values_; }
  const std::string& text(const std::string& key) const;
  bool is_set(const std::string& key) const { return text(key) != "none"; }
  double number(const std::string& key) const;
  long integer(const std::string& key) const;

 private:
  KeyValues values_;
};

/// Defaults of one subcommand: simulate, analyze, fitloss or qed.
KeyValues command_defaults(const std::string& command);

/// Parses `args` (without the program name), runs the command and returns
/// the process exit code. Errors go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace nfcav::app
