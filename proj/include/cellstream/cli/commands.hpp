#pragma once

#include <filesystem>
#include <iosfwd>

#include "cellstream/cli/config.hpp"

namespace cellstream::cli {

struct CommandContext {
  AppConfig config;
  std::filesystem::path out_dir;
  bool json_output = false;
  std::ostream* out = nullptr;  // command summary stream (stdout in the binary)
};

// Each command returns a process exit code; invalid input surfaces as an
// exception that the entry point turns into exit code 1.
int cmd_generate(const CommandContext& ctx);
int cmd_train(const CommandContext& ctx);
int cmd_eval(const CommandContext& ctx);
int cmd_report(const CommandContext& ctx);

}  // namespace cellstream::cli
