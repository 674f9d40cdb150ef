#pragma once

#include <chrono>
#include <filesystem>
#include <string>

namespace casisr::detail {

struct ProcessResult {
  bool spawned = false;
  bool timed_out = false;
  int exit_code = -1;  // valid when spawned && !timed_out; 128+N for signal N
  std::string output;  // captured stdout+stderr, truncated
};

/// Runs `/bin/sh -c command`, killing its process group after `timeout`.
ProcessResult run_shell(const std::string& command, std::chrono::duration<double> timeout,
                        const std::filesystem::path& capture_file);

}  // namespace casisr::detail
