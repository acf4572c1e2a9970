#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace envsniff {

struct ProcessResult {
  int exit_code = -1;  // 128 + signal when killed
  bool timed_out = false;
  std::string output;  // stdout and stderr interleaved
};

struct ProcessOptions {
  std::chrono::milliseconds timeout{0};  // 0 = no limit
  std::filesystem::path cwd;
  std::map<std::string, std::string> env;  // added to the inherited environment
};

/// Runs `argv` in its own process group; on timeout the whole group is
/// killed. Throws ExecutorUnavailable when the program cannot be started.
ProcessResult run_process(const std::vector<std::string>& argv, const ProcessOptions& options = {});

/// `/bin/sh -c command`.
ProcessResult run_shell(const std::string& command, const ProcessOptions& options = {});

/// Single-quotes `s` for the POSIX shell.
std::string shell_quote(std::string_view s);

}  // namespace envsniff
