#pragma once

#include <array>
#include <cstdio>
#include <string>

namespace support {

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr combined
};

/// Runs a shell command, capturing stdout+stderr. The network guard is
/// always set so no test can accidentally reach out.
inline RunResult run(const std::string& command, const std::string& stdin_text = "") {
  std::string full = "XDLATE_FORBID_NETWORK=1 " + command + " 2>&1";
  if (!stdin_text.empty()) {
    std::string quoted;
    for (char c : stdin_text) {
      if (c == '\'') quoted += "'\\''";
      else quoted.push_back(c);
    }
    full = "printf '%s' '" + quoted + "' | " + full;
  }
  RunResult result;
  FILE* pipe = ::popen(full.c_str(), "r");
  if (pipe == nullptr) return result;
  std::array<char, 4096> buffer;
  std::size_t n;
  while ((n = std::fread(buffer.data(), 1, buffer.size(), pipe)) > 0) {
    result.output.append(buffer.data(), n);
  }
  const int status = ::pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

/// Variant without the deny-all guard, for tests that run a local stub server.
inline RunResult run_networked(const std::string& command) {
  RunResult result;
  FILE* pipe = ::popen((command + " 2>&1").c_str(), "r");
  if (pipe == nullptr) return result;
  std::array<char, 4096> buffer;
  std::size_t n;
  while ((n = std::fread(buffer.data(), 1, buffer.size(), pipe)) > 0) {
    result.output.append(buffer.data(), n);
  }
  const int status = ::pclose(pipe);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

}  // namespace support
