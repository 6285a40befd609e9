#pragma once

#include <string>

#ifndef XDLATE_FIXTURE_DIR
#define XDLATE_FIXTURE_DIR "tests/fixtures"
#endif
#ifndef XDLATE_CLI_PATH
#define XDLATE_CLI_PATH "xdlate"
#endif

namespace support {

inline std::string fixture(const std::string& relative) {
  return std::string(XDLATE_FIXTURE_DIR) + "/" + relative;
}

inline std::string cli_path() { return XDLATE_CLI_PATH; }

}  // namespace support
