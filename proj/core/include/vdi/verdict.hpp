#pragma once

#include <string>
#include <utility>

namespace vdi {

/// Outcome of a verifier check. A rejection names the check that failed.
struct Verdict {
  bool ok = true;
  std::string failed_check;

  static Verdict accept() { return {}; }
  static Verdict reject(std::string check) { return {false, std::move(check)}; }
  explicit operator bool() const { return ok; }
};

}  // namespace vdi
