#pragma once

#include <stdexcept>
#include <string>

namespace fairsift {

// Single exception type for the whole library. Pipeline stages prepend
// their stage name so callers can tell where a run failed.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace fairsift
