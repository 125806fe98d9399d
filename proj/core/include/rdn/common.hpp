#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace rdn {

using Shape = std::vector<int64_t>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape or rank disagreement between operands.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values, log/div below the configured floor, numerical blow-up.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Invalid experiment configuration or file format.
class ConfigError : public Error {
 public:
  using Error::Error;
};

inline int64_t numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) n *= d;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

inline void check(bool cond, const std::string& msg) {
  if (!cond) throw Error(msg);
}

}  // namespace rdn
