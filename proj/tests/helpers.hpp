#pragma once

#include <string>
#include <vector>

#include "fluxcube/tensor_data.hpp"

namespace fluxcube::test {

inline std::vector<Date> weekly(std::size_t n, const char* first = "2020-01-05") {
  std::vector<Date> out;
  Date d = parse_date(first);
  for (std::size_t t = 0; t < n; ++t) out.push_back(d + std::chrono::days{7 * static_cast<int>(t)});
  return out;
}

inline std::vector<std::string> labels(const char* prefix, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

// T x L x K tensor with weekly dates; values in time-major order.
inline ActivityTensor tensor(std::size_t T, std::size_t L, std::size_t K, std::vector<double> values,
                             bool normalized = false) {
  return ActivityTensor(weekly(T), labels("loc", L), labels("kw", K), std::move(values), normalized);
}

}  // namespace fluxcube::test
