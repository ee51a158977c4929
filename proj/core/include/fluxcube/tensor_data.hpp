#pragma once

#include <chrono>
#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace fluxcube {

using Date = std::chrono::sys_days;

// ISO "YYYY-MM-DD". Throws InputError on anything else.
Date parse_date(std::string_view text);
std::string format_date(Date d);
// ISO-8601 week number (1..53) of the given date.
int iso_week(Date d);

/// Dense time x location x keyword grid with axis labels.
///
/// Storage is time-major: value (t, i, j) lives at t*L*K + i*K + j. Instances
/// are immutable once built; all transformations return new tensors.
class ActivityTensor {
 public:
  ActivityTensor() = default;
  ActivityTensor(std::vector<Date> time_labels, std::vector<std::string> location_labels,
                 std::vector<std::string> keyword_labels, std::vector<double> values,
                 bool normalized = false);

  std::size_t steps() const { return times_.size(); }
  std::size_t locations() const { return locations_.size(); }
  std::size_t keywords() const { return keywords_.size(); }

  double operator()(std::size_t t, std::size_t i, std::size_t j) const {
    return values_[(t * locations() + i) * keywords() + j];
  }
  // L x K slice at time t.
  Eigen::MatrixXd slice(std::size_t t) const;

  std::span<const double> values() const { return values_; }
  const std::vector<Date>& time_labels() const { return times_; }
  const std::vector<std::string>& location_labels() const { return locations_; }
  const std::vector<std::string>& keyword_labels() const { return keywords_; }
  bool normalized() const { return normalized_; }

  // Days between consecutive time labels; 0 when fewer than two steps.
  int cadence_days() const;

  // Time steps [begin, end), same labels on the other axes.
  ActivityTensor time_range(std::size_t begin, std::size_t end) const;

  std::optional<std::size_t> find_location(std::string_view label) const;
  std::optional<std::size_t> find_keyword(std::string_view label) const;
  std::optional<std::size_t> find_time(Date d) const;

 private:
  std::vector<Date> times_;
  std::vector<std::string> locations_;
  std::vector<std::string> keywords_;
  std::vector<double> values_;
  bool normalized_ = false;
};

// Long-format CSV with header `date,location,keyword,value`.
ActivityTensor load_csv(const std::filesystem::path& path, bool interpolate = false);
ActivityTensor parse_csv(std::string_view text, bool interpolate = false);
void write_csv(const std::filesystem::path& path, const ActivityTensor& tensor);
std::string to_csv(const ActivityTensor& tensor);

/// Per-(location, keyword) min/max used for min-max scaling.
struct NormStats {
  std::size_t locations = 0;
  std::size_t keywords = 0;
  std::vector<double> min;  // L*K, index i*K + j
  std::vector<double> max;
  std::vector<bool> constant;  // series with max == min, mapped to zeros
  std::size_t window_end = 0;  // stats computed over time steps [0, window_end)
  double clamp_limit = 1.5;
  std::size_t clamped = 0;  // entries clamped into [0, clamp_limit]

  static NormStats identity(std::size_t locations, std::size_t keywords);
  double scale(std::size_t i, std::size_t j) const { return max[i * keywords + j] - min[i * keywords + j]; }
};

// Min-max scale each series using statistics over [0, stats_window_end).
std::pair<ActivityTensor, NormStats> normalize(const ActivityTensor& tensor, std::size_t stats_window_end);
// Scale with existing statistics; out-of-range values are clamped and counted in `stats.clamped`.
ActivityTensor apply_normalization(const ActivityTensor& tensor, NormStats& stats);
ActivityTensor denormalize(const ActivityTensor& tensor, const NormStats& stats);
double denormalize_value(double v, const NormStats& stats, std::size_t i, std::size_t j);

struct SplitSpec {
  std::size_t modeling_end = 0;  // t_c
  std::size_t horizon = 1;       // l_f
};

struct SplitResult {
  ActivityTensor modeling;     // [0, t_c)
  ActivityTensor truth;        // [t_c, min(t_c + l_f, T))
  std::size_t truth_length = 0;
  bool truncated = false;      // truth shorter than requested horizon
};

SplitResult split(const ActivityTensor& tensor, const SplitSpec& spec);

}  // namespace fluxcube
