#include "fluxcube/tensor_data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_set>

#include "fluxcube/error.hpp"

namespace fluxcube {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename T>
bool parse_number(std::string_view s, T& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

void require_unique(const std::vector<std::string>& labels, const char* axis) {
  std::unordered_set<std::string> seen;
  for (const auto& l : labels) {
    if (!seen.insert(l).second) throw InputError(std::string("duplicate ") + axis + " label '" + l + "'");
  }
}

}  // namespace

Date parse_date(std::string_view text) {
  text = trim(text);
  int y = 0;
  unsigned m = 0, d = 0;
  if (text.size() != 10 || text[4] != '-' || text[7] != '-' || !parse_number(text.substr(0, 4), y) ||
      !parse_number(text.substr(5, 2), m) || !parse_number(text.substr(8, 2), d)) {
    throw InputError("invalid ISO date '" + std::string(text) + "'");
  }
  std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) throw InputError("invalid calendar date '" + std::string(text) + "'");
  return std::chrono::sys_days{ymd};
}

std::string format_date(Date d) {
  std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

int iso_week(Date d) {
  using namespace std::chrono;
  // Thursday of the same ISO week decides the ISO year.
  const weekday wd{d};
  const int iso_wd = wd.iso_encoding();  // Mon=1..Sun=7
  const sys_days thursday = d + days{4 - iso_wd};
  const year y = year_month_day{thursday}.year();
  const sys_days jan1{y / January / 1};
  return static_cast<int>((thursday - jan1).count() / 7) + 1;
}

ActivityTensor::ActivityTensor(std::vector<Date> time_labels, std::vector<std::string> location_labels,
                               std::vector<std::string> keyword_labels, std::vector<double> values,
                               bool normalized)
    : times_(std::move(time_labels)),
      locations_(std::move(location_labels)),
      keywords_(std::move(keyword_labels)),
      values_(std::move(values)),
      normalized_(normalized) {
  if (locations_.empty() || keywords_.empty()) throw InputError("tensor needs at least one location and keyword");
  if (values_.size() != times_.size() * locations_.size() * keywords_.size()) {
    throw InputError("tensor value count does not match T*L*K");
  }
  require_unique(locations_, "location");
  require_unique(keywords_, "keyword");
  for (std::size_t t = 1; t < times_.size(); ++t) {
    if (times_[t] <= times_[t - 1]) throw InputError("time labels must be strictly increasing");
  }
  for (double v : values_) {
    if (!std::isfinite(v)) throw InputError("tensor contains non-finite values");
    if (normalized_ && (v < 0.0 || v > 1.5)) throw InputError("normalized tensor value outside [0, 1.5]");
  }
}

Eigen::MatrixXd ActivityTensor::slice(std::size_t t) const {
  const std::size_t L = locations(), K = keywords();
  Eigen::MatrixXd out(L, K);
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t j = 0; j < K; ++j) out(i, j) = (*this)(t, i, j);
  return out;
}

int ActivityTensor::cadence_days() const {
  if (times_.size() < 2) return 0;
  return static_cast<int>((times_[1] - times_[0]).count());
}

ActivityTensor ActivityTensor::time_range(std::size_t begin, std::size_t end) const {
  end = std::min(end, steps());
  begin = std::min(begin, end);
  const std::size_t stride = locations() * keywords();
  std::vector<double> v(values_.begin() + static_cast<std::ptrdiff_t>(begin * stride),
                        values_.begin() + static_cast<std::ptrdiff_t>(end * stride));
  std::vector<Date> times(times_.begin() + static_cast<std::ptrdiff_t>(begin),
                          times_.begin() + static_cast<std::ptrdiff_t>(end));
  return ActivityTensor(std::move(times), locations_, keywords_, std::move(v), normalized_);
}

std::optional<std::size_t> ActivityTensor::find_location(std::string_view label) const {
  auto it = std::find(locations_.begin(), locations_.end(), label);
  if (it == locations_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - locations_.begin());
}

std::optional<std::size_t> ActivityTensor::find_keyword(std::string_view label) const {
  auto it = std::find(keywords_.begin(), keywords_.end(), label);
  if (it == keywords_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - keywords_.begin());
}

std::optional<std::size_t> ActivityTensor::find_time(Date d) const {
  auto it = std::lower_bound(times_.begin(), times_.end(), d);
  if (it == times_.end() || *it != d) return std::nullopt;
  return static_cast<std::size_t>(it - times_.begin());
}

ActivityTensor parse_csv(std::string_view text, bool interpolate) {
  struct Row {
    Date date;
    std::string location;
    std::string keyword;
    double value;
  };
  std::vector<Row> rows;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = trim(text.substr(0, nl));
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != "date,location,keyword,value") {
        throw InputError("line " + std::to_string(line_no) + ": expected header 'date,location,keyword,value'");
      }
      header_seen = true;
      continue;
    }
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      const auto comma = line.find(',', start);
      fields.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (fields.size() != 4) throw InputError(where + "expected 4 fields, got " + std::to_string(fields.size()));
    Row row;
    try {
      row.date = parse_date(fields[0]);
    } catch (const InputError& e) {
      throw InputError(where + e.what());
    }
    if (fields[1].empty() || fields[2].empty()) throw InputError(where + "empty location or keyword");
    row.location = std::string(fields[1]);
    row.keyword = std::string(fields[2]);
    if (!parse_number(fields[3], row.value) || !std::isfinite(row.value)) {
      throw InputError(where + "value '" + std::string(fields[3]) + "' is not a real number");
    }
    if (row.value < 0.0) throw InputError(where + "negative value");
    rows.push_back(std::move(row));
  }
  if (!header_seen) throw InputError("empty CSV input");

  std::set<Date> date_set;
  std::set<std::string> loc_set, kw_set;
  for (const auto& r : rows) {
    date_set.insert(r.date);
    loc_set.insert(r.location);
    kw_set.insert(r.keyword);
  }
  std::vector<Date> dates(date_set.begin(), date_set.end());
  std::vector<std::string> locs(loc_set.begin(), loc_set.end());
  std::vector<std::string> kws(kw_set.begin(), kw_set.end());
  if (dates.size() < 2) throw InputError("need at least two distinct dates");
  const auto cadence = dates[1] - dates[0];
  for (std::size_t t = 2; t < dates.size(); ++t) {
    if (dates[t] - dates[t - 1] != cadence) {
      throw InputError("non-uniform date cadence between " + format_date(dates[t - 1]) + " and " +
                       format_date(dates[t]));
    }
  }

  std::map<Date, std::size_t> date_idx;
  std::map<std::string, std::size_t> loc_idx, kw_idx;
  for (std::size_t t = 0; t < dates.size(); ++t) date_idx[dates[t]] = t;
  for (std::size_t i = 0; i < locs.size(); ++i) loc_idx[locs[i]] = i;
  for (std::size_t j = 0; j < kws.size(); ++j) kw_idx[kws[j]] = j;

  const std::size_t T = dates.size(), L = locs.size(), K = kws.size();
  std::vector<double> values(T * L * K, std::nan(""));
  std::vector<bool> present(T * L * K, false);
  for (const auto& r : rows) {
    const std::size_t idx = (date_idx[r.date] * L + loc_idx[r.location]) * K + kw_idx[r.keyword];
    if (present[idx]) {
      throw InputError("duplicate entry (" + format_date(r.date) + ", " + r.location + ", " + r.keyword + ")");
    }
    present[idx] = true;
    values[idx] = r.value;
  }

  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t i = 0; i < L; ++i) {
      for (std::size_t j = 0; j < K; ++j) {
        const std::size_t idx = (t * L + i) * K + j;
        if (present[idx]) continue;
        const std::string triple = "(" + format_date(dates[t]) + ", " + locs[i] + ", " + kws[j] + ")";
        if (!interpolate) throw InputError("missing entry " + triple);
        std::optional<std::size_t> before, after;
        for (std::size_t s = t; s-- > 0;) {
          if (present[(s * L + i) * K + j]) {
            before = s;
            break;
          }
        }
        for (std::size_t s = t + 1; s < T; ++s) {
          if (present[(s * L + i) * K + j]) {
            after = s;
            break;
          }
        }
        if (!before || !after) throw InputError("cannot interpolate missing boundary entry " + triple);
        const double lo = values[(*before * L + i) * K + j];
        const double hi = values[(*after * L + i) * K + j];
        const double w = static_cast<double>(t - *before) / static_cast<double>(*after - *before);
        values[idx] = lo + w * (hi - lo);
      }
    }
  }
  return ActivityTensor(std::move(dates), std::move(locs), std::move(kws), std::move(values));
}

ActivityTensor load_csv(const std::filesystem::path& path, bool interpolate) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str(), interpolate);
}

std::string to_csv(const ActivityTensor& tensor) {
  std::string out = "date,location,keyword,value\n";
  char buf[64];
  for (std::size_t t = 0; t < tensor.steps(); ++t) {
    const std::string date = format_date(tensor.time_labels()[t]);
    for (std::size_t i = 0; i < tensor.locations(); ++i) {
      for (std::size_t j = 0; j < tensor.keywords(); ++j) {
        std::snprintf(buf, sizeof(buf), "%.17g", tensor(t, i, j));
        out += date;
        out += ',';
        out += tensor.location_labels()[i];
        out += ',';
        out += tensor.keyword_labels()[j];
        out += ',';
        out += buf;
        out += '\n';
      }
    }
  }
  return out;
}

void write_csv(const std::filesystem::path& path, const ActivityTensor& tensor) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << to_csv(tensor);
  if (!out) throw InputError("failed writing '" + path.string() + "'");
}

NormStats NormStats::identity(std::size_t locations, std::size_t keywords) {
  NormStats s;
  s.locations = locations;
  s.keywords = keywords;
  s.min.assign(locations * keywords, 0.0);
  s.max.assign(locations * keywords, 1.0);
  s.constant.assign(locations * keywords, false);
  return s;
}

std::pair<ActivityTensor, NormStats> normalize(const ActivityTensor& tensor, std::size_t stats_window_end) {
  if (tensor.normalized()) throw InputError("tensor is already normalized");
  if (stats_window_end == 0 || stats_window_end > tensor.steps()) {
    throw InputError("normalization window must be within [1, T]");
  }
  const std::size_t L = tensor.locations(), K = tensor.keywords();
  NormStats stats;
  stats.locations = L;
  stats.keywords = K;
  stats.window_end = stats_window_end;
  stats.min.assign(L * K, 0.0);
  stats.max.assign(L * K, 0.0);
  stats.constant.assign(L * K, false);
  for (std::size_t i = 0; i < L; ++i) {
    for (std::size_t j = 0; j < K; ++j) {
      double lo = tensor(0, i, j), hi = lo;
      for (std::size_t t = 1; t < stats_window_end; ++t) {
        lo = std::min(lo, tensor(t, i, j));
        hi = std::max(hi, tensor(t, i, j));
      }
      stats.min[i * K + j] = lo;
      stats.max[i * K + j] = hi;
      stats.constant[i * K + j] = !(hi > lo);
    }
  }
  ActivityTensor out = apply_normalization(tensor, stats);
  return {std::move(out), std::move(stats)};
}

ActivityTensor apply_normalization(const ActivityTensor& tensor, NormStats& stats) {
  const std::size_t T = tensor.steps(), L = tensor.locations(), K = tensor.keywords();
  if (stats.locations != L || stats.keywords != K) throw InputError("normalization stats do not match tensor axes");
  std::vector<double> v(T * L * K);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t i = 0; i < L; ++i) {
      for (std::size_t j = 0; j < K; ++j) {
        const std::size_t s = i * K + j;
        double x = 0.0;
        if (!stats.constant[s]) x = (tensor(t, i, j) - stats.min[s]) / (stats.max[s] - stats.min[s]);
        if (x < 0.0 || x > stats.clamp_limit) {
          x = std::clamp(x, 0.0, stats.clamp_limit);
          ++stats.clamped;
        }
        v[(t * L + i) * K + j] = x;
      }
    }
  }
  return ActivityTensor(tensor.time_labels(), tensor.location_labels(), tensor.keyword_labels(), std::move(v), true);
}

double denormalize_value(double v, const NormStats& stats, std::size_t i, std::size_t j) {
  const std::size_t s = i * stats.keywords + j;
  if (stats.constant[s]) return stats.min[s];
  return v * (stats.max[s] - stats.min[s]) + stats.min[s];
}

ActivityTensor denormalize(const ActivityTensor& tensor, const NormStats& stats) {
  const std::size_t T = tensor.steps(), L = tensor.locations(), K = tensor.keywords();
  if (stats.locations != L || stats.keywords != K) throw InputError("normalization stats do not match tensor axes");
  std::vector<double> v(T * L * K);
  for (std::size_t t = 0; t < T; ++t)
    for (std::size_t i = 0; i < L; ++i)
      for (std::size_t j = 0; j < K; ++j) v[(t * L + i) * K + j] = denormalize_value(tensor(t, i, j), stats, i, j);
  return ActivityTensor(tensor.time_labels(), tensor.location_labels(), tensor.keyword_labels(), std::move(v), false);
}

SplitResult split(const ActivityTensor& tensor, const SplitSpec& spec) {
  if (spec.modeling_end < 1 || spec.modeling_end > tensor.steps()) throw InputError("t_c must lie in [1, T]");
  if (spec.horizon < 1) throw InputError("forecast horizon must be at least 1");
  SplitResult r;
  r.modeling = tensor.time_range(0, spec.modeling_end);
  const std::size_t end = std::min(spec.modeling_end + spec.horizon, tensor.steps());
  r.truth = tensor.time_range(spec.modeling_end, end);
  r.truth_length = end - spec.modeling_end;
  r.truncated = r.truth_length < spec.horizon;
  return r;
}

}  // namespace fluxcube
