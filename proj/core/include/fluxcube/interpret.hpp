#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fluxcube/model.hpp"

namespace fluxcube {

enum class Relationship { competitive, parasitic, commensal, mutualistic, none, unclassified };

const char* to_string(Relationship r);

inline constexpr double kDefaultZeroThreshold = 0.05;

// -1, 0 or +1 after treating |c| <= eps as zero.
int thresholded_sign(double c, double eps);

// Type of the unordered pair from (c_jj', c_j'j).
Relationship classify_pair(double c_forward, double c_backward, double eps = kDefaultZeroThreshold);

struct RelationshipEdge {
  std::size_t source = 0;  // j': the keyword exerting the effect
  std::size_t target = 0;  // j: the keyword whose growth is affected
  Relationship type = Relationship::none;
  double intensity = 0.0;  // |c_jj'|
  int sign = 0;            // thresholded sign of c_jj'
};

struct RelationshipGraph {
  std::vector<RelationshipEdge> edges;  // both directions of every unordered pair, ordered by (target, source)
};

RelationshipGraph classify_relationships(const Eigen::MatrixXd& coupling, double eps = kDefaultZeroThreshold);

enum class FlowAggregation { yearly, full };

struct FlowBucket {
  std::size_t start = 0;  // inclusive step index
  std::size_t end = 0;    // exclusive
  std::string label;      // first date of the bucket
};

struct FlowEntry {
  std::size_t bucket = 0;
  std::size_t source = 0;
  std::size_t destination = 0;
  std::size_t keyword = 0;
  double mean = 0.0;
};

struct FlowSeries {
  std::size_t source = 0;
  std::size_t destination = 0;
  std::size_t keyword = 0;
  std::vector<double> values;  // D^t over [window_start, window_end)
};

struct FlowSummary {
  std::size_t window_start = 0;
  std::size_t window_end = 0;
  std::vector<FlowBucket> buckets;
  std::vector<FlowEntry> flows;   // off-diagonal triples only; empty when d_l = 1
  std::vector<FlowSeries> series;  // top triples by overall mean
};

struct FlowOptions {
  FlowAggregation aggregation = FlowAggregation::yearly;
  std::size_t top_series = 6;
  // Permit windows that run past the modeling range (D^t keeps evolving with t).
  bool allow_forecast_period = false;
};

/// Averages D^t over [start, end) per bucket. Yearly buckets are p steps long,
/// counted from `start`; the last one may be shorter.
FlowSummary summarize_flows(const FluxCubeModel& model, std::size_t start, std::size_t end,
                            const FlowOptions& options = {});
FlowSummary summarize_flows(const FluxCubeModel& model, const FlowOptions& options = {});

struct SeasonalProfile {
  std::vector<double> values;       // S[phase, i, j], phase = 0 .. p-1
  std::vector<std::string> labels;  // calendar position of each phase
};

// Throws InputError for unknown labels.
SeasonalProfile seasonal_profile(const FluxCubeModel& model, const std::string& location, const std::string& keyword);
SeasonalProfile seasonal_profile(const FluxCubeModel& model, std::size_t location, std::size_t keyword);

struct ExplainOptions {
  double zero_threshold = kDefaultZeroThreshold;
  FlowOptions flows;
};

std::string interactions_json(const FluxCubeModel& model, double eps = kDefaultZeroThreshold);
std::string flows_json(const FluxCubeModel& model, const FlowSummary& summary);
std::string seasonality_csv(const FluxCubeModel& model);
std::string groups_json(const FluxCubeModel& model);

/// Writes interactions.json, flows.json, seasonality.csv and groups.json into
/// `dir` (created if missing). Throws InputError if the directory is unusable.
void explain(const FluxCubeModel& model, const std::filesystem::path& dir, const ExplainOptions& options = {});

}  // namespace fluxcube
