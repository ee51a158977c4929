#include "fluxcube/interpret.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "fluxcube/error.hpp"

namespace fluxcube {

using nlohmann::json;

const char* to_string(Relationship r) {
  switch (r) {
    case Relationship::competitive: return "competitive";
    case Relationship::parasitic: return "parasitic";
    case Relationship::commensal: return "commensal";
    case Relationship::mutualistic: return "mutualistic";
    case Relationship::none: return "none";
    case Relationship::unclassified: return "unclassified";
  }
  return "unknown";
}

int thresholded_sign(double c, double eps) {
  if (std::abs(c) <= eps) return 0;
  return c > 0.0 ? 1 : -1;
}

Relationship classify_pair(double c_forward, double c_backward, double eps) {
  const int s1 = thresholded_sign(c_forward, eps);
  const int s2 = thresholded_sign(c_backward, eps);
  if (s1 > 0 && s2 > 0) return Relationship::competitive;
  if (s1 < 0 && s2 < 0) return Relationship::mutualistic;
  if (s1 * s2 < 0) return Relationship::parasitic;
  if (s1 == 0 && s2 == 0) return Relationship::none;
  if (s1 < 0 || s2 < 0) return Relationship::commensal;
  return Relationship::unclassified;  // one positive, one zero
}

RelationshipGraph classify_relationships(const Eigen::MatrixXd& coupling, double eps) {
  if (coupling.rows() != coupling.cols()) throw InputError("interaction matrix must be square");
  RelationshipGraph graph;
  const auto K = static_cast<std::size_t>(coupling.rows());
  for (std::size_t j = 0; j < K; ++j) {
    for (std::size_t src = 0; src < K; ++src) {
      if (src == j) continue;
      const double c = coupling(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(src));
      const double back = coupling(static_cast<Eigen::Index>(src), static_cast<Eigen::Index>(j));
      graph.edges.push_back({src, j, classify_pair(c, back, eps), std::abs(c), thresholded_sign(c, eps)});
    }
  }
  return graph;
}

namespace {

std::string time_label(const FluxCubeModel& model, std::size_t t) {
  if (t < model.time_labels.size()) return format_date(model.time_labels[t]);
  if (model.time_labels.empty()) return "t" + std::to_string(t);
  const long extra = static_cast<long>(t - (model.time_labels.size() - 1));
  return format_date(model.time_labels.back() + std::chrono::days(extra * model.cadence_days()));
}

}  // namespace

FlowSummary summarize_flows(const FluxCubeModel& model, std::size_t start, std::size_t end,
                            const FlowOptions& options) {
  const std::size_t tc = model.modeling_steps();
  if (start >= end) throw InputError("flow window is empty");
  if (!options.allow_forecast_period && end > tc) {
    throw InputError("flow window ends at step " + std::to_string(end) + " beyond the modeling range of " +
                     std::to_string(tc) + " steps");
  }
  FlowSummary out;
  out.window_start = start;
  out.window_end = end;
  const std::size_t period = std::max<std::size_t>(1, model.dynamics.seasonality.period);
  const std::size_t span = options.aggregation == FlowAggregation::yearly ? period : end - start;
  for (std::size_t b = start; b < end; b += span) {
    out.buckets.push_back({b, std::min(end, b + span), time_label(model, b)});
  }
  const DiffusionNet& net = model.dynamics.diffusion;
  const std::size_t G = model.dynamics.groups.count;
  const std::size_t K = model.keyword_labels.size();
  if (G < 2) return out;

  const std::vector<DiffusionTensor> d = net.materialize(end);
  struct Triple {
    std::size_t src, dst, k;
    double overall;
  };
  std::vector<Triple> triples;
  for (std::size_t dst = 0; dst < G; ++dst) {
    for (std::size_t src = 0; src < G; ++src) {
      if (src == dst) continue;
      for (std::size_t k = 0; k < K; ++k) {
        double total = 0.0;
        for (std::size_t b = 0; b < out.buckets.size(); ++b) {
          double s = 0.0;
          for (std::size_t t = out.buckets[b].start; t < out.buckets[b].end; ++t) s += d[t](dst, src, k);
          total += s;
          out.flows.push_back({b, src, dst, k, s / static_cast<double>(out.buckets[b].end - out.buckets[b].start)});
        }
        triples.push_back({src, dst, k, total / static_cast<double>(end - start)});
      }
    }
  }
  std::stable_sort(triples.begin(), triples.end(), [](const Triple& a, const Triple& b) { return a.overall > b.overall; });
  const std::size_t n = std::min(options.top_series, triples.size());
  for (std::size_t r = 0; r < n; ++r) {
    FlowSeries s{triples[r].src, triples[r].dst, triples[r].k, {}};
    for (std::size_t t = start; t < end; ++t) s.values.push_back(d[t](s.destination, s.source, s.keyword));
    out.series.push_back(std::move(s));
  }
  return out;
}

FlowSummary summarize_flows(const FluxCubeModel& model, const FlowOptions& options) {
  return summarize_flows(model, 0, model.modeling_steps(), options);
}

SeasonalProfile seasonal_profile(const FluxCubeModel& model, std::size_t location, std::size_t keyword) {
  if (location >= model.location_labels.size() || keyword >= model.keyword_labels.size()) {
    throw InputError("seasonal profile index out of range");
  }
  const SeasonalityMatrix& s = model.dynamics.seasonality;
  SeasonalProfile out;
  const bool weekly = model.cadence_days() == 7;
  for (std::size_t phase = 0; phase < s.period; ++phase) {
    out.values.push_back(s.enabled ? s.gain(phase, location, keyword) : 0.0);
    if (phase < model.time_labels.size()) {
      const Date d = model.time_labels[phase];
      if (weekly) {
        char buf[8];
        std::snprintf(buf, sizeof(buf), "W%02d", iso_week(d));
        out.labels.emplace_back(buf);
      } else {
        out.labels.push_back(format_date(d));
      }
    } else {
      out.labels.push_back("phase" + std::to_string(phase));
    }
  }
  return out;
}

SeasonalProfile seasonal_profile(const FluxCubeModel& model, const std::string& location, const std::string& keyword) {
  const auto li = std::find(model.location_labels.begin(), model.location_labels.end(), location);
  if (li == model.location_labels.end()) throw InputError("unknown location '" + location + "'");
  const auto ki = std::find(model.keyword_labels.begin(), model.keyword_labels.end(), keyword);
  if (ki == model.keyword_labels.end()) throw InputError("unknown keyword '" + keyword + "'");
  return seasonal_profile(model, static_cast<std::size_t>(li - model.location_labels.begin()),
                          static_cast<std::size_t>(ki - model.keyword_labels.begin()));
}

std::string interactions_json(const FluxCubeModel& model, double eps) {
  json locations = json::array();
  const auto& r = model.dynamics.reaction;
  for (std::size_t i = 0; i < model.location_labels.size(); ++i) {
    json edges = json::array();
    for (const auto& e : classify_relationships(r.coupling_matrix(i), eps).edges) {
      edges.push_back({{"source", model.keyword_labels[e.source]},
                       {"target", model.keyword_labels[e.target]},
                       {"type", to_string(e.type)},
                       {"intensity", e.intensity},
                       {"sign", e.sign},
                       {"coefficient", r.coupling(i, e.target, e.source)}});
    }
    json growth = json::object(), capacity = json::object();
    for (std::size_t j = 0; j < model.keyword_labels.size(); ++j) {
      growth[model.keyword_labels[j]] = r.growth(i, j);
      capacity[model.keyword_labels[j]] = r.capacity(i, j);
    }
    locations.push_back({{"location", model.location_labels[i]},
                         {"group", model.dynamics.groups.group[i]},
                         {"growth", growth},
                         {"capacity", capacity},
                         {"edges", edges}});
  }
  json doc{{"zero_threshold", eps}, {"keywords", model.keyword_labels}, {"locations", locations}};
  return doc.dump(2) + "\n";
}

std::string flows_json(const FluxCubeModel& model, const FlowSummary& summary) {
  json buckets = json::array();
  for (const auto& b : summary.buckets) buckets.push_back({{"start", b.start}, {"end", b.end}, {"label", b.label}});
  json flows = json::array();
  for (const auto& f : summary.flows) {
    flows.push_back({{"bucket", f.bucket},
                     {"source_group", f.source},
                     {"destination_group", f.destination},
                     {"keyword", model.keyword_labels[f.keyword]},
                     {"mean", f.mean}});
  }
  json series = json::array();
  for (const auto& s : summary.series) {
    series.push_back({{"source_group", s.source},
                      {"destination_group", s.destination},
                      {"keyword", model.keyword_labels[s.keyword]},
                      {"values", s.values}});
  }
  json doc{{"groups", model.dynamics.groups.count},
           {"diffusion_mode", to_string(model.dynamics.diffusion.mode)},
           {"window", {{"start", summary.window_start}, {"end", summary.window_end}}},
           {"buckets", buckets},
           {"flows", flows},
           {"series", series}};
  return doc.dump(2) + "\n";
}

std::string seasonality_csv(const FluxCubeModel& model) {
  std::string out = "phase,label,location,keyword,value\n";
  char buf[64];
  for (std::size_t i = 0; i < model.location_labels.size(); ++i) {
    for (std::size_t j = 0; j < model.keyword_labels.size(); ++j) {
      const SeasonalProfile p = seasonal_profile(model, i, j);
      for (std::size_t phase = 0; phase < p.values.size(); ++phase) {
        std::snprintf(buf, sizeof(buf), "%.10g", p.values[phase]);
        out += std::to_string(phase) + "," + p.labels[phase] + "," + model.location_labels[i] + "," +
               model.keyword_labels[j] + "," + buf + "\n";
      }
    }
  }
  return out;
}

std::string groups_json(const FluxCubeModel& model) {
  json rows = json::array();
  for (std::size_t i = 0; i < model.location_labels.size(); ++i) {
    json row{{"location", model.location_labels[i]}, {"group", model.dynamics.groups.group[i]}};
    if (model.embedding.rows() == static_cast<Eigen::Index>(model.location_labels.size())) {
      const auto r = static_cast<Eigen::Index>(i);
      row["embedding"] = {model.embedding(r, 0), model.embedding(r, 1)};
    } else {
      row["embedding"] = nullptr;
    }
    rows.push_back(row);
  }
  json doc{{"groups", model.dynamics.groups.count}, {"reducer", model.reducer}, {"locations", rows}};
  return doc.dump(2) + "\n";
}

void explain(const FluxCubeModel& model, const std::filesystem::path& dir, const ExplainOptions& options) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) throw InputError("cannot create output directory " + dir.string());
  auto write = [&](const char* name, const std::string& body) {
    std::ofstream f(dir / name, std::ios::binary);
    if (!f) throw InputError("cannot write " + (dir / name).string());
    f << body;
    if (!f) throw InputError("failed writing " + (dir / name).string());
  };
  write("interactions.json", interactions_json(model, options.zero_threshold));
  write("flows.json", flows_json(model, summarize_flows(model, options.flows)));
  write("seasonality.csv", seasonality_csv(model));
  write("groups.json", groups_json(model));
}

}  // namespace fluxcube
