#include "fluxcube/synth.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <random>

#include <json.hpp>

#include "fluxcube/error.hpp"

namespace fluxcube {

using nlohmann::json;

namespace {

constexpr double kDivergence = 10.0;

std::vector<std::string> numbered(const char* prefix, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%s%02zu", prefix, i);
    out.emplace_back(buf);
  }
  return out;
}

SynthSpec blank(const std::string& name, std::size_t L, std::size_t K, std::uint64_t seed, std::size_t steps) {
  SynthSpec s;
  s.name = name;
  s.steps = steps;
  s.location_labels = numbered("loc", L);
  s.keyword_labels = numbered("kw", K);
  s.groups = GroupAssignment::single(L);
  s.reaction = ReactionParams(L, K);
  s.initial = Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(L), static_cast<Eigen::Index>(K), 0.1);
  s.seed = seed;
  return s;
}

Eigen::MatrixXd zero_gains(std::size_t p, std::size_t L, std::size_t K) {
  return Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(L * K));
}

SynthSpec logistic_solo(std::uint64_t seed, std::size_t steps) {
  SynthSpec s = blank("logistic-solo", 1, 1, seed, steps);
  s.reaction.set_growth(0, 0, 0.1);
  s.reaction.set_capacity(0, 0, 0.8);
  s.initial(0, 0) = 0.05;
  return s;
}

// Two keywords that suppress each other, each kicked by its own annual spike so
// the trajectory keeps visiting off-equilibrium states.
SynthSpec competition_pair(std::uint64_t seed, std::size_t steps) {
  SynthSpec s = blank("competition-pair", 1, 2, seed, steps);
  s.reaction.set_growth(0, 0, 0.3);
  s.reaction.set_growth(0, 1, 0.25);
  s.reaction.set_capacity(0, 0, 0.9);
  s.reaction.set_capacity(0, 1, 0.8);
  Eigen::MatrixXd c(2, 2);
  c << 1.0, 0.4, 0.4, 1.0;
  s.reaction.set_coupling_matrix(0, c);
  s.seasonal.values = zero_gains(s.period, 1, 2);
  s.seasonal.values(10, 0) = 0.6;
  s.seasonal.values(36, 1) = 0.6;
  s.noise = 0.01;
  s.initial << 0.1, 0.3;
  return s;
}

SynthSpec seasonal_spike(std::uint64_t seed, std::size_t steps) {
  SynthSpec s = blank("seasonal-spike", 2, 2, seed, steps);
  const double growth[2][2] = {{0.3, 0.2}, {0.25, 0.35}};
  const double capacity[2][2] = {{0.6, 0.5}, {0.7, 0.55}};
  for (std::size_t i = 0; i < 2; ++i) {
    for (std::size_t j = 0; j < 2; ++j) {
      s.reaction.set_growth(i, j, growth[i][j]);
      s.reaction.set_capacity(i, j, capacity[i][j]);
    }
  }
  s.seasonal.values = zero_gains(s.period, 2, 2);
  s.seasonal.values.row(10).setConstant(0.5);
  s.noise = 0.03;
  s.initial.setConstant(0.3);
  return s;
}

// Group 0 (locations 0-1) and group 1 (locations 2-7) run different reaction
// regimes; group 1 receives a constant inflow of keyword 0 from group 0.
SynthSpec two_group_flow(std::uint64_t seed, std::size_t steps) {
  constexpr std::size_t L = 8, K = 3, A = 2;
  SynthSpec s = blank("two-group-flow", L, K, seed, steps);
  s.groups.count = 2;
  for (std::size_t i = 0; i < L; ++i) s.groups.group[i] = i < A ? 0 : 1;
  std::mt19937_64 rng(0x7a0f10u);  // fixed: the regime layout does not depend on the noise seed
  std::uniform_real_distribution<double> jitter(-1.0, 1.0);
  // Group 0 cycles through its keywords (rock-paper-scissors competition). Group 1 keyword 0 is held
  // down by keyword 1 and lives off the inflow, so it echoes group 0's cycle; keywords 1 and 2 settle.
  const double growth[2][K] = {{0.5, 0.5, 0.5}, {0.1, 0.3, 0.2}};
  const double capacity[2][K] = {{0.8, 0.8, 0.8}, {1.0, 0.4, 0.3}};
  const double start[2][K] = {{0.5, 0.3, 0.1}, {0.001, 0.001, 0.001}};
  for (std::size_t i = 0; i < L; ++i) {
    const std::size_t g = i < A ? 0 : 1;
    for (std::size_t j = 0; j < K; ++j) {
      s.reaction.set_growth(i, j, growth[g][j] * (1.0 + 0.02 * jitter(rng)));
      s.reaction.set_capacity(i, j, capacity[g][j] * (1.0 + 0.01 * jitter(rng)));
      s.initial(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = start[g][j];
    }
    Eigen::MatrixXd c = Eigen::MatrixXd::Identity(K, K);
    if (g == 0) {
      for (std::size_t j = 0; j < K; ++j) {
        c(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>((j + 1) % K)) = 0.5;
        c(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>((j + 2) % K)) = 1.45;
      }
    } else {
      c(0, 1) = 5.0;
    }
    s.reaction.set_coupling_matrix(i, c);
  }
  DiffusionTensor d(2, K);
  d(1, 0, 0) = 0.1;
  s.diffusion.push_back({0, d});
  s.seasonal.values = zero_gains(s.period, L, K);
  for (std::size_t i = A; i < L; ++i) s.seasonal.values(30, static_cast<Eigen::Index>(i * K + 2)) = 0.4;
  s.noise = 0.0005;
  return s;
}

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from(const json& j, std::size_t rows, std::size_t cols, const char* what) {
  if (!j.is_array() || j.size() != rows) throw InputError(std::string(what) + ": expected " + std::to_string(rows) + " rows");
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) {
      throw InputError(std::string(what) + ": expected " + std::to_string(cols) + " columns in row " + std::to_string(r));
    }
    for (std::size_t c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
  }
  return m;
}

}  // namespace

void SynthSpec::validate() const {
  const std::size_t L = locations(), K = keywords();
  if (L == 0 || K == 0) throw InputError("synth spec needs at least one location and one keyword");
  if (steps < 2) throw InputError("synth spec needs at least 2 steps");
  if (period == 0) throw InputError("synth period must be positive");
  if (cadence_days <= 0) throw InputError("synth cadence must be positive");
  if (!(noise >= 0.0)) throw InputError("observation noise must be non-negative");
  groups.validate(L);
  if (reaction.locations != L || reaction.keywords != K) throw InputError("reaction parameters do not match the axes");
  for (std::size_t i = 0; i < L; ++i) {
    for (std::size_t j = 0; j < K; ++j) {
      if (!(reaction.growth(i, j) > 0.0) || !(reaction.capacity(i, j) > 0.0)) {
        throw InputError("growth rates and capacities must be positive");
      }
    }
  }
  if (initial.rows() != static_cast<Eigen::Index>(L) || initial.cols() != static_cast<Eigen::Index>(K)) {
    throw InputError("initial state must be L x K");
  }
  if ((initial.array() < 0.0).any()) throw InputError("initial state must be non-negative");
  if (seasonal.enabled()) {
    if (seasonal.values.rows() != static_cast<Eigen::Index>(period) || seasonal.values.cols() != static_cast<Eigen::Index>(L * K)) {
      throw InputError("seasonal gains must be p x (L*K)");
    }
    if ((seasonal.values.array() < 0.0).any()) throw InputError("seasonal gains must be non-negative");
  }
  std::size_t prev = 0;
  for (std::size_t n = 0; n < diffusion.size(); ++n) {
    const auto& seg = diffusion[n];
    if (n > 0 && seg.start <= prev) throw InputError("diffusion segments must have increasing start steps");
    prev = seg.start;
    if (seg.tensor.groups != groups.count || seg.tensor.keywords != K) throw InputError("diffusion tensor must be d_l x d_l x K");
    for (std::size_t g = 0; g < groups.count; ++g) {
      for (std::size_t f = 0; f < groups.count; ++f) {
        for (std::size_t k = 0; k < K; ++k) {
          const double v = seg.tensor(g, f, k);
          if (!(v >= 0.0)) throw InputError("diffusion intensities must be non-negative");
          if (g == f && v != 0.0) throw InputError("diffusion diagonal must be zero");
        }
      }
    }
  }
}

DiffusionTensor SynthSpec::diffusion_at(std::size_t t) const {
  DiffusionTensor d(groups.count, keywords());
  for (const auto& seg : diffusion) {
    if (seg.start > t) break;
    d = seg.tensor;
  }
  return d;
}

std::vector<Date> SynthSpec::dates() const {
  std::vector<Date> out;
  out.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) out.push_back(start + std::chrono::days(static_cast<long>(t) * cadence_days));
  return out;
}

std::vector<Eigen::MatrixXd> simulate(const SynthSpec& spec) {
  spec.validate();
  std::vector<Eigen::MatrixXd> states;
  states.reserve(spec.steps);
  states.push_back(spec.initial);
  for (std::size_t t = 0; t + 1 < spec.steps; ++t) {
    Eigen::MatrixXd next = forward_step(states.back(), t, spec.reaction, spec.groups, spec.diffusion_at(t), spec.seasonal);
    if (!next.allFinite() || next.cwiseAbs().maxCoeff() > kDivergence) {
      throw NumericError("synthetic trajectory diverged at step " + std::to_string(t + 1) +
                         "; reduce growth rates or diffusion intensities");
    }
    states.push_back(std::move(next));
  }
  return states;
}

ActivityTensor generate(const SynthSpec& spec) {
  const auto states = simulate(spec);
  const std::size_t L = spec.locations(), K = spec.keywords();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<double> values;
  values.reserve(spec.steps * L * K);
  for (const auto& x : states) {
    for (std::size_t i = 0; i < L; ++i) {
      for (std::size_t j = 0; j < K; ++j) {
        double v = x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        if (spec.noise > 0.0) v += spec.noise * noise(rng);
        values.push_back(std::clamp(v, 0.0, kStateClamp));
      }
    }
  }
  return ActivityTensor(spec.dates(), spec.location_labels, spec.keyword_labels, std::move(values), false);
}

std::vector<std::string> scenario_names() {
  return {"logistic-solo", "two-group-flow", "seasonal-spike", "competition-pair"};
}

SynthSpec scenario(const std::string& name, std::uint64_t seed, std::size_t steps) {
  if (name == "logistic-solo") return logistic_solo(seed, steps);
  if (name == "two-group-flow") return two_group_flow(seed, steps);
  if (name == "seasonal-spike") return seasonal_spike(seed, steps);
  if (name == "competition-pair") return competition_pair(seed, steps);
  std::string list;
  for (const auto& n : scenario_names()) list += (list.empty() ? "" : ", ") + n;
  throw InputError("unknown scenario '" + name + "'; available: " + list);
}

std::vector<SynthSpec> standard_scenarios(std::uint64_t seed) {
  std::vector<SynthSpec> out;
  for (const auto& n : scenario_names()) out.push_back(scenario(n, seed));
  return out;
}

std::string spec_to_json(const SynthSpec& spec) {
  const std::size_t L = spec.locations(), K = spec.keywords();
  Eigen::MatrixXd growth(L, K), capacity(L, K);
  for (std::size_t i = 0; i < L; ++i) {
    for (std::size_t j = 0; j < K; ++j) {
      growth(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = spec.reaction.growth(i, j);
      capacity(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = spec.reaction.capacity(i, j);
    }
  }
  json segments = json::array();
  for (const auto& seg : spec.diffusion) segments.push_back({{"start", seg.start}, {"values", seg.tensor.values}});
  json doc{{"name", spec.name},
           {"steps", spec.steps},
           {"period", spec.period},
           {"locations", spec.location_labels},
           {"keywords", spec.keyword_labels},
           {"groups", spec.groups.count},
           {"group_of", spec.groups.group},
           {"growth", matrix_json(growth)},
           {"capacity", matrix_json(capacity)},
           {"interaction", matrix_json(spec.reaction.interaction)},
           {"diffusion", segments},
           {"seasonal", spec.seasonal.enabled() ? matrix_json(spec.seasonal.values) : json(nullptr)},
           {"noise", spec.noise},
           {"initial", matrix_json(spec.initial)},
           {"seed", spec.seed},
           {"start", format_date(spec.start)},
           {"cadence_days", spec.cadence_days}};
  return doc.dump(2) + "\n";
}

SynthSpec spec_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string("synth spec is not valid JSON: ") + e.what());
  }
  try {
    SynthSpec s;
    s.name = doc.value("name", std::string("custom"));
    s.steps = doc.value("steps", std::size_t{416});
    s.period = doc.value("period", std::size_t{52});
    s.location_labels = doc.at("locations").get<std::vector<std::string>>();
    s.keyword_labels = doc.at("keywords").get<std::vector<std::string>>();
    const std::size_t L = s.locations(), K = s.keywords();
    s.groups.count = doc.value("groups", std::size_t{1});
    s.groups.group = doc.contains("group_of") ? doc["group_of"].get<std::vector<std::size_t>>()
                                             : std::vector<std::size_t>(L, 0);
    s.reaction = ReactionParams(L, K);
    const Eigen::MatrixXd growth = matrix_from(doc.at("growth"), L, K, "growth");
    const Eigen::MatrixXd capacity = matrix_from(doc.at("capacity"), L, K, "capacity");
    for (std::size_t i = 0; i < L; ++i) {
      for (std::size_t j = 0; j < K; ++j) {
        const double a = growth(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        const double b = capacity(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
        if (!(a > 0.0) || !(b > 0.0)) throw InputError("growth rates and capacities must be positive");
        s.reaction.set_growth(i, j, a);
        s.reaction.set_capacity(i, j, b);
      }
    }
    if (doc.contains("interaction")) {
      const Eigen::MatrixXd c = matrix_from(doc["interaction"], L * K, K, "interaction");
      for (std::size_t i = 0; i < L; ++i) s.reaction.set_coupling_matrix(i, c.middleRows(static_cast<Eigen::Index>(i * K), static_cast<Eigen::Index>(K)));
    }
    if (doc.contains("diffusion")) {
      for (const auto& seg : doc["diffusion"]) {
        DiffusionSegment d{seg.at("start").get<std::size_t>(), DiffusionTensor(s.groups.count, K)};
        d.tensor.values = seg.at("values").get<std::vector<double>>();
        if (d.tensor.values.size() != s.groups.count * s.groups.count * K) {
          throw InputError("diffusion segment must hold d_l * d_l * K values");
        }
        s.diffusion.push_back(std::move(d));
      }
    }
    if (doc.contains("seasonal") && !doc["seasonal"].is_null()) {
      s.seasonal.values = matrix_from(doc["seasonal"], s.period, L * K, "seasonal");
    }
    s.noise = doc.value("noise", 0.0);
    s.initial = matrix_from(doc.at("initial"), L, K, "initial");
    s.seed = doc.value("seed", std::uint64_t{0});
    if (doc.contains("start")) s.start = parse_date(doc["start"].get<std::string>());
    s.cadence_days = doc.value("cadence_days", 7);
    s.validate();
    return s;
  } catch (const json::exception& e) {
    throw InputError(std::string("invalid synth spec: ") + e.what());
  }
}

std::string trajectory_hash(const ActivityTensor& tensor) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (double v : tensor.values()) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    for (int b = 0; b < 8; ++b) {
      h ^= (bits >> (8 * b)) & 0xffu;
      h *= 0x100000001b3ull;
    }
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string truth_json(const SynthSpec& spec, const ActivityTensor& tensor) {
  json doc{{"spec", json::parse(spec_to_json(spec))}, {"trajectory_hash", trajectory_hash(tensor)}};
  return doc.dump(2) + "\n";
}

}  // namespace fluxcube
