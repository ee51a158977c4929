#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fluxcube/dynamics.hpp"
#include "fluxcube/tensor_data.hpp"

namespace fluxcube {

/// D^t = tensor for every t from `start` until the next segment begins.
struct DiffusionSegment {
  std::size_t start = 0;
  DiffusionTensor tensor;
};

/// Ground-truth parameters for a generated tensor.
struct SynthSpec {
  std::string name;
  std::size_t steps = 416;
  std::size_t period = 52;
  std::vector<std::string> location_labels;
  std::vector<std::string> keyword_labels;
  GroupAssignment groups;
  ReactionParams reaction;
  std::vector<DiffusionSegment> diffusion;  // sorted by start; empty means no diffusion
  SeasonalGains seasonal;                   // p x (L*K) exposed gains; empty means none
  double noise = 0.0;                       // observation noise sigma
  Eigen::MatrixXd initial;                  // L x K
  std::uint64_t seed = 0;
  Date start = Date{std::chrono::year{2015} / 1 / 4};
  int cadence_days = 7;

  std::size_t locations() const { return location_labels.size(); }
  std::size_t keywords() const { return keyword_labels.size(); }
  // Throws InputError describing the first violated constraint.
  void validate() const;
  DiffusionTensor diffusion_at(std::size_t t) const;
  std::vector<Date> dates() const;
};

/// Noise-free state trajectory x_0 .. x_{T-1}. Throws NumericError when any
/// state leaves [-10, 10].
std::vector<Eigen::MatrixXd> simulate(const SynthSpec& spec);

/// simulate() plus i.i.d. Gaussian observation noise, clamped to [0, 1.5].
/// Bit-deterministic for a given spec (including its seed).
ActivityTensor generate(const SynthSpec& spec);

std::vector<std::string> scenario_names();
// Throws InputError listing the available names when `name` is unknown.
SynthSpec scenario(const std::string& name, std::uint64_t seed = 0, std::size_t steps = 416);
std::vector<SynthSpec> standard_scenarios(std::uint64_t seed = 0);

std::string spec_to_json(const SynthSpec& spec);
SynthSpec spec_from_json(const std::string& text);

// 64-bit FNV-1a over the little-endian bytes of every value, as 16 hex digits.
std::string trajectory_hash(const ActivityTensor& tensor);
// {"spec": ..., "trajectory_hash": ...}
std::string truth_json(const SynthSpec& spec, const ActivityTensor& tensor);

}  // namespace fluxcube
