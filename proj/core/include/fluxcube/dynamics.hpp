#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace fluxcube {

/// Per-location Lotka-Volterra parameters.
///
/// Growth rates and capacities are stored as logarithms so the exposed values
/// stay strictly positive under unconstrained optimization. Row block i of
/// `interaction` (rows i*K .. i*K+K-1) is the K x K coupling matrix of location
/// i; entry (j, j') is the strength from keyword j' onto keyword j. Its
/// diagonal is held at exactly 1.
struct ReactionParams {
  std::size_t locations = 0;
  std::size_t keywords = 0;
  Eigen::MatrixXd log_growth;    // L x K
  Eigen::MatrixXd log_capacity;  // L x K
  Eigen::MatrixXd interaction;   // (L*K) x K

  ReactionParams() = default;
  // a = b = 1, C = I everywhere.
  ReactionParams(std::size_t locations, std::size_t keywords);

  double growth(std::size_t i, std::size_t j) const;
  double capacity(std::size_t i, std::size_t j) const;
  double coupling(std::size_t i, std::size_t j, std::size_t from) const { return interaction(i * keywords + j, from); }
  Eigen::MatrixXd coupling_matrix(std::size_t i) const { return interaction.middleRows(i * keywords, keywords); }

  void set_growth(std::size_t i, std::size_t j, double a);
  void set_capacity(std::size_t i, std::size_t j, double b);
  // Off-diagonal entries are copied; the diagonal is forced to 1.
  void set_coupling_matrix(std::size_t i, const Eigen::MatrixXd& c);
  // Re-pins every diagonal to exactly 1.0.
  void reset_diagonal();
};

/// Location -> area group map. Every group in [0, count) has at least one member.
struct GroupAssignment {
  std::vector<std::size_t> group;
  std::size_t count = 1;

  static GroupAssignment single(std::size_t locations);
  static GroupAssignment singletons(std::size_t locations);
  // Throws InputError if a label is out of range or a group is empty.
  void validate(std::size_t locations) const;
  std::vector<std::size_t> members(std::size_t g) const;
};

/// Exposed (rectified) seasonal gains, p x (L*K); column i*K + j. Empty means no seasonality.
struct SeasonalGains {
  Eigen::MatrixXd values;

  bool enabled() const { return values.size() > 0; }
  std::size_t period() const { return static_cast<std::size_t>(values.rows()); }
  double at(std::size_t t, std::size_t i, std::size_t j, std::size_t keywords) const {
    return values(static_cast<Eigen::Index>(t % period()), static_cast<Eigen::Index>(i * keywords + j));
  }
};

/// Trainable seasonality: gains are softplus(raw), so S >= 0 with a smooth gradient everywhere.
struct SeasonalityMatrix {
  std::size_t period = 52;
  std::size_t locations = 0;
  std::size_t keywords = 0;
  bool enabled = true;
  Eigen::MatrixXd raw;  // p x (L*K)

  SeasonalityMatrix() = default;
  SeasonalityMatrix(std::size_t period, std::size_t locations, std::size_t keywords, double raw_init);

  double gain(std::size_t phase, std::size_t i, std::size_t j) const;
  SeasonalGains gains() const;

  static double rectify(double raw);
};

/// D^t: d_l x d_l x K influence intensities; (g, from, k) is the intensity of keyword k flowing from group
/// `from` into group g. Zero on the diagonal.
struct DiffusionTensor {
  std::size_t groups = 1;
  std::size_t keywords = 1;
  std::vector<double> values;  // (g * groups + from) * keywords + k

  DiffusionTensor() = default;
  DiffusionTensor(std::size_t groups, std::size_t keywords) : groups(groups), keywords(keywords), values(groups * groups * keywords, 0.0) {}

  double& operator()(std::size_t g, std::size_t from, std::size_t k) { return values[(g * groups + from) * keywords + k]; }
  double operator()(std::size_t g, std::size_t from, std::size_t k) const { return values[(g * groups + from) * keywords + k]; }
};

enum class DiffusionMode { recurrent, constant, disabled };

const char* to_string(DiffusionMode mode);
DiffusionMode diffusion_mode_from_string(const std::string& s);

/// Elman network producing D^t from time features.
///
///   h_t = tanh(h_{t-1} W_h + u_t W_x + b),  u_t = [t / t_c, sin(2 pi t / p), cos(2 pi t / p)]
///   D^t = mask(relu(h_t W_o + b_o))
///
/// Row-vector convention throughout. In constant mode the emitted tensor is
/// mask(relu(constant_raw)) at every step; in disabled mode it is zero.
struct DiffusionNet {
  static constexpr std::size_t kFeatures = 3;

  DiffusionMode mode = DiffusionMode::recurrent;
  std::size_t hidden = 16;
  std::size_t groups = 1;
  std::size_t keywords = 1;
  double time_scale = 1.0;  // t_c
  double period = 52.0;

  Eigen::MatrixXd recurrent;     // h x h
  Eigen::MatrixXd input;         // 3 x h
  Eigen::MatrixXd bias;          // 1 x h
  Eigen::MatrixXd output;        // h x (d_l^2 K)
  Eigen::MatrixXd output_bias;   // 1 x (d_l^2 K)
  Eigen::MatrixXd constant_raw;  // 1 x (d_l^2 K)

  DiffusionNet() = default;
  // All weights zero.
  DiffusionNet(std::size_t hidden, std::size_t groups, std::size_t keywords, double time_scale, double period,
               DiffusionMode mode = DiffusionMode::recurrent);

  std::size_t outputs() const { return groups * groups * keywords; }
  // True when D^t is identically zero regardless of weights.
  bool inert() const { return mode == DiffusionMode::disabled || groups < 2; }

  // Advances `hidden` to time t and returns D^t.
  DiffusionTensor emit(Eigen::RowVectorXd& hidden, std::size_t t) const;
  // D^t for t = 0 .. count-1 from a zero hidden state.
  std::vector<DiffusionTensor> materialize(std::size_t count) const;
};

std::array<double, DiffusionNet::kFeatures> diffusion_features(std::size_t t, double time_scale, double period);

/// Everything the state update needs.
struct Dynamics {
  ReactionParams reaction;
  GroupAssignment groups;
  DiffusionNet diffusion;
  SeasonalityMatrix seasonality;

  std::size_t locations() const { return reaction.locations; }
  std::size_t keywords() const { return reaction.keywords; }
  void validate() const;
};

// a_j x_j (1 - sum_j' c_jj' x_j' / b_j) with location i's parameters.
Eigen::VectorXd reaction(const Eigen::VectorXd& x_row, const ReactionParams& params, std::size_t i);

// d_l x K matrix of per-group means of an L x K slice.
Eigen::MatrixXd group_means(const Eigen::MatrixXd& x, const GroupAssignment& groups);

// inflow(g, k) = sum_from D(g, from, k) * y(from, k)
Eigen::MatrixXd diffusion_inflow(const DiffusionTensor& d, const Eigen::MatrixXd& group_means);

struct DiffusionStepResult {
  Eigen::MatrixXd inflow;  // d_l x K
  DiffusionTensor tensor;
};
DiffusionStepResult diffusion_step(const DiffusionNet& net, Eigen::RowVectorXd& hidden, std::size_t t,
                                   const Eigen::MatrixXd& group_means);

/// One Euler step (dt = 1) with the multiplicative seasonal gain:
///   x_{t+1}[i,j] = (1 + S[t mod p, i, j]) * (x[i,j] + reaction_ij + inflow[group(i), j])
Eigen::MatrixXd forward_step(const Eigen::MatrixXd& x, std::size_t t, const ReactionParams& reaction,
                             const GroupAssignment& groups, const DiffusionTensor& diffusion,
                             const SeasonalGains& seasonal);

enum class RolloutMode { teacher_forced, autoregressive };

inline constexpr double kStateClamp = 1.5;

/// Sequential evaluator carrying the recurrent hidden state. The first call
/// to step() uses time index `offset` with a zero hidden state.
class Simulator {
 public:
  Simulator(const Dynamics& dynamics, std::size_t offset);

  Eigen::MatrixXd step(const Eigen::MatrixXd& x);
  std::size_t time() const { return t_; }
  const DiffusionTensor& last_diffusion() const { return last_; }

 private:
  const Dynamics& dyn_;
  SeasonalGains gains_;
  Eigen::RowVectorXd hidden_;
  std::size_t t_;
  DiffusionTensor last_;
};

/// n-step rollout starting at global time `offset`.
///
/// Teacher-forced: step s > 0 consumes observations[s - 1] (the observed state
/// at offset + s). Autoregressive: step s > 0 consumes the previous output;
/// outputs are clamped to [0, 1.5].
std::vector<Eigen::MatrixXd> rollout(const Dynamics& dynamics, const Eigen::MatrixXd& x_init, std::size_t steps,
                                     std::size_t offset, RolloutMode mode,
                                     std::span<const Eigen::MatrixXd> observations = {});

}  // namespace fluxcube
