#include "fluxcube/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fluxcube/error.hpp"

namespace fluxcube {

ReactionParams::ReactionParams(std::size_t locations, std::size_t keywords)
    : locations(locations),
      keywords(keywords),
      log_growth(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(locations), static_cast<Eigen::Index>(keywords))),
      log_capacity(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(locations), static_cast<Eigen::Index>(keywords))),
      interaction(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(locations * keywords), static_cast<Eigen::Index>(keywords))) {
  reset_diagonal();
}

double ReactionParams::growth(std::size_t i, std::size_t j) const { return std::exp(log_growth(i, j)); }
double ReactionParams::capacity(std::size_t i, std::size_t j) const { return std::exp(log_capacity(i, j)); }

void ReactionParams::set_growth(std::size_t i, std::size_t j, double a) {
  if (!(a > 0.0)) throw InputError("growth rate must be positive");
  log_growth(i, j) = std::log(a);
}

void ReactionParams::set_capacity(std::size_t i, std::size_t j, double b) {
  if (!(b > 0.0)) throw InputError("carrying capacity must be positive");
  log_capacity(i, j) = std::log(b);
}

void ReactionParams::set_coupling_matrix(std::size_t i, const Eigen::MatrixXd& c) {
  if (c.rows() != static_cast<Eigen::Index>(keywords) || c.cols() != static_cast<Eigen::Index>(keywords)) {
    throw InputError("coupling matrix must be K x K");
  }
  interaction.middleRows(i * keywords, keywords) = c;
  for (std::size_t j = 0; j < keywords; ++j) interaction(i * keywords + j, j) = 1.0;
}

void ReactionParams::reset_diagonal() {
  for (std::size_t i = 0; i < locations; ++i)
    for (std::size_t j = 0; j < keywords; ++j) interaction(i * keywords + j, j) = 1.0;
}

GroupAssignment GroupAssignment::single(std::size_t locations) {
  return GroupAssignment{std::vector<std::size_t>(locations, 0), 1};
}

GroupAssignment GroupAssignment::singletons(std::size_t locations) {
  GroupAssignment g{std::vector<std::size_t>(locations), locations};
  for (std::size_t i = 0; i < locations; ++i) g.group[i] = i;
  return g;
}

void GroupAssignment::validate(std::size_t locations) const {
  if (group.size() != locations) throw InputError("group assignment size does not match the location count");
  if (count == 0) throw InputError("group count must be at least 1");
  std::vector<std::size_t> used(count, 0);
  for (std::size_t g : group) {
    if (g >= count) throw InputError("group label out of range");
    ++used[g];
  }
  for (std::size_t g = 0; g < count; ++g) {
    if (used[g] == 0) throw InputError("group " + std::to_string(g) + " has no locations");
  }
}

std::vector<std::size_t> GroupAssignment::members(std::size_t g) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < group.size(); ++i)
    if (group[i] == g) out.push_back(i);
  return out;
}

SeasonalityMatrix::SeasonalityMatrix(std::size_t period, std::size_t locations, std::size_t keywords, double raw_init)
    : period(period),
      locations(locations),
      keywords(keywords),
      raw(Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(period), static_cast<Eigen::Index>(locations * keywords), raw_init)) {
  if (period == 0) throw InputError("seasonal period must be at least 1");
}

double SeasonalityMatrix::rectify(double r) { return r > 30.0 ? r : std::log1p(std::exp(r)); }

double SeasonalityMatrix::gain(std::size_t phase, std::size_t i, std::size_t j) const {
  if (!enabled) return 0.0;
  return rectify(raw(static_cast<Eigen::Index>(phase % period), static_cast<Eigen::Index>(i * keywords + j)));
}

SeasonalGains SeasonalityMatrix::gains() const {
  if (!enabled) return {};
  return {raw.unaryExpr([](double r) { return rectify(r); })};
}

const char* to_string(DiffusionMode mode) {
  switch (mode) {
    case DiffusionMode::recurrent: return "recurrent";
    case DiffusionMode::constant: return "constant";
    case DiffusionMode::disabled: return "disabled";
  }
  return "recurrent";
}

DiffusionMode diffusion_mode_from_string(const std::string& s) {
  if (s == "recurrent" || s == "rnn") return DiffusionMode::recurrent;
  if (s == "constant") return DiffusionMode::constant;
  if (s == "disabled" || s == "none") return DiffusionMode::disabled;
  throw InputError("unknown diffusion mode '" + s + "' (expected recurrent, constant or disabled)");
}

DiffusionNet::DiffusionNet(std::size_t hidden, std::size_t groups, std::size_t keywords, double time_scale, double period,
                           DiffusionMode mode)
    : mode(mode), hidden(hidden), groups(groups), keywords(keywords), time_scale(time_scale), period(period) {
  const auto h = static_cast<Eigen::Index>(hidden);
  const auto n = static_cast<Eigen::Index>(outputs());
  recurrent = Eigen::MatrixXd::Zero(h, h);
  input = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(kFeatures), h);
  bias = Eigen::MatrixXd::Zero(1, h);
  output = Eigen::MatrixXd::Zero(h, n);
  output_bias = Eigen::MatrixXd::Zero(1, n);
  constant_raw = Eigen::MatrixXd::Zero(1, n);
}

std::array<double, DiffusionNet::kFeatures> diffusion_features(std::size_t t, double time_scale, double period) {
  const double td = static_cast<double>(t);
  const double angle = 2.0 * std::numbers::pi * td / period;
  return {td / time_scale, std::sin(angle), std::cos(angle)};
}

namespace {

DiffusionTensor masked_relu(const Eigen::RowVectorXd& pre, std::size_t groups, std::size_t keywords) {
  DiffusionTensor d(groups, keywords);
  for (std::size_t r = 0; r < d.values.size(); ++r) {
    const std::size_t g = r / (groups * keywords);
    const std::size_t from = (r / keywords) % groups;
    d.values[r] = (g == from) ? 0.0 : std::max(0.0, pre(static_cast<Eigen::Index>(r)));
  }
  return d;
}

}  // namespace

DiffusionTensor DiffusionNet::emit(Eigen::RowVectorXd& state, std::size_t t) const {
  if (inert()) return DiffusionTensor(groups, keywords);
  if (mode == DiffusionMode::constant) return masked_relu(constant_raw.row(0), groups, keywords);
  if (state.size() != static_cast<Eigen::Index>(hidden)) state = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(hidden));
  const auto u = diffusion_features(t, time_scale, period);
  Eigen::RowVectorXd pre = state * recurrent + bias.row(0);
  for (std::size_t f = 0; f < kFeatures; ++f) pre += u[f] * input.row(static_cast<Eigen::Index>(f));
  state = pre.array().tanh().matrix();
  const Eigen::RowVectorXd out = state * output + output_bias.row(0);
  return masked_relu(out, groups, keywords);
}

std::vector<DiffusionTensor> DiffusionNet::materialize(std::size_t count) const {
  std::vector<DiffusionTensor> out;
  out.reserve(count);
  Eigen::RowVectorXd state = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(hidden));
  for (std::size_t t = 0; t < count; ++t) out.push_back(emit(state, t));
  return out;
}

void Dynamics::validate() const {
  const std::size_t L = reaction.locations, K = reaction.keywords;
  groups.validate(L);
  if (diffusion.groups != groups.count || diffusion.keywords != K) {
    throw InputError("diffusion network shape does not match the group assignment");
  }
  if (seasonality.enabled && (seasonality.locations != L || seasonality.keywords != K)) {
    throw InputError("seasonality shape does not match the reaction parameters");
  }
}

Eigen::VectorXd reaction(const Eigen::VectorXd& x_row, const ReactionParams& params, std::size_t i) {
  const std::size_t K = params.keywords;
  Eigen::VectorXd out(static_cast<Eigen::Index>(K));
  for (std::size_t j = 0; j < K; ++j) {
    double coupled = 0.0;
    for (std::size_t jp = 0; jp < K; ++jp) coupled += params.coupling(i, j, jp) * x_row(static_cast<Eigen::Index>(jp));
    out(static_cast<Eigen::Index>(j)) =
        params.growth(i, j) * x_row(static_cast<Eigen::Index>(j)) * (1.0 - coupled / params.capacity(i, j));
  }
  return out;
}

Eigen::MatrixXd group_means(const Eigen::MatrixXd& x, const GroupAssignment& groups) {
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(groups.count), x.cols());
  std::vector<double> counts(groups.count, 0.0);
  for (std::size_t i = 0; i < groups.group.size(); ++i) {
    sums.row(static_cast<Eigen::Index>(groups.group[i])) += x.row(static_cast<Eigen::Index>(i));
    counts[groups.group[i]] += 1.0;
  }
  for (std::size_t g = 0; g < groups.count; ++g) {
    if (counts[g] == 0.0) throw InputError("empty area group " + std::to_string(g));
    sums.row(static_cast<Eigen::Index>(g)) /= counts[g];
  }
  return sums;
}

Eigen::MatrixXd diffusion_inflow(const DiffusionTensor& d, const Eigen::MatrixXd& y) {
  Eigen::MatrixXd inflow = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(d.groups), static_cast<Eigen::Index>(d.keywords));
  for (std::size_t g = 0; g < d.groups; ++g)
    for (std::size_t from = 0; from < d.groups; ++from)
      for (std::size_t k = 0; k < d.keywords; ++k) inflow(g, k) += d(g, from, k) * y(from, k);
  return inflow;
}

DiffusionStepResult diffusion_step(const DiffusionNet& net, Eigen::RowVectorXd& hidden, std::size_t t,
                                   const Eigen::MatrixXd& y) {
  DiffusionStepResult r;
  r.tensor = net.emit(hidden, t);
  r.inflow = diffusion_inflow(r.tensor, y);
  return r;
}

Eigen::MatrixXd forward_step(const Eigen::MatrixXd& x, std::size_t t, const ReactionParams& params,
                             const GroupAssignment& groups, const DiffusionTensor& diffusion,
                             const SeasonalGains& seasonal) {
  const std::size_t L = params.locations, K = params.keywords;
  const bool diffuse = diffusion.groups > 1;
  Eigen::MatrixXd inflow;
  if (diffuse) inflow = diffusion_inflow(diffusion, group_means(x, groups));
  Eigen::MatrixXd next(x.rows(), x.cols());
  for (std::size_t i = 0; i < L; ++i) {
    const Eigen::VectorXd r = reaction(x.row(static_cast<Eigen::Index>(i)).transpose(), params, i);
    for (std::size_t j = 0; j < K; ++j) {
      double v = x(i, j) + r(static_cast<Eigen::Index>(j));
      if (diffuse) v += inflow(static_cast<Eigen::Index>(groups.group[i]), static_cast<Eigen::Index>(j));
      if (seasonal.enabled()) v *= 1.0 + seasonal.at(t, i, j, K);
      next(i, j) = v;
    }
  }
  return next;
}

Simulator::Simulator(const Dynamics& dynamics, std::size_t offset)
    : dyn_(dynamics),
      gains_(dynamics.seasonality.gains()),
      hidden_(Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(dynamics.diffusion.hidden))),
      t_(offset) {}

Eigen::MatrixXd Simulator::step(const Eigen::MatrixXd& x) {
  last_ = dyn_.diffusion.emit(hidden_, t_);
  Eigen::MatrixXd next = forward_step(x, t_, dyn_.reaction, dyn_.groups, last_, gains_);
  ++t_;
  return next;
}

std::vector<Eigen::MatrixXd> rollout(const Dynamics& dynamics, const Eigen::MatrixXd& x_init, std::size_t steps,
                                     std::size_t offset, RolloutMode mode,
                                     std::span<const Eigen::MatrixXd> observations) {
  if (mode == RolloutMode::teacher_forced && steps > 0 && observations.size() + 1 < steps) {
    throw InputError("teacher-forced rollout needs an observation for every step");
  }
  Simulator sim(dynamics, offset);
  std::vector<Eigen::MatrixXd> out;
  out.reserve(steps);
  Eigen::MatrixXd x = x_init;
  for (std::size_t s = 0; s < steps; ++s) {
    if (s > 0) x = mode == RolloutMode::teacher_forced ? observations[s - 1] : out.back();
    Eigen::MatrixXd next = sim.step(x);
    if (mode == RolloutMode::autoregressive) next = next.cwiseMax(0.0).cwiseMin(kStateClamp);
    out.push_back(std::move(next));
  }
  return out;
}

}  // namespace fluxcube
