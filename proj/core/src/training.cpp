#include "fluxcube/training.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>
#include <thread>

#include "fluxcube/error.hpp"

namespace fluxcube {

using autodiff::Matrix;
using autodiff::Var;

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::vector<ParamBlock> parameter_blocks(Dynamics& dyn) {
  std::vector<ParamBlock> blocks{{"log_growth", &dyn.reaction.log_growth},
                                 {"log_capacity", &dyn.reaction.log_capacity},
                                 {"interaction", &dyn.reaction.interaction}};
  if (dyn.seasonality.enabled) blocks.push_back({"seasonality", &dyn.seasonality.raw});
  auto& net = dyn.diffusion;
  if (!net.inert()) {
    if (net.mode == DiffusionMode::recurrent) {
      blocks.push_back({"rnn_recurrent", &net.recurrent});
      blocks.push_back({"rnn_input", &net.input});
      blocks.push_back({"rnn_bias", &net.bias});
      blocks.push_back({"rnn_output", &net.output});
      blocks.push_back({"rnn_output_bias", &net.output_bias});
    } else {
      blocks.push_back({"constant_diffusion", &net.constant_raw});
    }
  }
  return blocks;
}

LossFunction::LossFunction(const ActivityTensor& window, const Dynamics& structure, double alpha, double beta,
                           std::size_t train_steps)
    : locations_(window.locations()),
      keywords_(window.keywords()),
      groups_(structure.groups.count),
      transitions_(window.steps() > 0 ? window.steps() - 1 : 0),
      train_steps_(train_steps),
      alpha_(alpha),
      beta_(beta),
      group_of_(structure.groups.group) {
  if (window.steps() < 2) throw InputError("loss needs at least two time steps");
  if (structure.locations() != locations_ || structure.keywords() != keywords_) {
    throw InputError("model dimensions do not match the tensor");
  }
  structure.validate();
  if (train_steps_ == 0 || train_steps_ > transitions_) throw InputError("training transitions out of range");

  const auto n = static_cast<Eigen::Index>(transitions_);
  const auto K = static_cast<Eigen::Index>(keywords_);
  inputs_.assign(locations_, Matrix(n, K));
  targets_.assign(locations_, Matrix(n, K));
  for (std::size_t t = 0; t < transitions_; ++t) {
    for (std::size_t i = 0; i < locations_; ++i) {
      for (std::size_t j = 0; j < keywords_; ++j) {
        inputs_[i](static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = window(t, i, j);
        targets_[i](static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = window(t + 1, i, j);
      }
    }
  }
  means_.assign(groups_, Matrix::Zero(n, K));
  std::vector<double> counts(groups_, 0.0);
  for (std::size_t i = 0; i < locations_; ++i) {
    means_[group_of_[i]] += inputs_[i];
    counts[group_of_[i]] += 1.0;
  }
  for (std::size_t g = 0; g < groups_; ++g) means_[g] /= counts[g];

  const auto& net = structure.diffusion;
  features_.resize(n, static_cast<Eigen::Index>(DiffusionNet::kFeatures));
  for (std::size_t t = 0; t < transitions_; ++t) {
    const auto u = diffusion_features(t, net.time_scale, net.period);
    for (std::size_t f = 0; f < u.size(); ++f) features_(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(f)) = u[f];
  }
  const std::size_t p = structure.seasonality.period;
  phases_.resize(transitions_);
  for (std::size_t t = 0; t < transitions_; ++t) phases_[t] = static_cast<Eigen::Index>(t % p);
}

LossValue LossFunction::evaluate(const Dynamics& dyn) const { return run(dyn, nullptr); }

LossValue LossFunction::evaluate(const Dynamics& dyn, std::vector<Eigen::MatrixXd>& grads) const {
  return run(dyn, &grads);
}

LossValue LossFunction::run(const Dynamics& dyn, std::vector<Eigen::MatrixXd>* grads) const {
  auto& tape = tape_;
  tape.clear();
  const auto n = static_cast<Eigen::Index>(transitions_);
  const auto n_train = static_cast<Eigen::Index>(train_steps_);
  const auto K = static_cast<Eigen::Index>(keywords_);
  const auto& net = dyn.diffusion;
  const auto& seas = dyn.seasonality;

  std::vector<Var> leaves;
  const Var log_growth = tape.leaf(dyn.reaction.log_growth);
  const Var log_capacity = tape.leaf(dyn.reaction.log_capacity);
  const Var interaction = tape.leaf(dyn.reaction.interaction);
  leaves = {log_growth, log_capacity, interaction};
  Var seasonal_raw;
  if (seas.enabled) {
    seasonal_raw = tape.leaf(seas.raw);
    leaves.push_back(seasonal_raw);
  }

  // Diffusion series: row t holds D^t flattened as (g * d_l + from) * K + k.
  Var diffusion;
  if (!net.inert()) {
    const auto m = static_cast<Eigen::Index>(net.outputs());
    Matrix mask = Matrix::Ones(1, m);
    for (std::size_t g = 0; g < groups_; ++g)
      mask.middleCols(static_cast<Eigen::Index>((g * groups_ + g) * keywords_), K).setZero();
    const Var mask_row = tape.constant(std::move(mask));
    if (net.mode == DiffusionMode::recurrent) {
      const Var w_h = tape.leaf(net.recurrent);
      const Var w_x = tape.leaf(net.input);
      const Var b = tape.leaf(net.bias);
      const Var w_o = tape.leaf(net.output);
      const Var b_o = tape.leaf(net.output_bias);
      leaves.insert(leaves.end(), {w_h, w_x, b, w_o, b_o});
      const Var driven = tape.add_row(tape.matmul(tape.constant(features_), w_x), b);
      std::vector<Var> states;
      states.reserve(transitions_);
      Var h;
      for (Eigen::Index t = 0; t < n; ++t) {
        Var pre = tape.rows(driven, t, 1);
        if (t > 0) pre = tape.add(tape.matmul(h, w_h), pre);
        h = tape.tanh(pre);
        states.push_back(h);
      }
      const Var hs = tape.stack_rows(states);
      diffusion = tape.mul_row(tape.relu(tape.add_row(tape.matmul(hs, w_o), b_o)), mask_row);
    } else {
      const Var raw = tape.leaf(net.constant_raw);
      leaves.push_back(raw);
      const Var row = tape.mul_row(tape.relu(raw), mask_row);
      diffusion = tape.matmul(tape.constant(Matrix::Ones(n, 1)), row);
    }
  }

  std::vector<Var> inflow(groups_);
  if (diffusion.valid()) {
    std::vector<Var> mean_vars;
    for (std::size_t g = 0; g < groups_; ++g) mean_vars.push_back(tape.constant(means_[g]));
    for (std::size_t g = 0; g < groups_; ++g) {
      for (std::size_t from = 0; from < groups_; ++from) {
        if (from == g) continue;
        const Var block = tape.cols(diffusion, static_cast<Eigen::Index>((g * groups_ + from) * keywords_), K);
        const Var term = tape.mul(block, mean_vars[from]);
        inflow[g] = inflow[g].valid() ? tape.add(inflow[g], term) : term;
      }
    }
  }

  Var gains;
  if (seas.enabled) gains = tape.softplus(seasonal_raw);

  Matrix off_diagonal = Matrix::Ones(K, K) - Matrix::Identity(K, K);
  const Var off_mask = tape.constant(std::move(off_diagonal));
  const Var identity = tape.constant(Matrix::Identity(K, K));

  Var sq_sum;
  double validation_sq = 0.0;
  for (std::size_t i = 0; i < locations_; ++i) {
    const auto row = static_cast<Eigen::Index>(i);
    const Var x = tape.constant(inputs_[i]);
    const Var a = tape.exp(tape.rows(log_growth, row, 1));
    const Var inv_b = tape.exp(tape.scale(tape.rows(log_capacity, row, 1), -1.0));
    const Var c = tape.add(tape.mul(tape.rows(interaction, row * K, K), off_mask), identity);
    const Var coupled = tape.mul_row(tape.matmul(x, tape.transpose(c)), inv_b);
    const Var react = tape.mul_row(tape.mul(x, tape.add_scalar(tape.scale(coupled, -1.0), 1.0)), a);
    Var pre = tape.add(x, react);
    if (inflow[group_of_[i]].valid()) pre = tape.add(pre, inflow[group_of_[i]]);
    Var pred = pre;
    if (seas.enabled) {
      const Var g = tape.add_scalar(tape.gather_rows(tape.cols(gains, row * K, K), phases_), 1.0);
      pred = tape.mul(g, pre);
    }
    const Var err = tape.sub(pred, tape.constant(targets_[i]));
    const Var s = tape.sum(tape.square(tape.rows(err, 0, n_train)));
    sq_sum = sq_sum.valid() ? tape.add(sq_sum, s) : s;
    if (n > n_train) validation_sq += tape.value(err).bottomRows(n - n_train).squaredNorm();
  }

  const double cells = static_cast<double>(locations_ * keywords_);
  const Var mse = tape.scale(sq_sum, 1.0 / (static_cast<double>(n_train) * cells));
  Var total = mse;
  LossValue out;
  out.train_steps = train_steps_;
  out.validation_steps = transitions_ - train_steps_;
  if (diffusion.valid()) {
    const double count = static_cast<double>(n_train) * static_cast<double>(net.outputs());
    const Var pen = tape.scale(tape.sum(tape.square(tape.rows(diffusion, 0, n_train))), alpha_ / count);
    out.diffusion_penalty = tape.scalar(pen);
    total = tape.add(total, pen);
  }
  if (seas.enabled) {
    const double count = static_cast<double>(seas.raw.size());
    const Var pen = tape.scale(tape.sum(tape.square(gains)), beta_ / count);
    out.seasonal_penalty = tape.scalar(pen);
    total = tape.add(total, pen);
  }
  out.mse = tape.scalar(mse);
  out.total = tape.scalar(total);
  out.validation_mse =
      n > n_train ? validation_sq / (static_cast<double>(n - n_train) * cells) : out.mse;

  if (grads) {
    tape.backward(total);
    grads->clear();
    grads->reserve(leaves.size());
    for (Var v : leaves) grads->push_back(tape.grad(v));
  }
  return out;
}

LossValue loss(const Dynamics& dyn, const ActivityTensor& window, double alpha, double beta) {
  LossFunction f(window, dyn, alpha, beta, window.steps() - 1);
  return f.evaluate(dyn);
}

namespace {
constexpr double kOutputScale = 1e-3;
constexpr double kInitialDiffusion = 1e-3;
}  // namespace

Dynamics initialize_dynamics(std::size_t locations, std::size_t keywords, const GroupAssignment& groups,
                             std::size_t hidden, std::size_t modeling_steps, const TrainConfig& config,
                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Dynamics dyn;
  dyn.reaction = ReactionParams(locations, keywords);
  dyn.reaction.log_growth.setConstant(std::log(0.5));
  dyn.reaction.log_capacity.setConstant(std::log(1.0));
  std::uniform_real_distribution<double> coupling(-0.01, 0.01);
  for (Eigen::Index r = 0; r < dyn.reaction.interaction.rows(); ++r)
    for (Eigen::Index c = 0; c < dyn.reaction.interaction.cols(); ++c) dyn.reaction.interaction(r, c) = coupling(rng);
  dyn.reaction.reset_diagonal();

  dyn.groups = groups;
  dyn.diffusion = DiffusionNet(hidden, groups.count, keywords, static_cast<double>(modeling_steps),
                               static_cast<double>(config.period), config.diffusion);
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  std::uniform_real_distribution<double> weight(-bound, bound);
  auto fill = [&](Eigen::MatrixXd& m) {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = weight(rng);
  };
  fill(dyn.diffusion.recurrent);
  fill(dyn.diffusion.input);
  fill(dyn.diffusion.bias);
  // The output layer starts near a small positive D so no ReLU output begins dead.
  fill(dyn.diffusion.output);
  dyn.diffusion.output *= kOutputScale;
  dyn.diffusion.output_bias.setConstant(kInitialDiffusion);
  dyn.diffusion.constant_raw.setConstant(kInitialDiffusion);

  dyn.seasonality = SeasonalityMatrix(config.period, locations, keywords, -3.0);
  dyn.seasonality.enabled = config.seasonality;
  return dyn;
}

std::size_t pick_candidate(std::span<const CandidateResult> candidates) {
  std::size_t best = candidates.size();
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const auto& r = candidates[c].report;
    if (r.failed) continue;
    if (best == candidates.size() || r.best_validation_mse < candidates[best].report.best_validation_mse) best = c;
  }
  if (best == candidates.size()) throw NumericError("training failed for every hidden-size candidate");
  return best;
}

namespace {

// Reaction and seasonality only, with the diffusion term switched off; returns the epochs spent.
std::size_t warm_up(Dynamics& dyn, const ActivityTensor& window, const TrainConfig& config, std::size_t train_steps,
                    AdamState& adam) {
  Dynamics plain = dyn;
  plain.diffusion = DiffusionNet(1, dyn.groups.count, dyn.keywords(), dyn.diffusion.time_scale, dyn.diffusion.period,
                                 DiffusionMode::disabled);
  const LossFunction objective(window, plain, config.alpha, config.beta, train_steps);
  std::vector<Eigen::MatrixXd> grads;
  const std::size_t epochs = std::min(config.diffusion_warmup, config.max_epochs / 2);
  for (std::size_t epoch = 1; epoch <= epochs; ++epoch) {
    const LossValue value = objective.evaluate(plain, grads);
    if (!std::isfinite(value.total)) throw NumericError("non-finite loss at warm-up epoch " + std::to_string(epoch));
    clip_global_norm(grads, config.clip_norm);
    auto blocks = parameter_blocks(plain);
    adam_step(blocks, grads, adam);
  }
  dyn.reaction = plain.reaction;
  dyn.seasonality = plain.seasonality;
  // Keep the moments of the shared blocks; a fresh start would kick the settled reaction term by a full
  // step and, with it, push the small initial diffusion outputs below zero.
  if (!adam.first_moment.empty()) {
    const auto blocks = parameter_blocks(dyn);
    for (std::size_t b = adam.first_moment.size(); b < blocks.size(); ++b) {
      adam.first_moment.push_back(Eigen::MatrixXd::Zero(blocks[b].value->rows(), blocks[b].value->cols()));
      adam.second_moment.push_back(Eigen::MatrixXd::Zero(blocks[b].value->rows(), blocks[b].value->cols()));
    }
  }
  return epochs;
}

CandidateResult train_candidate(const ActivityTensor& window, const GroupAssignment& groups, const TrainConfig& config,
                                std::size_t hidden, std::size_t train_steps, std::uint64_t seed) {
  CandidateResult result;
  result.report.hidden = hidden;
  Dynamics dyn = initialize_dynamics(window.locations(), window.keywords(), groups, hidden, window.steps(), config, seed);
  const LossFunction objective(window, dyn, config.alpha, config.beta, train_steps);

  std::vector<Eigen::MatrixXd> grads;
  double best = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;
  bool have_snapshot = false;

  try {
    // A ReLU diffusion output that is pushed negative while the reaction term is still far off never
    // recovers, so the network only joins once the reaction term has settled.
    AdamState adam;
    adam.options.learning_rate = config.learning_rate;
    const std::size_t start = dyn.diffusion.inert() ? 0 : warm_up(dyn, window, config, train_steps, adam);
    const std::size_t first_diffusion = 3 + (dyn.seasonality.enabled ? 1 : 0);
    const double diffusion_scale = config.diffusion_learning_rate / config.learning_rate;
    for (std::size_t epoch = start + 1; epoch <= config.max_epochs; ++epoch) {
      const LossValue value = objective.evaluate(dyn, grads);
      result.report.epochs = epoch;
      if (!std::isfinite(value.total) || !std::isfinite(value.validation_mse)) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch));
      }
      if (value.validation_mse < best) {
        best = value.validation_mse;
        result.dynamics = dyn;
        result.training_loss = value.total;
        result.report.best_epoch = epoch;
        have_snapshot = true;
        since_best = 0;
      } else if (++since_best >= config.patience && epoch >= config.min_epochs) {
        break;
      }
      clip_global_norm(grads, config.clip_norm);
      auto blocks = parameter_blocks(dyn);
      for (std::size_t b = first_diffusion; b < blocks.size(); ++b) blocks[b].learning_rate_scale = diffusion_scale;
      adam_step(blocks, grads, adam);
    }
  } catch (const NumericError& e) {
    if (!have_snapshot) {
      result.report.failed = true;
      result.report.failure = e.what();
    }
  }
  result.report.best_validation_mse = best;
  return result;
}

}  // namespace

FitResult fit(const ActivityTensor& window, const GroupAssignment& groups, const TrainConfig& config) {
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  const std::size_t T = window.steps();
  if (T < config.period + 2) {
    throw InputError("modeling window has " + std::to_string(T) + " steps; at least p + 2 = " +
                     std::to_string(config.period + 2) + " are required");
  }
  groups.validate(window.locations());

  FitReport report;
  if (T < 2 * config.period) {
    report.warnings.push_back("modeling window shorter than two seasonal periods");
  }
  const std::size_t transitions = T - 1;
  const auto held_out = static_cast<std::size_t>(std::floor(config.val_fraction * static_cast<double>(transitions)));
  const std::size_t train_steps = transitions - held_out;

  // An inert diffusion term makes every hidden size equivalent.
  const bool inert = groups.count < 2 || config.diffusion != DiffusionMode::recurrent;
  std::vector<std::size_t> sizes = config.hidden_candidates;
  if (inert) sizes.resize(1);

  std::vector<CandidateResult> results(sizes.size());
  std::size_t workers = config.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : config.threads;
  workers = std::min(workers, sizes.size());
  if (workers <= 1) {
    for (std::size_t c = 0; c < sizes.size(); ++c) {
      results[c] = train_candidate(window, groups, config, sizes[c], train_steps, derive_seed(config.seed, sizes[c]));
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t c = next++; c < sizes.size(); c = next++) {
          results[c] = train_candidate(window, groups, config, sizes[c], train_steps, derive_seed(config.seed, sizes[c]));
        }
      });
    }
    for (auto& th : pool) th.join();
  }

  const std::size_t best = pick_candidate(results);
  for (const auto& r : results) report.candidates.push_back(r.report);
  report.selected_hidden = results[best].report.hidden;
  report.best_validation_mse = results[best].report.best_validation_mse;
  report.final_training_loss = results[best].training_loss;
  report.epochs_run = results[best].report.epochs;
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  FitResult out;
  out.model.dynamics = std::move(results[best].dynamics);
  out.model.time_labels = window.time_labels();
  out.model.location_labels = window.location_labels();
  out.model.keyword_labels = window.keyword_labels();
  out.model.norm = NormStats::identity(window.locations(), window.keywords());
  out.model.last_observation = window.slice(T - 1);
  out.model.config = config;
  out.model.report = report;
  out.report = std::move(report);
  return out;
}

}  // namespace fluxcube
