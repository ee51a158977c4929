#include "fluxcube/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "fluxcube/error.hpp"
#include "fluxcube/training.hpp"

namespace fluxcube {

Eigen::MatrixXd reaction_features(const ReactionParams& params) {
  const std::size_t L = params.locations, K = params.keywords;
  Eigen::MatrixXd f(static_cast<Eigen::Index>(L), static_cast<Eigen::Index>(2 * K + K * K));
  for (std::size_t i = 0; i < L; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    for (std::size_t j = 0; j < K; ++j) {
      f(r, static_cast<Eigen::Index>(j)) = params.growth(i, j);
      f(r, static_cast<Eigen::Index>(K + j)) = params.capacity(i, j);
      for (std::size_t jp = 0; jp < K; ++jp) f(r, static_cast<Eigen::Index>(2 * K + j * K + jp)) = params.coupling(i, j, jp);
    }
  }
  return f;
}

Eigen::MatrixXd PcaReducer::reduce(const Eigen::MatrixXd& features) const {
  const Eigen::Index n = features.rows();
  std::vector<Eigen::Index> keep;
  Eigen::MatrixXd z(n, features.cols());
  for (Eigen::Index c = 0; c < features.cols(); ++c) {
    const double mean = features.col(c).mean();
    const double sd = std::sqrt((features.col(c).array() - mean).square().mean());
    if (!(sd > 1e-12 * (1.0 + std::abs(mean)))) continue;
    z.col(static_cast<Eigen::Index>(keep.size())) = (features.col(c).array() - mean) / sd;
    keep.push_back(c);
  }
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, 2);
  if (keep.empty()) return out;
  const auto m = static_cast<Eigen::Index>(keep.size());
  const Eigen::MatrixXd zk = z.leftCols(m);
  const Eigen::MatrixXd cov = zk.transpose() * zk / static_cast<double>(n);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
  for (Eigen::Index comp = 0; comp < std::min<Eigen::Index>(2, m); ++comp) {
    Eigen::VectorXd axis = eig.eigenvectors().col(m - 1 - comp);
    Eigen::Index arg = 0;
    axis.cwiseAbs().maxCoeff(&arg);
    if (axis(arg) < 0.0) axis = -axis;
    out.col(comp) = zk * axis;
  }
  return out;
}

Embedding embed(const ReactionParams& params, const Reducer& reducer) {
  if (params.locations < 2) throw InputError("embedding needs at least two locations");
  Embedding e{reducer.reduce(reaction_features(params))};
  if (!e.coords.allFinite()) throw NumericError("embedding produced non-finite coordinates");
  return e;
}

GroupAssignment canonicalize(const std::vector<std::size_t>& labels, std::size_t count) {
  std::vector<std::size_t> first(count, std::numeric_limits<std::size_t>::max());
  for (std::size_t i = 0; i < labels.size(); ++i) first[labels[i]] = std::min(first[labels[i]], i);
  std::vector<std::size_t> order(count);
  for (std::size_t c = 0; c < count; ++c) order[c] = c;
  std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return first[x] < first[y]; });
  std::vector<std::size_t> relabel(count);
  for (std::size_t r = 0; r < count; ++r) relabel[order[r]] = r;
  GroupAssignment g;
  g.count = count;
  g.group.resize(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) g.group[i] = relabel[labels[i]];
  return g;
}

namespace {

struct Run {
  std::vector<std::size_t> labels;
  Eigen::MatrixXd centers;
  double inertia = std::numeric_limits<double>::infinity();
  bool ok = false;
};

Run lloyd(const Eigen::MatrixXd& pts, std::size_t k, std::uint64_t seed) {
  const Eigen::Index n = pts.rows();
  std::mt19937_64 rng(seed);
  Run run;
  Eigen::MatrixXd centers(static_cast<Eigen::Index>(k), pts.cols());
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  centers.row(0) = pts.row(pick(rng));
  Eigen::VectorXd d2(n);
  for (Eigen::Index i = 0; i < n; ++i) d2(i) = (pts.row(i) - centers.row(0)).squaredNorm();
  for (std::size_t c = 1; c < k; ++c) {
    const double total = d2.sum();
    if (!(total > 0.0)) return run;  // fewer distinct points than clusters
    std::uniform_real_distribution<double> u(0.0, total);
    double target = u(rng);
    Eigen::Index chosen = n - 1;
    for (Eigen::Index i = 0; i < n; ++i) {
      target -= d2(i);
      if (target < 0.0 && d2(i) > 0.0) {
        chosen = i;
        break;
      }
    }
    if (d2(chosen) == 0.0) {
      for (Eigen::Index i = n; i-- > 0;)
        if (d2(i) > 0.0) {
          chosen = i;
          break;
        }
    }
    centers.row(static_cast<Eigen::Index>(c)) = pts.row(chosen);
    for (Eigen::Index i = 0; i < n; ++i)
      d2(i) = std::min(d2(i), (pts.row(i) - centers.row(static_cast<Eigen::Index>(c))).squaredNorm());
  }

  std::vector<std::size_t> labels(static_cast<std::size_t>(n), k);
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      std::size_t best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < k; ++c) {
        const double d = (pts.row(i) - centers.row(static_cast<Eigen::Index>(c))).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (labels[static_cast<std::size_t>(i)] != best) {
        labels[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(k), pts.cols());
    std::vector<double> counts(k, 0.0);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(static_cast<Eigen::Index>(labels[static_cast<std::size_t>(i)])) += pts.row(i);
      counts[labels[static_cast<std::size_t>(i)]] += 1.0;
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0.0) return run;  // empty cluster: caller re-seeds
      centers.row(static_cast<Eigen::Index>(c)) = sums.row(static_cast<Eigen::Index>(c)) / counts[c];
    }
    if (!changed) break;
  }
  run.inertia = 0.0;
  for (Eigen::Index i = 0; i < n; ++i)
    run.inertia += (pts.row(i) - centers.row(static_cast<Eigen::Index>(labels[static_cast<std::size_t>(i)]))).squaredNorm();
  run.labels = std::move(labels);
  run.centers = std::move(centers);
  run.ok = true;
  return run;
}

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& points, std::size_t k, std::uint64_t seed, std::size_t restarts) {
  const auto n = static_cast<std::size_t>(points.rows());
  if (k == 0) throw InputError("k-means needs at least one cluster");
  if (k > n) throw InputError("cannot form " + std::to_string(k) + " groups from " + std::to_string(n) + " locations");
  if (restarts == 0) restarts = 1;
  constexpr std::size_t kReseeds = 10;
  Run best;
  for (std::size_t r = 0; r < restarts; ++r) {
    for (std::size_t attempt = 0; attempt < kReseeds; ++attempt) {
      Run run = lloyd(points, k, derive_seed(seed, r * kReseeds + attempt));
      if (!run.ok) continue;
      if (run.inertia < best.inertia) best = std::move(run);
      break;
    }
  }
  if (!best.ok) throw InputError("k-means could not form " + std::to_string(k) + " non-empty groups");
  KMeansResult out;
  out.groups = canonicalize(best.labels, k);
  out.inertia = best.inertia;
  out.centers.resize(static_cast<Eigen::Index>(k), points.cols());
  for (std::size_t i = 0; i < n; ++i)
    out.centers.row(static_cast<Eigen::Index>(out.groups.group[i])) =
        best.centers.row(static_cast<Eigen::Index>(best.labels[i]));
  return out;
}

GroupAssignment cluster(const Embedding& embedding, std::size_t groups, std::uint64_t seed) {
  const auto L = static_cast<std::size_t>(embedding.coords.rows());
  if (groups == 0 || groups > L) throw InputError("group count must lie in [1, L]");
  if (groups == 1) return GroupAssignment::single(L);
  return kmeans(embedding.coords, groups, seed).groups;
}

}  // namespace fluxcube
