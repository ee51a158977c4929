#pragma once

#include <cstddef>
#include <cstdint>

#include <Eigen/Dense>

#include "fluxcube/dynamics.hpp"

namespace fluxcube {

/// L x 2 compressed representation of each location's reaction parameters.
struct Embedding {
  Eigen::MatrixXd coords;
};

/// Maps an L x F feature matrix to L x 2.
class Reducer {
 public:
  virtual ~Reducer() = default;
  virtual Eigen::MatrixXd reduce(const Eigen::MatrixXd& features) const = 0;
  virtual const char* name() const = 0;
};

/// Z-score each feature (constant features dropped), then project onto the two
/// leading principal axes. Each axis is signed so its largest-magnitude loading is positive.
class PcaReducer final : public Reducer {
 public:
  Eigen::MatrixXd reduce(const Eigen::MatrixXd& features) const override;
  const char* name() const override { return "pca"; }
};

// Row i: [a^i, b^i, vec(C^i)] (length 2K + K^2).
Eigen::MatrixXd reaction_features(const ReactionParams& params);

Embedding embed(const ReactionParams& params, const Reducer& reducer = PcaReducer{});

struct KMeansResult {
  GroupAssignment groups;
  Eigen::MatrixXd centers;  // k x dim, in canonical label order
  double inertia = 0.0;     // within-cluster sum of squares
};

/// k-means++ seeded Lloyd iterations, best of `restarts` runs. A run that ends
/// with an empty cluster is re-seeded. Labels are ordered by each cluster's
/// lowest member index.
KMeansResult kmeans(const Eigen::MatrixXd& points, std::size_t k, std::uint64_t seed, std::size_t restarts = 50);

GroupAssignment cluster(const Embedding& embedding, std::size_t groups, std::uint64_t seed);

// Relabels so that groups appear in order of their lowest member index.
GroupAssignment canonicalize(const std::vector<std::size_t>& labels, std::size_t count);

}  // namespace fluxcube
