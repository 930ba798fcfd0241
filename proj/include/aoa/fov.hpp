#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "aoa/rng.hpp"

namespace aoa {

/// Regular partition of the field of view [theta_min, theta_max) into
/// segment_count equal segments. Segment and label indices are 0-based.
struct FovGrid {
  double theta_min_deg = -60.0;
  double theta_max_deg = 60.0;
  int segment_count = 60;

  double resolution_deg() const {
    return (theta_max_deg - theta_min_deg) / segment_count;
  }
  double lower_edge_deg(int segment) const {
    return theta_min_deg + segment * resolution_deg();
  }
  double upper_edge_deg(int segment) const {
    return theta_min_deg + (segment + 1) * resolution_deg();
  }
  double center_deg(int segment) const {
    return theta_min_deg + (segment + 0.5) * resolution_deg();
  }
};

FovGrid build_grid(double theta_min_deg, double theta_max_deg,
                   int segment_count);

/// 0-based index of the segment whose half-open interval contains aoa_deg.
int segment_of(const FovGrid& grid, double aoa_deg);

/// A set of distinct label indices, kept sorted ascending.
struct KLabelset {
  std::vector<int> labels;

  int size() const { return static_cast<int>(labels.size()); }
  bool contains(int label) const;
};

/// Fixed enumeration of all subsets of a labelset of a given size: ordered by
/// cardinality, ties broken lexicographically on the sorted member positions.
/// Entry 0 is the empty set. masks[e] has bit p set iff the labelset's p-th
/// label belongs to subset e.
struct SubsetIndex {
  int label_count = 0;
  std::vector<std::uint32_t> masks;       // enumeration order -> position mask
  std::vector<int> index_of_mask;         // position mask -> enumeration order

  int subset_count() const { return static_cast<int>(masks.size()); }
  int cardinality(int subset) const;

  static const SubsetIndex& for_size(int label_count);
};

/// Layered random k-labelsets over a FOV grid. Each of the layer_count layers
/// partitions the labels {0..M-1}; every label appears exactly once per layer,
/// so exactly layer_count times in total. Classifiers are indexed by
/// flattening the layers in order.
struct Framework {
  FovGrid grid;
  int labelset_size = 3;  // k; the final chunk of a layer may be smaller
  int layer_count = 1;    // L
  std::uint64_t seed = 0;
  std::vector<std::vector<KLabelset>> layers;

  int classifier_count() const;
  const KLabelset& labelset(int classifier) const;
  const SubsetIndex& subsets(int classifier) const {
    return SubsetIndex::for_size(labelset(classifier).size());
  }
};

/// Build layer_count independent partitions: each layer is a seeded uniform
/// permutation of the labels chopped into consecutive chunks of labelset_size
/// (the last chunk smaller when it does not divide the label count).
Framework generate_framework(const FovGrid& grid, int labelset_size,
                             int layer_count, std::uint64_t seed);

/// Sorted set of segments containing at least one of the given AOAs.
std::vector<int> active_labels(const FovGrid& grid,
                               const std::vector<double>& aoas_deg);

/// Enumeration index of the subset equal to labelset ∩ active.
int target_class(const KLabelset& labelset, const std::vector<int>& active,
                 const SubsetIndex& index);

/// One-hot prediction target over the labelset's subset enumeration.
Eigen::VectorXd target_vector(const KLabelset& labelset,
                              const std::vector<int>& active,
                              const SubsetIndex& index);

/// JSON round trip so a trained ensemble can be reloaded against the exact
/// same labelsets. Schema: {theta_min, theta_max, M, k, L, seed, layers}.
std::string framework_to_json(const Framework& framework);
Framework framework_from_json(const std::string& json_text);

/// FNV-1a hash of the canonical JSON form; stored in model files so an
/// ensemble cannot silently be deployed against the wrong framework.
std::uint64_t framework_hash(const Framework& framework);

}  // namespace aoa
