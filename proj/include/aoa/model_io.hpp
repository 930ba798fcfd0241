#pragma once

#include <cstdint>
#include <string>

#include "aoa/array_signal.hpp"
#include "aoa/estimator.hpp"
#include "aoa/network.hpp"

namespace aoa {

/// Binary model container (little-endian): magic "AOAM", version u32, the
/// layer sizes, per-layer float64 weight/bias tensors, the feature stats, and
/// the hash of the framework the classifier was trained under.
void save_model(const std::string& path, const Network& network,
                const FeatureStats& stats, std::uint64_t framework_hash);

struct LoadedModel {
  Network network;
  FeatureStats stats;
  std::uint64_t framework_hash = 0;
};

LoadedModel load_model(const std::string& path);

/// An ensemble directory holds framework.json plus model_NNNN.bin per
/// classifier; every model must carry the framework's hash.
void save_ensemble(const std::string& directory, const Ensemble& ensemble);
Ensemble load_ensemble(const std::string& directory);

/// Path of classifier j's model file inside an ensemble directory.
std::string model_path(const std::string& directory, int classifier);

}  // namespace aoa
