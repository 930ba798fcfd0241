#include "aoa/fov.hpp"

#include <algorithm>
#include <bit>
#include <map>
#include <mutex>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace aoa {

FovGrid build_grid(double theta_min_deg, double theta_max_deg,
                   int segment_count) {
  if (!(theta_max_deg > theta_min_deg))
    throw std::domain_error("build_grid: FOV span must be positive");
  if (segment_count < 1)
    throw std::domain_error("build_grid: need at least one segment");
  return FovGrid{theta_min_deg, theta_max_deg, segment_count};
}

int segment_of(const FovGrid& grid, double aoa_deg) {
  if (!(aoa_deg >= grid.theta_min_deg && aoa_deg < grid.theta_max_deg))
    throw std::domain_error("segment_of: AOA outside the FOV");
  int segment = static_cast<int>((aoa_deg - grid.theta_min_deg) /
                                 grid.resolution_deg());
  // Guard the float division against landing one interval off near edges.
  if (segment >= grid.segment_count) segment = grid.segment_count - 1;
  if (aoa_deg < grid.lower_edge_deg(segment)) --segment;
  else if (aoa_deg >= grid.upper_edge_deg(segment)) ++segment;
  return segment;
}

bool KLabelset::contains(int label) const {
  return std::binary_search(labels.begin(), labels.end(), label);
}

int SubsetIndex::cardinality(int subset) const {
  return std::popcount(masks[subset]);
}

const SubsetIndex& SubsetIndex::for_size(int label_count) {
  if (label_count < 1 || label_count > 20)
    throw std::domain_error("SubsetIndex: unsupported labelset size");

  static std::map<int, SubsetIndex> cache;
  static std::mutex cache_mutex;
  std::lock_guard<std::mutex> lock(cache_mutex);

  auto it = cache.find(label_count);
  if (it != cache.end()) return it->second;

  SubsetIndex index;
  index.label_count = label_count;
  const std::uint32_t total = 1u << label_count;
  index.masks.resize(total);
  std::iota(index.masks.begin(), index.masks.end(), 0u);

  // Cardinality-ascending, then lexicographic on the sorted position tuples.
  // (Numeric mask order is not lexicographic: {0,3} > {1,2} as integers.)
  auto positions = [label_count](std::uint32_t mask) {
    std::vector<int> pos;
    for (int p = 0; p < label_count; ++p)
      if (mask & (1u << p)) pos.push_back(p);
    return pos;
  };
  std::sort(index.masks.begin(), index.masks.end(),
            [&](std::uint32_t a, std::uint32_t b) {
              const int ca = std::popcount(a), cb = std::popcount(b);
              if (ca != cb) return ca < cb;
              return positions(a) < positions(b);
            });

  index.index_of_mask.resize(total);
  for (int e = 0; e < static_cast<int>(total); ++e)
    index.index_of_mask[index.masks[e]] = e;

  return cache.emplace(label_count, std::move(index)).first->second;
}

int Framework::classifier_count() const {
  int count = 0;
  for (const auto& layer : layers) count += static_cast<int>(layer.size());
  return count;
}

const KLabelset& Framework::labelset(int classifier) const {
  for (const auto& layer : layers) {
    if (classifier < static_cast<int>(layer.size())) return layer[classifier];
    classifier -= static_cast<int>(layer.size());
  }
  throw std::out_of_range("Framework: classifier index out of range");
}

Framework generate_framework(const FovGrid& grid, int labelset_size,
                             int layer_count, std::uint64_t seed) {
  const int label_count = grid.segment_count;
  if (labelset_size < 1 || labelset_size >= label_count)
    throw std::domain_error("generate_framework: need 1 <= k < M");
  if (layer_count < 1)
    throw std::domain_error("generate_framework: need at least one layer");

  Framework framework{grid, labelset_size, layer_count, seed, {}};
  framework.layers.reserve(layer_count);
  for (int layer = 0; layer < layer_count; ++layer) {
    std::vector<int> permutation(label_count);
    std::iota(permutation.begin(), permutation.end(), 0);
    Rng rng = Rng::stream(seed, {stream_tag::kFramework,
                                 static_cast<std::uint64_t>(layer)});
    rng.shuffle(permutation);

    std::vector<KLabelset> chunks;
    for (int start = 0; start < label_count; start += labelset_size) {
      const int stop = std::min(start + labelset_size, label_count);
      KLabelset labelset{{permutation.begin() + start,
                          permutation.begin() + stop}};
      std::sort(labelset.labels.begin(), labelset.labels.end());
      chunks.push_back(std::move(labelset));
    }
    framework.layers.push_back(std::move(chunks));
  }
  return framework;
}

std::vector<int> active_labels(const FovGrid& grid,
                               const std::vector<double>& aoas_deg) {
  std::vector<int> active;
  for (double aoa : aoas_deg) active.push_back(segment_of(grid, aoa));
  std::sort(active.begin(), active.end());
  active.erase(std::unique(active.begin(), active.end()), active.end());
  return active;
}

int target_class(const KLabelset& labelset, const std::vector<int>& active,
                 const SubsetIndex& index) {
  if (index.label_count != labelset.size())
    throw std::invalid_argument("target_class: index does not fit labelset");
  std::uint32_t mask = 0;
  for (int p = 0; p < labelset.size(); ++p)
    if (std::binary_search(active.begin(), active.end(), labelset.labels[p]))
      mask |= 1u << p;
  return index.index_of_mask[mask];
}

Eigen::VectorXd target_vector(const KLabelset& labelset,
                              const std::vector<int>& active,
                              const SubsetIndex& index) {
  Eigen::VectorXd target = Eigen::VectorXd::Zero(index.subset_count());
  target(target_class(labelset, active, index)) = 1.0;
  return target;
}

std::string framework_to_json(const Framework& framework) {
  nlohmann::json doc;
  doc["theta_min"] = framework.grid.theta_min_deg;
  doc["theta_max"] = framework.grid.theta_max_deg;
  doc["M"] = framework.grid.segment_count;
  doc["k"] = framework.labelset_size;
  doc["L"] = framework.layer_count;
  doc["seed"] = framework.seed;
  nlohmann::json layers = nlohmann::json::array();
  for (const auto& layer : framework.layers) {
    nlohmann::json sets = nlohmann::json::array();
    for (const auto& labelset : layer) sets.push_back(labelset.labels);
    layers.push_back(std::move(sets));
  }
  doc["layers"] = std::move(layers);
  return doc.dump(2);
}

Framework framework_from_json(const std::string& json_text) {
  const nlohmann::json doc = nlohmann::json::parse(json_text);
  Framework framework;
  framework.grid = build_grid(doc.at("theta_min").get<double>(),
                              doc.at("theta_max").get<double>(),
                              doc.at("M").get<int>());
  framework.labelset_size = doc.at("k").get<int>();
  framework.layer_count = doc.at("L").get<int>();
  framework.seed = doc.at("seed").get<std::uint64_t>();
  for (const auto& layer : doc.at("layers")) {
    std::vector<KLabelset> sets;
    for (const auto& labels : layer)
      sets.push_back(KLabelset{labels.get<std::vector<int>>()});
    framework.layers.push_back(std::move(sets));
  }
  if (static_cast<int>(framework.layers.size()) != framework.layer_count)
    throw std::invalid_argument("framework_from_json: layer count mismatch");
  return framework;
}

std::uint64_t framework_hash(const Framework& framework) {
  const std::string canonical = framework_to_json(framework);
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : canonical) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

}  // namespace aoa
