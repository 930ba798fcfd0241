#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "aoa/fov.hpp"

namespace aoa {

/// One stored instance: ground-truth AOAs plus the raw T x N snapshot block.
struct DatasetInstance {
  std::vector<double> aoas_deg;
  Eigen::MatrixXcd snapshots;
};

/// Binary dataset container (little-endian):
///   header  { magic "AOAD", version u32, N u32, T u32, instance_count u64 }
///   instance{ Q u32, Q float64 AOAs (degrees),
///             T x N snapshots as interleaved float64 re/im, time-major }
class DatasetWriter {
 public:
  DatasetWriter(const std::string& path, int sensor_count, int snapshot_count,
                std::uint64_t instance_count);
  ~DatasetWriter();

  void append(const std::vector<double>& aoas_deg,
              const Eigen::MatrixXcd& snapshots);
  void close();

 private:
  std::ofstream out_;
  std::string path_;
  int sensor_count_;
  int snapshot_count_;
  std::uint64_t declared_;
  std::uint64_t written_ = 0;
};

class DatasetReader {
 public:
  explicit DatasetReader(const std::string& path);

  int sensor_count() const { return sensor_count_; }
  int snapshot_count() const { return snapshot_count_; }
  std::uint64_t instance_count() const { return instance_count_; }

  /// Sequentially read the next instance; false once exhausted.
  bool next(DatasetInstance& instance);

 private:
  std::ifstream in_;
  std::string path_;
  int sensor_count_ = 0;
  int snapshot_count_ = 0;
  std::uint64_t instance_count_ = 0;
  std::uint64_t read_ = 0;
};

std::vector<DatasetInstance> read_dataset(const std::string& path);

/// Inspection CSV: one row per instance with the ground truth, the active
/// FOV segments, and the raw (unstandardized) feature vector.
void export_features_csv(const std::string& dataset_path,
                         const std::string& csv_path, const FovGrid& grid);

}  // namespace aoa
