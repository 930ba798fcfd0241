#include "aoa/dataset_io.hpp"

#include <cstring>
#include <stdexcept>

#include "aoa/array_signal.hpp"

namespace aoa {

namespace {

constexpr char kMagic[4] = {'A', 'O', 'A', 'D'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_raw(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& in, const std::string& path) {
  T value;
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error("dataset: truncated file: " + path);
  return value;
}

}  // namespace

DatasetWriter::DatasetWriter(const std::string& path, int sensor_count,
                             int snapshot_count, std::uint64_t instance_count)
    : out_(path, std::ios::binary),
      path_(path),
      sensor_count_(sensor_count),
      snapshot_count_(snapshot_count),
      declared_(instance_count) {
  if (!out_) throw std::runtime_error("dataset: cannot open for write: " + path);
  out_.write(kMagic, sizeof(kMagic));
  write_raw(out_, kVersion);
  write_raw(out_, static_cast<std::uint32_t>(sensor_count));
  write_raw(out_, static_cast<std::uint32_t>(snapshot_count));
  write_raw(out_, instance_count);
}

DatasetWriter::~DatasetWriter() {
  if (out_.is_open()) out_.close();
}

void DatasetWriter::append(const std::vector<double>& aoas_deg,
                           const Eigen::MatrixXcd& snapshots) {
  if (snapshots.rows() != snapshot_count_ || snapshots.cols() != sensor_count_)
    throw std::invalid_argument("dataset: snapshot block has the wrong shape");
  if (written_ >= declared_)
    throw std::logic_error("dataset: more instances than declared: " + path_);

  write_raw(out_, static_cast<std::uint32_t>(aoas_deg.size()));
  for (double aoa : aoas_deg) write_raw(out_, aoa);
  for (int t = 0; t < snapshot_count_; ++t)
    for (int n = 0; n < sensor_count_; ++n) {
      write_raw(out_, snapshots(t, n).real());
      write_raw(out_, snapshots(t, n).imag());
    }
  ++written_;
}

void DatasetWriter::close() {
  if (written_ != declared_)
    throw std::logic_error("dataset: instance count mismatch on close: " +
                           path_);
  out_.close();
  if (!out_) throw std::runtime_error("dataset: write failed: " + path_);
}

DatasetReader::DatasetReader(const std::string& path)
    : in_(path, std::ios::binary), path_(path) {
  if (!in_) throw std::runtime_error("dataset: cannot open: " + path);
  char magic[4];
  in_.read(magic, sizeof(magic));
  if (!in_ || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("dataset: bad magic: " + path);
  const auto version = read_raw<std::uint32_t>(in_, path_);
  if (version != kVersion)
    throw std::runtime_error("dataset: unsupported version: " + path);
  sensor_count_ = static_cast<int>(read_raw<std::uint32_t>(in_, path_));
  snapshot_count_ = static_cast<int>(read_raw<std::uint32_t>(in_, path_));
  instance_count_ = read_raw<std::uint64_t>(in_, path_);
}

bool DatasetReader::next(DatasetInstance& instance) {
  if (read_ >= instance_count_) return false;

  const auto source_count = read_raw<std::uint32_t>(in_, path_);
  instance.aoas_deg.resize(source_count);
  for (auto& aoa : instance.aoas_deg) aoa = read_raw<double>(in_, path_);

  instance.snapshots.resize(snapshot_count_, sensor_count_);
  for (int t = 0; t < snapshot_count_; ++t)
    for (int n = 0; n < sensor_count_; ++n) {
      const double re = read_raw<double>(in_, path_);
      const double im = read_raw<double>(in_, path_);
      instance.snapshots(t, n) = {re, im};
    }
  ++read_;
  return true;
}

std::vector<DatasetInstance> read_dataset(const std::string& path) {
  DatasetReader reader(path);
  std::vector<DatasetInstance> instances;
  instances.reserve(reader.instance_count());
  DatasetInstance instance;
  while (reader.next(instance)) instances.push_back(instance);
  return instances;
}

void export_features_csv(const std::string& dataset_path,
                         const std::string& csv_path, const FovGrid& grid) {
  DatasetReader reader(dataset_path);
  std::ofstream csv(csv_path);
  if (!csv) throw std::runtime_error("dataset: cannot open for write: " + csv_path);

  const int feature_count = reader.sensor_count() * reader.sensor_count();
  csv << "instance,q,aoas_deg,active_segments";
  for (int f = 0; f < feature_count; ++f) csv << ",f" << f;
  csv << "\n";
  csv.precision(17);

  DatasetInstance instance;
  std::uint64_t row = 0;
  while (reader.next(instance)) {
    csv << row++ << "," << instance.aoas_deg.size() << ",\"";
    for (std::size_t q = 0; q < instance.aoas_deg.size(); ++q)
      csv << (q ? ";" : "") << instance.aoas_deg[q];
    csv << "\",\"";
    const std::vector<int> active = active_labels(grid, instance.aoas_deg);
    for (std::size_t a = 0; a < active.size(); ++a)
      csv << (a ? ";" : "") << active[a];
    csv << "\"";
    const FeatureVector features = feature_vector(
        sample_covariance({instance.snapshots, SourceScene{}}).matrix);
    for (Eigen::Index f = 0; f < features.size(); ++f)
      csv << "," << features(f);
    csv << "\n";
  }
}

}  // namespace aoa
