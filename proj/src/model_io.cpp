#include "aoa/model_io.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>

namespace aoa {

namespace {

constexpr char kMagic[4] = {'A', 'O', 'A', 'M'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void write_raw(std::ofstream& out, const T& value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& in, const std::string& path) {
  T value;
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw std::runtime_error("model: truncated file: " + path);
  return value;
}

void write_matrix(std::ofstream& out, const Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) write_raw(out, m(r, c));
}

void read_matrix(std::ifstream& in, const std::string& path,
                 Eigen::MatrixXd& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      m(r, c) = read_raw<double>(in, path);
}

void write_vector(std::ofstream& out, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) write_raw(out, v(i));
}

void read_vector(std::ifstream& in, const std::string& path,
                 Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = read_raw<double>(in, path);
}

}  // namespace

void save_model(const std::string& path, const Network& network,
                const FeatureStats& stats, std::uint64_t framework_hash) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("model: cannot open for write: " + path);

  out.write(kMagic, sizeof(kMagic));
  write_raw(out, kVersion);
  write_raw(out, static_cast<std::uint32_t>(network.spec.input_size));
  write_raw(out, static_cast<std::uint32_t>(network.spec.hidden_sizes.size()));
  for (int h : network.spec.hidden_sizes)
    write_raw(out, static_cast<std::uint32_t>(h));
  write_raw(out, static_cast<std::uint32_t>(network.spec.output_size));

  for (std::size_t l = 0; l < network.weights.size(); ++l) {
    write_matrix(out, network.weights[l]);
    write_vector(out, network.biases[l]);
  }

  write_raw(out, static_cast<std::uint32_t>(stats.means.size()));
  write_vector(out, stats.means);
  write_vector(out, stats.std_devs);
  write_raw(out, framework_hash);

  out.close();
  if (!out) throw std::runtime_error("model: write failed: " + path);
}

LoadedModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("model: cannot open: " + path);

  char magic[4];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error("model: bad magic: " + path);
  if (read_raw<std::uint32_t>(in, path) != kVersion)
    throw std::runtime_error("model: unsupported version: " + path);

  LoadedModel loaded;
  NetworkSpec& spec = loaded.network.spec;
  spec.input_size = static_cast<int>(read_raw<std::uint32_t>(in, path));
  const auto hidden_count = read_raw<std::uint32_t>(in, path);
  for (std::uint32_t h = 0; h < hidden_count; ++h)
    spec.hidden_sizes.push_back(
        static_cast<int>(read_raw<std::uint32_t>(in, path)));
  spec.output_size = static_cast<int>(read_raw<std::uint32_t>(in, path));

  int fan_in = spec.input_size;
  for (std::size_t l = 0; l <= spec.hidden_sizes.size(); ++l) {
    const int fan_out = l < spec.hidden_sizes.size() ? spec.hidden_sizes[l]
                                                     : spec.output_size;
    Eigen::MatrixXd w(fan_in, fan_out);
    read_matrix(in, path, w);
    Eigen::VectorXd b(fan_out);
    read_vector(in, path, b);
    loaded.network.weights.push_back(std::move(w));
    loaded.network.biases.push_back(std::move(b));
    fan_in = fan_out;
  }

  const auto stats_size = read_raw<std::uint32_t>(in, path);
  loaded.stats.means.resize(stats_size);
  loaded.stats.std_devs.resize(stats_size);
  read_vector(in, path, loaded.stats.means);
  read_vector(in, path, loaded.stats.std_devs);
  loaded.framework_hash = read_raw<std::uint64_t>(in, path);
  return loaded;
}

std::string model_path(const std::string& directory, int classifier) {
  char name[32];
  std::snprintf(name, sizeof(name), "model_%04d.bin", classifier);
  return (std::filesystem::path(directory) / name).string();
}

void save_ensemble(const std::string& directory, const Ensemble& ensemble) {
  std::filesystem::create_directories(directory);
  const std::uint64_t hash = framework_hash(ensemble.framework);

  std::ofstream framework_file(
      (std::filesystem::path(directory) / "framework.json").string());
  if (!framework_file)
    throw std::runtime_error("ensemble: cannot write framework.json");
  framework_file << framework_to_json(ensemble.framework) << "\n";
  framework_file.close();

  for (std::size_t j = 0; j < ensemble.networks.size(); ++j)
    save_model(model_path(directory, static_cast<int>(j)),
               ensemble.networks[j], ensemble.stats, hash);
}

Ensemble load_ensemble(const std::string& directory) {
  const auto framework_path =
      (std::filesystem::path(directory) / "framework.json").string();
  std::ifstream framework_file(framework_path);
  if (!framework_file)
    throw std::runtime_error("ensemble: cannot open " + framework_path);
  std::string json_text((std::istreambuf_iterator<char>(framework_file)),
                        std::istreambuf_iterator<char>());

  Ensemble ensemble;
  ensemble.framework = framework_from_json(json_text);
  const std::uint64_t hash = framework_hash(ensemble.framework);

  const int classifier_count = ensemble.framework.classifier_count();
  for (int j = 0; j < classifier_count; ++j) {
    LoadedModel loaded = load_model(model_path(directory, j));
    if (loaded.framework_hash != hash)
      throw std::runtime_error("ensemble: model " + std::to_string(j) +
                               " was trained under a different framework");
    if (j == 0) ensemble.stats = loaded.stats;
    ensemble.networks.push_back(std::move(loaded.network));
  }
  return ensemble;
}

}  // namespace aoa
