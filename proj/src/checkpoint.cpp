// Model checkpoint layout (all integers little-endian):
//   8 bytes  magic "FORGEMDL"
//   u32      format version (1)
//   u64      header length L
//   L bytes  JSON header: feature spec, shape, train config, training log
//   rows*cols f64 weights, class-major (row 0 first)

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "forge/baselines.hpp"
#include "forge/error.hpp"

namespace forge::baselines {

namespace {

constexpr char kMagic[8] = {'F', 'O', 'R', 'G', 'E', 'M', 'D', 'L'};
constexpr std::uint32_t kCheckpointVersion = 1;

template <typename T>
void write_le(std::ostream& out, T value) {
  unsigned char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes, bytes + sizeof(T));
  }
  out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <typename T>
T read_le(std::istream& in, const std::string& path) {
  unsigned char bytes[sizeof(T)];
  if (!in.read(reinterpret_cast<char*>(bytes), sizeof(T))) {
    throw Error(ErrorKind::Parse, path + ": truncated checkpoint");
  }
  if constexpr (std::endian::native == std::endian::big) {
    std::reverse(bytes, bytes + sizeof(T));
  }
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

std::string kind_name(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::CharNgram: return "char";
    case FeatureKind::WordUnigram: return "word";
    case FeatureKind::Dense: return "dense";
  }
  return "unknown";
}

FeatureKind kind_from_name(const std::string& name) {
  if (name == "char") return FeatureKind::CharNgram;
  if (name == "word") return FeatureKind::WordUnigram;
  if (name == "dense") return FeatureKind::Dense;
  throw Error(ErrorKind::Schema, "unknown feature kind '" + name + "'");
}

}  // namespace

void SoftmaxModel::save(const std::filesystem::path& path) const {
  nlohmann::ordered_json header;
  header["features"] = {{"kind", kind_name(features_.kind)},
                        {"min_n", features_.min_n},
                        {"max_n", features_.max_n}};
  header["num_classes"] = weights_.rows();
  header["dim"] = weights_.cols();
  header["train_config"] = {{"batch_size", config.batch_size},
                            {"max_epochs", config.max_epochs},
                            {"learning_rate", config.learning_rate},
                            {"patience", config.patience},
                            {"seed", config.seed}};
  header["validation_accuracy"] = validation_accuracy;
  header["best_epoch"] = best_epoch;
  const std::string text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out.write(kMagic, sizeof(kMagic));
  write_le<std::uint32_t>(out, kCheckpointVersion);
  write_le<std::uint64_t>(out, text.size());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (Eigen::Index k = 0; k < weights_.rows(); ++k) {
    for (Eigen::Index j = 0; j < weights_.cols(); ++j) {
      write_le<double>(out, weights_(k, j));
    }
  }
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

SoftmaxModel SoftmaxModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  const std::string name = path.string();

  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) ||
      std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorKind::Schema, name + ": not a forge model checkpoint");
  }
  const auto version = read_le<std::uint32_t>(in, name);
  if (version != kCheckpointVersion) {
    throw Error(ErrorKind::Version, name + ": unsupported checkpoint version " +
                                        std::to_string(version));
  }
  const auto header_len = read_le<std::uint64_t>(in, name);
  if (header_len > (1u << 24)) {
    throw Error(ErrorKind::Parse, name + ": implausible header length");
  }
  std::string text(header_len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(header_len))) {
    throw Error(ErrorKind::Parse, name + ": truncated checkpoint header");
  }

  SoftmaxModel model;
  try {
    const auto header = nlohmann::json::parse(text);
    FeatureSpec spec;
    spec.kind = kind_from_name(header.at("features").at("kind").get<std::string>());
    spec.min_n = header.at("features").at("min_n").get<int>();
    spec.max_n = header.at("features").at("max_n").get<int>();
    const auto classes = header.at("num_classes").get<std::size_t>();
    const auto dim = header.at("dim").get<std::uint32_t>();
    if (classes == 0 || dim == 0) {
      throw Error(ErrorKind::Schema, name + ": empty weight matrix");
    }
    model = SoftmaxModel(classes, dim, spec);
    const auto& cfg = header.at("train_config");
    model.config.batch_size = cfg.at("batch_size").get<std::size_t>();
    model.config.max_epochs = cfg.at("max_epochs").get<std::size_t>();
    model.config.learning_rate = cfg.at("learning_rate").get<double>();
    model.config.patience = cfg.at("patience").get<std::size_t>();
    model.config.seed = cfg.at("seed").get<std::uint64_t>();
    model.validation_accuracy =
        header.at("validation_accuracy").get<std::vector<double>>();
    model.best_epoch = header.at("best_epoch").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Schema, name + ": " + e.what());
  }

  Eigen::MatrixXd& weights = model.weights();
  for (Eigen::Index k = 0; k < weights.rows(); ++k) {
    for (Eigen::Index j = 0; j < weights.cols(); ++j) {
      weights(k, j) = read_le<double>(in, name);
    }
  }
  if (!weights.allFinite()) {
    throw Error(ErrorKind::Numeric, name + ": checkpoint weights are not finite");
  }
  return model;
}

}  // namespace forge::baselines
