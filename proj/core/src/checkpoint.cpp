#include "groupdir/checkpoint.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "groupdir/errors.hpp"

namespace groupdir {

namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr char kFormatTag[] = "groupdir-checkpoint-v1";

ordered_json layer_to_json(const DenseLayer& layer) {
  ordered_json node;
  node["rows"] = layer.weight.rows();
  node["cols"] = layer.weight.cols();
  node["weight"] =
      std::vector<double>(layer.weight.flat().begin(), layer.weight.flat().end());
  node["bias"] = layer.bias;
  return node;
}

DenseLayer layer_from_json(const json& node) {
  DenseLayer layer;
  const auto rows = node.at("rows").get<std::size_t>();
  const auto cols = node.at("cols").get<std::size_t>();
  const auto weight = node.at("weight").get<std::vector<double>>();
  if (weight.size() != rows * cols) throw IoError("malformed-checkpoint: weight-shape");
  layer.weight = Matrix(rows, cols);
  std::copy(weight.begin(), weight.end(), layer.weight.flat().begin());
  layer.bias = node.at("bias").get<std::vector<double>>();
  if (layer.bias.size() != rows) throw IoError("malformed-checkpoint: bias-shape");
  return layer;
}

ordered_json config_to_json(const TrainConfig& config) {
  ordered_json node;
  node["lambda1"] = config.lambda1;
  node["lambda2"] = config.lambda2;
  node["temperature"] = config.temperature;
  node["beta"] = config.beta;
  node["criterion"] = criterion_name(config.criterion);
  node["use_lds"] = config.use_lds;
  node["learning_rate"] = config.learning_rate;
  node["epochs"] = config.epochs;
  node["batch_size"] = config.batch_size;
  node["seed"] = config.seed;
  node["stage2_epochs"] = config.stage2_epochs;
  node["adam"] = {{"beta1", config.adam.beta1},
                  {"beta2", config.adam.beta2},
                  {"eps", config.adam.eps},
                  {"weight_decay", config.adam.weight_decay}};
  node["num_groups"] = config.num_groups;
  node["hidden_dims"] = config.hidden_dims;
  node["embed_dim"] = config.embed_dim;
  node["vanilla"] = config.vanilla;
  node["la_tau"] = config.la_tau;
  node["lds_kernel_radius"] = config.lds_kernel_radius;
  node["lds_sigma"] = config.lds_sigma;
  node["lds_intra_bins"] = config.lds_intra_bins;
  return node;
}

TrainConfig config_from_json(const json& node) {
  TrainConfig config;
  config.lambda1 = node.at("lambda1").get<double>();
  config.lambda2 = node.at("lambda2").get<double>();
  config.temperature = node.at("temperature").get<double>();
  config.beta = node.at("beta").get<double>();
  config.criterion = criterion_from_name(node.at("criterion").get<std::string>());
  config.use_lds = node.at("use_lds").get<bool>();
  config.learning_rate = node.at("learning_rate").get<double>();
  config.epochs = node.at("epochs").get<int>();
  config.batch_size = node.at("batch_size").get<int>();
  config.seed = node.at("seed").get<std::uint64_t>();
  config.stage2_epochs = node.at("stage2_epochs").get<int>();
  const auto& adam = node.at("adam");
  config.adam.beta1 = adam.at("beta1").get<double>();
  config.adam.beta2 = adam.at("beta2").get<double>();
  config.adam.eps = adam.at("eps").get<double>();
  config.adam.weight_decay = adam.at("weight_decay").get<double>();
  config.num_groups = node.at("num_groups").get<int>();
  config.hidden_dims = node.at("hidden_dims").get<std::vector<int>>();
  config.embed_dim = node.at("embed_dim").get<int>();
  config.vanilla = node.at("vanilla").get<bool>();
  config.la_tau = node.at("la_tau").get<double>();
  config.lds_kernel_radius = node.at("lds_kernel_radius").get<int>();
  config.lds_sigma = node.at("lds_sigma").get<double>();
  config.lds_intra_bins = node.at("lds_intra_bins").get<int>();
  return config;
}

}  // namespace

std::string train_config_to_json(const TrainConfig& config) {
  return config_to_json(config).dump(2) + "\n";
}

TrainConfig train_config_from_json(const std::string& text) {
  try {
    return config_from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed-config: ") + e.what());
  }
}

std::string checkpoint_to_json(const Checkpoint& checkpoint) {
  ordered_json doc;
  doc["format"] = kFormatTag;
  doc["config"] = config_to_json(checkpoint.config);
  doc["scheme"] = {{"y_min", checkpoint.scheme.y_min},
                   {"y_max", checkpoint.scheme.y_max},
                   {"num_groups", checkpoint.scheme.num_groups}};
  ordered_json params;
  ordered_json encoder = ordered_json::array();
  for (const auto& layer : checkpoint.params.encoder) encoder.push_back(layer_to_json(layer));
  params["encoder"] = std::move(encoder);
  params["classifier"] = layer_to_json(checkpoint.params.classifier);
  ordered_json experts = ordered_json::array();
  for (const auto& layer : checkpoint.params.experts) experts.push_back(layer_to_json(layer));
  params["experts"] = std::move(experts);
  doc["params"] = std::move(params);
  return doc.dump(2) + "\n";
}

Checkpoint checkpoint_from_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    if (doc.at("format").get<std::string>() != kFormatTag) {
      throw IoError("malformed-checkpoint: format");
    }
    Checkpoint checkpoint;
    checkpoint.config = config_from_json(doc.at("config"));
    const auto& scheme = doc.at("scheme");
    checkpoint.scheme = make_grouping(scheme.at("y_min").get<double>(),
                                      scheme.at("y_max").get<double>(),
                                      scheme.at("num_groups").get<int>());
    const auto& params = doc.at("params");
    for (const auto& layer : params.at("encoder")) {
      checkpoint.params.encoder.push_back(layer_from_json(layer));
    }
    if (checkpoint.params.encoder.empty()) {
      throw IoError("malformed-checkpoint: empty-encoder");
    }
    checkpoint.params.classifier = layer_from_json(params.at("classifier"));
    for (const auto& layer : params.at("experts")) {
      checkpoint.params.experts.push_back(layer_from_json(layer));
    }
    const int expected_experts =
        checkpoint.config.vanilla ? 1 : checkpoint.config.num_groups;
    if (checkpoint.params.num_groups() != expected_experts ||
        checkpoint.params.embed_dim() != checkpoint.config.embed_dim) {
      throw IoError("malformed-checkpoint: shape");
    }
    return checkpoint;
  } catch (const json::exception& e) {
    throw IoError(std::string("malformed-checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot-open: " + path);
  out << checkpoint_to_json(checkpoint);
  out.flush();
  if (!out.good()) throw IoError("write-failed: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot-open: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return checkpoint_from_json(buffer.str());
}

}  // namespace groupdir
