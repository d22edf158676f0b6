#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <utility>

#include <json.hpp>

#include "asl/model.hpp"
#include "asl/npy.hpp"

namespace asl {

struct CheckpointMeta {
  std::uint64_t seed = 0;
  std::size_t epoch = 0;
};

template <typename T>
const char* precision_name();
template <>
inline const char* precision_name<float>() { return "f32"; }
template <>
inline const char* precision_name<double>() { return "f64"; }

namespace detail {

inline nlohmann::json read_manifest(const std::filesystem::path& dir) {
  const auto path = dir / "manifest.json";
  std::ifstream in(path);
  if (!in) {
    raise(ErrorCode::Checkpoint, "missing manifest '" + path.string() + "'");
  }
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::Checkpoint,
          "bad manifest '" + path.string() + "': " + e.what());
  }
  return manifest;
}

inline std::string param_file_name(std::size_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "param_%03zu.npy", index);
  return buf;
}

}  // namespace detail

// Directory layout: manifest.json plus one f32 NPY per parameter tensor in
// manifest order. Parameter files are f32 regardless of the training
// precision; the manifest records which precision produced them.
template <typename T>
void save_checkpoint(const Model<T>& model, const CheckpointMeta& meta,
                     const std::filesystem::path& dir) {
  if (!model.initialized) {
    raise(ErrorCode::Checkpoint, "refusing to save an uninitialized model");
  }
  std::filesystem::create_directories(dir);

  double dropout_p = 0.0;
  for (const auto& l : model.spec.layers) {
    if (l.kind == LayerKind::Dropout) {
      dropout_p = l.drop_p;
      break;
    }
  }

  nlohmann::json manifest;
  manifest["architecture"] = model.spec.name;
  manifest["dropout"] = dropout_p;
  manifest["epoch"] = meta.epoch;
  manifest["seed"] = meta.seed;
  manifest["precision"] = precision_name<T>();
  auto layers = nlohmann::json::array();
  for (const auto& l : model.spec.layers) layers.push_back(layer_signature(l));
  manifest["layers"] = std::move(layers);
  auto files = nlohmann::json::array();
  for (std::size_t i = 0; i < model.params.size(); ++i) {
    files.push_back(detail::param_file_name(i));
  }
  manifest["params"] = std::move(files);

  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) raise(ErrorCode::Io, "cannot write manifest in " + dir.string());
  out << manifest.dump(2) << "\n";

  for (std::size_t i = 0; i < model.params.size(); ++i) {
    const Tensor<T>& p = model.params[i];
    Tensor<float> cast(p.shape());
    for (std::size_t j = 0; j < p.size(); ++j) {
      cast[j] = static_cast<float>(p[j]);
    }
    npy::write_file(dir / detail::param_file_name(i), cast, npy::Dtype::F4);
  }
}

inline std::string checkpoint_precision(const std::filesystem::path& dir) {
  return detail::read_manifest(dir).at("precision").get<std::string>();
}

template <typename T>
std::pair<Model<T>, CheckpointMeta> load_checkpoint(
    const std::filesystem::path& dir) {
  const nlohmann::json manifest = detail::read_manifest(dir);

  Model<T> model;
  CheckpointMeta meta;
  try {
    const auto name = manifest.at("architecture").get<std::string>();
    const auto dropout_p = manifest.at("dropout").get<double>();
    meta.seed = manifest.at("seed").get<std::uint64_t>();
    meta.epoch = manifest.at("epoch").get<std::size_t>();
    model = build_architecture<T>(name, dropout_p);

    const auto& layers = manifest.at("layers");
    if (layers.size() != model.spec.layers.size()) {
      raise(ErrorCode::Checkpoint, "manifest layer list does not match '" +
                                       name + "'");
    }
    for (std::size_t i = 0; i < layers.size(); ++i) {
      if (layers[i].get<std::string>() !=
          layer_signature(model.spec.layers[i])) {
        raise(ErrorCode::Checkpoint,
              "manifest layer " + std::to_string(i) + " '" +
                  layers[i].get<std::string>() + "' does not match '" + name +
                  "'");
      }
    }

    const auto& files = manifest.at("params");
    if (files.size() != model.params.size()) {
      raise(ErrorCode::Checkpoint,
            "manifest lists " + std::to_string(files.size()) +
                " parameter files, architecture has " +
                std::to_string(model.params.size()));
    }
    for (std::size_t i = 0; i < files.size(); ++i) {
      const auto path = dir / files[i].get<std::string>();
      if (!std::filesystem::exists(path)) {
        raise(ErrorCode::Checkpoint,
              "missing parameter file '" + path.string() + "'");
      }
      Tensor<T> loaded = npy::read_file<T>(path);
      if (loaded.shape() != model.params[i].shape()) {
        raise(ErrorCode::Checkpoint,
              "parameter " + std::to_string(i) + " has shape " +
                  loaded.shape().str() + ", expected " +
                  model.params[i].shape().str());
      }
      model.params[i] = std::move(loaded);
    }
  } catch (const nlohmann::json::exception& e) {
    raise(ErrorCode::Checkpoint, std::string("bad manifest: ") + e.what());
  }
  model.initialized = true;
  return {std::move(model), meta};
}

}  // namespace asl
