#pragma once

// Versioned JSON parameter checkpoints: name -> shape + row-major values.

#include <cstddef>
#include <span>
#include <string>

#include <nlohmann/json.hpp>

#include "epirisk/adam.hpp"
#include "epirisk/error.hpp"

namespace epirisk {

inline constexpr const char* kCheckpointFormat = "epirisk-checkpoint";
inline constexpr int kCheckpointVersion = 1;

inline nlohmann::json checkpoint_to_json(std::span<const NamedTensor> params,
                                         const nlohmann::json& metadata = nlohmann::json::object()) {
  nlohmann::json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  j["metadata"] = metadata;
  auto& arr = j["parameters"] = nlohmann::json::array();
  for (const auto& p : params)
    arr.push_back({{"name", p.name},
                   {"shape", {p.tensor->rows(), p.tensor->cols()}},
                   {"values", p.tensor->data()}});
  return j;
}

/// Copies values into `params`. Every parameter must be present with an
/// identical shape; unknown names in the file are rejected too.
inline void load_checkpoint(const nlohmann::json& j, std::span<const NamedTensor> params) {
  if (!j.is_object() || j.value("format", "") != kCheckpointFormat)
    throw DataError("checkpoint: unrecognized format");
  if (j.value("version", 0) != kCheckpointVersion)
    throw DataError("checkpoint: unsupported version " + j.value("version", nlohmann::json()).dump());
  const auto& arr = j.at("parameters");
  if (arr.size() != params.size())
    throw ShapeError("checkpoint: expected " + std::to_string(params.size()) + " parameters, found " +
                     std::to_string(arr.size()));
  for (const auto& p : params) {
    const nlohmann::json* entry = nullptr;
    for (const auto& e : arr)
      if (e.at("name").get<std::string>() == p.name) entry = &e;
    if (!entry) throw DataError("checkpoint: missing parameter " + p.name);
    const auto shape = entry->at("shape").get<std::vector<std::size_t>>();
    if (shape.size() != 2 || shape[0] != p.tensor->rows() || shape[1] != p.tensor->cols())
      throw ShapeError("checkpoint: parameter " + p.name + " has shape " + entry->at("shape").dump() +
                       ", model expects " + p.tensor->shape_string());
    auto values = entry->at("values").get<std::vector<double>>();
    if (values.size() != p.tensor->size())
      throw ShapeError("checkpoint: parameter " + p.name + " has wrong value count");
    p.tensor->data() = std::move(values);
  }
}

}  // namespace epirisk
