#pragma once

#include <json.hpp>

#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hrsched/diff/adam.hpp"

namespace hrsched::diff {

inline constexpr const char* kCheckpointFormat = "hrsched-params";
inline constexpr int kCheckpointVersion = 1;

namespace detail {

inline nlohmann::json matrix_entry(const std::string& name, const Matrix& m) {
  return {{"name", name}, {"shape", {m.rows(), m.cols()}}, {"values", m.values()}};
}

inline Matrix matrix_from_entry(const nlohmann::json& e) {
  const auto shape = e.at("shape").get<std::vector<int>>();
  if (shape.size() != 2) throw std::runtime_error("checkpoint: shape must have two dimensions");
  return {shape[0], shape[1], e.at("values").get<std::vector<double>>()};
}

}  // namespace detail

/// Parameters as named flat arrays with shapes under a versioned header.
/// `meta` carries free-form information (model config, training epoch);
/// `adam`, when given, stores the optimizer moments for resuming.
inline nlohmann::json checkpoint_to_json(std::span<const Parameter> params, const nlohmann::json& meta = {},
                                         const AdamState* adam = nullptr) {
  nlohmann::json j;
  j["format"] = kCheckpointFormat;
  j["version"] = kCheckpointVersion;
  j["meta"] = meta.is_null() ? nlohmann::json::object() : meta;
  auto& arr = j["params"] = nlohmann::json::array();
  for (const auto& p : params) arr.push_back(detail::matrix_entry(p.name, p.value));
  if (adam) {
    nlohmann::json a;
    a["step"] = adam->step;
    auto& m = a["m"] = nlohmann::json::array();
    auto& v = a["v"] = nlohmann::json::array();
    for (std::size_t i = 0; i < params.size(); ++i) {
      m.push_back(detail::matrix_entry(params[i].name, adam->m.at(i)));
      v.push_back(detail::matrix_entry(params[i].name, adam->v.at(i)));
    }
    j["adam"] = std::move(a);
  }
  return j;
}

/// Loads values into `params` by name; every parameter must be present
/// with a matching shape.
inline void load_checkpoint_json(const nlohmann::json& j, std::span<Parameter> params, AdamState* adam = nullptr) {
  if (j.value("format", "") != kCheckpointFormat) throw std::runtime_error("checkpoint: unknown format");
  if (j.value("version", 0) != kCheckpointVersion)
    throw std::runtime_error("checkpoint: unsupported version " + std::to_string(j.value("version", 0)));
  auto find = [](const nlohmann::json& arr, const std::string& name) -> const nlohmann::json& {
    for (const auto& e : arr)
      if (e.at("name").get<std::string>() == name) return e;
    throw std::runtime_error("checkpoint: missing parameter " + name);
  };
  for (auto& p : params) {
    Matrix m = detail::matrix_from_entry(find(j.at("params"), p.name));
    if (m.shape() != p.value.shape())
      throw std::runtime_error("checkpoint: " + p.name + " has shape " + to_string(m.shape()) + ", expected " +
                               to_string(p.value.shape()));
    p.value = std::move(m);
    p.grad = Matrix(p.value.shape());
  }
  if (adam && j.contains("adam")) {
    const auto& a = j.at("adam");
    adam->step = a.at("step").get<long>();
    adam->m.clear();
    adam->v.clear();
    for (const auto& p : params) {
      adam->m.push_back(detail::matrix_from_entry(find(a.at("m"), p.name)));
      adam->v.push_back(detail::matrix_from_entry(find(a.at("v"), p.name)));
    }
  } else if (adam) {
    *adam = make_adam_state(params);
  }
}

}  // namespace hrsched::diff
