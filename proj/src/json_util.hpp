// Strict accessors for schema-validated JSON documents.
#pragma once

#include "orbitbench/core.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <initializer_list>
#include <string>
#include <string_view>

namespace orbitbench::detail {

using nlohmann::json;

template <typename E = SchemaError>
[[noreturn]] void fail(const std::string& context, const std::string& what) {
  if constexpr (std::is_same_v<E, ConfigError>) {
    throw ConfigError(context, what);
  } else {
    throw E(context + ": " + what);
  }
}

template <typename E = SchemaError>
const json& require(const json& obj, std::string_view key, const std::string& context) {
  if (!obj.is_object()) fail<E>(context, "expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) fail<E>(context + "." + std::string(key), "missing field");
  return *it;
}

template <typename E = SchemaError>
double number(const json& value, const std::string& context) {
  if (!value.is_number()) fail<E>(context, "expected a number");
  const double v = value.get<double>();
  if (!std::isfinite(v)) fail<E>(context, "expected a finite number");
  return v;
}

template <typename E = SchemaError>
std::int64_t integer(const json& value, const std::string& context) {
  if (!value.is_number_integer()) fail<E>(context, "expected an integer");
  return value.get<std::int64_t>();
}

template <typename E = SchemaError>
std::string string(const json& value, const std::string& context) {
  if (!value.is_string()) fail<E>(context, "expected a string");
  return value.get<std::string>();
}

template <typename E = SchemaError>
bool boolean(const json& value, const std::string& context) {
  if (!value.is_boolean()) fail<E>(context, "expected a boolean");
  return value.get<bool>();
}

template <typename E = SchemaError>
void reject_unknown(const json& obj, std::initializer_list<std::string_view> allowed,
                    const std::string& context) {
  if (!obj.is_object()) fail<E>(context, "expected an object");
  for (const auto& [key, _] : obj.items()) {
    bool known = false;
    for (auto a : allowed) known = known || key == a;
    if (!known) fail<E>(context + "." + key, "unknown field");
  }
}

}  // namespace orbitbench::detail
