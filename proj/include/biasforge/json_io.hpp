#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include <json.hpp>

#include "biasforge/error.hpp"

namespace biasforge {

using Json = nlohmann::json;

Json read_json_file(const std::filesystem::path& path);

// Two-space indentation, sorted keys, trailing newline.
void write_json_file(const std::filesystem::path& path, const Json& value);
std::string dump_json(const Json& value);

void write_text_file(const std::filesystem::path& path, std::string_view text);
std::string read_text_file(const std::filesystem::path& path);

// Field access with JSON-pointer style paths in error messages.
namespace cfg {

std::string join(std::string_view path, std::string_view key);

const Json& require(const Json& obj, std::string_view key, std::string_view path);

template <class T>
T get(const Json& obj, std::string_view key, std::string_view path) {
  const Json& v = require(obj, key, path);
  try {
    return v.get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorKind::Config, "field " + join(path, key) + " has the wrong type");
  }
}

template <class T>
T get_or(const Json& obj, std::string_view key, std::string_view path, T fallback) {
  if (!obj.is_object() || !obj.contains(std::string(key))) return fallback;
  return get<T>(obj, key, path);
}

}  // namespace cfg
}  // namespace biasforge
