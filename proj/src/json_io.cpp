#include "biasforge/json_io.hpp"

#include <fstream>
#include <sstream>

namespace biasforge {

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

Json read_json_file(const std::filesystem::path& path) {
  const std::string text = read_text_file(path);
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::Config, path.string() + ": " + e.what());
  }
}

std::string dump_json(const Json& value) { return value.dump(2) + "\n"; }

void write_json_file(const std::filesystem::path& path, const Json& value) {
  write_text_file(path, dump_json(value));
}

namespace cfg {

std::string join(std::string_view path, std::string_view key) {
  std::string out(path);
  out += '/';
  out += key;
  return out;
}

const Json& require(const Json& obj, std::string_view key, std::string_view path) {
  if (!obj.is_object())
    throw Error(ErrorKind::Config, "field " + std::string(path.empty() ? "/" : path) +
                                       " must be an object");
  const auto it = obj.find(std::string(key));
  if (it == obj.end())
    throw Error(ErrorKind::Config, "missing required field " + join(path, key));
  return *it;
}

}  // namespace cfg
}  // namespace biasforge
