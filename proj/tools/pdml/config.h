#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

namespace pdml::cli {

using nlohmann::json;

/// Usage or configuration problem (exit code 1).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A JSON config plus the directory relative paths resolve against.
struct Config {
  json doc = json::object();
  std::filesystem::path base = ".";

  static Config load(const std::string& file);

  [[nodiscard]] std::filesystem::path path(const std::string& p) const;
  /// Path of an existing file named by key `ptr` (a JSON pointer).
  [[nodiscard]] std::filesystem::path existing_file(const std::string& ptr) const;
  [[nodiscard]] std::filesystem::path output_dir() const;

  template <typename T>
  T get(const std::string& ptr, T fallback) const {
    const json::json_pointer p(ptr);
    if (!doc.contains(p) || doc.at(p).is_null()) return fallback;
    try {
      return doc.at(p).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("config " + ptr + ": " + e.what());
    }
  }
  [[nodiscard]] bool has(const std::string& ptr) const;
  void set(const std::string& ptr, json value) { doc[json::json_pointer(ptr)] = std::move(value); }

  [[nodiscard]] std::vector<std::uint64_t> seeds() const;
};

[[nodiscard]] std::uint64_t fnv1a(std::string_view bytes);
[[nodiscard]] std::string hex(std::uint64_t v);
[[nodiscard]] std::string file_hash(const std::filesystem::path& file);

/// Writes manifest.json: tool version, command, config hash, seeds, the
/// effective config and a hash of every output file. Contains nothing that
/// changes between identical reruns.
void write_manifest(const Config& cfg, const std::string& command, const std::vector<std::uint64_t>& seeds,
                    const std::vector<std::filesystem::path>& outputs);

[[nodiscard]] std::string read_text(const std::filesystem::path& file);

}  // namespace pdml::cli
