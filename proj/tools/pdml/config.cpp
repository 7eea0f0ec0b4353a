#include <fstream>
#include <sstream>

#include "config.h"

namespace pdml::cli {

namespace fs = std::filesystem;

std::string read_text(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Config Config::load(const std::string& file) {
  Config c;
  try {
    c.doc = json::parse(read_text(file), nullptr, true, true);
  } catch (const json::parse_error& e) {
    throw ConfigError(file + ": " + e.what());
  }
  if (!c.doc.is_object()) throw ConfigError(file + ": top level must be an object");
  c.base = fs::path(file).parent_path();
  if (c.base.empty()) c.base = ".";
  return c;
}

fs::path Config::path(const std::string& p) const {
  const fs::path q(p);
  return q.is_absolute() ? q : base / q;
}

bool Config::has(const std::string& ptr) const {
  const json::json_pointer p(ptr);
  return doc.contains(p) && !doc.at(p).is_null();
}

fs::path Config::existing_file(const std::string& ptr) const {
  const auto name = get<std::string>(ptr, "");
  if (name.empty()) throw ConfigError("config " + ptr + " is required");
  const fs::path p = path(name);
  if (!fs::is_regular_file(p)) throw ConfigError("config " + ptr + ": no such file " + p.string());
  return p;
}

fs::path Config::output_dir() const {
  const fs::path p = path(get<std::string>("/output", "out"));
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw ConfigError("cannot create output directory " + p.string());
  return p;
}

std::vector<std::uint64_t> Config::seeds() const {
  if (!has("/seeds")) return {1};
  const auto s = get<std::vector<std::uint64_t>>("/seeds", {});
  if (s.empty()) throw ConfigError("config /seeds must not be empty");
  return s;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex(std::uint64_t v) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 15];
  return s;
}

std::string file_hash(const fs::path& file) { return hex(fnv1a(read_text(file))); }

void write_manifest(const Config& cfg, const std::string& command, const std::vector<std::uint64_t>& seeds,
                    const std::vector<fs::path>& outputs) {
  json m;
  m["tool"] = "pdml";
  m["version"] = PDML_VERSION;
  m["command"] = command;
  m["config_hash"] = hex(fnv1a(cfg.doc.dump()));
  m["seeds"] = seeds;
  m["config"] = cfg.doc;
  json files = json::object();
  for (const auto& f : outputs) files[f.filename().string()] = file_hash(f);
  m["outputs"] = files;
  const fs::path out = cfg.output_dir() / "manifest.json";
  std::ofstream os(out, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + out.string());
  os << m.dump(2) << '\n';
}

}  // namespace pdml::cli
