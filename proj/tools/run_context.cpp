// SPDX-License-Identifier: Apache-2.0
#include "run_context.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace homeseq::cli {

namespace fs = std::filesystem;

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::optional<std::string> data_dir_from_env() {
  const char* v = std::getenv("HOMESEQ_DATA_DIR");
  if (v == nullptr || *v == '\0') return std::nullopt;
  return std::string(v);
}

namespace {

nlohmann::ordered_json digests(const std::vector<FileDigest>& files) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& f : files) arr.push_back({{"path", f.path}, {"fnv1a64", f.fnv1a}});
  return arr;
}

std::vector<FileDigest> digests_from(const nlohmann::json& arr) {
  std::vector<FileDigest> out;
  for (const auto& j : arr) out.push_back({j.at("path").get<std::string>(), j.at("fnv1a64").get<std::string>()});
  return out;
}

}  // namespace

std::string Manifest::to_json() const {
  nlohmann::ordered_json doc;
  doc["format"] = "homeseq-manifest/1";
  doc["subcommand"] = subcommand;
  doc["argv"] = argv;
  doc["cwd"] = cwd;
  doc["data_dir"] = data_dir ? nlohmann::ordered_json(*data_dir) : nlohmann::ordered_json(nullptr);
  doc["config_text"] = config_text ? nlohmann::ordered_json(*config_text) : nlohmann::ordered_json(nullptr);
  doc["config_hash"] = config_hash;
  doc["resolved"] = resolved;
  doc["seeds"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : seeds) doc["seeds"][k] = v;
  doc["inputs"] = digests(inputs);
  doc["outputs"] = digests(outputs);
  doc["volatile_outputs"] = volatile_outputs;
  return doc.dump(2) + "\n";
}

Manifest Manifest::from_json(std::string_view text) {
  Manifest m;
  try {
    const auto doc = nlohmann::json::parse(text);
    if (doc.at("format") != "homeseq-manifest/1") throw IoError("not a homeseq manifest");
    m.subcommand = doc.at("subcommand").get<std::string>();
    m.argv = doc.at("argv").get<std::vector<std::string>>();
    m.cwd = doc.at("cwd").get<std::string>();
    if (!doc.at("data_dir").is_null()) m.data_dir = doc.at("data_dir").get<std::string>();
    if (!doc.at("config_text").is_null()) m.config_text = doc.at("config_text").get<std::string>();
    m.config_hash = doc.at("config_hash").get<std::string>();
    m.resolved = doc.at("resolved").get<std::string>();
    for (const auto& [k, v] : doc.at("seeds").items()) m.seeds[k] = v.get<std::uint64_t>();
    m.inputs = digests_from(doc.at("inputs"));
    m.outputs = digests_from(doc.at("outputs"));
    m.volatile_outputs = doc.at("volatile_outputs").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError(std::string("malformed manifest: ") + e.what());
  }
  return m;
}

RunContext::RunContext(std::string subcommand, std::vector<std::string> argv) {
  manifest_.subcommand = std::move(subcommand);
  manifest_.argv = std::move(argv);
  manifest_.cwd = fs::current_path().string();
  manifest_.data_dir = data_dir_from_env();
}

fs::path RunContext::resolve_input(const std::string& path) const {
  const fs::path p(path);
  if (p.is_absolute() || fs::exists(p) || !manifest_.data_dir) return p;
  const fs::path alt = fs::path(*manifest_.data_dir) / p;
  return fs::exists(alt) ? alt : p;
}

std::string RunContext::read_input(const std::string& path) {
  const fs::path p = resolve_input(path);
  std::ifstream in(p, std::ios::binary);
  if (!in) throw IoError("cannot read '" + p.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  std::string text = ss.str();
  manifest_.inputs.push_back({p.string(), hex64(fnv1a64(text))});
  return text;
}

namespace {
void write_file(const std::string& path, std::string_view content) {
  const fs::path p(path);
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw IoError("write failed for '" + path + "'");
}
}  // namespace

void RunContext::write_output(const std::string& path, std::string_view content) {
  write_file(path, content);
  manifest_.outputs.push_back({path, hex64(fnv1a64(content))});
}

void RunContext::write_volatile(const std::string& path, std::string_view content) {
  write_file(path, content);
  manifest_.volatile_outputs.push_back(path);
}

void RunContext::set_config(std::optional<std::string> text, std::string resolved) {
  manifest_.config_text = std::move(text);
  manifest_.config_hash = hex64(fnv1a64(resolved));
  manifest_.resolved = std::move(resolved);
}

std::string RunContext::finish(const std::string& primary_output) {
  const std::string path = primary_output + ".manifest.json";
  write_file(path, manifest_.to_json());
  return path;
}

}  // namespace homeseq::cli
