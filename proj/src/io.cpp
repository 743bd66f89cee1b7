#include "detwave/io.hpp"
#include "detwave/errors.hpp"

#include <cmath>
#include <fstream>
#include <memory>
#include <sstream>
#include <fmt/format.h>
#include <openssl/evp.h>

namespace fs = std::filesystem;

namespace detwave {

std::string fmt_num(double v)
{
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return fmt::format("{:.12g}", v);
}

nlohmann::json round_json(const nlohmann::json& j)
{
  if (j.is_number_float()) {
    double v = j.get<double>();
    if (!std::isfinite(v)) return nullptr;
    return std::stod(fmt_num(v));
  }
  if (j.is_object()) {
    nlohmann::json o = nlohmann::json::object();
    for (auto it = j.begin(); it != j.end(); ++it) o[it.key()] = round_json(it.value());
    return o;
  }
  if (j.is_array()) {
    nlohmann::json a = nlohmann::json::array();
    for (const auto& v : j) a.push_back(round_json(v));
    return a;
  }
  return j;
}

std::string dump_json(const nlohmann::json& j)
{
  return round_json(j).dump(2) + "\n";
}

std::string sha256_hex(const std::string& bytes)
{
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 || EVP_DigestFinal_ex(ctx.get(), md, &len) != 1)
    fail(ErrorKind::Validation, "SHA-256 digest failed");
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

std::string read_text(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(ErrorKind::Validation, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string sha256_file(const fs::path& p)
{
  return sha256_hex(read_text(p));
}

OutputDir::OutputDir(fs::path dir) : dir_(std::move(dir))
{
  std::error_code ec;
  fs::create_directories(dir_, ec);
  if (ec) fail(ErrorKind::Validation, "cannot create output directory " + dir_.string() + ": " + ec.message());
}

fs::path OutputDir::put(const std::string& name, const std::string& text)
{
  fs::path p = dir_ / name;
  std::ofstream out(p, std::ios::binary);
  if (!out) fail(ErrorKind::Validation, "cannot write " + p.string());
  out << text;
  files_.push_back(p);
  return p;
}

fs::path OutputDir::write_csv(const std::string& name, const std::vector<std::string>& header,
                              const std::vector<std::vector<double>>& rows)
{
  std::string text;
  for (std::size_t c = 0; c < header.size(); ++c) text += (c ? "," : "") + header[c];
  text += "\n";
  for (const auto& r : rows) {
    for (std::size_t c = 0; c < r.size(); ++c) {
      if (c) text += ",";
      text += fmt_num(r[c]);
    }
    text += "\n";
  }
  return put(name, text);
}

fs::path OutputDir::write_json(const std::string& name, const nlohmann::json& j)
{
  return put(name, dump_json(j));
}

fs::path write_manifest(OutputDir& out, const RunManifest& m)
{
  nlohmann::json j;
  j["tool"] = "detwave";
  j["version"] = kVersion;
  j["subcommand"] = m.subcommand;
  j["config_path"] = m.config_path;
  j["config_sha256"] = m.config_sha256;
  j["config"] = m.config;
  j["parameters"] = m.parameters;
  j["outputs"] = nlohmann::json::array();
  for (const auto& p : out.files())
    j["outputs"].push_back({{"path", p.filename().string()}, {"sha256", sha256_file(p)}});
  j["wall_seconds"] = m.wall_seconds;
  return out.write_json("manifest.json", j);
}

}
