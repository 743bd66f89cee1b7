#pragma once
#include <filesystem>
#include <string>
#include <vector>
#include <nlohmann/json.hpp>

namespace detwave {

inline constexpr const char* kVersion = "0.1.0";

// 12 significant digits
std::string fmt_num(double v);
// copy of j with every float rounded to 12 significant digits
nlohmann::json round_json(const nlohmann::json& j);
std::string dump_json(const nlohmann::json& j);

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& p);

std::string read_text(const std::filesystem::path& p);

class OutputDir {
public:
  explicit OutputDir(std::filesystem::path dir);
  std::filesystem::path write_csv(const std::string& name, const std::vector<std::string>& header,
                                  const std::vector<std::vector<double>>& rows);
  std::filesystem::path write_json(const std::string& name, const nlohmann::json& j);
  const std::vector<std::filesystem::path>& files() const { return files_; }
  const std::filesystem::path& dir() const { return dir_; }

private:
  std::filesystem::path dir_;
  std::vector<std::filesystem::path> files_;
  std::filesystem::path put(const std::string& name, const std::string& text);
};

struct RunManifest {
  std::string config_path;      // empty when the built-in instance is used
  std::string config_sha256;
  nlohmann::json config;
  std::string subcommand;
  nlohmann::json parameters;
  double wall_seconds = 0;
};

// lists every file written so far with its hash; writes manifest.json last
std::filesystem::path write_manifest(OutputDir& out, const RunManifest& m);

}
