#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <unistd.h>
#include <nlohmann/json.hpp>

#include "detwave/io.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string bin()
{
  const char* b = std::getenv("DETWAVE_BIN");
  REQUIRE(b != nullptr);
  return b;
}

std::string config_dir()
{
  const char* c = std::getenv("DETWAVE_CONFIG_DIR");
  REQUIRE(c != nullptr);
  return c;
}

fs::path scratch()
{
  static fs::path root = [] {
    auto p = fs::temp_directory_path() / ("detwave_cli_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
  }();
  return root;
}

std::string slurp(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Run {
  int code;
  std::string out, err;
  fs::path dir;
};

Run run(const std::string& name, const std::string& args)
{
  fs::path dir = scratch() / name;
  std::string cmd = "'" + bin() + "' " + args + " --out '" + dir.string() + "' > '" + (scratch() / (name + ".stdout")).string() +
                    "' 2> '" + (scratch() / (name + ".stderr")).string() + "'";
  int st = std::system(cmd.c_str());
  Run r;
  r.code = WIFEXITED(st) ? WEXITSTATUS(st) : -1;
  r.out = slurp(scratch() / (name + ".stdout"));
  r.err = slurp(scratch() / (name + ".stderr"));
  r.dir = dir;
  return r;
}

json error_of(const Run& r)
{
  auto pos = r.err.rfind("{\"error\"");
  REQUIRE(pos != std::string::npos);
  return json::parse(r.err.substr(pos));
}

}

TEST_CASE("rh example")
{
  auto r = run("rh", "rh --config '" + config_dir() + "/p0.json' --uplus 0.2 --s 1.5");
  REQUIRE(r.code == 0);
  auto j = json::parse(slurp(r.dir / "result.json"));
  CHECK(std::abs(j["strong"].get<double>() - 1.9358898944) <= 1e-10);
  CHECK(std::abs(j["weak"].get<double>() - 1.0641101056) <= 1e-10);
}

TEST_CASE("exit codes and error objects")
{
  auto iv = run("case4", "riemann --uL 2.6 --zL 0 --uR 1.0 --zR 1");
  CHECK(iv.code == 3);
  auto e = error_of(iv);
  CHECK(e["message"].get<std::string>().find("no Riemann solution (case IV)") != std::string::npos);
  CHECK(e["exit_code"] == 3);

  auto u = run("unknown", "bogus");
  CHECK(u.code == 64);
  CHECK(error_of(u)["error"] == "UnknownSubcommand");
  CHECK(run("none", "").code == 64);

  auto v = run("badvalue", "rh --uplus abc --s 1");
  CHECK(v.code == 2);
  CHECK(error_of(v)["exit_code"] == 2);
  auto q = run("badq", "--q -0.1 rh --uplus 0.2 --s 1.5");
  CHECK(q.code == 2);
  CHECK(run("nobranch", "rh --uplus 0.2 --s 1.0").code == 3);

  fs::path bad = scratch() / "bad_schema.json";
  std::ofstream(bad) << R"({"schema_version": 7, "q": 0.5})";
  CHECK(run("badschema", "--config '" + bad.string() + "' cj --uplus 0.2").code == 2);
}

TEST_CASE("index example")
{
  auto r = run("index", "index --config '" + config_dir() + "/p0.json' --wave strong --s 1.5");
  REQUIRE(r.code == 0);
  auto j = json::parse(slurp(r.dir / "result.json"));
  CHECK(j["Gamma"] == 1);
}

TEST_CASE("every subcommand writes a manifest listing its outputs")
{
  const std::pair<const char*, const char*> cmds[] = {
      {"s_rh", "rh --uplus 0.2 --s 1.5"},
      {"s_cj", "cj --uplus 0.2"},
      {"s_cjd", "cjdiagram --uplus 0.2 --n 20"},
      {"s_phase", "phase --uplus 0.2 --s 1.5 --n 50"},
      {"s_profile", "profile --wave strong --uplus 0.2 --s 1.5 --dx 0.1"},
      {"s_mel", "--k 5 melnikov --uplus 0.2 --n 5"},
      {"s_ws", "--k 5 weakspeed --uplus 0.2"},
      {"s_evans", "evans --wave strong --s 1.5 --nre 3 --nim 3"},
      {"s_index", "index --wave strong --s 1.5"},
      {"s_wind", "winding --wave strong --s 1.5"},
      {"s_riem", "riemann --uL 1.8 --zL 0 --uR 2.6 --zR 1"},
      {"s_shift", "cjshift --uR 0.2 --kmin 0.5 --kmax 5 --n 3"},
      {"s_sim", "simulate --mode riemann --uL 2 --zL 0 --uR 1 --zR 0 --T 5 --cells 400"}};
  for (const auto& [name, args] : cmds) {
    CAPTURE(args);
    auto r = run(name, args);
    REQUIRE(r.code == 0);
    REQUIRE(fs::exists(r.dir / "manifest.json"));
    auto m = json::parse(slurp(r.dir / "manifest.json"));
    CHECK(m["version"] == detwave::kVersion);
    CHECK(m.contains("config_sha256"));
    CHECK(m.contains("wall_seconds"));
    std::size_t listed = 0;
    for (const auto& o : m["outputs"]) {
      fs::path p = r.dir / o["path"].get<std::string>();
      CHECK(fs::exists(p));
      CHECK(o["sha256"] == detwave::sha256_file(p));
      ++listed;
    }
    std::size_t present = 0;
    for (const auto& e : fs::directory_iterator(r.dir))
      if (e.path().filename() != "manifest.json") ++present;
    CHECK(listed == present);
  }
}

TEST_CASE("reruns reproduce outputs byte for byte")
{
  const std::pair<const char*, const char*> cmds[] = {
      {"d_cjd", "--jobs 3 cjdiagram --uplus 0.2 --n 40"},
      {"d_profile", "--k 5 profile --wave weak --uplus 0.2 --dx 0.05"},
      {"d_evans", "--jobs 2 evans --wave strong --s 1.5 --mode contour --n 16"},
      {"d_sim", "simulate --mode riemann --uL 1.8 --zL 0 --uR 0.2 --zR 1 --T 5 --cells 300"}};
  for (const auto& [name, args] : cmds) {
    CAPTURE(args);
    auto a = run(std::string(name) + "_a", args);
    auto b = run(std::string(name) + "_b", args);
    REQUIRE(a.code == 0);
    REQUIRE(b.code == 0);
    auto ma = json::parse(slurp(a.dir / "manifest.json"));
    auto mb = json::parse(slurp(b.dir / "manifest.json"));
    for (const auto& o : ma["outputs"]) {
      auto f = o["path"].get<std::string>();
      CHECK(slurp(a.dir / f) == slurp(b.dir / f));
    }
    // the manifests differ only in the measured wall time
    ma.erase("wall_seconds");
    mb.erase("wall_seconds");
    CHECK(ma == mb);
  }
  fs::remove_all(scratch());
}
