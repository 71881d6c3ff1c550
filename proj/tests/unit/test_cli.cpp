#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
};

Outcome cli(const std::string& args) {
  const auto capture = fs::temp_directory_path() / "predo-cli-out.txt";
  const std::string cmd = std::string("\"") + PREDO_CLI_PATH + "\" " + args + " > \"" + capture.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  Outcome o;
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(capture);
  std::ostringstream ss;
  ss << in.rdbuf();
  o.out = ss.str();
  return o;
}

fs::path write_config(const fs::path& dir, const std::string& extra, const std::string& objective = "") {
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "run.ini") << "[strategy]\nwordnet = " << oracle::fixture("wordnet-mini") << "\n"
                                 << "[optimizer]\nmax_generations = 2\n"
                                 << "[objective]\narea_resolution = 64\n" << objective
                                 << "[render]\nresolution = 32\n"
                                 << "[calibration]\nn = 12\n"
                                 << "[run]\nseed = 5\nwrite_artifacts = false\noutput_dir = out\n"
                                 << extra;
  return dir / "run.ini";
}

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("usage errors exit with 2") {
    CHECK(cli("").code == 2);
    CHECK(cli("bogus").code == 2);
    CHECK(cli("run").code == 2);
    CHECK(cli("--help").code == 0);
  }

  TEST_CASE("wup on the mini database") {
    const auto dir = oracle::fixture("wordnet-mini");
    auto o = cli("wup car vehicle --wordnet " + dir);
    CHECK(o.code == 0);
    CHECK(std::stod(o.out) == doctest::Approx(0.8).epsilon(1e-15));
    o = cli("wup wing wheel --wordnet " + dir);
    CHECK(std::stod(o.out) == doctest::Approx(4.0 / 6.0).epsilon(1e-15));
    CHECK(cli("wup car spaceship --wordnet " + dir).code == 4);
    CHECK(cli("wup car truck --wordnet /nonexistent").code == 4);
  }

  TEST_CASE("eval-mesh reports the unit-cube area") {
    const auto pgm = fs::temp_directory_path() / "predo-cli-cube.pgm";
    const auto o = cli("eval-mesh " + oracle::fixture("meshes/cube.obj") + " --res 128 --pgm " + pgm.string());
    CHECK(o.code == 0);
    CHECK(o.out.find("frontal_area 1\n") != std::string::npos);
    CHECK(o.out.find("watertight yes") != std::string::npos);
    CHECK(fs::file_size(pgm) > 0);
    CHECK(cli("eval-mesh " + oracle::fixture("meshes/zero_index.obj")).code == 4);
    CHECK(cli("eval-mesh " + oracle::fixture("meshes/cube.obj") + " --axis w").code == 2);
  }

  TEST_CASE("calibrate, run and report") {
    const auto dir = fs::temp_directory_path() / "predo-cli-run";
    const auto config = write_config(dir, "");
    auto o = cli("run --config " + config.string());
    CHECK(o.code == 4);
    CHECK(o.out.find("calibration-missing") != std::string::npos);

    o = cli("calibrate --config " + config.string());
    CHECK(o.code == 0);
    CHECK(fs::exists(dir / "out" / "baseline.txt"));

    o = cli("run --config " + config.string());
    CHECK(o.code == 0);
    CHECK(o.out.find("generations 2") != std::string::npos);
    CHECK(fs::exists(dir / "out" / "generations.csv"));

    o = cli("report --run " + (dir / "out").string());
    CHECK(o.code == 0);
    CHECK(o.out.find("report.json") != std::string::npos);
    CHECK(cli("report --run " + (dir / "nothing").string()).code == 4);
  }

  TEST_CASE("bad config exits with 2, unreachable endpoints with 3") {
    const auto dir = fs::temp_directory_path() / "predo-cli-bad";
    CHECK(cli("run --config " + write_config(dir, "[extras]\nx = 1\n").string()).code == 2);
    CHECK(cli("run --config " + (dir / "absent.ini").string()).code == 2);

    const std::string unreachable = "[endpoints]\ngenerator = http://127.0.0.1:1\ntimeout = 1\nretries = 0\n";
    auto o = cli("run --config " + write_config(dir, unreachable, "baseline_min = 0.1\nbaseline_max = 0.6\n").string());
    CHECK(o.code == 3);
    CHECK(o.out.find("generation-aborted") != std::string::npos);

    // Calibration skips failed samples; with none left it is a data error.
    o = cli("calibrate --config " + write_config(dir, unreachable).string());
    CHECK(o.code == 4);
    CHECK(o.out.find("insufficient-samples") != std::string::npos);
  }
}
