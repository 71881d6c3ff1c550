// predo: command-line front end for calibration, optimization runs, reports and
// the geometry/lexicon utilities.

#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include "predo/config.hpp"
#include "predo/error.hpp"
#include "predo/evaluation.hpp"
#include "predo/geometry.hpp"
#include "predo/lexicon.hpp"
#include "predo/orchestrator.hpp"
#include "predo/services.hpp"

namespace {

enum Exit { kOk = 0, kConfigError = 2, kEndpointError = 3, kDataError = 4 };

int exit_code_for(predo::ErrorCode code) {
  using predo::ErrorCode;
  switch (code) {
    case ErrorCode::invalid_config:
      return kConfigError;
    case ErrorCode::transport_error:
    case ErrorCode::protocol_error:
    case ErrorCode::generation_failed:
    case ErrorCode::generation_aborted:
      return kEndpointError;
    default:
      return kDataError;
  }
}

std::string read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw predo::Error(predo::ErrorCode::missing_file, path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

int cmd_calibrate(const std::string& config_path, std::optional<std::size_t> n, std::optional<std::string> prompt,
                  const std::string& out) {
  auto cfg = predo::load_run_config(config_path);
  if (n) cfg.calibration.n = *n;
  if (prompt) cfg.calibration.prompt = *prompt;
  cfg.validate();
  const auto generator = predo::make_generator(cfg);
  const auto stats = predo::evaluation::calibrate_baseline(*generator, predo::make_evaluator(cfg), cfg.calibration.n,
                                                           cfg.calibration.prompt, cfg.calibration.seed);
  const std::filesystem::path target = out.empty() ? cfg.baseline_path : std::filesystem::path(out);
  if (target.has_parent_path()) std::filesystem::create_directories(target.parent_path());
  predo::evaluation::save_calibration(stats, target);
  std::printf("samples %zu (skipped %zu)\nmin %.17g\nmax %.17g\ndenominator %.17g\nwritten %s\n",
              stats.samples.size(), stats.skipped, stats.min, stats.max, stats.denominator, target.c_str());
  return kOk;
}

int cmd_run(const std::string& config_path, bool resume) {
  const auto cfg = predo::load_run_config(config_path);
  predo::RunOptions options;
  options.resume = resume;
  const auto rep = predo::run(cfg, options);
  predo::report(cfg.output_dir);
  std::printf("generations %zu (%s)\nfinal accuracy %.4f\noverall accuracy %.4f +- %.4f\nwall clock %.2f s\n",
              rep.generations.size(), rep.stop_reason.c_str(), rep.accuracy.gen_final, rep.accuracy.overall_mean,
              rep.accuracy.overall_std, rep.wall_clock_seconds);
  return kOk;
}

int cmd_report(const std::string& dir) {
  const auto files = predo::report(dir);
  for (const auto& p : {files.csv, files.logs, files.summary, files.token_usage, files.gallery})
    std::printf("%s\n", p.c_str());
  return kOk;
}

int cmd_eval_mesh(const std::string& path, const std::string& axis_name, int resolution, const std::string& pgm,
                  const std::string& png) {
  const auto loaded = predo::geometry::load_obj(read_all(path));
  const auto axis = predo::geometry::axis_from_string(axis_name);
  const auto unit = predo::geometry::normalize(loaded.mesh);
  const auto image = predo::geometry::silhouette(unit, axis, resolution);
  const auto stats = predo::geometry::mesh_stats(unit);
  std::printf("faces %zu (dropped %zu)\n", loaded.mesh.faces.size(), loaded.dropped_faces);
  std::printf("frontal_area %.9g\n", predo::geometry::frontal_area(image));
  std::printf("components %d\nwatertight %s\nthin_fraction %.4f\n", stats.connected_components,
              stats.watertight ? "yes" : "no", stats.thin_fraction);
  std::printf("mock_practicality %.4f\n", predo::services::mock_score(unit));
  if (!pgm.empty()) {
    std::ofstream(pgm, std::ios::binary) << image.to_pgm();
  }
  if (!png.empty()) {
    const auto bytes = predo::geometry::render_preview(unit, {});
    std::ofstream(png, std::ios::binary).write(reinterpret_cast<const char*>(bytes.data()),
                                               static_cast<std::streamsize>(bytes.size()));
  }
  return kOk;
}

int cmd_wup(const std::string& a, const std::string& b, std::string dir) {
  if (dir.empty()) {
    const char* env = std::getenv("PREDO_WORDNET_DIR");
    dir = env ? env : "/usr/share/wordnet";
  }
  const auto lex = predo::lexicon::Lexicon::load_wordnet(dir);
  using predo::lexicon::PartOfSpeech;
  const auto sa = lex.first_sense(a, PartOfSpeech::noun);
  const auto sb = lex.first_sense(b, PartOfSpeech::noun);
  if (!sa || !sb) {
    std::fprintf(stderr, "no noun sense for '%s'\n", (!sa ? a : b).c_str());
    return kDataError;
  }
  std::printf("%.17g\n", predo::lexicon::wup_similarity(lex, *sa, *sb));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prompt-space design optimization with practicality penalties"};
  app.require_subcommand(1);

  std::string config_path, out_path, run_dir, mesh_path, axis = "x", pgm, png, wordnet, lemma_a, lemma_b;
  std::optional<std::size_t> n;
  std::optional<std::string> prompt;
  bool resume = false;
  int resolution = 512;

  auto* calibrate = app.add_subcommand("calibrate", "Sample the baseline prompt and store min/max performance");
  calibrate->add_option("--config", config_path, "Run configuration file")->required();
  calibrate->add_option("--n", n, "Number of generations (default 300)");
  calibrate->add_option("--prompt", prompt, "Baseline prompt (default \"A car\")");
  calibrate->add_option("--out", out_path, "Calibration file (default: [objective] baseline)");

  auto* run = app.add_subcommand("run", "Run the optimization loop");
  run->add_option("--config", config_path, "Run configuration file")->required();
  run->add_flag("--resume", resume, "Continue from the checkpoint in the output directory");

  auto* rep = app.add_subcommand("report", "Regenerate report files from a run directory");
  rep->add_option("--run", run_dir, "Run directory")->required();

  auto* eval = app.add_subcommand("eval-mesh", "Frontal area and practicality statistics of an OBJ mesh");
  eval->add_option("file", mesh_path, "OBJ file")->required();
  eval->add_option("--axis", axis, "Projection axis (x, y or z)");
  eval->add_option("--res", resolution, "Silhouette resolution in pixels");
  eval->add_option("--pgm", pgm, "Write the silhouette as PGM");
  eval->add_option("--png", png, "Write a shaded preview as PNG");

  auto* wup = app.add_subcommand("wup", "Wu-Palmer similarity of the first noun senses of two lemmas");
  wup->add_option("lemma-a", lemma_a)->required();
  wup->add_option("lemma-b", lemma_b)->required();
  wup->add_option("--wordnet", wordnet, "WordNet database directory (default $PREDO_WORDNET_DIR)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    if (*calibrate) return cmd_calibrate(config_path, n, prompt, out_path);
    if (*run) return cmd_run(config_path, resume);
    if (*rep) return cmd_report(run_dir);
    if (*eval) return cmd_eval_mesh(mesh_path, axis, resolution, pgm, png);
    if (*wup) return cmd_wup(lemma_a, lemma_b, wordnet);
  } catch (const predo::Error& e) {
    std::fprintf(stderr, "predo: %s\n", e.what());
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::fprintf(stderr, "predo: %s\n", e.what());
    return kDataError;
  }
  return kOk;
}
