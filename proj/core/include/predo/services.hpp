#pragma once

// Generation and scoring endpoints.
//
// Wire protocol (HTTP/1.1, JSON, UTF-8, base64 with padding):
//   POST /generate {"prompt", "seed", "format": "obj"} -> 200 {"mesh_b64", "generator_id"} | 422 {"error"}
//   POST /score    {"image_b64", "target_prompt"}      -> 200 {"practicality"}             | 422 {"error"}
//   GET  /healthz                                      -> 200 {"status": "ok"}
// Unknown response fields are ignored.
//
// The mock generator/scorer are deterministic in-process stand-ins with
// ground-truth practicality labels.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "predo/geometry.hpp"

namespace predo::services {

/// Receives non-fatal warnings (e.g. clamped scores). Defaults to stderr.
using WarningSink = std::function<void(std::string_view)>;
void set_warning_sink(WarningSink sink);
void warn(std::string_view message);

struct EndpointConfig {
  std::string base_url;
  double timeout_seconds = 120.0;
  int retries = 2;
  std::optional<std::string> auth_token;

  void validate() const;
};

struct GenerationResult {
  std::string mesh_obj;  // OBJ bytes
  std::string generator_id;
  double latency_seconds = 0.0;
  std::optional<bool> ground_truth_practical;  // mock only
};

class Generator {
 public:
  virtual ~Generator() = default;
  virtual GenerationResult generate(std::string_view prompt, std::uint64_t seed) = 0;
};

struct ScoreInput {
  const geometry::TriMesh* mesh = nullptr;  // available to in-process scorers
  std::span<const std::uint8_t> png;        // single-view render
  std::string_view target_prompt;
};

class Scorer {
 public:
  virtual ~Scorer() = default;
  /// Practicality probability g in [0, 1].
  virtual double score(const ScoreInput& input) = 0;
};

class HttpGenerator final : public Generator {
 public:
  explicit HttpGenerator(EndpointConfig endpoint);
  GenerationResult generate(std::string_view prompt, std::uint64_t seed) override;

 private:
  EndpointConfig endpoint_;
};

class HttpScorer final : public Scorer {
 public:
  explicit HttpScorer(EndpointConfig endpoint);
  double score(const ScoreInput& input) override;

 private:
  EndpointConfig endpoint_;
};

/// External design-performance evaluator: POST /evaluate {"mesh_b64"} -> {"performance"}.
class HttpEvaluator {
 public:
  explicit HttpEvaluator(EndpointConfig endpoint);
  double evaluate(const geometry::TriMesh& mesh) const;

 private:
  EndpointConfig endpoint_;
};

/// GET /healthz; true on 200 {"status": "ok"}.
bool health_check(const EndpointConfig& endpoint);

// Body builders/parsers shared by the clients and protocol tests.
std::string generate_request_body(std::string_view prompt, std::uint64_t seed);
GenerationResult parse_generate_response(int status, std::string_view body);
std::string score_request_body(std::span<const std::uint8_t> png, std::string_view target_prompt);
double parse_score_response(int status, std::string_view body);

struct Range {
  double min = 0.0;
  double max = 0.0;
};

struct CarParamRanges {
  Range length{3.8, 4.8};
  Range width{1.6, 2.0};
  Range height{0.5, 0.8};  // body, excluding cabin and wheels
  Range wheel_radius{0.28, 0.38};
};

struct MockConfig {
  double hallucination_rate_base = 0.35;
  double rare_token_boost = 0.4;
  std::uint64_t seed = 0;
  CarParamRanges car;

  void validate() const;
};

/// Share of the prompt's variable words that are "rare": longer than seven
/// characters or containing anything but ASCII letters. Template words
/// ("a", "car", "in", "the", "shape", "of") are not counted.
double rare_token_fraction(std::string_view prompt);

/// Probability that the mock emits a malformed design for `prompt`.
double hallucination_probability(const MockConfig& cfg, std::string_view prompt);

GenerationResult mock_generate(const MockConfig& cfg, std::string_view prompt, std::uint64_t seed);

/// Product of sub-scores: single component, watertight, length/height in
/// [1.5, 4], thin fraction below one half.
double mock_score(const geometry::TriMesh& mesh);

struct CarParams {
  double length, width, body_height, cabin_height, wheel_radius, wheel_width;
  double cabin_start, cabin_end;  // fractions of length
};

/// Closed, single-component car: extruded body/cabin profile plus four
/// octagonal wheel prisms sharing one vertex each with the body.
geometry::TriMesh make_mock_car(const CarParams& params);

class MockGenerator final : public Generator {
 public:
  explicit MockGenerator(MockConfig cfg) : cfg_(std::move(cfg)) {}
  GenerationResult generate(std::string_view prompt, std::uint64_t seed) override;

 private:
  MockConfig cfg_;
};

class MockScorer final : public Scorer {
 public:
  double score(const ScoreInput& input) override;
};

}  // namespace predo::services
