#include "predo/services.hpp"

#include <httplib.h>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iostream>
#include <mutex>
#include <random>

#include "predo/digest.hpp"
#include "predo/error.hpp"

namespace predo::services {

using json = nlohmann::json;

namespace {

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

WarningSink& sink() {
  static WarningSink s = [](std::string_view msg) { std::cerr << "warning: " << msg << '\n'; };
  return s;
}

}  // namespace

void set_warning_sink(WarningSink s) {
  std::lock_guard lock(sink_mutex());
  sink() = std::move(s);
}

void warn(std::string_view message) {
  std::lock_guard lock(sink_mutex());
  if (sink()) sink()(message);
}

void EndpointConfig::validate() const {
  if (base_url.empty()) throw Error(ErrorCode::invalid_config, "endpoint base_url is empty");
  if (!(timeout_seconds > 0.0)) throw Error(ErrorCode::invalid_config, "endpoint timeout must be > 0");
  if (retries < 0) throw Error(ErrorCode::invalid_config, "endpoint retries must be >= 0");
}

namespace {

struct HttpReply {
  int status = 0;
  std::string body;
};

// POSTs (or GETs when body is empty and method is GET), retrying transport failures
// and 5xx replies with the identical request.
HttpReply send(const EndpointConfig& endpoint, const std::string& method, const std::string& path,
               const std::string& body, const std::string& request_id) {
  endpoint.validate();
  httplib::Headers headers{{"X-Request-Id", request_id}};
  if (endpoint.auth_token) headers.emplace("Authorization", "Bearer " + *endpoint.auth_token);
  const auto seconds = static_cast<time_t>(endpoint.timeout_seconds);
  const auto micros = static_cast<time_t>((endpoint.timeout_seconds - static_cast<double>(seconds)) * 1e6);
  std::string last_error;
  for (int attempt = 0; attempt <= endpoint.retries; ++attempt) {
    httplib::Client client(endpoint.base_url);
    client.set_connection_timeout(seconds, micros);
    client.set_read_timeout(seconds, micros);
    client.set_write_timeout(seconds, micros);
    httplib::Result res = method == "GET" ? client.Get(path, headers)
                                          : client.Post(path, headers, body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    return {res->status, res->body};
  }
  throw Error(ErrorCode::transport_error, method + " " + endpoint.base_url + path + " failed after " +
                                              std::to_string(endpoint.retries + 1) + " attempts: " + last_error);
}

json parse_json(std::string_view body) {
  json doc = json::parse(body, nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) throw Error(ErrorCode::protocol_error, "response is not a JSON object");
  return doc;
}

std::string error_text(std::string_view body) {
  const json doc = json::parse(body, nullptr, false);
  if (doc.is_object() && doc.contains("error") && doc["error"].is_string()) return doc["error"].get<std::string>();
  return std::string(body.substr(0, 200));
}

}  // namespace

std::string generate_request_body(std::string_view prompt, std::uint64_t seed) {
  return json{{"prompt", prompt}, {"seed", seed}, {"format", "obj"}}.dump();
}

GenerationResult parse_generate_response(int status, std::string_view body) {
  if (status == 422) throw Error(ErrorCode::generation_failed, error_text(body));
  if (status != 200) throw Error(ErrorCode::protocol_error, "unexpected HTTP status " + std::to_string(status));
  const json doc = parse_json(body);
  if (!doc.contains("mesh_b64") || !doc["mesh_b64"].is_string())
    throw Error(ErrorCode::protocol_error, "response lacks string field 'mesh_b64'");
  if (!doc.contains("generator_id") || !doc["generator_id"].is_string())
    throw Error(ErrorCode::protocol_error, "response lacks string field 'generator_id'");
  GenerationResult result;
  try {
    const auto bytes = base64_decode(doc["mesh_b64"].get<std::string>());
    result.mesh_obj.assign(bytes.begin(), bytes.end());
    geometry::load_obj(result.mesh_obj);
  } catch (const Error& e) {
    throw Error(ErrorCode::protocol_error, std::string("mesh payload rejected: ") + e.what());
  }
  result.generator_id = doc["generator_id"].get<std::string>();
  return result;
}

std::string score_request_body(std::span<const std::uint8_t> png, std::string_view target_prompt) {
  return json{{"image_b64", base64_encode(png)}, {"target_prompt", target_prompt}}.dump();
}

double parse_score_response(int status, std::string_view body) {
  if (status != 200)
    throw Error(ErrorCode::protocol_error, "score failed with HTTP " + std::to_string(status) + ": " + error_text(body));
  const json doc = parse_json(body);
  if (!doc.contains("practicality") || !doc["practicality"].is_number())
    throw Error(ErrorCode::protocol_error, "response lacks numeric field 'practicality'");
  const double g = doc["practicality"].get<double>();
  if (!std::isfinite(g)) throw Error(ErrorCode::protocol_error, "practicality is not finite");
  if (g < 0.0 || g > 1.0) {
    warn("practicality " + std::to_string(g) + " outside [0,1]; clamped");
    return std::clamp(g, 0.0, 1.0);
  }
  return g;
}

HttpGenerator::HttpGenerator(EndpointConfig endpoint) : endpoint_(std::move(endpoint)) { endpoint_.validate(); }

GenerationResult HttpGenerator::generate(std::string_view prompt, std::uint64_t seed) {
  const auto started = std::chrono::steady_clock::now();
  const std::string id = to_hex(Fnv1a64().update(prompt).update(seed).value());
  const HttpReply reply = send(endpoint_, "POST", "/generate", generate_request_body(prompt, seed), id);
  GenerationResult result = parse_generate_response(reply.status, reply.body);
  result.latency_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

HttpScorer::HttpScorer(EndpointConfig endpoint) : endpoint_(std::move(endpoint)) { endpoint_.validate(); }

double HttpScorer::score(const ScoreInput& input) {
  if (input.png.empty()) throw Error(ErrorCode::protocol_error, "score needs a non-empty image");
  const std::string id = to_hex(Fnv1a64().update(input.png).update(input.target_prompt).value());
  const HttpReply reply = send(endpoint_, "POST", "/score", score_request_body(input.png, input.target_prompt), id);
  return parse_score_response(reply.status, reply.body);
}

HttpEvaluator::HttpEvaluator(EndpointConfig endpoint) : endpoint_(std::move(endpoint)) { endpoint_.validate(); }

double HttpEvaluator::evaluate(const geometry::TriMesh& mesh) const {
  const std::string obj = geometry::write_obj(mesh);
  const std::string body = json{{"mesh_b64", base64_encode(obj)}}.dump();
  const HttpReply reply = send(endpoint_, "POST", "/evaluate", body, to_hex(Fnv1a64().update(obj).value()));
  if (reply.status != 200)
    throw Error(ErrorCode::protocol_error, "evaluate failed with HTTP " + std::to_string(reply.status));
  const json doc = parse_json(reply.body);
  if (!doc.contains("performance") || !doc["performance"].is_number())
    throw Error(ErrorCode::protocol_error, "response lacks numeric field 'performance'");
  return doc["performance"].get<double>();
}

bool health_check(const EndpointConfig& endpoint) {
  try {
    const HttpReply reply = send(endpoint, "GET", "/healthz", {}, "healthz");
    if (reply.status != 200) return false;
    const json doc = json::parse(reply.body, nullptr, false);
    return doc.is_object() && doc.value("status", "") == "ok";
  } catch (const Error&) {
    return false;
  }
}

// ---------------------------------------------------------------------------
// Mock generator and scorer

void MockConfig::validate() const {
  if (!(hallucination_rate_base >= 0.0 && hallucination_rate_base <= 1.0))
    throw Error(ErrorCode::invalid_config, "hallucination base rate must be in [0,1]");
  if (!std::isfinite(rare_token_boost)) throw Error(ErrorCode::invalid_config, "rare token boost must be finite");
  for (const Range& r : {car.length, car.width, car.height, car.wheel_radius})
    if (!(r.min > 0.0 && r.min <= r.max)) throw Error(ErrorCode::invalid_config, "bad car parameter range");
}

double rare_token_fraction(std::string_view prompt) {
  static constexpr std::string_view kTemplate[] = {"a", "car", "in", "the", "shape", "of"};
  std::size_t total = 0;
  std::size_t rare = 0;
  std::size_t i = 0;
  while (i < prompt.size()) {
    while (i < prompt.size() && std::isspace(static_cast<unsigned char>(prompt[i]))) ++i;
    const std::size_t start = i;
    while (i < prompt.size() && !std::isspace(static_cast<unsigned char>(prompt[i]))) ++i;
    if (i == start) break;
    const std::string_view word = prompt.substr(start, i - start);
    std::string lower(word);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (std::find(std::begin(kTemplate), std::end(kTemplate), lower) != std::end(kTemplate)) continue;
    ++total;
    const bool letters_only = std::all_of(word.begin(), word.end(), [](char c) {
      return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
    });
    if (!letters_only || word.size() > 7) ++rare;
  }
  return total == 0 ? 0.0 : static_cast<double>(rare) / static_cast<double>(total);
}

double hallucination_probability(const MockConfig& cfg, std::string_view prompt) {
  return std::clamp(cfg.hallucination_rate_base + cfg.rare_token_boost * rare_token_fraction(prompt), 0.0, 1.0);
}

namespace {

using geometry::TriMesh;
using geometry::Vec3;

void add_prism(TriMesh& mesh, const std::vector<Eigen::Vector2d>& outline, double y0, double y1,
               std::optional<Eigen::Vector2d> fan_center) {
  const auto base = static_cast<std::uint32_t>(mesh.vertices.size());
  const auto n = static_cast<std::uint32_t>(outline.size());
  for (double y : {y0, y1})
    for (const auto& p : outline) mesh.vertices.emplace_back(p.x(), y, p.y());
  for (std::uint32_t k = 0; k < n; ++k) {
    const std::uint32_t k1 = (k + 1) % n;
    mesh.faces.push_back({base + k, base + k1, base + n + k1});
    mesh.faces.push_back({base + k, base + n + k1, base + n + k});
  }
  if (fan_center) {
    const auto c0 = static_cast<std::uint32_t>(mesh.vertices.size());
    mesh.vertices.emplace_back(fan_center->x(), y0, fan_center->y());
    mesh.vertices.emplace_back(fan_center->x(), y1, fan_center->y());
    for (std::uint32_t k = 0; k < n; ++k) {
      const std::uint32_t k1 = (k + 1) % n;
      mesh.faces.push_back({c0, base + k1, base + k});
      mesh.faces.push_back({c0 + 1, base + n + k, base + n + k1});
    }
  } else {  // convex outline: fan from the first vertex
    for (std::uint32_t k = 1; k + 1 < n; ++k) {
      mesh.faces.push_back({base, base + k + 1, base + k});
      mesh.faces.push_back({base + n, base + n + k, base + n + k + 1});
    }
  }
}

TriMesh make_disjoint_boxes(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const auto pick = [&](double lo, double hi) { return lo + (hi - lo) * u01(rng); };
  const double l1 = pick(1.2, 1.8), l2 = pick(1.2, 1.8), gap = pick(0.6, 1.2);
  const double w = pick(0.5, 0.9), h = pick(0.3, 0.6);
  TriMesh mesh = geometry::make_box({0, -w / 2, 0}, {l1, w / 2, h});
  geometry::append(mesh, geometry::make_box({l1 + gap, -w / 2, 0}, {l1 + gap + l2, w / 2, h}));
  return mesh;
}

TriMesh make_sheet(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double length = 3.8 + u01(rng), width = 1.6 + 0.4 * u01(rng);
  constexpr int nx = 4, ny = 2;
  TriMesh mesh;
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) mesh.vertices.emplace_back(length * i / nx, width * (j / double(ny) - 0.5), 0.0);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const auto v = static_cast<std::uint32_t>(j * (nx + 1) + i);
      mesh.faces.push_back({v, v + 1, v + nx + 2});
      mesh.faces.push_back({v, v + nx + 2, v + nx + 1});
    }
  return mesh;
}

}  // namespace

TriMesh make_mock_car(const CarParams& p) {
  const double zb = 2.0 * p.wheel_radius;
  const double zt = zb + p.body_height;
  const double a = p.cabin_start * p.length;
  const double b = p.cabin_end * p.length;
  const double s = 0.15 * (b - a);
  const double front = 0.18 * p.length;
  const double rear = 0.82 * p.length;
  const std::vector<Eigen::Vector2d> profile = {
      {0, zb}, {front, zb}, {rear, zb}, {p.length, zb}, {p.length, zt}, {b, zt},
      {b - s, zt + p.cabin_height}, {a + s, zt + p.cabin_height}, {a, zt}, {0, zt}};
  TriMesh mesh;
  add_prism(mesh, profile, -p.width / 2, p.width / 2, Eigen::Vector2d(0.5 * (a + b), zb + 0.5 * p.body_height));

  constexpr double kPi = 3.14159265358979323846;
  for (double xw : {front, rear}) {
    std::vector<Eigen::Vector2d> octagon;
    for (int k = 0; k < 8; ++k) {
      const double t = kPi / 2 + k * kPi / 4;
      octagon.emplace_back(xw + p.wheel_radius * std::cos(t), zb - p.wheel_radius + p.wheel_radius * std::sin(t));
    }
    octagon[0] = {xw, zb};  // exact contact vertex shared with the body outline
    add_prism(mesh, octagon, p.width / 2, p.width / 2 - p.wheel_width, std::nullopt);
    add_prism(mesh, octagon, -p.width / 2, -p.width / 2 + p.wheel_width, std::nullopt);
  }
  return mesh;
}

GenerationResult mock_generate(const MockConfig& cfg, std::string_view prompt, std::uint64_t seed) {
  cfg.validate();
  const std::uint64_t digest = Fnv1a64().update(prompt).update(cfg.seed).value();
  std::mt19937_64 rng(mix_seed(digest, seed));
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const auto pick = [&](const Range& r) { return r.min + (r.max - r.min) * u01(rng); };

  GenerationResult result;
  result.generator_id = "mock";
  TriMesh mesh;
  if (u01(rng) < hallucination_probability(cfg, prompt)) {
    mesh = u01(rng) < 0.5 ? make_disjoint_boxes(rng) : make_sheet(rng);
    result.ground_truth_practical = false;
  } else {
    CarParams params{};
    params.length = pick(cfg.car.length);
    params.width = pick(cfg.car.width);
    params.body_height = pick(cfg.car.height);
    params.cabin_height = 0.35 + 0.2 * u01(rng);
    params.wheel_radius = pick(cfg.car.wheel_radius);
    params.wheel_width = 0.2 + 0.1 * u01(rng);
    params.cabin_start = 0.25 + 0.1 * u01(rng);
    params.cabin_end = 0.7 + 0.1 * u01(rng);
    mesh = make_mock_car(params);
    result.ground_truth_practical = true;
  }
  result.mesh_obj = geometry::write_obj(mesh);
  return result;
}

double mock_score(const TriMesh& mesh) {
  const TriMesh unit = geometry::normalize(mesh);
  const geometry::MeshStats stats = geometry::mesh_stats(unit);
  const double components = stats.connected_components == 1 ? 1.0 : 0.05;
  const double watertight = stats.watertight ? 1.0 : 0.6;
  const Vec3 extent = stats.bbox.extent();
  double aspect = 0.0;
  if (extent.z() > 0.0) {
    const double r = extent.x() / extent.z();
    if (r < 1.5) aspect = r / 1.5;
    else if (r <= 4.0) aspect = 1.0;
    else aspect = std::max(0.0, 1.0 - (r - 4.0) / 4.0);
  }
  const double thin = stats.thin_fraction < 0.5 ? 1.0 : 0.1;
  return components * watertight * aspect * thin;
}

GenerationResult MockGenerator::generate(std::string_view prompt, std::uint64_t seed) {
  return mock_generate(cfg_, prompt, seed);
}

double MockScorer::score(const ScoreInput& input) {
  if (input.mesh == nullptr) throw Error(ErrorCode::protocol_error, "mock scorer needs the mesh");
  return mock_score(*input.mesh);
}

}  // namespace predo::services
