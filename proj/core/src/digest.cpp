#include "predo/digest.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cstdio>

#include "predo/error.hpp"

namespace predo {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::invalid_config: return "invalid-config";
    case ErrorCode::numeric_degeneracy: return "numeric-degeneracy";
    case ErrorCode::length_mismatch: return "length-mismatch";
    case ErrorCode::non_finite_fitness: return "non-finite-fitness";
    case ErrorCode::parse_error: return "parse-error";
    case ErrorCode::missing_file: return "missing-file";
    case ErrorCode::no_common_subsumer: return "no-common-subsumer";
    case ErrorCode::empty_pool: return "empty-pool";
    case ErrorCode::duplicate_rank: return "duplicate-rank";
    case ErrorCode::dimension_mismatch: return "dimension-mismatch";
    case ErrorCode::empty_mesh: return "empty-mesh";
    case ErrorCode::degenerate_extent: return "degenerate-extent";
    case ErrorCode::degenerate_baseline: return "degenerate-baseline";
    case ErrorCode::insufficient_samples: return "insufficient-samples";
    case ErrorCode::transport_error: return "transport-error";
    case ErrorCode::protocol_error: return "protocol-error";
    case ErrorCode::generation_failed: return "generation-failed";
    case ErrorCode::calibration_missing: return "calibration-missing";
    case ErrorCode::missing_run: return "missing-run";
    case ErrorCode::generation_aborted: return "generation-aborted";
  }
  return "unknown";
}

namespace {
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;
}

Fnv1a64& Fnv1a64::update(std::span<const std::uint8_t> bytes) noexcept {
  for (auto b : bytes) {
    state_ ^= b;
    state_ *= kFnvPrime;
  }
  return *this;
}

Fnv1a64& Fnv1a64::update(std::string_view text) noexcept {
  return update(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Fnv1a64& Fnv1a64::update(std::uint64_t value) noexcept {
  std::uint8_t buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<std::uint8_t>(value >> (8 * i));
  return update(std::span<const std::uint8_t>(buf, 8));
}

Fnv1a64& Fnv1a64::update(double value) noexcept {
  return update(std::bit_cast<std::uint64_t>(value));
}

std::uint64_t digest_doubles(std::span<const double> values) noexcept {
  Fnv1a64 h;
  for (double v : values) h.update(v);
  return h.value();
}

std::string to_hex(std::uint64_t value) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
  return buf;
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t counter) noexcept {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (counter + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  if (bytes.empty()) return out;
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(),
                                static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
  if (text.empty()) return {};
  if (text.size() % 4 != 0) throw Error(ErrorCode::parse_error, "base64 length not a multiple of 4");
  std::size_t padding = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    const bool alnum = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
    if (c == '=') {
      if (i + 2 < text.size()) throw Error(ErrorCode::parse_error, "misplaced base64 padding");
      ++padding;
    } else if (!alnum && c != '+' && c != '/') {
      throw Error(ErrorCode::parse_error, "invalid base64 character");
    } else if (padding > 0) {
      throw Error(ErrorCode::parse_error, "data after base64 padding");
    }
  }
  std::vector<std::uint8_t> out(3 * text.size() / 4);
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(text.data()),
                                static_cast<int>(text.size()));
  if (n < 0) throw Error(ErrorCode::parse_error, "invalid base64");
  out.resize(static_cast<std::size_t>(n) - padding);
  return out;
}

}  // namespace predo
