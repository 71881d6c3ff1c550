#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace predo {

/// 64-bit FNV-1a. Used for prompt/genome/sample digests; not cryptographic.
class Fnv1a64 {
 public:
  Fnv1a64& update(std::span<const std::uint8_t> bytes) noexcept;
  Fnv1a64& update(std::string_view text) noexcept;
  Fnv1a64& update(std::uint64_t value) noexcept;
  Fnv1a64& update(double value) noexcept;
  std::uint64_t value() const noexcept { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

std::uint64_t digest_doubles(std::span<const double> values) noexcept;
std::string to_hex(std::uint64_t value);

/// SplitMix64 finalizer; mixes a seed with a counter to derive independent substreams.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t counter) noexcept;

std::string base64_encode(std::span<const std::uint8_t> bytes);
inline std::string base64_encode(std::string_view bytes) {
  return base64_encode(
      std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
}
/// Standard alphabet with padding. Throws Error(parse_error) on malformed input.
std::vector<std::uint8_t> base64_decode(std::string_view text);

}  // namespace predo
