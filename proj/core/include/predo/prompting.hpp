#pragma once

// Genome -> text prompt decoding for the two prompt-construction strategies.
//
//   bag_of_words : "A <adjective> car in the shape of <noun>"
//   tokenization : "A car in the shape of <string>", <string> = M vocabulary tokens

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "predo/lexicon.hpp"

namespace predo::prompting {

enum class StrategyKind { bag_of_words, tokenization };

std::string to_string(StrategyKind kind);
StrategyKind strategy_from_string(const std::string& text);

struct StrategyConfig {
  StrategyKind kind = StrategyKind::bag_of_words;
  std::string reference_adjective = "fast";
  std::string reference_noun = "wing";
  int token_count = 16;  // M
  int latent_dim = 16;   // D
  std::uint64_t projector_seed = 0;
};

inline constexpr std::string_view kTokenPrefix = "A car in the shape of ";

struct Prompt {
  std::string text;
  std::map<std::string, std::string> slots;
  std::uint64_t genome_hash = 0;
  std::vector<std::size_t> token_ranks;  // tokenization only
  std::string raw_bytes;                 // tokenization only, before UTF-8 repair
};

int genome_dimension(const StrategyConfig& cfg);

/// Replaces every byte that is not part of a well-formed UTF-8 sequence with U+FFFD.
std::string sanitize_utf8(std::string_view bytes);

/// Caches the similarity indexes of both slots; decode() is then a pair of lookups.
class BowDecoder {
 public:
  BowDecoder(const lexicon::Lexicon& lexicon, const StrategyConfig& cfg);

  Prompt decode(std::span<const double> genome) const;

 private:
  lexicon::SimilarityIndex adjectives_;
  lexicon::SimilarityIndex nouns_;
};

Prompt decode_bow(std::span<const double> genome, const lexicon::Lexicon& lexicon,
                  const StrategyConfig& cfg);

Prompt decode_tokens(std::span<const double> genome, const lexicon::TokenProjector& projector,
                     const lexicon::VocabTable& vocab, const StrategyConfig& cfg);

struct TokenUsage {
  std::map<std::size_t, std::size_t> counts;
  double coverage = 0.0;  // distinct ranks / V
};

TokenUsage token_usage(std::span<const Prompt> history, std::size_t vocab_size);

}  // namespace predo::prompting
