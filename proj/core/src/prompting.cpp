#include "predo/prompting.hpp"

#include <algorithm>
#include <cmath>

#include "predo/digest.hpp"
#include "predo/error.hpp"

namespace predo::prompting {

using lexicon::PartOfSpeech;

std::string to_string(StrategyKind kind) {
  return kind == StrategyKind::bag_of_words ? "bag_of_words" : "tokenization";
}

StrategyKind strategy_from_string(const std::string& text) {
  if (text == "bag_of_words" || text == "bow") return StrategyKind::bag_of_words;
  if (text == "tokenization" || text == "tokens") return StrategyKind::tokenization;
  throw Error(ErrorCode::invalid_config, "unknown strategy '" + text + "'");
}

int genome_dimension(const StrategyConfig& cfg) {
  if (cfg.kind == StrategyKind::bag_of_words) return 2;
  if (cfg.token_count < 1 || cfg.latent_dim < 1)
    throw Error(ErrorCode::invalid_config, "token count and latent dimension must be positive");
  return cfg.token_count * cfg.latent_dim;
}

std::string sanitize_utf8(std::string_view bytes) {
  static constexpr std::string_view kReplacement = "\xEF\xBF\xBD";
  std::string out;
  out.reserve(bytes.size());
  std::size_t i = 0;
  const auto byte = [&](std::size_t k) { return static_cast<unsigned char>(bytes[k]); };
  const auto is_cont = [&](std::size_t k) { return k < bytes.size() && (byte(k) & 0xC0) == 0x80; };
  while (i < bytes.size()) {
    const unsigned char lead = byte(i);
    std::size_t len = 0;
    if (lead < 0x80) {
      len = 1;
    } else if (lead >= 0xC2 && lead <= 0xDF) {
      len = is_cont(i + 1) ? 2 : 0;
    } else if (lead >= 0xE0 && lead <= 0xEF) {
      if (is_cont(i + 1) && is_cont(i + 2)) {
        const unsigned char b1 = byte(i + 1);
        const bool overlong = lead == 0xE0 && b1 < 0xA0;
        const bool surrogate = lead == 0xED && b1 >= 0xA0;
        len = overlong || surrogate ? 0 : 3;
      }
    } else if (lead >= 0xF0 && lead <= 0xF4) {
      if (is_cont(i + 1) && is_cont(i + 2) && is_cont(i + 3)) {
        const unsigned char b1 = byte(i + 1);
        const bool overlong = lead == 0xF0 && b1 < 0x90;
        const bool too_big = lead == 0xF4 && b1 >= 0x90;
        len = overlong || too_big ? 0 : 4;
      }
    }
    if (len == 0) {
      out += kReplacement;
      ++i;
    } else {
      out.append(bytes.substr(i, len));
      i += len;
    }
  }
  return out;
}

namespace {

lexicon::SynsetId reference_sense(const lexicon::Lexicon& lex, const std::string& lemma,
                                  PartOfSpeech pos) {
  const auto sense = lex.first_sense(lemma, pos);
  if (!sense)
    throw Error(ErrorCode::invalid_config,
                "reference " + std::string(pos == PartOfSpeech::noun ? "noun" : "adjective") + " '" +
                    lemma + "' is not in the lexicon");
  return *sense;
}

std::string display_form(std::string lemma) {
  std::replace(lemma.begin(), lemma.end(), '_', ' ');
  return lemma;
}

double unit_target(double x) { return std::isnan(x) ? 0.0 : std::clamp(x, 0.0, 1.0); }

}  // namespace

BowDecoder::BowDecoder(const lexicon::Lexicon& lex, const StrategyConfig& cfg)
    : adjectives_(lex, reference_sense(lex, cfg.reference_adjective, PartOfSpeech::adjective),
                  PartOfSpeech::adjective),
      nouns_(lex, reference_sense(lex, cfg.reference_noun, PartOfSpeech::noun), PartOfSpeech::noun) {}

Prompt BowDecoder::decode(std::span<const double> genome) const {
  if (genome.size() != 2)
    throw Error(ErrorCode::dimension_mismatch, "bag-of-words genome must have 2 entries");
  const double adj_target = unit_target(genome[0]);
  const double noun_target = unit_target(genome[1]);
  Prompt prompt;
  prompt.slots["adjective"] = display_form(adjectives_.nearest(adj_target));
  prompt.slots["noun"] = display_form(nouns_.nearest(noun_target));
  prompt.text = "A " + prompt.slots["adjective"] + " car in the shape of " + prompt.slots["noun"];
  // Hash the clamped targets so equal prompts from clamp-equivalent genomes agree.
  const double clamped[2] = {adj_target, noun_target};
  prompt.genome_hash = digest_doubles(clamped);
  return prompt;
}

Prompt decode_bow(std::span<const double> genome, const lexicon::Lexicon& lex,
                  const StrategyConfig& cfg) {
  return BowDecoder(lex, cfg).decode(genome);
}

Prompt decode_tokens(std::span<const double> genome, const lexicon::TokenProjector& projector,
                     const lexicon::VocabTable& vocab, const StrategyConfig& cfg) {
  const auto m = static_cast<std::size_t>(cfg.token_count);
  const auto d = static_cast<std::size_t>(cfg.latent_dim);
  if (genome.size() != m * d)
    throw Error(ErrorCode::dimension_mismatch, "genome length " + std::to_string(genome.size()) +
                                                   " != M*D = " + std::to_string(m * d));
  if (projector.latent_dim() != cfg.latent_dim)
    throw Error(ErrorCode::dimension_mismatch, "projector latent dimension differs from D");
  if (projector.vocab_size() != vocab.size())
    throw Error(ErrorCode::dimension_mismatch, "projector vocabulary size differs from V");

  Prompt prompt;
  for (std::size_t j = 0; j < m; ++j) {
    const std::size_t rank = projector.select_token(genome.subspan(j * d, d));
    prompt.token_ranks.push_back(rank);
    prompt.raw_bytes += vocab.token(rank);
  }
  prompt.slots["string"] = sanitize_utf8(prompt.raw_bytes);
  prompt.text = std::string(kTokenPrefix) + prompt.slots["string"];
  prompt.genome_hash = digest_doubles(genome);
  return prompt;
}

TokenUsage token_usage(std::span<const Prompt> history, std::size_t vocab_size) {
  TokenUsage usage;
  for (const auto& p : history)
    for (auto rank : p.token_ranks) ++usage.counts[rank];
  if (vocab_size > 0)
    usage.coverage = static_cast<double>(usage.counts.size()) / static_cast<double>(vocab_size);
  return usage;
}

}  // namespace predo::prompting
