#pragma once

// WordNet (WNDB) taxonomy, Wu-Palmer similarity, and the BPE vocabulary used by
// the token-projection prompt strategy. All types are immutable after loading.

#include <Eigen/Dense>

#include <compare>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace predo::lexicon {

enum class PartOfSpeech : std::uint8_t { noun, adjective };

char to_char(PartOfSpeech pos) noexcept;

struct SynsetId {
  std::uint32_t offset = 0;
  PartOfSpeech pos = PartOfSpeech::noun;

  auto operator<=>(const SynsetId&) const = default;
  std::uint64_t key() const noexcept { return (std::uint64_t{offset} << 1) | static_cast<std::uint64_t>(pos); }
};

std::string to_string(SynsetId id);

struct Synset {
  SynsetId id;
  std::vector<std::string> lemmas;
  /// '@' and '@i' targets (nouns only).
  std::vector<SynsetId> hypernyms;
  /// Adjectives: noun targets of '+', '=' and '\' pointers, in that priority order.
  std::vector<SynsetId> noun_links;
  /// Adjective satellites: head synset reached through '&'.
  std::optional<SynsetId> similar_to;

  bool operator==(const Synset&) const = default;
};

class Lexicon {
 public:
  /// Reads index.noun, data.noun, index.adj, data.adj from `directory`.
  static Lexicon load_wordnet(const std::filesystem::path& directory);

  const Synset& synset(SynsetId id) const;
  bool contains(SynsetId id) const noexcept;
  std::size_t synset_count(PartOfSpeech pos) const noexcept;
  std::vector<SynsetId> roots() const;

  /// Senses of a lemma in index order (first = most frequent).
  std::span<const SynsetId> senses(std::string_view lemma, PartOfSpeech pos) const;
  std::optional<SynsetId> first_sense(std::string_view lemma, PartOfSpeech pos) const;
  /// All index lemmas of a part of speech, lexicographically sorted.
  const std::vector<std::string>& lemmas(PartOfSpeech pos) const;

  /// Minimum hypernym path length to a root, root depth = 1. Nouns only.
  int depth(SynsetId id) const;

  /// Noun synset that stands in for an adjective on the noun taxonomy, if any.
  std::optional<SynsetId> noun_anchor(SynsetId adjective) const;

  bool operator==(const Lexicon& other) const;

 private:
  std::vector<Synset> synsets_;
  std::unordered_map<std::uint64_t, std::size_t> by_key_;
  std::unordered_map<std::string, std::vector<SynsetId>> noun_index_;
  std::unordered_map<std::string, std::vector<SynsetId>> adj_index_;
  std::vector<std::string> noun_lemmas_;
  std::vector<std::string> adj_lemmas_;
  std::vector<int> depth_;  // parallel to synsets_, 0 for adjectives

  void compute_depths();
};

/// 2*depth(LCS) / (depth(a) + depth(b)) over the noun taxonomy, capped at 1.
double wup_similarity(const Lexicon& lexicon, SynsetId a, SynsetId b);

/// Similarity of two synsets of the same part of speech; adjectives are compared
/// through their noun anchors and score 0 when either anchor is missing.
double synset_similarity(const Lexicon& lexicon, SynsetId reference, SynsetId candidate);

/// Candidate lemmas of one part of speech sorted by their similarity to a reference.
class SimilarityIndex {
 public:
  SimilarityIndex(const Lexicon& lexicon, SynsetId reference, PartOfSpeech pos);

  /// Lemma minimizing |similarity - target| (target clamped to [0,1]); ties by lemma order.
  const std::string& nearest(double target) const;
  double similarity_of(std::size_t i) const { return entries_[i].similarity; }
  std::size_t size() const noexcept { return entries_.size(); }

 private:
  struct Entry {
    double similarity;
    std::string lemma;
  };
  std::vector<Entry> entries_;
};

std::string nearest_by_similarity(const Lexicon& lexicon, SynsetId reference, PartOfSpeech pos,
                                  double target);

class VocabTable {
 public:
  /// One "<base64 bytes> <decimal rank>" pair per line.
  static VocabTable load(const std::filesystem::path& path);
  static VocabTable from_tokens(std::vector<std::string> tokens);

  std::size_t size() const noexcept { return tokens_.size(); }
  const std::string& token(std::size_t rank) const { return tokens_.at(rank); }

 private:
  std::vector<std::string> tokens_;  // raw bytes, indexed by rank
};

/// Linear map from a D-dimensional latent chunk to V token logits.
class TokenProjector {
 public:
  /// Entries i.i.d. normal with standard deviation 1/sqrt(D), drawn from `seed`.
  TokenProjector(std::uint64_t seed, int latent_dim, std::size_t vocab_size);
  /// Explicit weights, shape D x V.
  explicit TokenProjector(Eigen::MatrixXd weights, std::uint64_t seed = 0);

  int latent_dim() const noexcept { return static_cast<int>(weights_.rows()); }
  std::size_t vocab_size() const noexcept { return static_cast<std::size_t>(weights_.cols()); }
  std::uint64_t seed() const noexcept { return seed_; }
  const Eigen::MatrixXd& weights() const noexcept { return weights_; }

  Eigen::VectorXd logits(std::span<const double> z) const;
  /// argmax of sigmoid(z^T W); the sigmoid is monotone so this is the argmax of
  /// the logits. Ties go to the lowest rank.
  std::size_t select_token(std::span<const double> z) const;

  void save(const std::filesystem::path& path) const;
  static TokenProjector load(const std::filesystem::path& path);

 private:
  Eigen::MatrixXd weights_;
  std::uint64_t seed_ = 0;
};

}  // namespace predo::lexicon
