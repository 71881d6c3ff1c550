#include <doctest.h>

#include <random>
#include <regex>

#include "oracles.hpp"
#include "predo/error.hpp"
#include "predo/prompting.hpp"

using namespace predo;
using namespace predo::prompting;
using predo::lexicon::Lexicon;
using predo::lexicon::PartOfSpeech;
using predo::lexicon::TokenProjector;
using predo::lexicon::VocabTable;

namespace {

const Lexicon& mini() {
  static const Lexicon lex = Lexicon::load_wordnet(oracle::fixture("wordnet-mini"));
  return lex;
}

const Lexicon& full() {
  static const Lexicon lex = Lexicon::load_wordnet(oracle::wordnet_dir());
  return lex;
}

std::string scan_nearest(const Lexicon& lex, const std::string& ref, PartOfSpeech pos, double t) {
  const auto r = *lex.first_sense(ref, pos);
  std::string best;
  double best_d = INFINITY;
  for (const auto& lemma : lex.lemmas(pos)) {
    const double d = std::abs(lexicon::synset_similarity(lex, r, *lex.first_sense(lemma, pos)) - t);
    if (d < best_d) {
      best_d = d;
      best = lemma;
    }
  }
  for (auto& c : best)
    if (c == '_') c = ' ';
  return best;
}

}  // namespace

TEST_SUITE("prompting") {
  TEST_CASE("genome dimension") {
    StrategyConfig c;
    CHECK(genome_dimension(c) == 2);
    c.kind = StrategyKind::tokenization;
    CHECK(genome_dimension(c) == 256);
    c.token_count = 1;
    c.latent_dim = 1;
    CHECK(genome_dimension(c) == 1);
  }

  TEST_CASE("strategy names") {
    CHECK(strategy_from_string("bag_of_words") == StrategyKind::bag_of_words);
    CHECK(strategy_from_string("tokens") == StrategyKind::tokenization);
    CHECK(to_string(StrategyKind::tokenization) == "tokenization");
    CHECK_THROWS_AS(strategy_from_string("grammar"), Error);
  }

  TEST_CASE("bag-of-words decoding on the mini fixture") {
    StrategyConfig c;
    const double g1[] = {1.0, 0.5};
    const auto p = decode_bow(g1, mini(), c);
    CHECK(p.text == "A fast car in the shape of object");
    CHECK(p.slots.at("adjective") == "fast");
    CHECK(p.slots.at("noun") == "object");

    const double g2[] = {0.0, 1.0};
    CHECK(decode_bow(g2, mini(), c).text == "A wooden car in the shape of wing");

    const double g3[] = {0.4, 0.66};
    CHECK(decode_bow(g3, mini(), c).text == "A tall car in the shape of wheel");

    const double g4[] = {0.5, 0.0};
    CHECK(decode_bow(g4, mini(), c).text == "A tall car in the shape of automobile");

    const double g5[] = {0.3, 0.0};
    CHECK(decode_bow(g5, mini(), c).text == "A avian car in the shape of automobile");
  }

  TEST_CASE("lemma underscores become spaces") {
    StrategyConfig c;
    c.reference_noun = "golden_gate";
    const double g[] = {1.0, 1.0};
    CHECK(decode_bow(g, mini(), c).text == "A fast car in the shape of golden gate");
  }

  TEST_CASE("decoding clamps targets") {
    StrategyConfig c;
    const BowDecoder d(mini(), c);
    std::mt19937_64 rng(5);
    std::normal_distribution<double> n(0.5, 1.5);
    const std::regex pattern("A [a-z ]+ car in the shape of [a-z ]+");
    for (int i = 0; i < 200; ++i) {
      const double g[] = {n(rng), n(rng)};
      const double clamped[] = {std::clamp(g[0], 0.0, 1.0), std::clamp(g[1], 0.0, 1.0)};
      const auto a = d.decode(g), b = d.decode(clamped);
      CHECK(a.text == b.text);
      CHECK(a.genome_hash == b.genome_hash);
      CHECK(std::regex_match(a.text, pattern));
    }
  }

  TEST_CASE("unknown reference lemma") {
    StrategyConfig c;
    c.reference_noun = "spaceship";
    CHECK_THROWS_AS(BowDecoder(mini(), c), Error);
  }

  TEST_CASE("bag-of-words on full WordNet equals the linear scan" * doctest::skip(!oracle::have_full_wordnet())) {
    StrategyConfig c;
    const double g[] = {0.73, 0.41};
    const auto p = decode_bow(g, full(), c);
    CHECK(p.slots.at("adjective") == scan_nearest(full(), "fast", PartOfSpeech::adjective, 0.73));
    CHECK(p.slots.at("noun") == scan_nearest(full(), "wing", PartOfSpeech::noun, 0.41));
    const double self[] = {1.0, 1.0};
    CHECK(decode_bow(self, full(), c).text.ends_with(" car in the shape of wing"));
  }

  TEST_CASE("token decoding: identity projector and one-hot chunks") {
    const auto vocab = VocabTable::from_tokens({"A", "b", " car", "\xff", "ing"});
    const TokenProjector w(Eigen::MatrixXd::Identity(5, 5));
    StrategyConfig c;
    c.kind = StrategyKind::tokenization;
    c.token_count = 1;
    c.latent_dim = 5;
    for (int k = 0; k < 5; ++k) {
      std::vector<double> z(5, 0.0);
      z[static_cast<std::size_t>(k)] = 1.0;
      const auto p = decode_tokens(z, w, vocab, c);
      CHECK(p.token_ranks == std::vector<std::size_t>{static_cast<std::size_t>(k)});
      CHECK(p.raw_bytes == vocab.token(static_cast<std::size_t>(k)));
    }
    std::vector<double> z3(5, 0.0);
    z3[3] = 1.0;
    CHECK(decode_tokens(z3, w, vocab, c).text == "A car in the shape of \xEF\xBF\xBD");
  }

  TEST_CASE("all-zero genome repeats the rank-0 tie winner") {
    const auto vocab = VocabTable::load(oracle::fixture("vocab5.tiktoken"));
    const TokenProjector w(1, 4, vocab.size());
    StrategyConfig c;
    c.kind = StrategyKind::tokenization;
    c.token_count = 3;
    c.latent_dim = 4;
    const std::vector<double> zeros(12, 0.0);
    const auto p = decode_tokens(zeros, w, vocab, c);
    CHECK(p.token_ranks == std::vector<std::size_t>{0, 0, 0});
    CHECK(p.text == "A car in the shape of AAA");
  }

  TEST_CASE("token decoding equals the straight-line decoder") {
    const auto vocab = VocabTable::load(oracle::fixture("vocab5.tiktoken"));
    std::vector<std::string> tokens;
    for (std::size_t r = 0; r < vocab.size(); ++r) tokens.push_back(vocab.token(r));
    StrategyConfig c;
    c.kind = StrategyKind::tokenization;
    c.token_count = 16;
    c.latent_dim = 16;
    const TokenProjector w(11, 16, vocab.size());
    std::mt19937_64 rng(11);
    std::normal_distribution<double> n(0.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
      std::vector<double> g(256);
      for (auto& v : g) v = n(rng);
      const auto p = decode_tokens(g, w, vocab, c);
      CHECK(p.text == oracle::decode_tokens(g, w.weights(), tokens, 16, 16));
      CHECK(p.text.starts_with(kTokenPrefix));
      CHECK(p.token_ranks.size() == 16);
    }
  }

  TEST_CASE("token decoding dimension checks") {
    const auto vocab = VocabTable::load(oracle::fixture("vocab5.tiktoken"));
    StrategyConfig c;
    c.kind = StrategyKind::tokenization;
    c.token_count = 2;
    c.latent_dim = 3;
    const TokenProjector w(1, 3, vocab.size());
    const std::vector<double> short_genome(5, 0.0);
    CHECK_THROWS_AS(decode_tokens(short_genome, w, vocab, c), Error);
    const TokenProjector narrow(1, 3, 4);
    const std::vector<double> genome(6, 0.0);
    CHECK_THROWS_AS(decode_tokens(genome, narrow, vocab, c), Error);
  }

  TEST_CASE("utf-8 repair agrees with the table-driven oracle") {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> byte(0, 255), len(0, 12);
    const std::vector<std::string> edge = {"\xC0\xAF", "\xE0\x80\x80", "\xED\xA0\x80", "\xF4\x90\x80\x80",
                                           "\xF0\x9F\x98\x80", "\xE2\x82", "abc\xE2\x82\xAC", "\xC3\xA9\x80"};
    for (const auto& s : edge) CHECK(sanitize_utf8(s) == oracle::repair_utf8(s));
    for (int i = 0; i < 5000; ++i) {
      std::string s;
      const int n = len(rng);
      for (int k = 0; k < n; ++k) s.push_back(static_cast<char>(byte(rng)));
      CHECK(sanitize_utf8(s) == oracle::repair_utf8(s));
    }
  }

  TEST_CASE("token usage") {
    CHECK(token_usage({}, 10).counts.empty());
    CHECK(token_usage({}, 10).coverage == 0.0);
    std::vector<Prompt> history(3);
    for (auto& p : history) p.token_ranks = {1, 2};
    const auto u = token_usage(history, 100256);
    CHECK(u.counts == std::map<std::size_t, std::size_t>{{1, 3}, {2, 3}});
    CHECK(u.coverage == 2.0 / 100256.0);
  }
}
