#include "predo/lexicon.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <random>
#include <unordered_set>

#include "predo/digest.hpp"
#include "predo/error.hpp"

namespace predo::lexicon {

char to_char(PartOfSpeech pos) noexcept { return pos == PartOfSpeech::noun ? 'n' : 'a'; }

std::string to_string(SynsetId id) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08u-%c", id.offset, to_char(id.pos));
  return buf;
}

namespace {

std::vector<std::string_view> split_spaces(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

struct LineContext {
  std::string file;
  std::size_t line = 0;

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::parse_error, file + ":" + std::to_string(line) + ": " + what);
  }
};

template <typename T>
T parse_number(std::string_view token, int base, const LineContext& ctx, const char* field) {
  T value{};
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value, base);
  if (ec != std::errc{} || ptr != token.data() + token.size())
    ctx.fail(std::string("bad ") + field + " '" + std::string(token) + "'");
  return value;
}

std::optional<PartOfSpeech> pos_from_char(char c) {
  switch (c) {
    case 'n': return PartOfSpeech::noun;
    case 'a':
    case 's': return PartOfSpeech::adjective;
    default: return std::nullopt;
  }
}

// Strips the adjective syntactic marker, e.g. "galore(ip)".
std::string strip_marker(std::string_view word) {
  if (!word.empty() && word.back() == ')') {
    if (auto open = word.rfind('('); open != std::string_view::npos) word = word.substr(0, open);
  }
  return std::string(word);
}

std::ifstream open_wndb(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::missing_file, path.string());
  return in;
}

int link_priority(std::string_view symbol) {
  if (symbol == "+") return 0;
  if (symbol == "=") return 1;
  if (symbol == "\\") return 2;
  return -1;
}

void parse_data_file(const std::filesystem::path& path, PartOfSpeech file_pos,
                     std::vector<Synset>& out) {
  auto in = open_wndb(path);
  LineContext ctx{path.filename().string(), 0};
  std::string line;
  while (std::getline(in, line)) {
    ++ctx.line;
    if (line.empty() || line.front() == ' ') continue;  // license header
    const auto bar = line.find(" | ");
    const std::string_view record =
        bar == std::string::npos ? std::string_view(line) : std::string_view(line).substr(0, bar);
    const auto tok = split_spaces(record);
    const std::string offset_text = tok.empty() ? std::string() : std::string(tok[0]);
    auto truncated = [&] { ctx.fail("truncated record at offset " + offset_text); };
    if (tok.size() < 4 || bar == std::string::npos) truncated();

    Synset syn;
    syn.id.offset = parse_number<std::uint32_t>(tok[0], 10, ctx, "synset offset");
    if (tok[2].size() != 1) ctx.fail("bad synset type");
    const auto ss_pos = pos_from_char(tok[2][0]);
    if (!ss_pos || *ss_pos != file_pos) ctx.fail("unexpected synset type '" + std::string(tok[2]) + "'");
    syn.id.pos = file_pos;

    const auto word_count = parse_number<std::size_t>(tok[3], 16, ctx, "word count");
    std::size_t i = 4;
    if (tok.size() < i + 2 * word_count + 1) truncated();
    for (std::size_t w = 0; w < word_count; ++w, i += 2) syn.lemmas.push_back(strip_marker(tok[i]));
    const auto pointer_count = parse_number<std::size_t>(tok[i], 10, ctx, "pointer count");
    ++i;
    if (tok.size() < i + 4 * pointer_count) truncated();
    std::vector<std::pair<int, SynsetId>> links;
    for (std::size_t p = 0; p < pointer_count; ++p, i += 4) {
      const std::string_view symbol = tok[i];
      const auto target_offset = parse_number<std::uint32_t>(tok[i + 1], 10, ctx, "pointer offset");
      if (tok[i + 2].size() != 1) ctx.fail("bad pointer part of speech");
      const char target_pos_char = tok[i + 2][0];
      if (std::string_view("nvasr").find(target_pos_char) == std::string_view::npos)
        ctx.fail("bad pointer part of speech");
      parse_number<std::uint32_t>(tok[i + 3], 16, ctx, "pointer source/target");
      const auto target_pos = pos_from_char(target_pos_char);
      if (!target_pos) continue;
      const SynsetId target{target_offset, *target_pos};
      if (file_pos == PartOfSpeech::noun) {
        if ((symbol == "@" || symbol == "@i") && *target_pos == PartOfSpeech::noun)
          syn.hypernyms.push_back(target);
      } else {
        if (*target_pos == PartOfSpeech::noun) {
          const int prio = link_priority(symbol);
          if (prio >= 0) links.emplace_back(prio, target);
        } else if (symbol == "&" && !syn.similar_to && tok[2][0] == 's') {
          syn.similar_to = target;
        }
      }
    }
    std::stable_sort(links.begin(), links.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [prio, target] : links) syn.noun_links.push_back(target);
    out.push_back(std::move(syn));
  }
}

void parse_index_file(const std::filesystem::path& path, PartOfSpeech file_pos,
                      std::unordered_map<std::string, std::vector<SynsetId>>& index) {
  auto in = open_wndb(path);
  LineContext ctx{path.filename().string(), 0};
  std::string line;
  while (std::getline(in, line)) {
    ++ctx.line;
    if (line.empty() || line.front() == ' ') continue;
    const auto tok = split_spaces(line);
    if (tok.size() < 6) ctx.fail("truncated index record");
    const auto synset_count = parse_number<std::size_t>(tok[2], 10, ctx, "synset count");
    const auto pointer_count = parse_number<std::size_t>(tok[3], 10, ctx, "pointer count");
    const std::size_t first = 4 + pointer_count + 2;
    if (tok.size() != first + synset_count) ctx.fail("index record field count mismatch");
    auto& senses = index[std::string(tok[0])];
    for (std::size_t s = 0; s < synset_count; ++s)
      senses.push_back({parse_number<std::uint32_t>(tok[first + s], 10, ctx, "synset offset"), file_pos});
  }
}

}  // namespace

Lexicon Lexicon::load_wordnet(const std::filesystem::path& directory) {
  Lexicon lex;
  parse_data_file(directory / "data.noun", PartOfSpeech::noun, lex.synsets_);
  parse_data_file(directory / "data.adj", PartOfSpeech::adjective, lex.synsets_);
  for (std::size_t i = 0; i < lex.synsets_.size(); ++i) {
    if (!lex.by_key_.emplace(lex.synsets_[i].id.key(), i).second)
      throw Error(ErrorCode::parse_error, "duplicate synset " + to_string(lex.synsets_[i].id));
  }
  parse_index_file(directory / "index.noun", PartOfSpeech::noun, lex.noun_index_);
  parse_index_file(directory / "index.adj", PartOfSpeech::adjective, lex.adj_index_);

  auto require = [&](SynsetId id, const Synset& from) {
    if (!lex.contains(id))
      throw Error(ErrorCode::parse_error,
                  "synset " + to_string(from.id) + " points to missing " + to_string(id));
  };
  for (const auto& syn : lex.synsets_) {
    for (auto h : syn.hypernyms) require(h, syn);
    for (auto n : syn.noun_links) require(n, syn);
    if (syn.similar_to) require(*syn.similar_to, syn);
  }
  for (auto* index : {&lex.noun_index_, &lex.adj_index_}) {
    auto& lemmas = index == &lex.noun_index_ ? lex.noun_lemmas_ : lex.adj_lemmas_;
    for (const auto& [lemma, senses] : *index) {
      for (auto id : senses)
        if (!lex.contains(id))
          throw Error(ErrorCode::parse_error, "index lemma '" + lemma + "' names missing " + to_string(id));
      lemmas.push_back(lemma);
    }
    std::sort(lemmas.begin(), lemmas.end());
  }
  lex.compute_depths();
  return lex;
}

void Lexicon::compute_depths() {
  depth_.assign(synsets_.size(), 0);
  std::vector<std::uint8_t> state(synsets_.size(), 0);  // 0 new, 1 on stack, 2 done
  std::function<int(std::size_t)> visit = [&](std::size_t i) -> int {
    if (state[i] == 2) return depth_[i];
    if (state[i] == 1)
      throw Error(ErrorCode::parse_error, "hypernym cycle through " + to_string(synsets_[i].id));
    state[i] = 1;
    int best = 1;
    if (!synsets_[i].hypernyms.empty()) {
      best = std::numeric_limits<int>::max();
      for (auto h : synsets_[i].hypernyms) best = std::min(best, visit(by_key_.at(h.key())) + 1);
    }
    state[i] = 2;
    depth_[i] = best;
    return best;
  };
  for (std::size_t i = 0; i < synsets_.size(); ++i)
    if (synsets_[i].id.pos == PartOfSpeech::noun) visit(i);
}

const Synset& Lexicon::synset(SynsetId id) const {
  const auto it = by_key_.find(id.key());
  if (it == by_key_.end()) throw Error(ErrorCode::parse_error, "unknown synset " + to_string(id));
  return synsets_[it->second];
}

bool Lexicon::contains(SynsetId id) const noexcept { return by_key_.contains(id.key()); }

std::size_t Lexicon::synset_count(PartOfSpeech pos) const noexcept {
  return static_cast<std::size_t>(std::count_if(
      synsets_.begin(), synsets_.end(), [&](const Synset& s) { return s.id.pos == pos; }));
}

std::vector<SynsetId> Lexicon::roots() const {
  std::vector<SynsetId> out;
  for (const auto& s : synsets_)
    if (s.id.pos == PartOfSpeech::noun && s.hypernyms.empty()) out.push_back(s.id);
  return out;
}

std::span<const SynsetId> Lexicon::senses(std::string_view lemma, PartOfSpeech pos) const {
  const auto& index = pos == PartOfSpeech::noun ? noun_index_ : adj_index_;
  const auto it = index.find(std::string(lemma));
  if (it == index.end()) return {};
  return it->second;
}

std::optional<SynsetId> Lexicon::first_sense(std::string_view lemma, PartOfSpeech pos) const {
  const auto s = senses(lemma, pos);
  if (s.empty()) return std::nullopt;
  return s.front();
}

const std::vector<std::string>& Lexicon::lemmas(PartOfSpeech pos) const {
  return pos == PartOfSpeech::noun ? noun_lemmas_ : adj_lemmas_;
}

int Lexicon::depth(SynsetId id) const {
  if (id.pos != PartOfSpeech::noun) throw Error(ErrorCode::no_common_subsumer, "depth of non-noun");
  const auto it = by_key_.find(id.key());
  if (it == by_key_.end()) throw Error(ErrorCode::parse_error, "unknown synset " + to_string(id));
  return depth_[it->second];
}

std::optional<SynsetId> Lexicon::noun_anchor(SynsetId adjective) const {
  const Synset* syn = &synset(adjective);
  for (int hops = 0; hops < 2; ++hops) {
    if (!syn->noun_links.empty()) return syn->noun_links.front();
    if (!syn->similar_to) break;
    syn = &synset(*syn->similar_to);
  }
  return std::nullopt;
}

bool Lexicon::operator==(const Lexicon& other) const {
  return synsets_ == other.synsets_ && noun_index_ == other.noun_index_ &&
         adj_index_ == other.adj_index_ && depth_ == other.depth_;
}

namespace {

// Every ancestor (including the synset itself) reached through hypernym edges.
std::vector<SynsetId> ancestors(const Lexicon& lexicon, SynsetId start) {
  std::vector<SynsetId> seen{start};
  std::unordered_set<std::uint64_t> keys{start.key()};
  for (std::size_t i = 0; i < seen.size(); ++i) {
    for (auto h : lexicon.synset(seen[i]).hypernyms)
      if (keys.insert(h.key()).second) seen.push_back(h);
  }
  return seen;
}

}  // namespace

double wup_similarity(const Lexicon& lexicon, SynsetId a, SynsetId b) {
  if (a.pos != PartOfSpeech::noun || b.pos != PartOfSpeech::noun)
    throw Error(ErrorCode::no_common_subsumer, "similarity is defined on noun synsets");
  const auto up_a = ancestors(lexicon, a);
  std::unordered_set<std::uint64_t> keys_a;
  for (auto id : up_a) keys_a.insert(id.key());
  int lcs_depth = 0;
  for (auto id : ancestors(lexicon, b))
    if (keys_a.contains(id.key())) lcs_depth = std::max(lcs_depth, lexicon.depth(id));
  if (lcs_depth == 0)
    throw Error(ErrorCode::no_common_subsumer, to_string(a) + " and " + to_string(b));
  const double value = 2.0 * lcs_depth / (lexicon.depth(a) + lexicon.depth(b));
  return std::min(1.0, value);
}

double synset_similarity(const Lexicon& lexicon, SynsetId reference, SynsetId candidate) {
  if (reference.pos == PartOfSpeech::noun && candidate.pos == PartOfSpeech::noun)
    return wup_similarity(lexicon, reference, candidate);
  const auto ref = reference.pos == PartOfSpeech::noun ? std::optional(reference)
                                                       : lexicon.noun_anchor(reference);
  const auto cand = candidate.pos == PartOfSpeech::noun ? std::optional(candidate)
                                                        : lexicon.noun_anchor(candidate);
  if (!ref || !cand) return 0.0;
  return wup_similarity(lexicon, *ref, *cand);
}

SimilarityIndex::SimilarityIndex(const Lexicon& lexicon, SynsetId reference, PartOfSpeech pos) {
  const auto& pool = lexicon.lemmas(pos);
  if (pool.empty()) throw Error(ErrorCode::empty_pool, "no lemmas for the requested part of speech");
  std::unordered_map<std::uint64_t, double> cache;
  entries_.reserve(pool.size());
  for (const auto& lemma : pool) {
    const SynsetId sense = lexicon.senses(lemma, pos).front();
    auto [it, fresh] = cache.try_emplace(sense.key(), 0.0);
    if (fresh) it->second = synset_similarity(lexicon, reference, sense);
    entries_.push_back({it->second, lemma});
  }
  std::sort(entries_.begin(), entries_.end(), [](const Entry& a, const Entry& b) {
    return a.similarity != b.similarity ? a.similarity < b.similarity : a.lemma < b.lemma;
  });
}

const std::string& SimilarityIndex::nearest(double target) const {
  target = std::isnan(target) ? 0.0 : std::clamp(target, 0.0, 1.0);
  const auto hi = std::lower_bound(entries_.begin(), entries_.end(), target,
                                   [](const Entry& e, double t) { return e.similarity < t; });
  if (hi == entries_.begin()) return hi->lemma;
  // Last entry below the target; the head of its equal-similarity run holds the smallest lemma.
  auto lo = std::prev(hi);
  lo = std::lower_bound(entries_.begin(), std::next(lo), lo->similarity,
                        [](const Entry& e, double s) { return e.similarity < s; });
  if (hi == entries_.end()) return lo->lemma;
  const double d_lo = target - lo->similarity;
  const double d_hi = hi->similarity - target;
  if (d_lo < d_hi) return lo->lemma;
  if (d_hi < d_lo) return hi->lemma;
  return std::min(lo->lemma, hi->lemma);
}

std::string nearest_by_similarity(const Lexicon& lexicon, SynsetId reference, PartOfSpeech pos,
                                  double target) {
  return SimilarityIndex(lexicon, reference, pos).nearest(target);
}

VocabTable VocabTable::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::missing_file, path.string());
  LineContext ctx{path.filename().string(), 0};
  std::vector<std::optional<std::string>> by_rank;
  std::string line;
  while (std::getline(in, line)) {
    ++ctx.line;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto space = line.find(' ');
    if (space == std::string::npos || line.find(' ', space + 1) != std::string::npos)
      ctx.fail("expected '<base64> <rank>'");
    const std::string_view text(line);
    std::vector<std::uint8_t> bytes;
    try {
      bytes = base64_decode(text.substr(0, space));
    } catch (const Error&) {
      ctx.fail("invalid base64");
    }
    const auto rank = parse_number<std::size_t>(text.substr(space + 1), 10, ctx, "rank");
    if (rank >= by_rank.size()) by_rank.resize(rank + 1);
    if (by_rank[rank])
      throw Error(ErrorCode::duplicate_rank,
                  ctx.file + ":" + std::to_string(ctx.line) + ": rank " + std::to_string(rank));
    by_rank[rank] = std::string(bytes.begin(), bytes.end());
  }
  std::vector<std::string> tokens;
  tokens.reserve(by_rank.size());
  for (std::size_t r = 0; r < by_rank.size(); ++r) {
    if (!by_rank[r]) throw Error(ErrorCode::parse_error, ctx.file + ": missing rank " + std::to_string(r));
    tokens.push_back(std::move(*by_rank[r]));
  }
  return from_tokens(std::move(tokens));
}

VocabTable VocabTable::from_tokens(std::vector<std::string> tokens) {
  if (tokens.empty()) throw Error(ErrorCode::parse_error, "vocabulary is empty");
  std::unordered_set<std::string_view> unique;
  for (const auto& t : tokens)
    if (!unique.insert(t).second) throw Error(ErrorCode::parse_error, "duplicate token bytes");
  VocabTable table;
  table.tokens_ = std::move(tokens);
  return table;
}

TokenProjector::TokenProjector(std::uint64_t seed, int latent_dim, std::size_t vocab_size)
    : weights_(latent_dim, static_cast<Eigen::Index>(vocab_size)), seed_(seed) {
  if (latent_dim < 1 || vocab_size < 1)
    throw Error(ErrorCode::invalid_config, "projector dimensions must be positive");
  std::mt19937_64 rng(mix_seed(seed, 0));
  std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(latent_dim)));
  for (Eigen::Index c = 0; c < weights_.cols(); ++c)
    for (Eigen::Index r = 0; r < weights_.rows(); ++r) weights_(r, c) = normal(rng);
}

TokenProjector::TokenProjector(Eigen::MatrixXd weights, std::uint64_t seed)
    : weights_(std::move(weights)), seed_(seed) {
  if (weights_.rows() < 1 || weights_.cols() < 1)
    throw Error(ErrorCode::invalid_config, "projector dimensions must be positive");
}

Eigen::VectorXd TokenProjector::logits(std::span<const double> z) const {
  if (static_cast<Eigen::Index>(z.size()) != weights_.rows())
    throw Error(ErrorCode::dimension_mismatch,
                "latent chunk has " + std::to_string(z.size()) + " entries, expected " +
                    std::to_string(weights_.rows()));
  const Eigen::Map<const Eigen::VectorXd> chunk(z.data(), static_cast<Eigen::Index>(z.size()));
  return weights_.transpose() * chunk;
}

std::size_t TokenProjector::select_token(std::span<const double> z) const {
  const Eigen::VectorXd scores = logits(z);
  std::size_t best = 0;
  for (Eigen::Index i = 1; i < scores.size(); ++i)
    if (scores[i] > scores[static_cast<Eigen::Index>(best)]) best = static_cast<std::size_t>(i);
  return best;
}

namespace {
constexpr char kProjectorMagic[8] = {'P', 'R', 'D', 'O', 'W', 'M', 'A', '1'};
}

void TokenProjector::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::missing_file, path.string());
  const std::uint64_t header[3] = {seed_, static_cast<std::uint64_t>(weights_.rows()),
                                   static_cast<std::uint64_t>(weights_.cols())};
  out.write(kProjectorMagic, sizeof kProjectorMagic);
  out.write(reinterpret_cast<const char*>(header), sizeof header);
  out.write(reinterpret_cast<const char*>(weights_.data()),
            static_cast<std::streamsize>(weights_.size() * sizeof(double)));
}

TokenProjector TokenProjector::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::missing_file, path.string());
  char magic[8];
  std::uint64_t header[3];
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(header), sizeof header);
  if (!in || !std::equal(magic, magic + 8, kProjectorMagic))
    throw Error(ErrorCode::parse_error, path.string() + ": not a projector file");
  Eigen::MatrixXd w(static_cast<Eigen::Index>(header[1]), static_cast<Eigen::Index>(header[2]));
  in.read(reinterpret_cast<char*>(w.data()), static_cast<std::streamsize>(w.size() * sizeof(double)));
  if (!in) throw Error(ErrorCode::parse_error, path.string() + ": truncated projector");
  return TokenProjector(std::move(w), header[0]);
}

}  // namespace predo::lexicon
