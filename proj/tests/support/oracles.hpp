#pragma once

// Independent reference implementations used as test oracles. They share no
// code with the library beyond plain data access, and favour obviousness over
// speed.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

inline std::string fixture(const std::string& rel) { return std::string(PREDO_FIXTURE_DIR) + "/" + rel; }

inline std::string wordnet_dir() {
  if (const char* env = std::getenv("PREDO_WORDNET_DIR")) return env;
  return PREDO_DEFAULT_WORDNET_DIR;
}

inline bool have_full_wordnet() { return std::filesystem::exists(wordnet_dir() + "/data.noun"); }

inline std::string vocab_file() {
  if (const char* env = std::getenv("PREDO_VOCAB_FILE")) return env;
  return PREDO_DEFAULT_VOCAB_FILE;
}

// ---------------------------------------------------------------------------
// Hypernym graph read straight from data.noun with a plain line scanner.

struct NounGraph {
  std::map<std::uint32_t, std::vector<std::uint32_t>> parents;  // offset -> hypernym offsets
  std::size_t records = 0;

  static NounGraph read(const std::string& data_noun) {
    NounGraph g;
    std::ifstream in(data_noun);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == ' ') continue;
      ++g.records;
      std::istringstream ss(line.substr(0, line.find(" | ")));
      std::string offset, lexfile, type, wcnt_hex;
      ss >> offset >> lexfile >> type >> wcnt_hex;
      const auto self = static_cast<std::uint32_t>(std::stoul(offset));
      const int words = std::stoi(wcnt_hex, nullptr, 16);
      std::string skip;
      for (int i = 0; i < 2 * words; ++i) ss >> skip;
      int pointers = 0;
      ss >> pointers;
      auto& list = g.parents[self];
      for (int p = 0; p < pointers; ++p) {
        std::string sym, target, pos, st;
        ss >> sym >> target >> pos >> st;
        if ((sym == "@" || sym == "@i") && pos == "n") list.push_back(static_cast<std::uint32_t>(std::stoul(target)));
      }
    }
    return g;
  }

  /// Every path from `s` up to a root, each listed from `s` to the root.
  std::vector<std::vector<std::uint32_t>> paths(std::uint32_t s) const {
    const auto& ps = parents.at(s);
    if (ps.empty()) return {{s}};
    std::vector<std::vector<std::uint32_t>> out;
    for (auto p : ps)
      for (auto& tail : paths(p)) {
        std::vector<std::uint32_t> path{s};
        path.insert(path.end(), tail.begin(), tail.end());
        out.push_back(std::move(path));
      }
    return out;
  }

  /// Number of nodes on the shortest path to a root (root depth 1).
  int min_depth(std::uint32_t s) const {
    std::size_t best = std::numeric_limits<std::size_t>::max();
    for (const auto& p : paths(s)) best = std::min(best, p.size());
    return static_cast<int>(best);
  }

  std::set<std::uint32_t> closure(std::uint32_t s) const {
    std::set<std::uint32_t> out;
    for (const auto& p : paths(s)) out.insert(p.begin(), p.end());
    return out;
  }
};

/// Wu-Palmer with minimum depths; the common subsumer is the one of greatest
/// depth. Values above one (possible under multiple inheritance) are capped.
inline double wup(const NounGraph& g, std::uint32_t a, std::uint32_t b) {
  const auto ca = g.closure(a);
  const auto cb = g.closure(b);
  int lcs = 0;
  for (auto c : ca)
    if (cb.count(c)) lcs = std::max(lcs, g.min_depth(c));
  if (lcs == 0) return std::numeric_limits<double>::quiet_NaN();
  const double v = 2.0 * lcs / (g.min_depth(a) + g.min_depth(b));
  return std::min(1.0, v);
}

// ---------------------------------------------------------------------------
// Token selection.

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// Materializes every sigmoid(z . W[:, j]) and scans for the first maximum.
inline std::size_t argmax_sigmoid(const Eigen::MatrixXd& w, const std::vector<double>& z) {
  std::vector<double> act(static_cast<std::size_t>(w.cols()));
  for (Eigen::Index j = 0; j < w.cols(); ++j) {
    double dot = 0.0;
    for (Eigen::Index k = 0; k < w.rows(); ++k) dot += z[static_cast<std::size_t>(k)] * w(k, j);
    act[static_cast<std::size_t>(j)] = sigmoid(dot);
  }
  std::size_t best = 0;
  for (std::size_t j = 1; j < act.size(); ++j)
    if (act[j] > act[best]) best = j;
  return best;
}

/// Same scan on raw dot products.
inline std::size_t argmax_logits(const Eigen::MatrixXd& w, const std::vector<double>& z) {
  std::size_t best = 0;
  double best_v = -std::numeric_limits<double>::infinity();
  for (Eigen::Index j = 0; j < w.cols(); ++j) {
    double dot = 0.0;
    for (Eigen::Index k = 0; k < w.rows(); ++k) dot += z[static_cast<std::size_t>(k)] * w(k, j);
    if (dot > best_v) {
      best_v = dot;
      best = static_cast<std::size_t>(j);
    }
  }
  return best;
}

/// Well-formed UTF-8 per the Unicode byte-sequence table; every byte outside a
/// well-formed sequence becomes U+FFFD.
inline std::string repair_utf8(const std::string& in) {
  std::string out;
  const auto b = [&](std::size_t i) { return static_cast<unsigned char>(in[i]); };
  const auto in_range = [&](std::size_t i, unsigned lo, unsigned hi) {
    return i < in.size() && b(i) >= lo && b(i) <= hi;
  };
  std::size_t i = 0;
  while (i < in.size()) {
    const unsigned c = b(i);
    std::size_t len = 0;
    if (c <= 0x7F) len = 1;
    else if (c >= 0xC2 && c <= 0xDF && in_range(i + 1, 0x80, 0xBF)) len = 2;
    else if (c == 0xE0 && in_range(i + 1, 0xA0, 0xBF) && in_range(i + 2, 0x80, 0xBF)) len = 3;
    else if (((c >= 0xE1 && c <= 0xEC) || c == 0xEE || c == 0xEF) && in_range(i + 1, 0x80, 0xBF) &&
             in_range(i + 2, 0x80, 0xBF))
      len = 3;
    else if (c == 0xED && in_range(i + 1, 0x80, 0x9F) && in_range(i + 2, 0x80, 0xBF)) len = 3;
    else if (c == 0xF0 && in_range(i + 1, 0x90, 0xBF) && in_range(i + 2, 0x80, 0xBF) && in_range(i + 3, 0x80, 0xBF))
      len = 4;
    else if (c >= 0xF1 && c <= 0xF3 && in_range(i + 1, 0x80, 0xBF) && in_range(i + 2, 0x80, 0xBF) &&
             in_range(i + 3, 0x80, 0xBF))
      len = 4;
    else if (c == 0xF4 && in_range(i + 1, 0x80, 0x8F) && in_range(i + 2, 0x80, 0xBF) && in_range(i + 3, 0x80, 0xBF))
      len = 4;
    if (len == 0) {
      out += "\xEF\xBF\xBD";
      ++i;
    } else {
      out.append(in, i, len);
      i += len;
    }
  }
  return out;
}

/// Straight-line tokenization decoder: split the genome into `m` chunks of
/// `d`, pick each token by scanning sigmoid activations, join raw bytes.
inline std::string decode_tokens(const std::vector<double>& genome, const Eigen::MatrixXd& w,
                                 const std::vector<std::string>& tokens, int m, int d) {
  std::string raw;
  for (int j = 0; j < m; ++j) {
    std::vector<double> z(genome.begin() + j * d, genome.begin() + (j + 1) * d);
    raw += tokens[argmax_sigmoid(w, z)];
  }
  return "A car in the shape of " + repair_utf8(raw);
}

// ---------------------------------------------------------------------------
// Benchmark functions with known minima.

inline double sphere(const Eigen::VectorXd& x) { return x.squaredNorm(); }

inline double rosenbrock(const Eigen::VectorXd& x) {
  double f = 0.0;
  for (Eigen::Index i = 0; i + 1 < x.size(); ++i)
    f += 100.0 * std::pow(x[i + 1] - x[i] * x[i], 2) + std::pow(1.0 - x[i], 2);
  return f;
}

inline double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const auto n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace oracle
