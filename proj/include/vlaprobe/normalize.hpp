#pragma once

// Rule-based input normalization: lowercase, strip non-alphanumerics,
// collapse whitespace, snap each token to a small closed vocabulary by
// Damerau-Levenshtein distance, and join with single spaces.

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "vlaprobe/errors.hpp"

namespace vlaprobe {

// Unrestricted Damerau-Levenshtein distance (Lowrance-Wagner), unit costs
// for insertion, deletion, substitution and adjacent transposition.
inline std::size_t edit_distance(std::string_view a, std::string_view b) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  const std::size_t inf = n + m;
  // d has a sentinel row/column; d[i+1][j+1] is the distance of prefixes
  // a[0..i) and b[0..j).
  std::vector<std::size_t> d((n + 2) * (m + 2));
  auto at = [m](std::size_t i, std::size_t j) { return i * (m + 2) + j; };
  d[at(0, 0)] = inf;
  for (std::size_t i = 0; i <= n; ++i) {
    d[at(i + 1, 0)] = inf;
    d[at(i + 1, 1)] = i;
  }
  for (std::size_t j = 0; j <= m; ++j) {
    d[at(0, j + 1)] = inf;
    d[at(1, j + 1)] = j;
  }
  std::array<std::size_t, 256> last_row{};  // last row where each byte occurred in a
  for (std::size_t i = 1; i <= n; ++i) {
    std::size_t last_match_col = 0;
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t i1 = last_row[static_cast<unsigned char>(b[j - 1])];
      const std::size_t j1 = last_match_col;
      std::size_t cost = 1;
      if (a[i - 1] == b[j - 1]) {
        cost = 0;
        last_match_col = j;
      }
      d[at(i + 1, j + 1)] = std::min({d[at(i, j)] + cost, d[at(i + 1, j)] + 1,
                                      d[at(i, j + 1)] + 1,
                                      d[at(i1, j1)] + (i - i1 - 1) + 1 + (j - j1 - 1)});
    }
    last_row[static_cast<unsigned char>(a[i - 1])] = i;
  }
  return d[at(n + 1, m + 1)];
}

class Vocabulary {
 public:
  static constexpr std::size_t kDefaultMaxDistance = 2;

  Vocabulary() = default;
  explicit Vocabulary(std::set<std::string> entries,
                      std::size_t max_correction_distance = kDefaultMaxDistance)
      : entries_(std::move(entries)), max_distance_(max_correction_distance) {
    for (const auto& w : entries_) {
      const bool ok = !w.empty() && std::all_of(w.begin(), w.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9');
      });
      if (!ok) throw DomainError("vocabulary entry '" + w + "' is not lowercase alphanumeric");
    }
  }

  // One lowercase word per line; blank lines and '#' comments are skipped.
  static Vocabulary load(const std::filesystem::path& path,
                         std::size_t max_correction_distance = kDefaultMaxDistance) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open vocabulary file " + path.string());
    std::set<std::string> words;
    std::string line;
    while (std::getline(in, line)) {
      while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
      if (line.empty() || line[0] == '#') continue;
      words.insert(line);
    }
    return Vocabulary(std::move(words), max_correction_distance);
  }

  void save(const std::filesystem::path& path) const {
    std::ofstream out(path);
    if (!out) throw Error("cannot write vocabulary file " + path.string());
    for (const auto& w : entries_) out << w << '\n';
  }

  const std::set<std::string>& entries() const { return entries_; }
  std::size_t max_correction_distance() const { return max_distance_; }
  bool contains(std::string_view w) const { return entries_.find(std::string(w)) != entries_.end(); }
  bool empty() const { return entries_.empty(); }

 private:
  std::set<std::string> entries_;
  std::size_t max_distance_ = kDefaultMaxDistance;
};

// Closest entry within the correction radius; ties go to the smaller
// distance, then the lexicographically smallest entry. std::set iterates in
// lexicographic order, so the first strict improvement wins.
inline std::string fuzzy_correct_token(std::string_view token, const Vocabulary& vocab) {
  if (vocab.contains(token)) return std::string(token);
  const std::string* best = nullptr;
  std::size_t best_distance = vocab.max_correction_distance() + 1;
  for (const auto& entry : vocab.entries()) {
    const std::size_t len_gap =
        entry.size() > token.size() ? entry.size() - token.size() : token.size() - entry.size();
    if (len_gap >= best_distance) continue;
    const std::size_t d = edit_distance(token, entry);
    if (d < best_distance) {
      best_distance = d;
      best = &entry;
    }
  }
  return best ? *best : std::string(token);
}

inline std::string normalize(std::string_view text, const Vocabulary& vocab) {
  std::string cleaned;
  cleaned.reserve(text.size());
  for (char c : text) {
    if (c >= 'A' && c <= 'Z') {
      cleaned.push_back(static_cast<char>(c - 'A' + 'a'));
    } else if ((c >= 'a' && c <= 'z') || (c >= '0' && c <= '9')) {
      cleaned.push_back(c);
    } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
      cleaned.push_back(' ');
    }
  }
  std::string out;
  std::size_t i = 0;
  while (i < cleaned.size()) {
    while (i < cleaned.size() && cleaned[i] == ' ') ++i;
    const std::size_t start = i;
    while (i < cleaned.size() && cleaned[i] != ' ') ++i;
    if (i == start) break;
    if (!out.empty()) out.push_back(' ');
    const std::string_view token(cleaned.data() + start, i - start);
    out += vocab.empty() ? std::string(token) : fuzzy_correct_token(token, vocab);
  }
  return out;
}

}  // namespace vlaprobe
