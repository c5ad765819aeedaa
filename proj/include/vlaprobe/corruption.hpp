#pragma once

// Surface-form text corruption: case flips, word scrambles and
// character-level noise applied per whitespace token.
//
// Sampling procedure for sample_corruption(text, spec):
//   1. Split text into maximal non-whitespace tokens, keeping separators.
//   2. For token j (0-based) open rng = SplitMix64(derive_seed(spec.seed, j)).
//   3. Draw u = rng.uniform01(); the token is corrupted iff u < sigma.
//   4. If corrupted, draw op = ops[rng.uniform_below(ops.size())] where ops is
//      spec.operators in canonical order (CaseFlip, WordScramble, CharInsert,
//      CharDelete, CharSubstitute, CharSwap), then apply op with the same rng.
// Element i of corruption_stream uses seed derive_seed(base.seed, i).

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vlaprobe/errors.hpp"
#include "vlaprobe/rng.hpp"

namespace vlaprobe {

enum class CorruptionOp : std::uint8_t {
  CaseFlip,
  WordScramble,
  CharInsert,
  CharDelete,
  CharSubstitute,
  CharSwap,
};

inline constexpr std::array<CorruptionOp, 6> kAllCorruptionOps = {
    CorruptionOp::CaseFlip,   CorruptionOp::WordScramble,   CorruptionOp::CharInsert,
    CorruptionOp::CharDelete, CorruptionOp::CharSubstitute, CorruptionOp::CharSwap};

inline std::string_view to_string(CorruptionOp op) {
  switch (op) {
    case CorruptionOp::CaseFlip: return "CaseFlip";
    case CorruptionOp::WordScramble: return "WordScramble";
    case CorruptionOp::CharInsert: return "CharInsert";
    case CorruptionOp::CharDelete: return "CharDelete";
    case CorruptionOp::CharSubstitute: return "CharSubstitute";
    case CorruptionOp::CharSwap: return "CharSwap";
  }
  return "?";
}

inline std::optional<CorruptionOp> corruption_op_from_string(std::string_view name) {
  for (CorruptionOp op : kAllCorruptionOps) {
    if (to_string(op) == name) return op;
  }
  return std::nullopt;
}

enum class TextChannel : std::uint8_t { Instruction, Nav };

inline std::string_view to_string(TextChannel c) {
  return c == TextChannel::Instruction ? "Instruction" : "Nav";
}

// Operator set stored as a bitmask so iteration order is always canonical.
class OperatorSet {
 public:
  constexpr OperatorSet() = default;
  static constexpr OperatorSet all() {
    OperatorSet s;
    for (CorruptionOp op : kAllCorruptionOps) s.insert(op);
    return s;
  }
  constexpr void insert(CorruptionOp op) { bits_ |= bit(op); }
  constexpr bool contains(CorruptionOp op) const { return (bits_ & bit(op)) != 0; }
  constexpr bool empty() const { return bits_ == 0; }
  std::vector<CorruptionOp> ordered() const {
    std::vector<CorruptionOp> out;
    for (CorruptionOp op : kAllCorruptionOps) {
      if (contains(op)) out.push_back(op);
    }
    return out;
  }
  friend constexpr bool operator==(OperatorSet, OperatorSet) = default;

 private:
  static constexpr std::uint8_t bit(CorruptionOp op) {
    return static_cast<std::uint8_t>(1u << static_cast<unsigned>(op));
  }
  std::uint8_t bits_ = 0;
};

struct CorruptionSpec {
  double sigma = 0.4;
  OperatorSet operators = OperatorSet::all();
  TextChannel channel = TextChannel::Instruction;
  std::uint64_t seed = 0;

  void check() const {
    if (!(sigma >= 0.0 && sigma <= 1.0)) throw DomainError("sigma must lie in [0, 1]");
    if (operators.empty()) throw DomainError("operator set must be non-empty");
  }
};

struct TokenEdit {
  std::size_t token_index = 0;
  CorruptionOp op = CorruptionOp::CaseFlip;
  friend bool operator==(const TokenEdit&, const TokenEdit&) = default;
};

struct CorruptedText {
  std::string text;
  std::vector<TokenEdit> edits;
  friend bool operator==(const CorruptedText&, const CorruptedText&) = default;
};

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

// Whitespace-delimited tokens, in order.
inline std::vector<std::string_view> whitespace_tokens(std::string_view text) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) out.push_back(text.substr(start, i - start));
  }
  return out;
}

inline std::string apply_operator(std::string token, CorruptionOp op, SplitMix64& rng) {
  const std::size_t n = token.size();
  if (n == 0) return token;
  auto random_letter = [&rng] { return static_cast<char>('a' + rng.uniform_below(26)); };
  switch (op) {
    case CorruptionOp::CaseFlip:
      // ASCII only; other bytes pass through.
      for (char& c : token) {
        if (c >= 'a' && c <= 'z') {
          c = static_cast<char>(c - 'a' + 'A');
        } else if (c >= 'A' && c <= 'Z') {
          c = static_cast<char>(c - 'A' + 'a');
        }
      }
      break;
    case CorruptionOp::WordScramble:
      // Fisher-Yates over the interior; first and last characters stay.
      if (n > 3) {
        for (std::size_t i = n - 2; i >= 2; --i) {
          const std::size_t j = 1 + rng.uniform_below(i);
          std::swap(token[i], token[j]);
        }
      }
      break;
    case CorruptionOp::CharInsert: {
      const auto pos = rng.uniform_below(n + 1);
      token.insert(token.begin() + static_cast<std::ptrdiff_t>(pos), random_letter());
      break;
    }
    case CorruptionOp::CharDelete:
      if (n > 1) token.erase(rng.uniform_below(n), 1);
      break;
    case CorruptionOp::CharSubstitute: {
      const auto pos = rng.uniform_below(n);
      token[pos] = random_letter();
      break;
    }
    case CorruptionOp::CharSwap:
      if (n > 1) {
        const auto i = rng.uniform_below(n - 1);
        std::swap(token[i], token[i + 1]);
      }
      break;
  }
  return token;
}

inline CorruptedText sample_corruption(std::string_view text, const CorruptionSpec& spec) {
  spec.check();
  if (text.find_first_not_of(" \t\n\r\f\v") == std::string_view::npos) {
    throw DomainError("cannot corrupt empty text");
  }
  const std::vector<CorruptionOp> ops = spec.operators.ordered();
  CorruptedText out;
  out.text.reserve(text.size() + 8);
  std::size_t i = 0;
  std::size_t token_index = 0;
  while (i < text.size()) {
    if (is_space(text[i])) {
      out.text.push_back(text[i++]);
      continue;
    }
    const std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    std::string token(text.substr(start, i - start));
    SplitMix64 rng(derive_seed(spec.seed, token_index));
    if (rng.uniform01() < spec.sigma) {
      const CorruptionOp op = ops[rng.uniform_below(ops.size())];
      token = apply_operator(std::move(token), op, rng);
      out.edits.push_back({token_index, op});
    }
    out.text += token;
    ++token_index;
  }
  return out;
}

inline CorruptionSpec stream_element_spec(const CorruptionSpec& base, std::uint64_t index) {
  CorruptionSpec s = base;
  s.seed = derive_seed(base.seed, index);
  return s;
}

// Prefix-stable: element i depends only on (text, base, i).
inline std::vector<CorruptedText> corruption_stream(std::string_view text,
                                                    const CorruptionSpec& base,
                                                    std::size_t count) {
  if (count == 0) throw DomainError("corruption_stream needs count >= 1");
  std::vector<CorruptedText> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(sample_corruption(text, stream_element_spec(base, i)));
  }
  return out;
}

}  // namespace vlaprobe
