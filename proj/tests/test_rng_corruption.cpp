// RNG and corruption sampler. Frozen strings come from
// tests/reference/corruption_reference.py, written separately from the headers.
#include <gtest/gtest.h>

#include <set>
#include <string>
#include <vector>

#include "vlaprobe/corruption.hpp"
#include "vlaprobe/rng.hpp"

using namespace vlaprobe;

namespace {

const std::string kText = "slow down for the lead vehicle";

CorruptionSpec spec_with(double sigma, std::uint64_t seed) {
  CorruptionSpec s;
  s.sigma = sigma;
  s.seed = seed;
  return s;
}

// Random printable text with runs of mixed whitespace.
std::string random_text(SplitMix64& rng) {
  static const std::string alphabet = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789.,!-";
  static const std::string spaces = " \t\n";
  std::string s;
  const auto words = 1 + rng.uniform_below(10);
  for (std::uint64_t w = 0; w < words; ++w) {
    const auto gap = rng.uniform_below(3);
    for (std::uint64_t g = 0; g < gap + (w > 0 ? 1 : 0); ++g) s += spaces[rng.uniform_below(spaces.size())];
    const auto len = 1 + rng.uniform_below(9);
    for (std::uint64_t c = 0; c < len; ++c) s += alphabet[rng.uniform_below(alphabet.size())];
  }
  return s;
}

}  // namespace

TEST(Rng, FrozenSplitMixValues) {
  EXPECT_EQ(mix64(0), 0u);
  EXPECT_EQ(derive_seed(7, 0), 0x63cbe1e459320dd7ULL);
  SplitMix64 r(42);
  EXPECT_EQ(r.next(), 0xbdd732262feb6e95ULL);
  EXPECT_EQ(r.next(), 0x28efe333b266f103ULL);
  EXPECT_EQ(r.next(), 0x47526757130f9f52ULL);
}

TEST(Rng, Fnv1aKnownVectors) {
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
  EXPECT_EQ(fnv1a64("foobar"), 0x85944171f73967e8ULL);
}

TEST(Rng, UniformRanges) {
  SplitMix64 r(3);
  std::vector<int> hist(7, 0);
  for (int i = 0; i < 70000; ++i) {
    const auto v = r.uniform_below(7);
    ASSERT_LT(v, 7u);
    ++hist[v];
    const double u = r.uniform01();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
  }
  for (int h : hist) EXPECT_NEAR(h, 10000, 500);
}

TEST(Corruption, OperatorNamesRoundTrip) {
  for (CorruptionOp op : kAllCorruptionOps) {
    EXPECT_EQ(corruption_op_from_string(to_string(op)), op);
  }
  EXPECT_FALSE(corruption_op_from_string("Shout").has_value());
}

TEST(Corruption, CharSwapFrozen) {
  SplitMix64 rng(derive_seed(11, 0));
  EXPECT_EQ(apply_operator("vehicle", CorruptionOp::CharSwap, rng), "vehilce");
}

TEST(Corruption, SeedSevenLeavesTextClean) {
  const auto c = sample_corruption(kText, spec_with(0.4, 7));
  EXPECT_EQ(c.text, kText);
  EXPECT_TRUE(c.edits.empty());
}

TEST(Corruption, FrozenStreams) {
  struct Expected {
    std::string text;
    std::vector<TokenEdit> edits;
  };
  using O = CorruptionOp;
  const std::vector<std::vector<Expected>> expected = {
      {{"slow down fr the lead vehicle", {{2, O::CharDelete}}},
       {"slowl bdown for the lead VEHICLE", {{0, O::CharInsert}, {1, O::CharInsert}, {5, O::CaseFlip}}},
       {"slow dow for the lead vehicle", {{1, O::CharDelete}, {4, O::WordScramble}}}},
      {{"low down ofr the lead vehicle", {{0, O::CharDelete}, {2, O::CharSwap}}},
       {"slow dwon FOR the lead vehicel", {{1, O::WordScramble}, {2, O::CaseFlip}, {5, O::CharSwap}}},
       {"slo down fur the lead vehicle", {{0, O::CharDelete}, {2, O::CharSubstitute}}}},
      {{"solw down for the leda vehicle", {{0, O::CharSwap}, {4, O::CharSwap}}},
       {"slwo down for the lead vehicle", {{0, O::CharSwap}}},
       {"slow down FOR the lead vchiele", {{2, O::CaseFlip}, {5, O::WordScramble}}}},
  };
  for (std::uint64_t base = 1; base <= 3; ++base) {
    const auto stream = corruption_stream(kText, spec_with(0.4, base), 3);
    ASSERT_EQ(stream.size(), 3u);
    for (std::size_t i = 0; i < 3; ++i) {
      EXPECT_EQ(stream[i].text, expected[base - 1][i].text) << "base " << base << " i " << i;
      EXPECT_EQ(stream[i].edits, expected[base - 1][i].edits) << "base " << base << " i " << i;
    }
  }
}

TEST(Corruption, SigmaExtremes) {
  const auto none = sample_corruption(kText, spec_with(0.0, 99));
  EXPECT_EQ(none.text, kText);
  EXPECT_TRUE(none.edits.empty());
  const auto all = sample_corruption(kText, spec_with(1.0, 99));
  EXPECT_EQ(all.edits.size(), 6u);
}

TEST(Corruption, SingleOperatorSets) {
  CorruptionSpec s = spec_with(1.0, 5);
  s.operators = OperatorSet{};
  s.operators.insert(CorruptionOp::CaseFlip);
  EXPECT_EQ(sample_corruption("Go left", s).text, "gO LEFT");
  s.operators = OperatorSet{};
  s.operators.insert(CorruptionOp::CharDelete);
  EXPECT_EQ(sample_corruption("a b", s).text, "a b");  // single characters survive deletion
}

TEST(Corruption, Errors) {
  EXPECT_THROW(sample_corruption("   ", spec_with(0.4, 1)), DomainError);
  EXPECT_THROW(sample_corruption("x", spec_with(1.5, 1)), DomainError);
  EXPECT_THROW(sample_corruption("x", spec_with(-0.1, 1)), DomainError);
  CorruptionSpec empty = spec_with(0.4, 1);
  empty.operators = OperatorSet{};
  EXPECT_THROW(sample_corruption("x", empty), DomainError);
  EXPECT_THROW(corruption_stream("x", spec_with(0.4, 1), 0), DomainError);
}

TEST(Corruption, StreamPrefixStable) {
  const auto a = corruption_stream(kText, spec_with(0.5, 77), 5);
  const auto b = corruption_stream(kText, spec_with(0.5, 77), 20);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a[i], b[i]);
  EXPECT_EQ(a[0], sample_corruption(kText, stream_element_spec(spec_with(0.5, 77), 0)));
}

// 10k random texts: whitespace layout and token count survive, edits are
// sorted and unique, resampling is bit-identical.
TEST(CorruptionProperty, TokenCountAndDeterminism) {
  SplitMix64 gen(20251016);
  for (int trial = 0; trial < 10000; ++trial) {
    const std::string text = random_text(gen);
    CorruptionSpec s = spec_with(gen.uniform01(), gen.next());
    const auto c = sample_corruption(text, s);
    ASSERT_EQ(whitespace_tokens(c.text).size(), whitespace_tokens(text).size()) << text;
    // separators are untouched
    std::string seps_in, seps_out;
    for (char ch : text) if (is_space(ch)) seps_in += ch;
    for (char ch : c.text) if (is_space(ch)) seps_out += ch;
    ASSERT_EQ(seps_in, seps_out);
    for (std::size_t i = 1; i < c.edits.size(); ++i) {
      ASSERT_LT(c.edits[i - 1].token_index, c.edits[i].token_index);
    }
    ASSERT_EQ(sample_corruption(text, s), c);
  }
}

TEST(CorruptionProperty, OperatorLengthEffects) {
  SplitMix64 gen(4);
  for (int trial = 0; trial < 10000; ++trial) {
    std::string tok;
    const auto len = 1 + gen.uniform_below(10);
    for (std::uint64_t i = 0; i < len; ++i) tok += static_cast<char>('a' + gen.uniform_below(26));
    const CorruptionOp op = kAllCorruptionOps[gen.uniform_below(6)];
    SplitMix64 rng(gen.next());
    const std::string out = apply_operator(tok, op, rng);
    switch (op) {
      case CorruptionOp::CharInsert: ASSERT_EQ(out.size(), tok.size() + 1); break;
      case CorruptionOp::CharDelete: ASSERT_EQ(out.size(), tok.size() > 1 ? tok.size() - 1 : 1); break;
      default: ASSERT_EQ(out.size(), tok.size());
    }
    if (op == CorruptionOp::WordScramble || op == CorruptionOp::CharSwap) {
      ASSERT_EQ(std::multiset<char>(out.begin(), out.end()), std::multiset<char>(tok.begin(), tok.end()));
    }
    if (op == CorruptionOp::WordScramble) {
      ASSERT_EQ(out.front(), tok.front());
      ASSERT_EQ(out.back(), tok.back());
    }
  }
}

// Per-token corruption frequency tracks sigma.
TEST(CorruptionProperty, EditRateMatchesSigma) {
  const std::string text = "a b c d e f g h i j";
  for (double sigma : {0.1, 0.4, 0.7}) {
    std::size_t edits = 0;
    const auto stream = corruption_stream(text, spec_with(sigma, 12), 2000);
    for (const auto& c : stream) edits += c.edits.size();
    EXPECT_NEAR(static_cast<double>(edits) / 20000.0, sigma, 0.02);
  }
}
