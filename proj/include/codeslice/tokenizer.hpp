#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace codeslice {

// Token counting contract used for budget enforcement and NL length gating.
// Implementations must be deterministic, return 0 for "", and be monotone
// under concatenation: count(a + b) >= max(count(a), count(b)).
class Tokenizer {
  public:
    virtual ~Tokenizer() = default;
    virtual std::int64_t count(std::string_view text) const = 0;
    virtual std::string name() const = 0;
};

// Over-estimating default: ceil(max(pieces, code_points / 4)), where pieces are
// maximal alphanumeric runs plus every standalone punctuation character.
class HeuristicTokenizer final : public Tokenizer {
  public:
    std::int64_t count(std::string_view text) const override;
    std::string name() const override { return "heuristic-v1"; }

    static std::int64_t piece_count(std::string_view text);
    static std::int64_t code_point_count(std::string_view text);
};

const Tokenizer &default_tokenizer();

// Word/punctuation split used for natural-language BLEU.
std::vector<std::string> split_words(std::string_view text);

} // namespace codeslice
