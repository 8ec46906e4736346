#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "codeslice/syntax/syntax.hpp"

namespace codeslice {

using syntax::Language;

struct CodeBleuWeights {
    double alpha = 0.25; // n-gram
    double beta = 0.25;  // keyword-weighted n-gram
    double gamma = 0.25; // AST subtree
    double delta = 0.25; // dataflow

    friend bool operator==(const CodeBleuWeights &, const CodeBleuWeights &) = default;
};

// Throws InvalidArgument for negative weights or an all-zero set.
void validate(const CodeBleuWeights &w);
// "0.25,0.25,0.25,0.25"
CodeBleuWeights parse_weights(std::string_view text);

struct CodeBleuReport {
    double bleu = 0.0;
    double weighted_bleu = 0.0;
    double ast_score = 0.0;
    std::optional<double> df_score; // nullopt: reference has no dataflow
    double aggregate = 0.0;

    friend bool operator==(const CodeBleuReport &, const CodeBleuReport &) = default;
};

// Smoothed BLEU-4 in [0,100]: clipped n-gram precisions for n = 1..4, a zero
// match count for n >= 2 becomes 1 / (candidate n-grams + 1), geometric mean,
// brevity penalty exp(1 - r/c) when c <= r. Throws EmptyReference.
double smoothed_bleu4(const std::vector<std::string> &candidate, const std::vector<std::string> &reference);

// As smoothed_bleu4, but every n-gram containing a language keyword counts
// `keyword_weight` times in both numerator and denominator.
double weighted_ngram_match(const std::vector<std::string> &candidate, const std::vector<std::string> &reference,
                            Language language, double keyword_weight = 5.0);

// Fraction of the reference's subtrees (identifiers and literals anonymized)
// found in the candidate, as a multiset, times 100. An unparseable candidate
// scores 0; an unparseable reference throws UnparseableReference.
double ast_match(std::string_view candidate, std::string_view reference, Language language);

// Matched def-use edges over reference edges, times 100; nullopt when the
// reference has no edges.
std::optional<double> dataflow_match(std::string_view candidate, std::string_view reference, Language language);

// Eq. 1 over given subscores. When df is absent its weight is dropped and the
// rest are renormalized to sum 1.
CodeBleuReport combine(double bleu, double weighted_bleu, double ast_score, std::optional<double> df_score,
                       const CodeBleuWeights &weights = {});

CodeBleuReport codebleu(std::string_view candidate, std::string_view reference, Language language,
                        const CodeBleuWeights &weights = {});

// Sentence BLEU for natural-language outputs (word/punctuation tokens).
double nl_bleu(std::string_view candidate, std::string_view reference);

// Arithmetic mean; 0 for an empty list.
double corpus_mean(const std::vector<double> &scores);

void to_json(nlohmann::json &j, const CodeBleuWeights &v);
void from_json(const nlohmann::json &j, CodeBleuWeights &v);
void to_json(nlohmann::json &j, const CodeBleuReport &v);
void from_json(const nlohmann::json &j, CodeBleuReport &v);

} // namespace codeslice
