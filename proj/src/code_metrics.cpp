#include "codeslice/code_metrics.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <unordered_map>

#include "codeslice/error.hpp"
#include "codeslice/syntax/variables.hpp"
#include "codeslice/tokenizer.hpp"

namespace codeslice {

namespace {

using Gram = std::vector<std::string>;

std::map<Gram, long> ngram_counts(const std::vector<std::string> &tokens, std::size_t n) {
    std::map<Gram, long> counts;
    if (tokens.size() < n) {
        return counts;
    }
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        ++counts[Gram(tokens.begin() + static_cast<long>(i), tokens.begin() + static_cast<long>(i + n))];
    }
    return counts;
}

// Shared core of plain and keyword-weighted BLEU; weight(gram) scales counts.
double bleu_core(const std::vector<std::string> &candidate, const std::vector<std::string> &reference,
                 const std::function<double(const Gram &)> &weight) {
    if (reference.empty()) {
        throw Error(ErrorCode::EmptyReference, "reference is empty");
    }
    if (candidate.empty()) {
        return 0.0;
    }
    double log_sum = 0.0;
    for (std::size_t n = 1; n <= 4; ++n) {
        const auto cand = ngram_counts(candidate, n);
        const auto ref = ngram_counts(reference, n);
        double matched = 0.0;
        double total = 0.0;
        for (const auto &[gram, count] : cand) {
            const double w = weight(gram);
            total += w * static_cast<double>(count);
            auto it = ref.find(gram);
            if (it != ref.end()) {
                matched += w * static_cast<double>(std::min(count, it->second));
            }
        }
        double p;
        if (matched > 0.0) {
            p = matched / total;
        } else if (n == 1) {
            return 0.0;
        } else {
            p = 1.0 / (total + 1.0);
        }
        log_sum += std::log(p);
    }
    const double c = static_cast<double>(candidate.size());
    const double r = static_cast<double>(reference.size());
    const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
    return 100.0 * bp * std::exp(log_sum / 4.0);
}

std::optional<syntax::SyntaxTree> parse_clean(std::string_view source, Language language) {
    syntax::SyntaxTree tree = syntax::parse_fragment(source, language);
    if (tree.has_error()) {
        return std::nullopt;
    }
    return tree;
}

// Hash of every interior subtree, computed bottom-up.
std::size_t subtree_hashes(const syntax::Node &n, std::vector<std::size_t> &out) {
    if (n.is_leaf()) {
        // leaf kinds are already anonymized: "identifier", "number", "string",
        // "char", or the operator / keyword text itself
        return std::hash<std::string_view>{}(n.kind);
    }
    std::string key = n.kind;
    key += '(';
    for (const auto &c : n.children) {
        key += std::to_string(subtree_hashes(c, out));
        key += ',';
    }
    key += ')';
    const std::size_t h = std::hash<std::string>{}(key);
    out.push_back(h);
    return h;
}

} // namespace

void validate(const CodeBleuWeights &w) {
    for (double v : {w.alpha, w.beta, w.gamma, w.delta}) {
        if (!(v >= 0.0) || !std::isfinite(v)) {
            throw Error(ErrorCode::InvalidArgument, "CodeBLEU weights must be finite and non-negative");
        }
    }
    if (w.alpha + w.beta + w.gamma + w.delta <= 0.0) {
        throw Error(ErrorCode::InvalidArgument, "CodeBLEU weights must not all be zero");
    }
}

CodeBleuWeights parse_weights(std::string_view text) {
    std::vector<double> values;
    std::string item;
    std::istringstream in{std::string(text)};
    while (std::getline(in, item, ',')) {
        try {
            std::size_t used = 0;
            values.push_back(std::stod(item, &used));
            if (used != item.size()) {
                throw std::invalid_argument(item);
            }
        } catch (const std::exception &) {
            throw Error(ErrorCode::InvalidArgument, "bad weight '" + item + "'");
        }
    }
    if (values.size() != 4) {
        throw Error(ErrorCode::InvalidArgument, "expected four comma-separated weights");
    }
    CodeBleuWeights w{values[0], values[1], values[2], values[3]};
    validate(w);
    return w;
}

double smoothed_bleu4(const std::vector<std::string> &candidate, const std::vector<std::string> &reference) {
    return bleu_core(candidate, reference, [](const Gram &) { return 1.0; });
}

double weighted_ngram_match(const std::vector<std::string> &candidate, const std::vector<std::string> &reference,
                            Language language, double keyword_weight) {
    if (!(keyword_weight > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "keyword weight must be positive");
    }
    return bleu_core(candidate, reference, [&](const Gram &gram) {
        for (const auto &t : gram) {
            if (syntax::is_keyword(language, t)) {
                return keyword_weight;
            }
        }
        return 1.0;
    });
}

double ast_match(std::string_view candidate, std::string_view reference, Language language) {
    auto ref_tree = parse_clean(reference, language);
    if (!ref_tree) {
        throw Error(ErrorCode::UnparseableReference, "reference does not parse");
    }
    auto cand_tree = parse_clean(candidate, language);
    if (!cand_tree) {
        return 0.0;
    }
    std::vector<std::size_t> ref_hashes;
    std::vector<std::size_t> cand_hashes;
    subtree_hashes(ref_tree->root(), ref_hashes);
    subtree_hashes(cand_tree->root(), cand_hashes);
    std::unordered_map<std::size_t, long> available;
    for (auto h : cand_hashes) {
        ++available[h];
    }
    long matched = 0;
    for (auto h : ref_hashes) {
        auto it = available.find(h);
        if (it != available.end() && it->second > 0) {
            --it->second;
            ++matched;
        }
    }
    return 100.0 * static_cast<double>(matched) / static_cast<double>(ref_hashes.size());
}

std::optional<double> dataflow_match(std::string_view candidate, std::string_view reference, Language language) {
    auto ref_tree = parse_clean(reference, language);
    if (!ref_tree) {
        throw Error(ErrorCode::UnparseableReference, "reference does not parse");
    }
    const auto ref_edges = syntax::dataflow_edges(*ref_tree);
    if (ref_edges.empty()) {
        return std::nullopt;
    }
    auto cand_tree = parse_clean(candidate, language);
    if (!cand_tree) {
        return 0.0;
    }
    const auto cand_edges = syntax::dataflow_edges(*cand_tree);
    std::map<syntax::DataflowEdge, long> available;
    for (const auto &e : cand_edges) {
        ++available[e];
    }
    long matched = 0;
    for (const auto &e : ref_edges) {
        auto it = available.find(e);
        if (it != available.end() && it->second > 0) {
            --it->second;
            ++matched;
        }
    }
    return 100.0 * static_cast<double>(matched) / static_cast<double>(ref_edges.size());
}

CodeBleuReport combine(double bleu, double weighted_bleu, double ast_score, std::optional<double> df_score,
                       const CodeBleuWeights &weights) {
    validate(weights);
    CodeBleuReport r{bleu, weighted_bleu, ast_score, df_score, 0.0};
    double sum = weights.alpha * bleu + weights.beta * weighted_bleu + weights.gamma * ast_score;
    double total = weights.alpha + weights.beta + weights.gamma;
    if (df_score) {
        sum += weights.delta * *df_score;
        total += weights.delta;
    }
    if (total <= 0.0) {
        throw Error(ErrorCode::InvalidArgument, "no weight left after dropping the undefined dataflow score");
    }
    r.aggregate = sum / total;
    return r;
}

CodeBleuReport codebleu(std::string_view candidate, std::string_view reference, Language language,
                        const CodeBleuWeights &weights) {
    const auto cand_tokens = syntax::code_tokens(candidate, language);
    const auto ref_tokens = syntax::code_tokens(reference, language);
    return combine(smoothed_bleu4(cand_tokens, ref_tokens), weighted_ngram_match(cand_tokens, ref_tokens, language),
                   ast_match(candidate, reference, language), dataflow_match(candidate, reference, language),
                   weights);
}

double nl_bleu(std::string_view candidate, std::string_view reference) {
    return smoothed_bleu4(split_words(candidate), split_words(reference));
}

double corpus_mean(const std::vector<double> &scores) {
    if (scores.empty()) {
        return 0.0;
    }
    double sum = 0.0;
    for (double s : scores) {
        sum += s;
    }
    return sum / static_cast<double>(scores.size());
}

void to_json(nlohmann::json &j, const CodeBleuWeights &v) {
    j = {{"alpha", v.alpha}, {"beta", v.beta}, {"gamma", v.gamma}, {"delta", v.delta}};
}
void from_json(const nlohmann::json &j, CodeBleuWeights &v) {
    v.alpha = j.at("alpha").get<double>();
    v.beta = j.at("beta").get<double>();
    v.gamma = j.at("gamma").get<double>();
    v.delta = j.at("delta").get<double>();
}
void to_json(nlohmann::json &j, const CodeBleuReport &v) {
    j = {{"bleu", v.bleu}, {"weighted_bleu", v.weighted_bleu}, {"ast_score", v.ast_score}, {"aggregate", v.aggregate}};
    j["df_score"] = v.df_score ? nlohmann::json(*v.df_score) : nlohmann::json("Undefined");
}
void from_json(const nlohmann::json &j, CodeBleuReport &v) {
    v.bleu = j.at("bleu").get<double>();
    v.weighted_bleu = j.at("weighted_bleu").get<double>();
    v.ast_score = j.at("ast_score").get<double>();
    v.aggregate = j.at("aggregate").get<double>();
    const auto &df = j.at("df_score");
    v.df_score = df.is_number() ? std::optional<double>(df.get<double>()) : std::nullopt;
}

} // namespace codeslice
