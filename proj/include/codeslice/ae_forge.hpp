#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "codeslice/api_client.hpp"
#include "codeslice/syntax/syntax.hpp"

namespace codeslice {

using syntax::Language;

// ----------------------------------------------------------------- models

struct ModelToken {
    std::string text;
    std::size_t begin = 0; // byte span in the model input
    std::size_t end = 0;
};

struct AttentionProfile {
    std::vector<ModelToken> tokens;
    std::vector<double> attention; // one weight per token
    double scalar_attention = 0.0;
    std::string summary_text;
    std::string aggregator;
};

// A local model that summarizes code and reports its attention.
class ScorableModel {
  public:
    virtual ~ScorableModel() = default;
    virtual AttentionProfile attend(const std::string &input) = 0;
    virtual std::string id() const = 0;
};

// Deterministic in-process model. Tokens are lexer tokens of `language`
// (whitespace words when the input does not lex). By default each token gets
// a hash-derived weight and the scalar is their maximum; `scalar` overrides
// the scalar, which is then placed on the first token of largest weight.
class MockModel final : public ScorableModel {
  public:
    using ScalarFn = std::function<double(const std::string &input)>;
    using SummaryFn = std::function<std::string(const std::string &input)>;

    explicit MockModel(Language language = Language::Python, ScalarFn scalar = {}, SummaryFn summary = {});

    AttentionProfile attend(const std::string &input) override;
    std::string id() const override { return "mock-v1"; }

    int calls() const { return calls_; }
    const std::vector<std::string> &inputs() const { return inputs_; }

  private:
    Language language_;
    ScalarFn scalar_;
    SummaryFn summary_;
    int calls_ = 0;
    std::vector<std::string> inputs_;
};

// Client for the model bridge service (GET /health, POST /attention, POST /generate).
class BridgeModel final : public ScorableModel {
  public:
    explicit BridgeModel(std::string base_url, int timeout_ms = 60000);

    nlohmann::json health();
    AttentionProfile attend(const std::string &input) override;
    std::string generate(const std::string &input);
    std::string id() const override { return model_id_.empty() ? base_url_ : model_id_; }

  private:
    nlohmann::json call(const std::string &path, const nlohmann::json *body);

    std::string base_url_;
    int timeout_ms_;
    std::string model_id_;
};

// Throws SchemaMismatch unless the payload is a well-formed attention response
// for `input`: token spans inside the input, one weight per token, finite values,
// and a scalar equal to the declared aggregator (max, mean or sum) of the weights.
AttentionProfile attention_profile_from_json(const nlohmann::json &j, std::string_view input);
nlohmann::json to_json(const AttentionProfile &profile);

// ----------------------------------------------------------------- ranking

inline constexpr std::string_view kMaskToken = "[MASK]";

std::string mask_span(std::string_view code, std::size_t begin, std::size_t end);

struct RankEntry {
    int index = 0; // 1-based position in the model's token sequence
    std::string text;
    double gap = 0.0;
    std::size_t begin = 0;
    std::size_t end = 0;
};

struct SensitivityRanking {
    std::vector<RankEntry> entries; // gap descending, then index ascending
    double original_attention = 0.0;
    std::string original_summary;
    std::string aggregator;
};

void sort_ranking(std::vector<RankEntry> &entries);

// One generation for the original code plus one per masked token.
SensitivityRanking attention_gap_ranking(ScorableModel &model, const std::string &code);

// ----------------------------------------------------------------- transforms

enum class TransformPass { MathConstant, AdditiveIdentity, VariableRename, BooleanTautology, DeadCode };
std::string_view to_string(TransformPass pass);
TransformPass parse_transform_pass(std::string_view text);
const std::vector<TransformPass> &all_passes();

// Non-layout tokens of the snippet with spans in the snippet's own offsets.
struct SourceToken {
    int index = 0;
    syntax::TokenKind kind = syntax::TokenKind::Identifier;
    std::string text;
    std::size_t begin = 0;
    std::size_t end = 0;
};

// Throws RewriteBrokeSyntax when the snippet does not parse cleanly.
std::vector<SourceToken> source_tokens(const std::string &code, Language language);

// Rewrites (token index into source_tokens):
//   MathConstant      numeric variable x          -> (x*x/x)
//   AdditiveIdentity  integer literal n           -> (n+0)
//   VariableRename    local variable              -> fresh name at every occurrence
//   BooleanTautology  token inside an if/while condition c -> (c and True) / (c && true)
//   DeadCode          token inside a statement    -> unused assignment before it
// Keywords and operators never qualify.
bool pass_applies(const std::string &code, Language language, int token, TransformPass pass);

// Throws NotApplicable, or RewriteBrokeSyntax if the result fails to parse.
std::string apply_transform(const std::string &code, Language language, int token, TransformPass pass);

struct PassSite {
    int rank = 0; // position in the ranking
    RankEntry entry;
    int token = 0; // source token index
    std::string token_text;
    TransformPass pass = TransformPass::MathConstant;
};

inline constexpr int kDefaultTopK = 4;

// Every applicable pass for each of the top-k ranked tokens, in rank order.
std::vector<PassSite> applicable_passes(const std::string &code, Language language,
                                        const SensitivityRanking &ranking, int k = kDefaultTopK);

// ----------------------------------------------------------------- verification

// The remote model under attack: returns a summary of `code`.
class SummaryTarget {
  public:
    virtual ~SummaryTarget() = default;
    virtual std::string summarize(const std::string &code) = 0;
};

// Zero-shot CSum queries through an api Client at temperature 0, top_p 1.
class ClientTarget final : public SummaryTarget {
  public:
    ClientTarget(Client &client, TaskSpec spec, const Tokenizer &tokenizer,
                 std::int64_t max_tokens = kDefaultMaxTokens);
    std::string summarize(const std::string &code) override;

  private:
    Client &client_;
    TaskSpec spec_;
    const Tokenizer &tokenizer_;
    std::int64_t max_tokens_;
};

enum class AEClass { SAE, UAE, NotAE };
std::string_view to_string(AEClass verdict);

// SAE when every trial diverged, UAE when some did, NotAE when none did.
AEClass classify_trials(int diverged, int trials);

struct VerifyOptions {
    int repeats = 3;
    double divergence_threshold = 25.0; // BLEU below this diverges
    double review_floor = 15.0;         // diverging trials at or above this get flagged
};

struct AETrial {
    std::string summary;
    double bleu = 0.0;
    bool diverged = false;
    bool needs_review = false;
};

struct AECandidate {
    std::string snippet_id;
    Language language = Language::Python;
    std::string original_code;
    std::string mutated_code;
    TransformPass pass = TransformPass::MathConstant;
    int token = 0;
    std::string token_text;
    std::string original_summary;
    std::vector<AETrial> trials;
    std::optional<AEClass> verdict; // unset when verification aborted
    std::optional<std::string> error;
};

// Queries the target `repeats` times with the mutated code. A target failure
// stops the trials: the candidate keeps what it has, records the error, and
// the error is rethrown.
void verify_ae(AECandidate &candidate, SummaryTarget &target, const VerifyOptions &options = {});

struct Snippet {
    std::string id;
    std::string code;
    Language language = Language::Python;
};

struct CampaignOptions {
    int k = kDefaultTopK;
    int budget = 90;
    VerifyOptions verify;
};

struct AEReport {
    std::string model_id;
    std::string aggregator;
    CampaignOptions options;
    std::vector<AECandidate> candidates;
    int sae = 0;
    int uae = 0;
    int not_ae = 0;
    std::optional<std::string> aborted;

    int verified() const { return sae + uae + not_ae; }
    double sae_rate() const;
    double uae_rate() const;
};

// Ranks, transforms and verifies until `budget` candidates are verified or
// the corpus runs out. Errors end the campaign with a partial report.
AEReport ae_campaign(const std::vector<Snippet> &corpus, ScorableModel &model, SummaryTarget &target,
                     const CampaignOptions &options = {});

std::vector<Snippet> load_snippets(const std::string &path);

nlohmann::json to_json(const AECandidate &candidate);
nlohmann::json to_json(const AEReport &report);

} // namespace codeslice
