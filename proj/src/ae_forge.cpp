#include "codeslice/ae_forge.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "codeslice/code_metrics.hpp"
#include "codeslice/error.hpp"
#include "codeslice/logging.hpp"
#include "codeslice/response_filter.hpp"
#include "codeslice/syntax/variables.hpp"
#include "codeslice/util.hpp"

namespace codeslice {

using nlohmann::json;
using syntax::Node;
using syntax::NodePath;
using syntax::SyntaxTree;
using syntax::TokenKind;

// ----------------------------------------------------------------- models

namespace {

std::vector<ModelToken> model_tokens(const std::string &input, Language language) {
    std::vector<ModelToken> out;
    const auto lexed = syntax::lex(input, language);
    if (!lexed.error) {
        for (const auto &t : lexed.tokens) {
            if (!t.is_layout()) {
                out.push_back({t.text, t.begin, t.end});
            }
        }
        return out;
    }
    std::size_t i = 0;
    while (i < input.size()) {
        while (i < input.size() && std::isspace(static_cast<unsigned char>(input[i]))) {
            ++i;
        }
        const auto start = i;
        while (i < input.size() && !std::isspace(static_cast<unsigned char>(input[i]))) {
            ++i;
        }
        if (i > start) {
            out.push_back({input.substr(start, i - start), start, i});
        }
    }
    return out;
}

double hash_weight(std::string_view text, std::size_t position) {
    // FNV-1a, folded into [0, 1)
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : text) {
        h = (h ^ c) * 1099511628211ULL;
    }
    h = (h ^ position) * 1099511628211ULL;
    return static_cast<double>(h % 10007) / 10007.0;
}

} // namespace

MockModel::MockModel(Language language, ScalarFn scalar, SummaryFn summary)
    : language_(language), scalar_(std::move(scalar)), summary_(std::move(summary)) {}

AttentionProfile MockModel::attend(const std::string &input) {
    ++calls_;
    inputs_.push_back(input);
    AttentionProfile p;
    p.aggregator = "max";
    p.tokens = model_tokens(input, language_);
    for (std::size_t i = 0; i < p.tokens.size(); ++i) {
        p.attention.push_back(hash_weight(p.tokens[i].text, i));
    }
    if (scalar_) {
        p.scalar_attention = scalar_(input);
        if (!p.attention.empty()) {
            // keep the declared aggregator true: the scalar is the maximum weight
            for (auto &w : p.attention) {
                w = std::min(w, p.scalar_attention);
            }
            *std::max_element(p.attention.begin(), p.attention.end()) = p.scalar_attention;
        }
    } else {
        p.scalar_attention =
            p.attention.empty() ? 0.0 : *std::max_element(p.attention.begin(), p.attention.end());
    }
    if (summary_) {
        p.summary_text = summary_(input);
    } else {
        std::string words;
        for (const auto &t : p.tokens) {
            if (!t.text.empty() && (std::isalpha(static_cast<unsigned char>(t.text[0])) || t.text[0] == '_') &&
                !syntax::is_keyword(language_, t.text)) {
                words += words.empty() ? "" : " ";
                words += t.text;
            }
        }
        p.summary_text = "uses " + (words.empty() ? std::string("nothing") : words);
    }
    return p;
}

AttentionProfile attention_profile_from_json(const json &j, std::string_view input) {
    auto bad = [](const std::string &what) { throw Error(ErrorCode::SchemaMismatch, "attention response: " + what); };
    auto aggregate = [&](const std::vector<double> &w, const std::string &name) -> std::optional<double> {
        if (name != "max" && name != "mean" && name != "sum") {
            bad("unknown aggregator '" + name + "'");
        }
        if (w.empty()) {
            return 0.0;
        }
        if (name == "max") {
            return *std::max_element(w.begin(), w.end());
        }
        double total = 0.0;
        for (double x : w) {
            total += x;
        }
        return name == "sum" ? total : total / static_cast<double>(w.size());
    };
    if (!j.is_object()) {
        bad("not an object");
    }
    AttentionProfile p;
    try {
        p.summary_text = j.at("output").get<std::string>();
        p.scalar_attention = j.at("scalar_attention").get<double>();
        p.aggregator = j.at("aggregator").get<std::string>();
        p.attention = j.at("attention").get<std::vector<double>>();
        for (const auto &t : j.at("tokens")) {
            ModelToken mt;
            mt.text = t.at("text").get<std::string>();
            mt.begin = t.at("begin").get<std::size_t>();
            mt.end = t.at("end").get<std::size_t>();
            p.tokens.push_back(std::move(mt));
        }
    } catch (const json::exception &e) {
        bad(e.what());
    }
    if (p.attention.size() != p.tokens.size()) {
        bad("attention has " + std::to_string(p.attention.size()) + " weights for " +
            std::to_string(p.tokens.size()) + " tokens");
    }
    if (!std::isfinite(p.scalar_attention) ||
        !std::all_of(p.attention.begin(), p.attention.end(), [](double w) { return std::isfinite(w); })) {
        bad("attention values must be finite");
    }
    if (const auto expected = aggregate(p.attention, p.aggregator);
        std::abs(*expected - p.scalar_attention) > 1e-9 * std::max(1.0, std::abs(*expected))) {
        bad("scalar_attention " + std::to_string(p.scalar_attention) + " is not the " + p.aggregator +
            " of the weights");
    }
    for (const auto &t : p.tokens) {
        if (t.begin > t.end || t.end > input.size()) {
            bad("token span [" + std::to_string(t.begin) + ", " + std::to_string(t.end) + ") outside the input");
        }
    }
    return p;
}

json to_json(const AttentionProfile &profile) {
    json tokens = json::array();
    for (const auto &t : profile.tokens) {
        tokens.push_back({{"text", t.text}, {"begin", t.begin}, {"end", t.end}});
    }
    return json{{"output", profile.summary_text},
                {"tokens", tokens},
                {"attention", profile.attention},
                {"scalar_attention", profile.scalar_attention},
                {"aggregator", profile.aggregator}};
}

BridgeModel::BridgeModel(std::string base_url, int timeout_ms)
    : base_url_(std::move(base_url)), timeout_ms_(timeout_ms) {
    while (!base_url_.empty() && base_url_.back() == '/') {
        base_url_.pop_back();
    }
    if (!parse_url(base_url_)) {
        throw Error(ErrorCode::InvalidConfig, "bridge URL is malformed: " + base_url_);
    }
}

json BridgeModel::call(const std::string &path, const json *body) {
    HttplibTransport transport;
    const HttpResult r = body ? transport.post(base_url_ + path, {{"Content-Type", "application/json"}},
                                               body->dump(), timeout_ms_)
                              : transport.get(base_url_ + path, timeout_ms_);
    if (r.status == 0) {
        throw Error(ErrorCode::ModelUnavailable, "bridge at " + base_url_ + " unreachable: " + r.error);
    }
    if (r.status != 200) {
        throw Error(ErrorCode::ModelUnavailable,
                    "bridge " + path + " answered HTTP " + std::to_string(r.status) + ": " + r.body.substr(0, 200));
    }
    try {
        return json::parse(r.body);
    } catch (const json::parse_error &e) {
        throw Error(ErrorCode::SchemaMismatch, "bridge " + path + " returned malformed JSON");
    }
}

json BridgeModel::health() {
    json h = call("/health", nullptr);
    if (!h.is_object() || h.value("status", std::string()) != "ok") {
        throw Error(ErrorCode::ModelUnavailable, "bridge is not healthy: " + h.dump());
    }
    model_id_ = h.value("model", std::string());
    return h;
}

AttentionProfile BridgeModel::attend(const std::string &input) {
    const json body{{"input", input}, {"temperature", 0.0}};
    return attention_profile_from_json(call("/attention", &body), input);
}

std::string BridgeModel::generate(const std::string &input) {
    const json body{{"input", input}, {"temperature", 0.0}};
    const json out = call("/generate", &body);
    if (!out.is_object() || !out.contains("output") || !out["output"].is_string()) {
        throw Error(ErrorCode::SchemaMismatch, "generate response lacks 'output'");
    }
    return out["output"].get<std::string>();
}

// ----------------------------------------------------------------- ranking

std::string mask_span(std::string_view code, std::size_t begin, std::size_t end) {
    if (begin > end || end > code.size()) {
        throw Error(ErrorCode::InvalidArgument, "mask span outside the code");
    }
    std::string out(code.substr(0, begin));
    out += kMaskToken;
    out += code.substr(end);
    return out;
}

void sort_ranking(std::vector<RankEntry> &entries) {
    std::stable_sort(entries.begin(), entries.end(), [](const RankEntry &a, const RankEntry &b) {
        if (a.gap != b.gap) {
            return a.gap > b.gap;
        }
        return a.index < b.index;
    });
}

SensitivityRanking attention_gap_ranking(ScorableModel &model, const std::string &code) {
    const AttentionProfile original = model.attend(code);
    if (original.tokens.empty()) {
        throw Error(ErrorCode::InvalidArgument, "nothing to rank: the model saw no tokens");
    }
    if (!std::isfinite(original.scalar_attention)) {
        throw Error(ErrorCode::SchemaMismatch, "model returned a non-finite attention score");
    }
    SensitivityRanking ranking;
    ranking.original_attention = original.scalar_attention;
    ranking.original_summary = original.summary_text;
    ranking.aggregator = original.aggregator;
    for (std::size_t i = 0; i < original.tokens.size(); ++i) {
        const auto &t = original.tokens[i];
        const AttentionProfile masked = model.attend(mask_span(code, t.begin, t.end));
        if (!std::isfinite(masked.scalar_attention)) {
            throw Error(ErrorCode::SchemaMismatch, "model returned a non-finite attention score");
        }
        ranking.entries.push_back(
            {static_cast<int>(i + 1), t.text, masked.scalar_attention - original.scalar_attention, t.begin, t.end});
    }
    sort_ranking(ranking.entries);
    return ranking;
}

// ----------------------------------------------------------------- transforms

std::string_view to_string(TransformPass pass) {
    switch (pass) {
    case TransformPass::MathConstant: return "math-constant";
    case TransformPass::AdditiveIdentity: return "additive-identity";
    case TransformPass::VariableRename: return "variable-rename";
    case TransformPass::BooleanTautology: return "boolean-tautology";
    case TransformPass::DeadCode: return "dead-code";
    }
    return "?";
}

TransformPass parse_transform_pass(std::string_view text) {
    for (auto p : all_passes()) {
        if (to_string(p) == text) {
            return p;
        }
    }
    throw Error(ErrorCode::InvalidArgument, "unknown transform pass '" + std::string(text) + "'");
}

const std::vector<TransformPass> &all_passes() {
    static const std::vector<TransformPass> passes{TransformPass::MathConstant, TransformPass::AdditiveIdentity,
                                                   TransformPass::VariableRename, TransformPass::BooleanTautology,
                                                   TransformPass::DeadCode};
    return passes;
}

namespace {

const std::string kCShellHead = "class __Fragment__ { void __fragment__() {\n";
const std::string kCShellTail = "\n} }\n";
const std::string kPyShellHead = "def __fragment__():\n";

// The snippet as parsed: either directly or inside the fragment shell.
// Rewrites happen on the parsed text and are unwrapped afterwards.
class Workspace {
  public:
    Workspace(const std::string &code, Language language)
        : code_(code), language_(language), tree_(syntax::parse_fragment(code, language)) {
        if (tree_.has_error()) {
            throw Error(ErrorCode::RewriteBrokeSyntax, "snippet does not parse: " + tree_.first_error()->message);
        }
        wrapped_ = tree_.source() != code;
        line_starts_.push_back(0);
        for (std::size_t i = 0; i < code.size(); ++i) {
            if (code[i] == '\n') {
                line_starts_.push_back(i + 1);
            }
        }
        const auto &toks = tree_.tokens();
        for (std::size_t i = 0; i < toks.size(); ++i) {
            const auto &t = toks[i];
            if (t.is_layout()) {
                continue;
            }
            const auto b = to_source(t.begin);
            const auto e = to_source(t.end);
            if (!b || !e) {
                continue; // shell token
            }
            SourceToken st;
            st.index = static_cast<int>(sources_.size());
            st.kind = t.kind;
            st.text = t.text;
            st.begin = *b;
            st.end = *e;
            sources_.push_back(std::move(st));
            work_index_.push_back(static_cast<int>(i));
        }
        occurrences_ = syntax::variable_occurrences(tree_);
        for (std::size_t i = 0; i < occurrences_.size(); ++i) {
            by_token_[occurrences_[i].token] = i;
        }
    }

    const SyntaxTree &tree() const { return tree_; }
    Language language() const { return language_; }
    bool python() const { return language_ == Language::Python; }
    const std::vector<SourceToken> &sources() const { return sources_; }
    int work_token(int source_index) const { return work_index_.at(static_cast<std::size_t>(source_index)); }
    const std::vector<syntax::VarOccurrence> &occurrences() const { return occurrences_; }
    const syntax::VarOccurrence *occurrence_at(int work_token) const {
        const auto it = by_token_.find(work_token);
        return it == by_token_.end() ? nullptr : &occurrences_[it->second];
    }

    // Work-text offset back to the snippet; nullopt inside the shell.
    std::optional<std::size_t> to_source(std::size_t work) const {
        if (!wrapped_) {
            return work;
        }
        if (!python()) {
            if (work < kCShellHead.size() || work > kCShellHead.size() + code_.size()) {
                return std::nullopt;
            }
            return work - kCShellHead.size();
        }
        if (work < kPyShellHead.size()) {
            return std::nullopt;
        }
        // each snippet line gains four leading spaces
        std::size_t at = kPyShellHead.size();
        for (std::size_t line = 0; line < line_starts_.size(); ++line) {
            const std::size_t len =
                (line + 1 < line_starts_.size() ? line_starts_[line + 1] - 1 : code_.size()) - line_starts_[line];
            const std::size_t content = at + 4;
            if (work < content) {
                return std::nullopt;
            }
            if (work <= content + len) {
                return line_starts_[line] + (work - content);
            }
            at = content + len + 1;
        }
        return std::nullopt;
    }

    std::string unwrap(const std::string &work) const {
        if (!wrapped_) {
            return work;
        }
        if (!python()) {
            if (work.size() < kCShellHead.size() + kCShellTail.size() || !work.starts_with(kCShellHead) ||
                !work.ends_with(kCShellTail)) {
                throw Error(ErrorCode::RewriteBrokeSyntax, "rewrite escaped the fragment shell");
            }
            return work.substr(kCShellHead.size(), work.size() - kCShellHead.size() - kCShellTail.size());
        }
        std::string body = work.substr(kPyShellHead.size());
        if (body.ends_with('\n')) {
            body.pop_back();
        }
        std::string out;
        std::size_t at = 0;
        bool first = true;
        while (at <= body.size()) {
            auto nl = body.find('\n', at);
            std::string line = body.substr(at, nl == std::string::npos ? std::string::npos : nl - at);
            std::size_t strip = 0;
            while (strip < 4 && strip < line.size() && line[strip] == ' ') {
                ++strip;
            }
            out += first ? "" : "\n";
            out += line.substr(strip);
            first = false;
            if (nl == std::string::npos) {
                break;
            }
            at = nl + 1;
        }
        return out;
    }

    std::set<std::string> identifiers() const {
        std::set<std::string> out;
        for (const auto &t : tree_.tokens()) {
            if (t.kind == TokenKind::Identifier || t.kind == TokenKind::Keyword) {
                out.insert(t.text);
            }
        }
        return out;
    }

  private:
    std::string code_;
    Language language_;
    SyntaxTree tree_;
    bool wrapped_ = false;
    std::vector<std::size_t> line_starts_;
    std::vector<SourceToken> sources_;
    std::vector<int> work_index_;
    std::vector<syntax::VarOccurrence> occurrences_;
    std::map<int, std::size_t> by_token_;
};

struct Edit {
    std::size_t begin = 0;
    std::size_t end = 0;
    std::string text;
};

std::string apply_edits(std::string text, std::vector<Edit> edits) {
    std::sort(edits.begin(), edits.end(), [](const Edit &a, const Edit &b) { return a.begin > b.begin; });
    for (const auto &e : edits) {
        text.replace(e.begin, e.end - e.begin, e.text);
    }
    return text;
}

const Node *parent_of(const NodePath &path, std::size_t depth_from_leaf) {
    if (path.size() < depth_from_leaf + 1) {
        return nullptr;
    }
    return path[path.size() - 1 - depth_from_leaf];
}

bool is_parameter_kind(std::string_view kind) {
    return kind == "parameter" || kind == "typed_parameter" || kind == "default_parameter" ||
           kind == "typed_default_parameter" || kind == "formal_parameter";
}

const Node *field_child(const Node &n, std::string_view field) {
    for (const auto &c : n.children) {
        if (c.field == field) {
            return &c;
        }
    }
    return nullptr;
}

bool numeric_type_name(std::string_view type) {
    static const std::set<std::string_view> names{"int",   "float", "long",  "short", "byte",
                                                  "double", "decimal", "sbyte", "uint", "ulong"};
    return names.contains(type);
}

std::string fresh_name(const std::set<std::string> &taken, const std::string &stem) {
    if (!taken.contains(stem)) {
        return stem;
    }
    for (int i = 2;; ++i) {
        const auto candidate = stem + std::to_string(i);
        if (!taken.contains(candidate)) {
            return candidate;
        }
    }
}

bool interpolated_string(const syntax::Token &t, Language language) {
    if (t.kind != TokenKind::String) {
        return false;
    }
    const auto quote = t.text.find_first_of("\"'");
    const std::string_view prefix = std::string_view(t.text).substr(0, quote == std::string::npos ? 0 : quote);
    if (language == Language::Python) {
        return prefix.find_first_of("fF") != std::string_view::npos;
    }
    return prefix.find('$') != std::string_view::npos;
}

bool contains_word(std::string_view text, std::string_view word) {
    for (auto at = text.find(word); at != std::string_view::npos; at = text.find(word, at + 1)) {
        auto ident = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
        const bool left = at == 0 || !ident(text[at - 1]);
        const bool right = at + word.size() >= text.size() || !ident(text[at + word.size()]);
        if (left && right) {
            return true;
        }
    }
    return false;
}

class Rewriter {
  public:
    Rewriter(const Workspace &ws, int source_token) : ws_(ws), tree_(ws.tree()) {
        if (source_token < 0 || source_token >= static_cast<int>(ws.sources().size())) {
            throw Error(ErrorCode::NotApplicable, "token index " + std::to_string(source_token) + " out of range");
        }
        work_ = ws.work_token(source_token);
        token_ = &tree_.tokens()[static_cast<std::size_t>(work_)];
        path_ = syntax::path_to_token(tree_.root(), work_);
    }

    std::optional<std::string> rewrite(TransformPass pass) const {
        if (path_.empty() || token_->kind == TokenKind::Keyword || token_->kind == TokenKind::Operator) {
            return std::nullopt;
        }
        switch (pass) {
        case TransformPass::MathConstant: return math_constant();
        case TransformPass::AdditiveIdentity: return additive_identity();
        case TransformPass::VariableRename: return rename();
        case TransformPass::BooleanTautology: return tautology();
        case TransformPass::DeadCode: return dead_code();
        }
        return std::nullopt;
    }

  private:
    std::string replaced(std::size_t begin, std::size_t end, const std::string &text) const {
        return apply_edits(tree_.source(), {{begin, end, text}});
    }

    // x -> (x*x/x) for a read of a parameter that is never reassigned, used
    // with an arithmetic or comparison operator in a numeric context.
    std::optional<std::string> math_constant() const {
        if (token_->kind != TokenKind::Identifier) {
            return std::nullopt;
        }
        const auto *occ = ws_.occurrence_at(work_);
        if (occ == nullptr || occ->is_def || !occ->is_use) {
            return std::nullopt;
        }
        bool numeric_param = false;
        bool has_param = false;
        for (const auto &o : ws_.occurrences()) {
            if (o.name != occ->name || !o.is_def) {
                continue;
            }
            const auto def_path = syntax::path_to_token(tree_.root(), o.token);
            const Node *param = parent_of(def_path, 1);
            if (param == nullptr || !is_parameter_kind(param->kind) || def_path.back()->field != "name") {
                return std::nullopt;
            }
            has_param = true;
            if (const Node *type = field_child(*param, "type")) {
                numeric_param = numeric_param || numeric_type_name(tree_.text_of(*type));
            }
        }
        if (!has_param) {
            return std::nullopt;
        }
        const Node *op_node = parent_of(path_, 1);
        if (op_node == nullptr || (op_node->kind != "binary_operator" && op_node->kind != "comparison_operator" &&
                                   op_node->kind != "binary_expression")) {
            return std::nullopt;
        }
        static const std::set<std::string_view> ops{"<", "<=", ">", ">=", "==", "!=", "+", "-", "*", "/", "%", "//"};
        bool op_ok = false;
        bool literal_sibling = false;
        for (const auto &c : op_node->children) {
            if (c.is_leaf() && c.kind == "number") {
                literal_sibling = true;
            } else if (c.is_leaf() && c.kind != "identifier") {
                op_ok = op_ok || ops.contains(tree_.text_of(c));
            }
        }
        if (!op_ok || !(literal_sibling || numeric_param)) {
            return std::nullopt;
        }
        const std::string &x = token_->text;
        return replaced(token_->begin, token_->end, "(" + x + "*" + x + "/" + x + ")");
    }

    std::optional<std::string> additive_identity() const {
        if (token_->kind != TokenKind::Number) {
            return std::nullopt;
        }
        const std::string &n = token_->text;
        const bool hex = n.size() > 2 && n[0] == '0' && (n[1] == 'x' || n[1] == 'X');
        for (std::size_t i = hex ? 2 : 0; i < n.size(); ++i) {
            const char c = n[i];
            const bool digit = hex ? std::isxdigit(static_cast<unsigned char>(c)) != 0 : (c >= '0' && c <= '9');
            if (!digit && c != '_') {
                return std::nullopt;
            }
        }
        return replaced(token_->begin, token_->end, "(" + n + "+0)");
    }

    std::optional<std::string> rename() const {
        if (token_->kind != TokenKind::Identifier) {
            return std::nullopt;
        }
        const auto *occ = ws_.occurrence_at(work_);
        if (occ == nullptr) {
            return std::nullopt;
        }
        const std::string &name = occ->name;
        if (name.starts_with("__") || name.starts_with("__fragment")) {
            return std::nullopt;
        }
        std::vector<Edit> edits;
        std::set<int> occurrence_tokens;
        for (const auto &o : ws_.occurrences()) {
            if (o.name == name) {
                occurrence_tokens.insert(o.token);
            }
        }
        const auto &toks = tree_.tokens();
        for (std::size_t i = 0; i < toks.size(); ++i) {
            if (toks[i].kind == TokenKind::Identifier && toks[i].text == name &&
                !occurrence_tokens.contains(static_cast<int>(i))) {
                return std::nullopt; // a member, keyword argument or other non-variable use
            }
            if (interpolated_string(toks[i], ws_.language()) && contains_word(toks[i].text, name)) {
                return std::nullopt;
            }
        }
        const auto kwargs = syntax::keyword_argument_names(tree_);
        if (std::find(kwargs.begin(), kwargs.end(), name) != kwargs.end()) {
            return std::nullopt;
        }
        const std::string renamed = fresh_name(ws_.identifiers(), name + "_r");
        for (int t : occurrence_tokens) {
            const auto &tok = toks[static_cast<std::size_t>(t)];
            edits.push_back({tok.begin, tok.end, renamed});
        }
        return apply_edits(tree_.source(), std::move(edits));
    }

    std::optional<std::string> tautology() const {
        for (std::size_t d = 0; d + 1 < path_.size(); ++d) {
            const Node *n = path_[path_.size() - 1 - d];
            const Node *parent = path_[path_.size() - 2 - d];
            if (n->field != "condition") {
                continue;
            }
            if (parent->kind != "if_statement" && parent->kind != "elif_clause" && parent->kind != "while_statement" &&
                parent->kind != "do_statement") {
                return std::nullopt;
            }
            static const std::set<std::string_view> loose{"lambda",          "conditional_expression",
                                                          "named_expression", "ternary_expression",
                                                          "assignment_expression", "lambda_expression"};
            std::string cond(tree_.text_of(*n));
            if (loose.contains(n->kind)) {
                cond = "(" + cond + ")";
            }
            const std::string wrapped = ws_.python() ? "(" + cond + " and True)" : "(" + cond + " && true)";
            return replaced(n->begin, n->end, wrapped);
        }
        return std::nullopt;
    }

    std::optional<std::string> dead_code() const {
        const std::string &src = tree_.source();
        const std::string name = fresh_name(ws_.identifiers(), "ae_dead");
        for (std::size_t d = 1; d + 1 < path_.size(); ++d) {
            const Node *stmt = path_[path_.size() - 1 - d];
            const Node *parent = path_[path_.size() - 2 - d];
            if (ws_.python()) {
                if (parent->kind != "block" && parent->kind != "module") {
                    continue;
                }
                const auto line_start = src.rfind('\n', stmt->begin == 0 ? 0 : stmt->begin - 1);
                const std::size_t ls = stmt->begin == 0 || line_start == std::string::npos ? 0 : line_start + 1;
                const std::string indent = src.substr(ls, stmt->begin - ls);
                if (indent.find_first_not_of(" \t") != std::string::npos) {
                    continue; // not first on its line
                }
                return apply_edits(src, {{ls, ls, indent + name + " = 0\n"}});
            }
            const bool statement_list =
                parent->kind == "block" ||
                (parent->kind == "compilation_unit" &&
                 (stmt->kind.ends_with("_statement") || stmt->kind == "local_variable_declaration"));
            if (!statement_list) {
                continue;
            }
            const std::string_view text = tree_.text_of(*stmt);
            if (text.starts_with("this(") || text.starts_with("super(") || text.starts_with("this (") ||
                text.starts_with("super (")) {
                return std::nullopt; // must stay the first statement of a constructor
            }
            return apply_edits(src, {{stmt->begin, stmt->begin, "int " + name + " = 0; "}});
        }
        return std::nullopt;
    }

    const Workspace &ws_;
    const SyntaxTree &tree_;
    int work_ = 0;
    const syntax::Token *token_ = nullptr;
    NodePath path_;
};

std::optional<std::string> try_transform(const Workspace &ws, int token, TransformPass pass) {
    const auto work = Rewriter(ws, token).rewrite(pass);
    if (!work) {
        return std::nullopt;
    }
    std::string out = ws.unwrap(*work);
    if (!syntax::check_fragment(out, ws.language()).ok) {
        return std::nullopt;
    }
    return out;
}

} // namespace

std::vector<SourceToken> source_tokens(const std::string &code, Language language) {
    return Workspace(code, language).sources();
}

bool pass_applies(const std::string &code, Language language, int token, TransformPass pass) {
    const Workspace ws(code, language);
    if (token < 0 || token >= static_cast<int>(ws.sources().size())) {
        return false;
    }
    return try_transform(ws, token, pass).has_value();
}

std::string apply_transform(const std::string &code, Language language, int token, TransformPass pass) {
    const Workspace ws(code, language);
    const auto work = Rewriter(ws, token).rewrite(pass);
    if (!work) {
        throw Error(ErrorCode::NotApplicable, std::string(to_string(pass)) + " does not apply to token " +
                                                  std::to_string(token));
    }
    std::string out = ws.unwrap(*work);
    const auto check = syntax::check_fragment(out, language);
    if (!check.ok) {
        throw Error(ErrorCode::RewriteBrokeSyntax, std::string(to_string(pass)) + " produced unparseable code: " +
                                                       (check.error ? check.error->message : std::string()));
    }
    return out;
}

std::vector<PassSite> applicable_passes(const std::string &code, Language language,
                                        const SensitivityRanking &ranking, int k) {
    if (k < 1) {
        throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
    }
    const Workspace ws(code, language);
    std::vector<PassSite> out;
    const int top = std::min<int>(k, static_cast<int>(ranking.entries.size()));
    for (int r = 0; r < top; ++r) {
        const auto &entry = ranking.entries[static_cast<std::size_t>(r)];
        const SourceToken *hit = nullptr;
        for (const auto &st : ws.sources()) {
            if (st.begin < entry.end && st.end > entry.begin) {
                hit = &st;
                break;
            }
        }
        if (hit == nullptr) {
            continue;
        }
        for (auto pass : all_passes()) {
            if (try_transform(ws, hit->index, pass)) {
                out.push_back({r, entry, hit->index, hit->text, pass});
            }
        }
    }
    return out;
}

// ----------------------------------------------------------------- verification

ClientTarget::ClientTarget(Client &client, TaskSpec spec, const Tokenizer &tokenizer, std::int64_t max_tokens)
    : client_(client), spec_(std::move(spec)), tokenizer_(tokenizer), max_tokens_(max_tokens) {}

std::string ClientTarget::summarize(const std::string &code) {
    const Query q = build_zsq(spec_, code, tokenizer_, prompt_budget(max_tokens_));
    const SamplingParams params{0.0, 1.0, max_tokens_, 1};
    return client_.send_query(q, params).text;
}

std::string_view to_string(AEClass verdict) {
    switch (verdict) {
    case AEClass::SAE: return "SAE";
    case AEClass::UAE: return "UAE";
    case AEClass::NotAE: return "NotAE";
    }
    return "?";
}

AEClass classify_trials(int diverged, int trials) {
    if (trials < 1 || diverged < 0 || diverged > trials) {
        throw Error(ErrorCode::InvalidArgument, "bad trial counts");
    }
    if (diverged == trials) {
        return AEClass::SAE;
    }
    return diverged > 0 ? AEClass::UAE : AEClass::NotAE;
}

void verify_ae(AECandidate &candidate, SummaryTarget &target, const VerifyOptions &options) {
    if (options.repeats < 1) {
        throw Error(ErrorCode::InvalidArgument, "repeats must be at least 1");
    }
    if (!check_pl(candidate.mutated_code, candidate.language).passed) {
        throw Error(ErrorCode::RewriteBrokeSyntax, "mutated code does not pass the syntax check");
    }
    candidate.trials.clear();
    candidate.verdict.reset();
    try {
        int diverged = 0;
        for (int i = 0; i < options.repeats; ++i) {
            AETrial trial;
            trial.summary = target.summarize(candidate.mutated_code);
            trial.bleu = nl_bleu(trial.summary, candidate.original_summary);
            trial.diverged = trial.bleu < options.divergence_threshold;
            trial.needs_review = trial.diverged && trial.bleu >= options.review_floor;
            diverged += trial.diverged ? 1 : 0;
            candidate.trials.push_back(std::move(trial));
        }
        candidate.verdict = classify_trials(diverged, options.repeats);
    } catch (Error &e) {
        candidate.error = std::string(to_string(e.code())) + ": " + e.what();
        e.set_phase("ae/verify");
        throw;
    }
}

double AEReport::sae_rate() const {
    return candidates.empty() ? 0.0 : static_cast<double>(sae) / static_cast<double>(candidates.size());
}

double AEReport::uae_rate() const {
    return candidates.empty() ? 0.0 : static_cast<double>(uae) / static_cast<double>(candidates.size());
}

AEReport ae_campaign(const std::vector<Snippet> &corpus, ScorableModel &model, SummaryTarget &target,
                     const CampaignOptions &options) {
    if (options.budget < 1) {
        throw Error(ErrorCode::BadBudget, "AE budget must be at least 1");
    }
    if (options.k < 1) {
        throw Error(ErrorCode::InvalidArgument, "k must be at least 1");
    }
    AEReport report;
    report.model_id = model.id();
    report.options = options;
    try {
        for (const auto &snippet : corpus) {
            if (report.verified() >= options.budget) {
                break;
            }
            if (!check_pl(snippet.code, snippet.language).passed) {
                log::warning("skipping snippet " + snippet.id + ": does not parse");
                continue;
            }
            const SensitivityRanking ranking = attention_gap_ranking(model, snippet.code);
            if (report.aggregator.empty()) {
                report.aggregator = ranking.aggregator;
            }
            const auto sites = applicable_passes(snippet.code, snippet.language, ranking, options.k);
            if (sites.empty()) {
                continue;
            }
            const std::string original_summary = target.summarize(snippet.code);
            for (const auto &site : sites) {
                if (report.verified() >= options.budget) {
                    break;
                }
                AECandidate c;
                c.snippet_id = snippet.id;
                c.language = snippet.language;
                c.original_code = snippet.code;
                c.mutated_code = apply_transform(snippet.code, snippet.language, site.token, site.pass);
                c.pass = site.pass;
                c.token = site.token;
                c.token_text = site.token_text;
                c.original_summary = original_summary;
                report.candidates.push_back(c);
                verify_ae(report.candidates.back(), target, options.verify);
                switch (*report.candidates.back().verdict) {
                case AEClass::SAE: ++report.sae; break;
                case AEClass::UAE: ++report.uae; break;
                case AEClass::NotAE: ++report.not_ae; break;
                }
            }
        }
    } catch (const Error &e) {
        report.aborted = std::string(to_string(e.code())) + ": " + e.what();
        log::error("AE campaign aborted: " + *report.aborted);
    }
    return report;
}

std::vector<Snippet> load_snippets(const std::string &path) {
    std::vector<Snippet> out;
    int line = 0;
    for (const auto &row : read_jsonl(path)) {
        ++line;
        try {
            Snippet s;
            s.code = row.at("code").get<std::string>();
            s.language = syntax::require_language(row.value("language", std::string("python")));
            s.id = row.value("id", std::to_string(line));
            out.push_back(std::move(s));
        } catch (const json::exception &e) {
            throw Error(ErrorCode::SchemaMismatch, path + ":" + std::to_string(line) + ": " + e.what());
        }
    }
    return out;
}

json to_json(const AECandidate &c) {
    json trials = json::array();
    for (const auto &t : c.trials) {
        trials.push_back(
            {{"summary", t.summary}, {"bleu", t.bleu}, {"diverged", t.diverged}, {"needs_review", t.needs_review}});
    }
    json j{{"snippet_id", c.snippet_id},
           {"language", std::string(syntax::to_string(c.language))},
           {"original_code", c.original_code},
           {"mutated_code", c.mutated_code},
           {"pass", std::string(to_string(c.pass))},
           {"token", c.token},
           {"token_text", c.token_text},
           {"original_summary", c.original_summary},
           {"trials", trials}};
    j["verdict"] = c.verdict ? json(std::string(to_string(*c.verdict))) : json(nullptr);
    if (c.error) {
        j["error"] = *c.error;
    }
    return j;
}

json to_json(const AEReport &r) {
    json candidates = json::array();
    for (const auto &c : r.candidates) {
        candidates.push_back(to_json(c));
    }
    json j{{"model", r.model_id},
           {"aggregator", r.aggregator},
           {"k", r.options.k},
           {"budget", r.options.budget},
           {"divergence_threshold", r.options.verify.divergence_threshold},
           {"review_floor", r.options.verify.review_floor},
           {"repeats", r.options.verify.repeats},
           {"candidate_count", r.candidates.size()},
           {"counts", {{"SAE", r.sae}, {"UAE", r.uae}, {"NotAE", r.not_ae}}},
           {"sae_rate", r.sae_rate()},
           {"uae_rate", r.uae_rate()},
           {"sae_rate_text", format_percent(r.sae_rate())},
           {"uae_rate_text", format_percent(r.uae_rate())},
           {"candidates", candidates}};
    if (r.aborted) {
        j["aborted"] = *r.aborted;
    }
    return j;
}

} // namespace codeslice
