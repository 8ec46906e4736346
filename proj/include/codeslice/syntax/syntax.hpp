#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace codeslice::syntax {

enum class Language { Python, Java, CSharp };

std::string_view to_string(Language language);
// "python"/"py", "java", "csharp"/"c#"/"cs"; nullopt for anything else.
std::optional<Language> language_from_name(std::string_view name);
// Same as above but throws Error(UnsupportedLanguage).
Language require_language(std::string_view name);

bool is_keyword(Language language, std::string_view word);
const std::vector<std::string> &keywords(Language language);

struct Position {
    int line = 1;   // 1-based
    int column = 1; // 1-based, in bytes

    friend bool operator==(const Position &, const Position &) = default;
};

enum class TokenKind {
    Identifier,
    Keyword,
    Number,
    String,
    Char,
    Operator,
    Newline, // Python logical line end
    Indent,
    Dedent,
    EndOfFile,
};

struct Token {
    TokenKind kind = TokenKind::EndOfFile;
    std::string text;
    std::size_t begin = 0; // byte offsets into the source
    std::size_t end = 0;
    Position position;

    // Layout tokens carry no source text of their own.
    bool is_layout() const {
        return kind == TokenKind::Newline || kind == TokenKind::Indent || kind == TokenKind::Dedent ||
               kind == TokenKind::EndOfFile;
    }
};

struct SyntaxIssue {
    Position position;
    std::size_t offset = 0;
    std::string message;
};

// Generic concrete syntax tree. Leaves wrap exactly one source token and carry
// its index; interior nodes are named by construct ("if_statement", ...).
// Error recovery is coarse: the first failure becomes an "ERROR" node that
// swallows the unparsed remainder.
struct Node {
    std::string kind;
    std::string field; // role within the parent: "name", "left", "type", "condition", ...
    std::size_t begin = 0;
    std::size_t end = 0;
    Position start;
    int token = -1; // leaf only
    std::vector<Node> children;

    bool is_leaf() const { return token >= 0; }
    bool is_error() const { return kind == "ERROR"; }
};

struct LexResult {
    std::vector<Token> tokens;
    std::optional<SyntaxIssue> error;
};

LexResult lex(std::string_view source, Language language);

class SyntaxTree {
  public:
    SyntaxTree(Language language, std::string source, std::vector<Token> tokens, Node root,
               std::optional<SyntaxIssue> error)
        : language_(language), source_(std::move(source)), tokens_(std::move(tokens)), root_(std::move(root)),
          error_(std::move(error)) {}

    Language language() const { return language_; }
    const std::string &source() const { return source_; }
    const std::vector<Token> &tokens() const { return tokens_; }
    const Node &root() const { return root_; }

    bool has_error() const { return error_.has_value(); }
    const std::optional<SyntaxIssue> &first_error() const { return error_; }

    std::string_view text_of(const Node &node) const {
        return std::string_view(source_).substr(node.begin, node.end - node.begin);
    }
    const Token &token_of(const Node &leaf) const { return tokens_.at(static_cast<std::size_t>(leaf.token)); }

  private:
    Language language_;
    std::string source_;
    std::vector<Token> tokens_;
    Node root_;
    std::optional<SyntaxIssue> error_;
};

// Parses a whole snippet. Fragments (bare statements, lone methods) are
// accepted at top level. Never throws on malformed input.
SyntaxTree parse(std::string_view source, Language language);

// parse(), and if that reports an error, a re-parse inside a synthetic
// function shell; positions in the returned issue always refer to `source`.
struct FragmentCheck {
    bool ok = false;
    bool used_wrapper = false;
    std::optional<SyntaxIssue> error;
};
FragmentCheck check_fragment(std::string_view source, Language language);

// The snippet inside a minimal function shell.
std::string wrap_fragment(std::string_view source, Language language);

// parse(), falling back to the wrapped parse when only that one is clean.
// Offsets in the fallback tree refer to the wrapped text (tree.source()).
SyntaxTree parse_fragment(std::string_view source, Language language);

// Ancestor chain of a leaf: path.front() is the root, path.back() the leaf.
using NodePath = std::vector<const Node *>;

// Pre-order visit; the callback receives the node and its ancestor path.
void walk(const Node &root, const std::function<void(const Node &, const NodePath &)> &visit);

// Path to the leaf holding the given token index; empty if none.
NodePath path_to_token(const Node &root, int token_index);

// Lisp-style dump for debugging and fixtures.
std::string to_sexp(const SyntaxTree &tree, const Node &node);

// Lexer tokens as text, layout tokens dropped. Falls back to a whitespace /
// punctuation split when the source does not lex.
std::vector<std::string> code_tokens(std::string_view source, Language language);

} // namespace codeslice::syntax
