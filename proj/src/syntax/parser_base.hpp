#pragma once

#include <algorithm>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "codeslice/syntax/syntax.hpp"

namespace codeslice::syntax::detail {

struct ParseFailure {};

// Token-stream cursor shared by the hand-written parsers. Failures unwind via
// ParseFailure; the furthest failure seen wins when reporting.
class ParserBase {
  public:
    ParserBase(std::string_view source, const std::vector<Token> &tokens) : source_(source), tokens_(tokens) {}

    const SyntaxIssue &furthest_issue() const { return furthest_; }

  protected:
    const Token &peek(std::size_t ahead = 0) const {
        const std::size_t i = std::min(pos_ + ahead, tokens_.size() - 1);
        return tokens_[i];
    }
    bool at_end() const { return peek().kind == TokenKind::EndOfFile; }

    // Text match on non-literal tokens (keywords, operators, identifiers).
    bool at(std::string_view text, std::size_t ahead = 0) const {
        const Token &t = peek(ahead);
        return t.kind != TokenKind::String && t.kind != TokenKind::Char && !t.is_layout() && t.text == text;
    }
    bool at_any(std::initializer_list<std::string_view> texts, std::size_t ahead = 0) const {
        for (auto t : texts) {
            if (at(t, ahead)) {
                return true;
            }
        }
        return false;
    }
    bool at_kind(TokenKind kind, std::size_t ahead = 0) const { return peek(ahead).kind == kind; }
    bool at_identifier(std::size_t ahead = 0) const { return peek(ahead).kind == TokenKind::Identifier; }

    // Two tokens are adjacent when no whitespace separates them.
    bool adjacent(std::size_t a, std::size_t b) const { return peek(a).end == peek(b).begin; }

    Node leaf(std::string field = {}) {
        const Token &t = peek();
        Node n;
        switch (t.kind) {
        case TokenKind::Identifier: n.kind = "identifier"; break;
        case TokenKind::Number: n.kind = "number"; break;
        case TokenKind::String: n.kind = "string"; break;
        case TokenKind::Char: n.kind = "char"; break;
        default: n.kind = t.text; break;
        }
        n.field = std::move(field);
        n.begin = t.begin;
        n.end = t.end;
        n.start = t.position;
        n.token = static_cast<int>(std::min(pos_, tokens_.size() - 1));
        ++pos_;
        return n;
    }

    Node expect(std::string_view text, std::string field = {}) {
        if (!at(text)) {
            fail("expected '" + std::string(text) + "'");
        }
        return leaf(std::move(field));
    }

    Node expect_identifier(std::string field = {}) {
        if (!at_identifier()) {
            fail("expected identifier");
        }
        return leaf(std::move(field));
    }

    void skip_layout(TokenKind kind, const char *what) {
        if (!at_kind(kind)) {
            fail(std::string("expected ") + what);
        }
        ++pos_;
    }

    [[noreturn]] void fail(std::string message) {
        const Token &t = peek();
        if (!has_furthest_ || pos_ > furthest_pos_) {
            furthest_pos_ = pos_;
            has_furthest_ = true;
            furthest_ = SyntaxIssue{t.position, t.begin, describe(t) + ": " + message};
        }
        throw ParseFailure{};
    }

    static std::string describe(const Token &t) {
        switch (t.kind) {
        case TokenKind::EndOfFile: return "unexpected end of input";
        case TokenKind::Newline: return "unexpected end of line";
        case TokenKind::Indent: return "unexpected indent";
        case TokenKind::Dedent: return "unexpected dedent";
        default: return "unexpected '" + t.text + "'";
        }
    }

    static Node make(std::string kind, std::vector<Node> children, std::string field = {}) {
        Node n;
        n.kind = std::move(kind);
        n.field = std::move(field);
        if (!children.empty()) {
            n.begin = children.front().begin;
            n.end = children.back().end;
            n.start = children.front().start;
        }
        n.children = std::move(children);
        return n;
    }

    // Zero-width node anchored at the current token (e.g. empty parameter list).
    Node empty(std::string kind, std::string field = {}) const {
        Node n;
        n.kind = std::move(kind);
        n.field = std::move(field);
        n.begin = n.end = peek().begin;
        n.start = peek().position;
        return n;
    }

    static Node with_field(Node n, std::string field) {
        n.field = std::move(field);
        return n;
    }

    Node error_node() const {
        Node n;
        n.kind = "ERROR";
        const std::size_t from = std::min(furthest_pos_, tokens_.size() - 1);
        n.begin = tokens_[from].begin;
        n.end = source_.size();
        n.start = tokens_[from].position;
        return n;
    }

    std::string_view source_;
    const std::vector<Token> &tokens_;
    std::size_t pos_ = 0;

  private:
    SyntaxIssue furthest_;
    std::size_t furthest_pos_ = 0;
    bool has_furthest_ = false;
};

// Entry points implemented per language. They never throw.
struct ParseOutput {
    Node root;
    std::optional<SyntaxIssue> error;
};

ParseOutput parse_python(std::string_view source, const std::vector<Token> &tokens);
ParseOutput parse_cfamily(std::string_view source, const std::vector<Token> &tokens, Language language);

} // namespace codeslice::syntax::detail
