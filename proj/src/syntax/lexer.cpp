#include <algorithm>
#include <array>
#include <cctype>

#include "codeslice/syntax/syntax.hpp"

namespace codeslice::syntax {

namespace {

bool ident_start(unsigned char c) { return c >= 0x80 || std::isalpha(c) || c == '_'; }
bool ident_part(unsigned char c) { return c >= 0x80 || std::isalnum(c) || c == '_'; }

struct LexFailure {
    std::size_t offset;
    std::string message;
};

// Shared cursor with line/column bookkeeping.
class Cursor {
  public:
    explicit Cursor(std::string_view src) : src_(src) {}

    bool done() const { return pos_ >= src_.size(); }
    char peek(std::size_t ahead = 0) const {
        return pos_ + ahead < src_.size() ? src_[pos_ + ahead] : '\0';
    }
    std::size_t pos() const { return pos_; }
    bool starts_with(std::string_view s) const { return src_.substr(pos_).starts_with(s); }

    void advance(std::size_t n = 1) {
        for (std::size_t i = 0; i < n && pos_ < src_.size(); ++i) {
            if (src_[pos_] == '\n') {
                ++line_;
                line_start_ = pos_ + 1;
            }
            ++pos_;
        }
    }

    Position position_at(std::size_t offset) const {
        // offset is always at or after the current line start when called for
        // the token being produced.
        if (offset >= line_start_) {
            return Position{line_, static_cast<int>(offset - line_start_) + 1};
        }
        int line = 1;
        std::size_t start = 0;
        for (std::size_t i = 0; i < offset && i < src_.size(); ++i) {
            if (src_[i] == '\n') {
                ++line;
                start = i + 1;
            }
        }
        return Position{line, static_cast<int>(offset - start) + 1};
    }

    std::string_view slice(std::size_t from, std::size_t to) const { return src_.substr(from, to - from); }
    std::string_view source() const { return src_; }

  private:
    std::string_view src_;
    std::size_t pos_ = 0;
    int line_ = 1;
    std::size_t line_start_ = 0;
};

Position position_of(std::string_view src, std::size_t offset) {
    int line = 1;
    std::size_t start = 0;
    for (std::size_t i = 0; i < offset && i < src.size(); ++i) {
        if (src[i] == '\n') {
            ++line;
            start = i + 1;
        }
    }
    return Position{line, static_cast<int>(offset - start) + 1};
}

template <std::size_t N>
std::string_view longest_operator(const Cursor &cur, const std::array<std::string_view, N> &ops) {
    for (std::string_view op : ops) { // sorted longest first
        if (cur.starts_with(op)) {
            return op;
        }
    }
    return {};
}

// Numbers share enough structure across the three languages to lex the same way:
// radix prefixes, digit separators, fraction, exponent, alphabetic suffixes.
void scan_number(Cursor &cur) {
    if (cur.peek() == '0' && std::string_view("xXbBoO").find(cur.peek(1)) != std::string_view::npos &&
        cur.peek(1) != '\0') {
        cur.advance(2);
        while (std::isxdigit(static_cast<unsigned char>(cur.peek())) || cur.peek() == '_') {
            cur.advance();
        }
    } else {
        while (std::isdigit(static_cast<unsigned char>(cur.peek())) || cur.peek() == '_') {
            cur.advance();
        }
        if (cur.peek() == '.' && std::isdigit(static_cast<unsigned char>(cur.peek(1)))) {
            cur.advance();
            while (std::isdigit(static_cast<unsigned char>(cur.peek())) || cur.peek() == '_') {
                cur.advance();
            }
        } else if (cur.peek() == '.' && !ident_start(static_cast<unsigned char>(cur.peek(1))) && cur.peek(1) != '.') {
            cur.advance(); // "1." is a float literal
        }
        if ((cur.peek() == 'e' || cur.peek() == 'E') &&
            (std::isdigit(static_cast<unsigned char>(cur.peek(1))) ||
             ((cur.peek(1) == '+' || cur.peek(1) == '-') && std::isdigit(static_cast<unsigned char>(cur.peek(2)))))) {
            cur.advance(2);
            while (std::isdigit(static_cast<unsigned char>(cur.peek())) || cur.peek() == '_') {
                cur.advance();
            }
        }
    }
    while (std::isalpha(static_cast<unsigned char>(cur.peek()))) {
        cur.advance(); // L, f, d, m, u, j suffixes
    }
}

// ---------------------------------------------------------------- Python

constexpr std::array<std::string_view, 49> kPythonOps = {
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "**", "//", ">>", "<<", "<=", ">=", "==", "!=",
    "+=",  "-=",  "*=",  "/=",  "%=",  "&=", "|=", "^=", "@=", "+",  "-",  "*",  "/",  "%",  "@",
    "&",   "|",   "^",   "~",   "<",   ">",  "(",  ")",  "[",  "]",  "{",  "}",  ",",  ":",  ".",
    ";",   "=",   "\\",  "!"};

bool python_string_prefix(std::string_view word) {
    std::string lower(word);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    static constexpr std::array<std::string_view, 10> prefixes = {"r", "u", "b", "f", "br", "rb", "fr", "rf", "ur", "ru"};
    return std::find(prefixes.begin(), prefixes.end(), lower) != prefixes.end();
}

void scan_python_string(Cursor &cur, std::size_t token_begin) {
    const char quote = cur.peek();
    const bool triple = cur.peek(1) == quote && cur.peek(2) == quote;
    cur.advance(triple ? 3 : 1);
    while (true) {
        if (cur.done()) {
            throw LexFailure{token_begin, "unterminated string literal"};
        }
        const char c = cur.peek();
        if (c == '\\') {
            cur.advance(2);
            continue;
        }
        if (triple) {
            if (c == quote && cur.peek(1) == quote && cur.peek(2) == quote) {
                cur.advance(3);
                return;
            }
        } else {
            if (c == '\n') {
                throw LexFailure{token_begin, "unterminated string literal"};
            }
            if (c == quote) {
                cur.advance();
                return;
            }
        }
        cur.advance();
    }
}

int measure_indent(std::string_view src, std::size_t line_begin, std::size_t &first_non_blank) {
    int width = 0;
    std::size_t i = line_begin;
    while (i < src.size() && (src[i] == ' ' || src[i] == '\t' || src[i] == '\f')) {
        if (src[i] == '\t') {
            width = (width / 8 + 1) * 8;
        } else if (src[i] == ' ') {
            ++width;
        }
        ++i;
    }
    first_non_blank = i;
    return width;
}

LexResult lex_python(std::string_view src) {
    LexResult result;
    auto &tokens = result.tokens;
    Cursor cur(src);
    std::vector<int> indents;
    int depth = 0;
    bool at_line_start = true;
    bool line_has_tokens = false;

    auto push = [&](TokenKind kind, std::size_t begin, std::size_t end) {
        tokens.push_back(Token{kind, std::string(src.substr(begin, end - begin)), begin, end, position_of(src, begin)});
    };
    auto push_layout = [&](TokenKind kind, std::size_t at) {
        tokens.push_back(Token{kind, "", at, at, position_of(src, at)});
    };

    try {
        while (true) {
            if (at_line_start && depth == 0) {
                std::size_t first = 0;
                const int width = measure_indent(src, cur.pos(), first);
                const char c = first < src.size() ? src[first] : '\0';
                if (c == '\n' || c == '#' || c == '\r' || c == '\0') {
                    // blank or comment-only line: no layout tokens
                    cur.advance(first - cur.pos());
                    if (c == '#') {
                        while (!cur.done() && cur.peek() != '\n') {
                            cur.advance();
                        }
                    }
                    if (cur.done()) {
                        break;
                    }
                    cur.advance(); // consume '\n' or '\r'
                    if (c == '\r' && cur.peek() == '\n') {
                        cur.advance();
                    }
                    continue;
                }
                cur.advance(first - cur.pos());
                if (indents.empty()) {
                    indents.push_back(width); // base indentation of the fragment
                } else if (width > indents.back()) {
                    indents.push_back(width);
                    push_layout(TokenKind::Indent, first);
                } else {
                    while (width < indents.back()) {
                        indents.pop_back();
                        if (indents.empty() || width > indents.back()) {
                            throw LexFailure{first, "unindent does not match any outer indentation level"};
                        }
                        push_layout(TokenKind::Dedent, first);
                    }
                }
                at_line_start = false;
            }

            if (cur.done()) {
                break;
            }
            const char c = cur.peek();
            const std::size_t begin = cur.pos();

            if (c == '\n' || c == '\r') {
                if (depth == 0 && line_has_tokens) {
                    push_layout(TokenKind::Newline, begin);
                    line_has_tokens = false;
                }
                cur.advance();
                if (c == '\r' && cur.peek() == '\n') {
                    cur.advance();
                }
                at_line_start = true;
                continue;
            }
            if (c == ' ' || c == '\t' || c == '\f') {
                cur.advance();
                continue;
            }
            if (c == '#') {
                while (!cur.done() && cur.peek() != '\n') {
                    cur.advance();
                }
                continue;
            }
            if (c == '\\') {
                if (cur.peek(1) == '\n' || (cur.peek(1) == '\r' && cur.peek(2) == '\n')) {
                    cur.advance(cur.peek(1) == '\r' ? 3 : 2);
                    continue;
                }
                throw LexFailure{begin, "unexpected character after line continuation"};
            }
            line_has_tokens = true;

            if (ident_start(static_cast<unsigned char>(c))) {
                while (ident_part(static_cast<unsigned char>(cur.peek()))) {
                    cur.advance();
                }
                const std::string_view word = src.substr(begin, cur.pos() - begin);
                if ((cur.peek() == '\'' || cur.peek() == '"') && python_string_prefix(word)) {
                    scan_python_string(cur, begin);
                    push(TokenKind::String, begin, cur.pos());
                    continue;
                }
                push(is_keyword(Language::Python, word) ? TokenKind::Keyword : TokenKind::Identifier, begin, cur.pos());
                continue;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) ||
                (c == '.' && std::isdigit(static_cast<unsigned char>(cur.peek(1))))) {
                if (c == '.') {
                    cur.advance();
                }
                scan_number(cur);
                push(TokenKind::Number, begin, cur.pos());
                continue;
            }
            if (c == '\'' || c == '"') {
                scan_python_string(cur, begin);
                push(TokenKind::String, begin, cur.pos());
                continue;
            }
            const std::string_view op = longest_operator(cur, kPythonOps);
            if (op.empty() || op == "!" || op == "\\") {
                throw LexFailure{begin, std::string("invalid character '") + c + "'"};
            }
            if (op == "(" || op == "[" || op == "{") {
                ++depth;
            } else if (op == ")" || op == "]" || op == "}") {
                depth = std::max(0, depth - 1);
            }
            cur.advance(op.size());
            push(TokenKind::Operator, begin, cur.pos());
        }
    } catch (const LexFailure &failure) {
        result.error = SyntaxIssue{position_of(src, failure.offset), failure.offset, failure.message};
        return result;
    }

    const std::size_t end = src.size();
    if (line_has_tokens) {
        push_layout(TokenKind::Newline, end);
    }
    for (std::size_t i = 1; i < indents.size(); ++i) {
        push_layout(TokenKind::Dedent, end);
    }
    push_layout(TokenKind::EndOfFile, end);
    return result;
}

// ---------------------------------------------------------------- Java / C#

// '>' is never merged into shift tokens so generic closers stay separable; the
// parser recombines adjacent '>' '>' into a shift.
constexpr std::array<std::string_view, 47> kCFamilyOps = {
    ">>>=", "<<=", ">>=", "...", "?\?=", "->", "=>", "::", "??", "?.", "++", "--", "&&", "||", "==", "!=",
    "<=",   ">=",  "+=",  "-=",  "*=",  "/=", "%=", "&=", "|=", "^=", "<<", "+",  "-",  "*",  "/",  "%",
    "&",    "|",   "^",   "!",   "~",   "<",  ">",  "=",  "?",  ":",  ";",  ",",  ".",  "@",  "#"};

constexpr std::array<std::string_view, 6> kBrackets = {"(", ")", "[", "]", "{", "}"};

void scan_quoted(Cursor &cur, std::size_t token_begin, char quote, bool verbatim) {
    cur.advance(); // opening quote
    while (true) {
        if (cur.done()) {
            throw LexFailure{token_begin, quote == '"' ? "unterminated string literal" : "unterminated character literal"};
        }
        const char c = cur.peek();
        if (!verbatim && c == '\\') {
            cur.advance(2);
            continue;
        }
        if (!verbatim && c == '\n') {
            throw LexFailure{token_begin, quote == '"' ? "unterminated string literal" : "unterminated character literal"};
        }
        if (c == quote) {
            if (verbatim && cur.peek(1) == quote) {
                cur.advance(2);
                continue;
            }
            cur.advance();
            return;
        }
        cur.advance();
    }
}

void scan_triple_quoted(Cursor &cur, std::size_t token_begin) {
    cur.advance(3);
    while (!cur.done()) {
        if (cur.starts_with("\"\"\"")) {
            while (cur.peek() == '"') {
                cur.advance();
            }
            return;
        }
        if (cur.peek() == '\\') {
            cur.advance();
        }
        cur.advance();
    }
    throw LexFailure{token_begin, "unterminated text block"};
}

// C# interpolated string: holes may nest braces and strings.
void scan_interpolated(Cursor &cur, std::size_t token_begin, bool verbatim) {
    cur.advance(); // '"'
    int holes = 0;
    while (true) {
        if (cur.done()) {
            throw LexFailure{token_begin, "unterminated interpolated string"};
        }
        const char c = cur.peek();
        if (holes == 0) {
            if (c == '{' && cur.peek(1) == '{') {
                cur.advance(2);
                continue;
            }
            if (c == '{') {
                holes = 1;
                cur.advance();
                continue;
            }
            if (!verbatim && c == '\\') {
                cur.advance(2);
                continue;
            }
            if (!verbatim && c == '\n') {
                throw LexFailure{token_begin, "unterminated interpolated string"};
            }
            if (c == '"') {
                if (verbatim && cur.peek(1) == '"') {
                    cur.advance(2);
                    continue;
                }
                cur.advance();
                return;
            }
            cur.advance();
            continue;
        }
        if (c == '{') {
            ++holes;
        } else if (c == '}') {
            --holes;
        } else if (c == '"') {
            scan_quoted(cur, cur.pos(), '"', false);
            continue;
        } else if (c == '\'') {
            scan_quoted(cur, cur.pos(), '\'', false);
            continue;
        }
        cur.advance();
    }
}

LexResult lex_cfamily(std::string_view src, Language language) {
    LexResult result;
    auto &tokens = result.tokens;
    Cursor cur(src);
    const bool csharp = language == Language::CSharp;
    bool line_start = true;

    auto push = [&](TokenKind kind, std::size_t begin, std::size_t end) {
        tokens.push_back(Token{kind, std::string(src.substr(begin, end - begin)), begin, end, position_of(src, begin)});
    };

    try {
        while (!cur.done()) {
            const char c = cur.peek();
            const std::size_t begin = cur.pos();
            if (c == '\n') {
                line_start = true;
                cur.advance();
                continue;
            }
            if (std::isspace(static_cast<unsigned char>(c))) {
                cur.advance();
                continue;
            }
            if (c == '/' && cur.peek(1) == '/') {
                while (!cur.done() && cur.peek() != '\n') {
                    cur.advance();
                }
                continue;
            }
            if (c == '/' && cur.peek(1) == '*') {
                cur.advance(2);
                while (!cur.done() && !cur.starts_with("*/")) {
                    cur.advance();
                }
                if (cur.done()) {
                    throw LexFailure{begin, "unterminated comment"};
                }
                cur.advance(2);
                continue;
            }
            if (csharp && c == '#' && line_start) {
                while (!cur.done() && cur.peek() != '\n') {
                    cur.advance(); // preprocessor directive
                }
                continue;
            }
            line_start = false;

            if (csharp && (c == '$' || c == '@')) {
                const bool dollar_at = cur.starts_with("$@\"") || cur.starts_with("@$\"");
                if (dollar_at) {
                    cur.advance(2);
                    scan_interpolated(cur, begin, true);
                    push(TokenKind::String, begin, cur.pos());
                    continue;
                }
                if (c == '$' && cur.starts_with("$\"\"\"")) {
                    cur.advance();
                    scan_triple_quoted(cur, begin);
                    push(TokenKind::String, begin, cur.pos());
                    continue;
                }
                if (c == '$' && cur.peek(1) == '"') {
                    cur.advance();
                    scan_interpolated(cur, begin, false);
                    push(TokenKind::String, begin, cur.pos());
                    continue;
                }
                if (c == '@' && cur.peek(1) == '"') {
                    cur.advance();
                    scan_quoted(cur, begin, '"', true);
                    push(TokenKind::String, begin, cur.pos());
                    continue;
                }
                if (c == '@' && ident_start(static_cast<unsigned char>(cur.peek(1)))) {
                    cur.advance();
                    while (ident_part(static_cast<unsigned char>(cur.peek()))) {
                        cur.advance();
                    }
                    push(TokenKind::Identifier, begin, cur.pos());
                    continue;
                }
                if (c == '$') {
                    throw LexFailure{begin, "invalid character '$'"};
                }
            }
            if (ident_start(static_cast<unsigned char>(c)) || (!csharp && c == '$')) {
                while (ident_part(static_cast<unsigned char>(cur.peek())) || (!csharp && cur.peek() == '$')) {
                    cur.advance();
                }
                const std::string_view word = src.substr(begin, cur.pos() - begin);
                push(is_keyword(language, word) ? TokenKind::Keyword : TokenKind::Identifier, begin, cur.pos());
                continue;
            }
            if (std::isdigit(static_cast<unsigned char>(c)) ||
                (c == '.' && std::isdigit(static_cast<unsigned char>(cur.peek(1))))) {
                if (c == '.') {
                    cur.advance();
                }
                scan_number(cur);
                push(TokenKind::Number, begin, cur.pos());
                continue;
            }
            if (cur.starts_with("\"\"\"")) {
                scan_triple_quoted(cur, begin);
                push(TokenKind::String, begin, cur.pos());
                continue;
            }
            if (c == '"') {
                scan_quoted(cur, begin, '"', false);
                push(TokenKind::String, begin, cur.pos());
                continue;
            }
            if (c == '\'') {
                scan_quoted(cur, begin, '\'', false);
                push(TokenKind::Char, begin, cur.pos());
                continue;
            }
            std::string_view op;
            for (std::string_view b : kBrackets) {
                if (cur.starts_with(b)) {
                    op = b;
                    break;
                }
            }
            if (op.empty()) {
                op = longest_operator(cur, kCFamilyOps);
            }
            if (op.empty() || op == "#" || (op == "@" && csharp)) {
                throw LexFailure{begin, std::string("invalid character '") + c + "'"};
            }
            cur.advance(op.size());
            push(TokenKind::Operator, begin, cur.pos());
        }
    } catch (const LexFailure &failure) {
        result.error = SyntaxIssue{position_of(src, failure.offset), failure.offset, failure.message};
        return result;
    }
    tokens.push_back(Token{TokenKind::EndOfFile, "", src.size(), src.size(), position_of(src, src.size())});
    return result;
}

} // namespace

LexResult lex(std::string_view source, Language language) {
    if (language == Language::Python) {
        return lex_python(source);
    }
    return lex_cfamily(source, language);
}

} // namespace codeslice::syntax
