#include <algorithm>
#include <cctype>

#include "codeslice/syntax/syntax.hpp"
#include "parser_base.hpp"

namespace codeslice::syntax {

namespace {

Node lex_error_root(std::string_view source, Language language, const SyntaxIssue &issue) {
    Node error;
    error.kind = "ERROR";
    error.begin = std::min(issue.offset, source.size());
    error.end = source.size();
    error.start = issue.position;
    Node root;
    root.kind = language == Language::Python ? "module" : "compilation_unit";
    root.begin = 0;
    root.end = source.size();
    root.children.push_back(std::move(error));
    return root;
}

std::size_t offset_of(std::string_view source, Position p) {
    std::size_t offset = 0;
    for (int line = 1; line < p.line && offset < source.size(); ++line) {
        const auto nl = source.find('\n', offset);
        if (nl == std::string_view::npos) {
            return source.size();
        }
        offset = nl + 1;
    }
    return std::min(source.size(), offset + static_cast<std::size_t>(std::max(0, p.column - 1)));
}

struct Wrapped {
    std::string text;
    int line_shift = 1;  // lines added before the snippet
    int column_shift = 0; // columns added to each snippet line
};

Wrapped wrap(std::string_view source, Language language) {
    Wrapped w;
    if (language == Language::Python) {
        w.text = "def __fragment__():\n";
        w.column_shift = 4;
        std::size_t at = 0;
        while (at <= source.size()) {
            auto nl = source.find('\n', at);
            const auto line = source.substr(at, nl == std::string_view::npos ? std::string_view::npos : nl - at);
            w.text += "    ";
            w.text += line;
            w.text += '\n';
            if (nl == std::string_view::npos) {
                break;
            }
            at = nl + 1;
        }
        return w;
    }
    w.text = "class __Fragment__ { void __fragment__() {\n";
    w.text += source;
    w.text += "\n} }\n";
    return w;
}

} // namespace

std::string wrap_fragment(std::string_view source, Language language) { return wrap(source, language).text; }

SyntaxTree parse_fragment(std::string_view source, Language language) {
    SyntaxTree direct = parse(source, language);
    if (!direct.has_error()) {
        return direct;
    }
    SyntaxTree wrapped = parse(wrap(source, language).text, language);
    return wrapped.has_error() ? std::move(direct) : std::move(wrapped);
}

SyntaxTree parse(std::string_view source, Language language) {
    LexResult lexed = lex(source, language);
    if (lexed.error) {
        Node root = lex_error_root(source, language, *lexed.error);
        return SyntaxTree(language, std::string(source), std::move(lexed.tokens), std::move(root), lexed.error);
    }
    detail::ParseOutput out = language == Language::Python
                                  ? detail::parse_python(source, lexed.tokens)
                                  : detail::parse_cfamily(source, lexed.tokens, language);
    return SyntaxTree(language, std::string(source), std::move(lexed.tokens), std::move(out.root),
                      std::move(out.error));
}

FragmentCheck check_fragment(std::string_view source, Language language) {
    FragmentCheck check;
    SyntaxTree direct = parse(source, language);
    if (!direct.has_error()) {
        check.ok = true;
        return check;
    }
    check.error = direct.first_error();

    const Wrapped w = wrap(source, language);
    SyntaxTree wrapped = parse(w.text, language);
    if (!wrapped.has_error()) {
        check.ok = true;
        check.used_wrapper = true;
        check.error.reset();
        return check;
    }
    // Report whichever failure got further into the snippet.
    Position p = wrapped.first_error()->position;
    p.line -= w.line_shift;
    p.column = std::max(1, p.column - w.column_shift);
    const int direct_line = check.error->position.line;
    if (p.line >= 1 && (p.line > direct_line ||
                        (p.line == direct_line && p.column > check.error->position.column))) {
        const int source_lines = 1 + static_cast<int>(std::count(source.begin(), source.end(), '\n'));
        if (p.line <= source_lines) {
            check.error = SyntaxIssue{p, offset_of(source, p), wrapped.first_error()->message};
        }
    }
    return check;
}

void walk(const Node &root, const std::function<void(const Node &, const NodePath &)> &visit) {
    NodePath path;
    std::function<void(const Node &)> rec = [&](const Node &n) {
        path.push_back(&n);
        visit(n, path);
        for (const auto &child : n.children) {
            rec(child);
        }
        path.pop_back();
    };
    rec(root);
}

NodePath path_to_token(const Node &root, int token_index) {
    NodePath path;
    std::function<bool(const Node &)> rec = [&](const Node &n) {
        path.push_back(&n);
        if (n.is_leaf() && n.token == token_index) {
            return true;
        }
        for (const auto &child : n.children) {
            if (rec(child)) {
                return true;
            }
        }
        path.pop_back();
        return false;
    };
    return rec(root) ? path : NodePath{};
}

std::string to_sexp(const SyntaxTree &tree, const Node &node) {
    std::string out = "(";
    if (!node.field.empty()) {
        out += node.field + ":";
    }
    out += node.kind;
    if (node.is_leaf() && (node.kind == "identifier" || node.kind == "number" || node.kind == "string" ||
                           node.kind == "char")) {
        out += " ";
        out += tree.text_of(node);
    }
    for (const auto &child : node.children) {
        out += " ";
        out += to_sexp(tree, child);
    }
    out += ")";
    return out;
}

std::vector<std::string> code_tokens(std::string_view source, Language language) {
    std::vector<std::string> out;
    LexResult lexed = lex(source, language);
    if (!lexed.error) {
        for (const auto &t : lexed.tokens) {
            if (!t.is_layout()) {
                out.push_back(t.text);
            }
        }
        return out;
    }
    std::string word;
    for (unsigned char c : source) {
        if (std::isalnum(c) || c == '_' || c >= 0x80) {
            word += static_cast<char>(c);
            continue;
        }
        if (!word.empty()) {
            out.push_back(std::move(word));
            word.clear();
        }
        if (!std::isspace(c)) {
            out.emplace_back(1, static_cast<char>(c));
        }
    }
    if (!word.empty()) {
        out.push_back(std::move(word));
    }
    return out;
}

} // namespace codeslice::syntax
