#include <algorithm>

#include "parser_base.hpp"

namespace codeslice::syntax::detail {

namespace {

class PythonParser : public ParserBase {
  public:
    using ParserBase::ParserBase;

    ParseOutput run() {
        std::vector<Node> items;
        try {
            while (!at_end()) {
                if (at_kind(TokenKind::Newline)) {
                    ++pos_;
                    continue;
                }
                statement(items);
            }
        } catch (const ParseFailure &) {
            items.push_back(error_node());
            Node root = make("module", std::move(items));
            root.begin = 0;
            root.end = source_.size();
            return ParseOutput{std::move(root), furthest_issue()};
        }
        Node root = make("module", std::move(items));
        root.begin = 0;
        root.end = source_.size();
        return ParseOutput{std::move(root), std::nullopt};
    }

  private:
    // ------------------------------------------------------------ statements

    void statement(std::vector<Node> &out) {
        if (at_kind(TokenKind::Indent)) {
            fail("unexpected indent");
        }
        if (at_kind(TokenKind::Dedent)) {
            fail("unexpected dedent");
        }
        if (at("if")) {
            out.push_back(if_statement());
        } else if (at("while")) {
            out.push_back(while_statement());
        } else if (at("for")) {
            out.push_back(for_statement());
        } else if (at("try")) {
            out.push_back(try_statement());
        } else if (at("with")) {
            out.push_back(with_statement());
        } else if (at("def")) {
            out.push_back(function_definition());
        } else if (at("class")) {
            out.push_back(class_definition());
        } else if (at("@")) {
            out.push_back(decorated_definition());
        } else if (at("async") && at_any({"def", "for", "with"}, 1)) {
            Node async_kw = leaf();
            Node inner = at("def") ? function_definition() : at("for") ? for_statement() : with_statement();
            inner.children.insert(inner.children.begin(), std::move(async_kw));
            inner.begin = inner.children.front().begin;
            inner.start = inner.children.front().start;
            out.push_back(std::move(inner));
        } else {
            simple_statements(out);
        }
    }

    bool at_simple_end() const { return at_kind(TokenKind::Newline) || at(";") || at_end(); }

    void simple_statements(std::vector<Node> &out) {
        out.push_back(simple_statement());
        while (at(";")) {
            ++pos_;
            if (at_kind(TokenKind::Newline) || at_end()) {
                break;
            }
            out.push_back(simple_statement());
        }
        end_of_line();
    }

    void end_of_line() {
        if (at_end()) {
            return;
        }
        if (!at_kind(TokenKind::Newline)) {
            fail("expected end of statement");
        }
        ++pos_;
    }

    Node simple_statement() {
        if (at("pass")) {
            return make("pass_statement", {leaf()});
        }
        if (at("break")) {
            return make("break_statement", {leaf()});
        }
        if (at("continue")) {
            return make("continue_statement", {leaf()});
        }
        if (at("return")) {
            std::vector<Node> c{leaf()};
            if (!at_simple_end()) {
                c.push_back(with_field(expression_list(true), "value"));
            }
            return make("return_statement", std::move(c));
        }
        if (at("raise")) {
            std::vector<Node> c{leaf()};
            if (!at_simple_end()) {
                c.push_back(test());
                if (at("from")) {
                    c.push_back(leaf());
                    c.push_back(test());
                }
            }
            return make("raise_statement", std::move(c));
        }
        if (at("global") || at("nonlocal")) {
            const std::string kind = at("global") ? "global_statement" : "nonlocal_statement";
            std::vector<Node> c{leaf()};
            c.push_back(expect_identifier());
            while (at(",")) {
                c.push_back(leaf());
                c.push_back(expect_identifier());
            }
            return make(kind, std::move(c));
        }
        if (at("del")) {
            std::vector<Node> c{leaf()};
            Node targets = target_list();
            c.push_back(with_field(std::move(targets), "target"));
            return make("delete_statement", std::move(c));
        }
        if (at("assert")) {
            std::vector<Node> c{leaf()};
            c.push_back(test());
            if (at(",")) {
                c.push_back(leaf());
                c.push_back(test());
            }
            return make("assert_statement", std::move(c));
        }
        if (at("import")) {
            return import_statement();
        }
        if (at("from")) {
            return import_from_statement();
        }
        return expression_statement();
    }

    Node dotted_name() {
        std::vector<Node> c{expect_identifier()};
        while (at(".")) {
            c.push_back(leaf());
            c.push_back(expect_identifier());
        }
        return make("dotted_name", std::move(c));
    }

    Node aliased(Node name) {
        if (!at("as")) {
            return name;
        }
        std::vector<Node> c{std::move(name), leaf()};
        c.push_back(expect_identifier("alias"));
        return make("aliased_import", std::move(c));
    }

    Node import_statement() {
        std::vector<Node> c{leaf()};
        c.push_back(aliased(dotted_name()));
        while (at(",")) {
            c.push_back(leaf());
            c.push_back(aliased(dotted_name()));
        }
        return make("import_statement", std::move(c));
    }

    Node import_from_statement() {
        std::vector<Node> c{leaf()};
        bool relative = false;
        while (at(".") || at("...")) {
            c.push_back(leaf());
            relative = true;
        }
        if (!at("import")) {
            c.push_back(dotted_name());
        } else if (!relative) {
            fail("expected module name");
        }
        c.push_back(expect("import"));
        if (at("*")) {
            c.push_back(leaf());
        } else {
            const bool paren = at("(");
            if (paren) {
                c.push_back(leaf());
            }
            c.push_back(aliased(make("dotted_name", {expect_identifier()})));
            while (at(",")) {
                c.push_back(leaf());
                if (paren && at(")")) {
                    break;
                }
                c.push_back(aliased(make("dotted_name", {expect_identifier()})));
            }
            if (paren) {
                c.push_back(expect(")"));
            }
        }
        return make("import_from_statement", std::move(c));
    }

    static bool is_target(const Node &n) {
        if (n.kind == "identifier" || n.kind == "attribute" || n.kind == "subscript") {
            return true;
        }
        if (n.kind == "list_splat") {
            return n.children.size() == 2 && is_target(n.children[1]);
        }
        if (n.kind == "tuple" || n.kind == "list" || n.kind == "expression_list" || n.kind == "pattern_list" ||
            n.kind == "parenthesized_expression") {
            for (const auto &child : n.children) {
                if (child.is_leaf() && (child.kind == "(" || child.kind == ")" || child.kind == "[" ||
                                        child.kind == "]" || child.kind == ",")) {
                    continue;
                }
                if (!is_target(child)) {
                    return false;
                }
            }
            return true;
        }
        return false;
    }

    void require_target(const Node &n, std::size_t at_pos) {
        if (!is_target(n)) {
            pos_ = at_pos;
            fail("cannot assign to expression");
        }
    }

    Node expression_statement() {
        const std::size_t start = pos_;
        if (at("yield")) {
            return make("expression_statement", {yield_expression()});
        }
        Node first = expression_list(true);
        if (at("=")) {
            require_target(first, start);
            std::vector<Node> c{with_field(std::move(first), "left")};
            while (at("=")) {
                c.push_back(leaf());
                const std::size_t rhs_pos = pos_;
                Node rhs = at("yield") ? yield_expression() : expression_list(true);
                if (at("=")) {
                    require_target(rhs, rhs_pos);
                    c.push_back(with_field(std::move(rhs), "left"));
                } else {
                    c.push_back(with_field(std::move(rhs), "right"));
                }
            }
            return make("assignment", std::move(c));
        }
        if (at_any({"+=", "-=", "*=", "/=", "//=", "%=", "**=", ">>=", "<<=", "&=", "|=", "^=", "@="})) {
            if (first.kind != "identifier" && first.kind != "attribute" && first.kind != "subscript") {
                pos_ = start;
                fail("illegal target for augmented assignment");
            }
            std::vector<Node> c{with_field(std::move(first), "left"), leaf()};
            c.push_back(with_field(at("yield") ? yield_expression() : expression_list(false), "right"));
            return make("augmented_assignment", std::move(c));
        }
        if (at(":")) {
            if (first.kind != "identifier" && first.kind != "attribute" && first.kind != "subscript") {
                pos_ = start;
                fail("illegal target for annotation");
            }
            std::vector<Node> c{with_field(std::move(first), "left"), leaf()};
            c.push_back(with_field(test(), "type"));
            if (at("=")) {
                c.push_back(leaf());
                c.push_back(with_field(at("yield") ? yield_expression() : expression_list(true), "right"));
            }
            return make("assignment", std::move(c));
        }
        return make("expression_statement", {std::move(first)});
    }

    Node block() {
        std::vector<Node> c{expect(":")};
        if (!at_kind(TokenKind::Newline)) {
            std::vector<Node> stmts;
            simple_statements(stmts);
            for (auto &s : stmts) {
                c.push_back(std::move(s));
            }
            return make("block", std::move(c));
        }
        ++pos_;
        skip_layout(TokenKind::Indent, "an indented block");
        while (!at_kind(TokenKind::Dedent) && !at_end()) {
            if (at_kind(TokenKind::Newline)) {
                ++pos_;
                continue;
            }
            statement(c);
        }
        if (at_kind(TokenKind::Dedent)) {
            ++pos_;
        }
        return make("block", std::move(c));
    }

    Node if_statement() {
        std::vector<Node> c{leaf()};
        c.push_back(with_field(named_expression(), "condition"));
        c.push_back(with_field(block(), "consequence"));
        while (at("elif")) {
            std::vector<Node> e{leaf()};
            e.push_back(with_field(named_expression(), "condition"));
            e.push_back(with_field(block(), "consequence"));
            c.push_back(make("elif_clause", std::move(e)));
        }
        if (at("else")) {
            c.push_back(else_clause());
        }
        return make("if_statement", std::move(c));
    }

    Node else_clause() {
        std::vector<Node> e{leaf()};
        e.push_back(with_field(block(), "body"));
        return make("else_clause", std::move(e));
    }

    Node while_statement() {
        std::vector<Node> c{leaf()};
        c.push_back(with_field(named_expression(), "condition"));
        c.push_back(with_field(block(), "body"));
        if (at("else")) {
            c.push_back(else_clause());
        }
        return make("while_statement", std::move(c));
    }

    Node for_statement() {
        std::vector<Node> c{leaf()};
        const std::size_t target_pos = pos_;
        Node target = target_list();
        require_target(target, target_pos);
        c.push_back(with_field(std::move(target), "left"));
        c.push_back(expect("in"));
        c.push_back(with_field(expression_list(true), "right"));
        c.push_back(with_field(block(), "body"));
        if (at("else")) {
            c.push_back(else_clause());
        }
        return make("for_statement", std::move(c));
    }

    Node try_statement() {
        std::vector<Node> c{leaf()};
        c.push_back(with_field(block(), "body"));
        bool handlers = false;
        while (at("except")) {
            handlers = true;
            std::vector<Node> e{leaf()};
            if (at("*")) {
                e.push_back(leaf());
            }
            if (!at(":")) {
                e.push_back(test());
                if (at("as")) {
                    e.push_back(leaf());
                    e.push_back(expect_identifier("alias"));
                } else if (at(",")) {
                    fail("multiple exception types must be parenthesized");
                }
            }
            e.push_back(with_field(block(), "body"));
            c.push_back(make("except_clause", std::move(e)));
        }
        if (handlers && at("else")) {
            c.push_back(else_clause());
        }
        if (at("finally")) {
            std::vector<Node> f{leaf()};
            f.push_back(with_field(block(), "body"));
            c.push_back(make("finally_clause", std::move(f)));
            handlers = true;
        }
        if (!handlers) {
            fail("expected 'except' or 'finally' block");
        }
        return make("try_statement", std::move(c));
    }

    Node with_item() {
        std::vector<Node> c{with_field(test(), "value")};
        if (at("as")) {
            c.push_back(leaf());
            const std::size_t target_pos = pos_;
            Node target = primary_or_star();
            require_target(target, target_pos);
            c.push_back(with_field(std::move(target), "alias"));
        }
        return make("with_item", std::move(c));
    }

    Node with_statement() {
        std::vector<Node> c{leaf()};
        if (at("(")) {
            const std::size_t saved = pos_;
            try {
                std::vector<Node> items{leaf()};
                items.push_back(with_item());
                while (at(",")) {
                    items.push_back(leaf());
                    if (at(")")) {
                        break;
                    }
                    items.push_back(with_item());
                }
                items.push_back(expect(")"));
                if (!at(":")) {
                    fail("expected ':'");
                }
                for (auto &n : items) {
                    c.push_back(std::move(n));
                }
                c.push_back(with_field(block(), "body"));
                return make("with_statement", std::move(c));
            } catch (const ParseFailure &) {
                pos_ = saved;
            }
        }
        c.push_back(with_item());
        while (at(",")) {
            c.push_back(leaf());
            c.push_back(with_item());
        }
        c.push_back(with_field(block(), "body"));
        return make("with_statement", std::move(c));
    }

    Node decorated_definition() {
        std::vector<Node> c;
        while (at("@")) {
            std::vector<Node> d{leaf()};
            d.push_back(named_expression());
            if (!at_kind(TokenKind::Newline)) {
                fail("expected newline after decorator");
            }
            ++pos_;
            c.push_back(make("decorator", std::move(d)));
        }
        if (at("def")) {
            c.push_back(function_definition());
        } else if (at("class")) {
            c.push_back(class_definition());
        } else if (at("async") && at("def", 1)) {
            Node async_kw = leaf();
            Node fn = function_definition();
            fn.children.insert(fn.children.begin(), std::move(async_kw));
            fn.begin = fn.children.front().begin;
            fn.start = fn.children.front().start;
            c.push_back(std::move(fn));
        } else {
            fail("expected function or class definition after decorator");
        }
        return make("decorated_definition", std::move(c));
    }

    Node function_definition() {
        std::vector<Node> c{leaf()};
        c.push_back(expect_identifier("name"));
        c.push_back(with_field(parameters("(", ")", true), "parameters"));
        if (at("->")) {
            c.push_back(leaf());
            c.push_back(with_field(test(), "return_type"));
        }
        c.push_back(with_field(block(), "body"));
        return make("function_definition", std::move(c));
    }

    Node class_definition() {
        std::vector<Node> c{leaf()};
        c.push_back(expect_identifier("name"));
        if (at("(")) {
            c.push_back(with_field(argument_list(), "superclasses"));
        }
        c.push_back(with_field(block(), "body"));
        return make("class_definition", std::move(c));
    }

    // Parameter list for def (typed, parenthesized) or lambda (untyped, ends at ':').
    Node parameters(std::string_view open, std::string_view close, bool typed) {
        std::vector<Node> c;
        if (!open.empty()) {
            c.push_back(expect(open));
        }
        while (!at(close)) {
            std::vector<Node> p;
            std::string kind = "parameter";
            if (at("/")) {
                c.push_back(make("positional_separator", {leaf()}));
            } else if (at("*") || at("**")) {
                const bool dict = at("**");
                p.push_back(leaf());
                kind = dict ? "dictionary_splat_pattern" : "list_splat_pattern";
                if (at_identifier()) {
                    p.push_back(expect_identifier("name"));
                    if (typed && at(":")) {
                        p.push_back(leaf());
                        p.push_back(with_field(test(), "type"));
                    }
                } else if (dict) {
                    fail("expected parameter name");
                }
                c.push_back(make(kind, std::move(p)));
            } else {
                p.push_back(expect_identifier("name"));
                if (typed && at(":")) {
                    p.push_back(leaf());
                    p.push_back(with_field(test(), "type"));
                    kind = "typed_parameter";
                }
                if (at("=")) {
                    p.push_back(leaf());
                    p.push_back(with_field(test(), "value"));
                    kind = kind == "typed_parameter" ? "typed_default_parameter" : "default_parameter";
                }
                c.push_back(make(kind, std::move(p)));
            }
            if (at(",")) {
                c.push_back(leaf());
                continue;
            }
            if (!at(close)) {
                fail(close == ")" ? "expected ',' or ')' in parameter list" : "expected ',' or ':' in parameter list");
            }
        }
        if (!open.empty()) {
            c.push_back(expect(close));
            return make("parameters", std::move(c));
        }
        if (c.empty()) {
            return empty("lambda_parameters");
        }
        return make("lambda_parameters", std::move(c));
    }

    // ------------------------------------------------------------ expressions

    bool at_expression_list_end() const {
        return at_simple_end() || at_any({"=", ")", "]", "}", ":", "in", "+=", "-=", "*=", "/=", "//=", "%=", "**=",
                                           ">>=", "<<=", "&=", "|=", "^=", "@="});
    }

    // Comma-separated expressions; a trailing comma or more than one element
    // makes an expression_list (a tuple without parentheses).
    Node expression_list(bool allow_star) {
        Node first = allow_star && at("*") ? star_expression() : named_expression();
        if (!at(",")) {
            return first;
        }
        std::vector<Node> c{std::move(first)};
        while (at(",")) {
            c.push_back(leaf());
            if (at_expression_list_end()) {
                break;
            }
            c.push_back(allow_star && at("*") ? star_expression() : named_expression());
        }
        return make("expression_list", std::move(c));
    }

    // Loop / del targets: bitwise-or level expressions, no conditionals.
    Node target_list() {
        Node first = primary_or_star();
        if (!at(",")) {
            return first;
        }
        std::vector<Node> c{std::move(first)};
        while (at(",")) {
            c.push_back(leaf());
            if (at("in") || at("=") || at_simple_end()) {
                break;
            }
            c.push_back(primary_or_star());
        }
        return make("pattern_list", std::move(c));
    }

    Node primary_or_star() { return at("*") ? star_expression() : bitwise_or(); }

    Node star_expression() {
        std::vector<Node> c{expect("*")};
        c.push_back(bitwise_or());
        return make("list_splat", std::move(c));
    }

    Node named_expression() {
        Node value = test();
        if (at(":=")) {
            if (value.kind != "identifier") {
                fail("cannot use assignment expression here");
            }
            std::vector<Node> c{with_field(std::move(value), "name"), leaf()};
            c.push_back(with_field(test(), "value"));
            return make("named_expression", std::move(c));
        }
        return value;
    }

    Node test() {
        if (at("lambda")) {
            return lambda();
        }
        Node body = or_test();
        if (at("if")) {
            std::vector<Node> c{std::move(body), leaf()};
            c.push_back(with_field(or_test(), "condition"));
            c.push_back(expect("else"));
            c.push_back(test());
            return make("conditional_expression", std::move(c));
        }
        return body;
    }

    Node test_no_conditional() { return at("lambda") ? lambda() : or_test(); }

    Node lambda() {
        std::vector<Node> c{leaf()};
        c.push_back(with_field(parameters("", ":", false), "parameters"));
        c.push_back(expect(":"));
        c.push_back(with_field(test(), "body"));
        return make("lambda", std::move(c));
    }

    Node or_test() {
        Node left = and_test();
        while (at("or")) {
            std::vector<Node> c{std::move(left), leaf()};
            c.push_back(and_test());
            left = make("boolean_operator", std::move(c));
        }
        return left;
    }

    Node and_test() {
        Node left = not_test();
        while (at("and")) {
            std::vector<Node> c{std::move(left), leaf()};
            c.push_back(not_test());
            left = make("boolean_operator", std::move(c));
        }
        return left;
    }

    Node not_test() {
        if (at("not")) {
            std::vector<Node> c{leaf()};
            c.push_back(not_test());
            return make("not_operator", std::move(c));
        }
        return comparison();
    }

    bool at_comparison_operator() const {
        return at_any({"<", ">", "==", ">=", "<=", "!=", "in", "is"}) || (at("not") && at("in", 1));
    }

    Node comparison() {
        Node left = bitwise_or();
        if (!at_comparison_operator()) {
            return left;
        }
        std::vector<Node> c{std::move(left)};
        while (at_comparison_operator()) {
            if (at("not")) {
                c.push_back(leaf());
                c.push_back(leaf());
            } else if (at("is")) {
                c.push_back(leaf());
                if (at("not")) {
                    c.push_back(leaf());
                }
            } else {
                c.push_back(leaf());
            }
            c.push_back(bitwise_or());
        }
        return make("comparison_operator", std::move(c));
    }

    template <typename Next>
    Node binary_level(std::initializer_list<std::string_view> ops, Next next) {
        Node left = (this->*next)();
        while (at_any(ops)) {
            std::vector<Node> c{with_field(std::move(left), "left"), leaf()};
            c.push_back(with_field((this->*next)(), "right"));
            left = make("binary_operator", std::move(c));
        }
        return left;
    }

    Node bitwise_or() { return binary_level({"|"}, &PythonParser::bitwise_xor); }
    Node bitwise_xor() { return binary_level({"^"}, &PythonParser::bitwise_and); }
    Node bitwise_and() { return binary_level({"&"}, &PythonParser::shift); }
    Node shift() { return binary_level({"<<", ">>"}, &PythonParser::arith); }
    Node arith() { return binary_level({"+", "-"}, &PythonParser::term); }
    Node term() { return binary_level({"*", "/", "//", "%", "@"}, &PythonParser::factor); }

    Node factor() {
        if (at_any({"+", "-", "~"})) {
            std::vector<Node> c{leaf()};
            c.push_back(factor());
            return make("unary_operator", std::move(c));
        }
        return power();
    }

    Node power() {
        Node base = await_primary();
        if (at("**")) {
            std::vector<Node> c{with_field(std::move(base), "left"), leaf()};
            c.push_back(with_field(factor(), "right"));
            return make("binary_operator", std::move(c));
        }
        return base;
    }

    Node await_primary() {
        if (at("await")) {
            std::vector<Node> c{leaf()};
            c.push_back(primary());
            return make("await", std::move(c));
        }
        return primary();
    }

    Node primary() {
        Node value = atom();
        while (true) {
            if (at(".")) {
                std::vector<Node> c{with_field(std::move(value), "object"), leaf()};
                c.push_back(expect_identifier("attribute"));
                value = make("attribute", std::move(c));
            } else if (at("(")) {
                std::vector<Node> c{with_field(std::move(value), "function")};
                c.push_back(with_field(argument_list(), "arguments"));
                value = make("call", std::move(c));
            } else if (at("[")) {
                std::vector<Node> c{with_field(std::move(value), "value"), leaf()};
                c.push_back(subscript_item());
                while (at(",")) {
                    c.push_back(leaf());
                    if (at("]")) {
                        break;
                    }
                    c.push_back(subscript_item());
                }
                c.push_back(expect("]"));
                value = make("subscript", std::move(c));
            } else {
                return value;
            }
        }
    }

    Node subscript_item() {
        if (at("*")) {
            return star_expression();
        }
        std::vector<Node> c;
        if (!at(":")) {
            Node lower = named_expression();
            if (!at(":")) {
                return lower;
            }
            c.push_back(std::move(lower));
        }
        c.push_back(expect(":"));
        if (!at_any({":", ",", "]"})) {
            c.push_back(test());
        }
        if (at(":")) {
            c.push_back(leaf());
            if (!at_any({",", "]"})) {
                c.push_back(test());
            }
        }
        return make("slice", std::move(c));
    }

    Node argument_list() {
        std::vector<Node> c{expect("(")};
        while (!at(")")) {
            if (at("*") || at("**")) {
                const bool dict = at("**");
                std::vector<Node> s{leaf()};
                s.push_back(test());
                c.push_back(make(dict ? "dictionary_splat" : "list_splat", std::move(s)));
            } else {
                Node value = named_expression();
                if (at("=")) {
                    if (value.kind != "identifier") {
                        fail("expression cannot be a keyword argument name");
                    }
                    std::vector<Node> k{with_field(std::move(value), "name"), leaf()};
                    k.push_back(with_field(test(), "value"));
                    c.push_back(make("keyword_argument", std::move(k)));
                } else if (at("for") || (at("async") && at("for", 1))) {
                    std::vector<Node> g{std::move(value)};
                    comprehension_clauses(g);
                    c.push_back(make("generator_expression", std::move(g)));
                } else {
                    c.push_back(std::move(value));
                }
            }
            if (at(",")) {
                c.push_back(leaf());
                continue;
            }
            if (!at(")")) {
                fail("expected ',' or ')' in argument list");
            }
        }
        c.push_back(expect(")"));
        return make("argument_list", std::move(c));
    }

    void comprehension_clauses(std::vector<Node> &c) {
        while (at("for") || (at("async") && at("for", 1)) || at("if")) {
            if (at("if")) {
                std::vector<Node> i{leaf()};
                i.push_back(test_no_conditional());
                c.push_back(make("if_clause", std::move(i)));
                continue;
            }
            std::vector<Node> f;
            if (at("async")) {
                f.push_back(leaf());
            }
            f.push_back(leaf());
            const std::size_t target_pos = pos_;
            Node target = target_list();
            require_target(target, target_pos);
            f.push_back(with_field(std::move(target), "left"));
            f.push_back(expect("in"));
            f.push_back(with_field(or_test(), "right"));
            c.push_back(make("for_in_clause", std::move(f)));
        }
    }

    Node yield_expression() {
        std::vector<Node> c{leaf()};
        if (at("from")) {
            c.push_back(leaf());
            c.push_back(test());
        } else if (!at_simple_end() && !at(")") && !at("=")) {
            c.push_back(expression_list(true));
        }
        return make("yield", std::move(c));
    }

    Node atom() {
        const Token &t = peek();
        switch (t.kind) {
        case TokenKind::Identifier:
        case TokenKind::Number: return leaf();
        case TokenKind::String: {
            Node first = leaf();
            if (!at_kind(TokenKind::String)) {
                return first;
            }
            std::vector<Node> c{std::move(first)};
            while (at_kind(TokenKind::String)) {
                c.push_back(leaf());
            }
            return make("concatenated_string", std::move(c));
        }
        default: break;
        }
        if (at_any({"None", "True", "False", "..."})) {
            return leaf();
        }
        if (at("(")) {
            return parenthesized();
        }
        if (at("[")) {
            return list_display();
        }
        if (at("{")) {
            return dict_or_set();
        }
        fail("expected expression");
    }

    Node parenthesized() {
        std::vector<Node> c{leaf()};
        if (at(")")) {
            c.push_back(leaf());
            return make("tuple", std::move(c));
        }
        if (at("yield")) {
            c.push_back(yield_expression());
            c.push_back(expect(")"));
            return make("parenthesized_expression", std::move(c));
        }
        Node first = at("*") ? star_expression() : named_expression();
        if (at("for") || (at("async") && at("for", 1))) {
            c.push_back(std::move(first));
            comprehension_clauses(c);
            c.push_back(expect(")"));
            return make("generator_expression", std::move(c));
        }
        if (!at(",")) {
            c.push_back(std::move(first));
            c.push_back(expect(")"));
            return make("parenthesized_expression", std::move(c));
        }
        c.push_back(std::move(first));
        while (at(",")) {
            c.push_back(leaf());
            if (at(")")) {
                break;
            }
            c.push_back(at("*") ? star_expression() : named_expression());
        }
        c.push_back(expect(")"));
        return make("tuple", std::move(c));
    }

    Node list_display() {
        std::vector<Node> c{leaf()};
        if (at("]")) {
            c.push_back(leaf());
            return make("list", std::move(c));
        }
        Node first = at("*") ? star_expression() : named_expression();
        if (at("for") || (at("async") && at("for", 1))) {
            c.push_back(std::move(first));
            comprehension_clauses(c);
            c.push_back(expect("]"));
            return make("list_comprehension", std::move(c));
        }
        c.push_back(std::move(first));
        while (at(",")) {
            c.push_back(leaf());
            if (at("]")) {
                break;
            }
            c.push_back(at("*") ? star_expression() : named_expression());
        }
        c.push_back(expect("]"));
        return make("list", std::move(c));
    }

    Node dict_item(bool &is_dict, bool first) {
        if (at("**")) {
            if (!first && !is_dict) {
                fail("invalid set element");
            }
            is_dict = true;
            std::vector<Node> c{leaf()};
            c.push_back(bitwise_or());
            return make("dictionary_splat", std::move(c));
        }
        if (at("*")) {
            if (!first && is_dict) {
                fail("invalid dictionary entry");
            }
            return star_expression();
        }
        Node key = named_expression();
        if (at(":")) {
            if (!first && !is_dict) {
                fail("invalid set element");
            }
            is_dict = true;
            std::vector<Node> c{with_field(std::move(key), "key"), leaf()};
            c.push_back(with_field(test(), "value"));
            return make("pair", std::move(c));
        }
        if (!first && is_dict) {
            fail("expected ':'");
        }
        return key;
    }

    Node dict_or_set() {
        std::vector<Node> c{leaf()};
        if (at("}")) {
            c.push_back(leaf());
            return make("dictionary", std::move(c));
        }
        bool is_dict = false;
        c.push_back(dict_item(is_dict, true));
        if (at("for") || (at("async") && at("for", 1))) {
            comprehension_clauses(c);
            c.push_back(expect("}"));
            return make(is_dict ? "dictionary_comprehension" : "set_comprehension", std::move(c));
        }
        while (at(",")) {
            c.push_back(leaf());
            if (at("}")) {
                break;
            }
            c.push_back(dict_item(is_dict, false));
        }
        c.push_back(expect("}"));
        return make(is_dict ? "dictionary" : "set", std::move(c));
    }
};

} // namespace

ParseOutput parse_python(std::string_view source, const std::vector<Token> &tokens) {
    PythonParser parser(source, tokens);
    return parser.run();
}

} // namespace codeslice::syntax::detail
