#include <algorithm>
#include <unordered_set>

#include "parser_base.hpp"

namespace codeslice::syntax::detail {

namespace {

// Shared recursive-descent parser for Java and C#. The grammar covers what
// code-model corpora contain (type and member declarations, statements,
// generics, lambdas, casts, switch expressions); ambiguous constructs are
// resolved by bounded backtracking.
class CFamilyParser : public ParserBase {
  public:
    CFamilyParser(std::string_view source, const std::vector<Token> &tokens, Language language)
        : ParserBase(source, tokens), csharp_(language == Language::CSharp) {}

    ParseOutput run() {
        std::vector<Node> items;
        try {
            while (!at_end()) {
                top_level_item(items);
            }
        } catch (const ParseFailure &) {
            items.push_back(error_node());
            Node root = make("compilation_unit", std::move(items));
            root.begin = 0;
            root.end = source_.size();
            return ParseOutput{std::move(root), furthest_issue()};
        }
        Node root = make("compilation_unit", std::move(items));
        root.begin = 0;
        root.end = source_.size();
        return ParseOutput{std::move(root), std::nullopt};
    }

  private:
    bool csharp_;

    template <typename F>
    bool attempt(F &&f) {
        const std::size_t saved = pos_;
        try {
            f();
            return true;
        } catch (const ParseFailure &) {
            pos_ = saved;
            return false;
        }
    }

    // ------------------------------------------------------------ vocabulary

    bool is_primitive(std::string_view w) const {
        static const std::unordered_set<std::string_view> java = {"boolean", "byte", "char",   "short", "int",
                                                                  "long",    "float", "double", "void"};
        static const std::unordered_set<std::string_view> cs = {
            "bool", "byte",   "sbyte", "char",   "short",  "ushort", "int",  "uint",
            "long", "ulong",  "float", "double", "decimal", "string", "object", "void"};
        return csharp_ ? cs.contains(w) : java.contains(w);
    }

    bool at_primitive(std::size_t ahead = 0) const {
        return peek(ahead).kind == TokenKind::Keyword && is_primitive(peek(ahead).text);
    }

    bool at_modifier(std::size_t ahead = 0) const {
        static const std::unordered_set<std::string_view> java = {
            "public", "protected", "private",   "static",   "final",    "abstract", "native",
            "synchronized", "transient", "volatile", "strictfp", "default", "sealed", "non"};
        static const std::unordered_set<std::string_view> cs = {
            "public", "private", "protected", "internal", "static", "readonly", "const",    "sealed",
            "abstract", "virtual", "override", "extern",  "unsafe", "volatile", "new",     "partial",
            "async",  "required", "fixed"};
        const Token &t = peek(ahead);
        if (t.kind == TokenKind::Keyword) {
            if (csharp_ && t.text == "new") {
                // `new` is a modifier only when a declaration follows, not `new Foo()`.
                return peek(ahead + 1).kind == TokenKind::Keyword || at_modifier(ahead + 1) ||
                       (peek(ahead + 1).kind == TokenKind::Identifier &&
                        peek(ahead + 2).kind == TokenKind::Identifier);
            }
            if (!csharp_ && t.text == "default") {
                return at_identifier(ahead + 1) || at_primitive(ahead + 1) || at("<", ahead + 1);
            }
            return (csharp_ ? cs : java).contains(t.text);
        }
        if (t.kind == TokenKind::Identifier) {
            // contextual modifiers must be followed by more declaration
            const bool follow = peek(ahead + 1).kind == TokenKind::Keyword || peek(ahead + 1).kind == TokenKind::Identifier;
            if (csharp_ && (t.text == "partial" || t.text == "async" || t.text == "required" || t.text == "file")) {
                return follow && !at("=", ahead + 1) && !at("(", ahead + 1);
            }
            if (!csharp_ && t.text == "sealed") {
                return follow;
            }
            if (!csharp_ && t.text == "non" && at("-", ahead + 1) && peek(ahead + 2).text == "sealed") {
                return true;
            }
        }
        return false;
    }

    bool at_type_declaration_keyword(std::size_t ahead = 0) const {
        if (at_any({"class", "interface", "enum"}, ahead)) {
            return true;
        }
        if (csharp_ && at("struct", ahead)) {
            return true;
        }
        if (at("record", ahead) && (at_identifier(ahead + 1) || at_any({"class", "struct"}, ahead + 1))) {
            return true;
        }
        if (!csharp_ && at("@", ahead) && at("interface", ahead + 1)) {
            return true;
        }
        return false;
    }

    // ------------------------------------------------------------ top level

    void top_level_item(std::vector<Node> &out) {
        if (at(";")) {
            out.push_back(make("empty_declaration", {leaf()}));
            return;
        }
        if (!csharp_ && at("package")) {
            std::vector<Node> c{leaf()};
            c.push_back(qualified_name());
            c.push_back(expect(";"));
            out.push_back(make("package_declaration", std::move(c)));
            return;
        }
        if (!csharp_ && at("import")) {
            std::vector<Node> c{leaf()};
            if (at("static")) {
                c.push_back(leaf());
            }
            c.push_back(expect_identifier());
            while (at(".")) {
                c.push_back(leaf());
                if (at("*")) {
                    c.push_back(leaf());
                    break;
                }
                c.push_back(expect_identifier());
            }
            c.push_back(expect(";"));
            out.push_back(make("import_declaration", std::move(c)));
            return;
        }
        if (csharp_ && at("using") && !at("(", 1) && !at("var", 1)) {
            Node directive;
            if (attempt([&] { directive = using_directive(); })) {
                out.push_back(std::move(directive));
                return;
            }
        }
        if (csharp_ && at("namespace")) {
            out.push_back(namespace_declaration());
            return;
        }
        if (csharp_ && at("extern") && at("alias", 1)) {
            std::vector<Node> c{leaf(), leaf()};
            c.push_back(expect_identifier());
            c.push_back(expect(";"));
            out.push_back(make("extern_alias_directive", std::move(c)));
            return;
        }
        if (looks_like_type_declaration()) {
            out.push_back(member_declaration());
            return;
        }
        Node item;
        if (attempt([&] { item = statement(); })) {
            out.push_back(std::move(item));
            return;
        }
        out.push_back(member_declaration());
    }

    bool looks_like_type_declaration() const {
        std::size_t i = 0;
        // skip annotations/attributes conservatively: only plain modifiers
        while (at_modifier(i)) {
            ++i;
            if (!csharp_ && peek(i - 1).text == "non") {
                i += 2;
            }
        }
        return at_type_declaration_keyword(i) || (i > 0) || at("@", 0) || (csharp_ && at("[", 0));
    }

    Node using_directive() {
        std::vector<Node> c;
        if (at("global")) {
            c.push_back(leaf());
        }
        c.push_back(expect("using"));
        if (at("static")) {
            c.push_back(leaf());
        }
        if (at_identifier() && at("=", 1)) {
            c.push_back(leaf("alias"));
            c.push_back(leaf());
            c.push_back(type());
        } else {
            c.push_back(qualified_name());
        }
        c.push_back(expect(";"));
        return make("using_directive", std::move(c));
    }

    Node namespace_declaration() {
        std::vector<Node> c{leaf()};
        c.push_back(qualified_name());
        if (at(";")) {
            c.push_back(leaf()); // file-scoped
            return make("namespace_declaration", std::move(c));
        }
        c.push_back(expect("{"));
        while (!at("}")) {
            if (at_end()) {
                fail("expected '}'");
            }
            top_level_item(c);
        }
        c.push_back(leaf());
        return make("namespace_declaration", std::move(c));
    }

    Node qualified_name() {
        std::vector<Node> c{expect_identifier()};
        while (at(".") || at("::")) {
            c.push_back(leaf());
            c.push_back(expect_identifier());
        }
        return make("qualified_name", std::move(c));
    }

    // ------------------------------------------------------------ annotations / modifiers

    Node annotation() {
        std::vector<Node> c{expect("@")};
        c.push_back(qualified_name());
        if (at("(")) {
            std::vector<Node> a{leaf()};
            while (!at(")")) {
                a.push_back(at("{") ? array_initializer() : expression());
                if (at(",")) {
                    a.push_back(leaf());
                    continue;
                }
                if (!at(")")) {
                    fail("expected ',' or ')' in annotation");
                }
            }
            a.push_back(leaf());
            c.push_back(make("annotation_argument_list", std::move(a)));
        }
        return make("annotation", std::move(c));
    }

    Node attribute_list() {
        std::vector<Node> c{expect("[")};
        if (at_identifier() && at(":", 1)) {
            c.push_back(leaf());
            c.push_back(leaf());
        }
        while (true) {
            std::vector<Node> a{qualified_name()};
            if (at("(")) {
                a.push_back(argument_list());
            }
            c.push_back(make("attribute", std::move(a)));
            if (!at(",")) {
                break;
            }
            c.push_back(leaf());
        }
        c.push_back(expect("]"));
        return make("attribute_list", std::move(c));
    }

    // Annotations, attributes and modifiers preceding a declaration.
    std::vector<Node> modifiers() {
        std::vector<Node> c;
        while (true) {
            if (!csharp_ && at("@") && !at("interface", 1)) {
                c.push_back(annotation());
            } else if (csharp_ && at("[")) {
                c.push_back(attribute_list());
            } else if (at_modifier()) {
                if (!csharp_ && at("non")) {
                    c.push_back(leaf());
                    c.push_back(leaf());
                }
                c.push_back(leaf());
            } else {
                return c;
            }
        }
    }

    // ------------------------------------------------------------ types

    Node type_arguments() {
        std::vector<Node> c{expect("<")};
        while (!at(">")) {
            if (at(",")) {
                c.push_back(leaf()); // C# unbound generic: Dictionary<,>
                continue;
            }
            if (!csharp_ && at("?")) {
                std::vector<Node> w{leaf()};
                if (at("extends") || at("super")) {
                    w.push_back(leaf());
                    w.push_back(type());
                }
                c.push_back(make("wildcard", std::move(w)));
            } else {
                if (!csharp_) {
                    while (at("@")) {
                        c.push_back(annotation());
                    }
                }
                c.push_back(type());
            }
            if (at(",")) {
                c.push_back(leaf());
                continue;
            }
            if (!at(">")) {
                fail("expected '>'");
            }
        }
        c.push_back(leaf());
        return make("type_arguments", std::move(c));
    }

    Node type_parameters() {
        std::vector<Node> c{expect("<")};
        while (true) {
            std::vector<Node> p;
            while (!csharp_ && at("@")) {
                p.push_back(annotation());
            }
            while (csharp_ && at("[")) {
                p.push_back(attribute_list());
            }
            if (csharp_ && at_any({"in", "out"})) {
                p.push_back(leaf());
            }
            p.push_back(expect_identifier("name"));
            if (!csharp_ && at("extends")) {
                p.push_back(leaf());
                p.push_back(type());
                while (at("&")) {
                    p.push_back(leaf());
                    p.push_back(type());
                }
            }
            c.push_back(make("type_parameter", std::move(p)));
            if (!at(",")) {
                break;
            }
            c.push_back(leaf());
        }
        c.push_back(expect(">"));
        return make("type_parameters", std::move(c));
    }

    Node type_core() {
        if (at_primitive()) {
            return make("primitive_type", {leaf()});
        }
        if (csharp_ && at("(")) {
            std::vector<Node> c{leaf()};
            std::size_t elements = 0;
            while (true) {
                std::vector<Node> e{type()};
                if (at_identifier()) {
                    e.push_back(leaf("name"));
                }
                c.push_back(make("tuple_element", std::move(e)));
                ++elements;
                if (!at(",")) {
                    break;
                }
                c.push_back(leaf());
            }
            if (elements < 2) {
                fail("tuple type needs at least two elements");
            }
            c.push_back(expect(")"));
            return make("tuple_type", std::move(c));
        }
        if (!at_identifier()) {
            fail("expected type");
        }
        std::vector<Node> c{leaf()};
        if (csharp_ && at("::")) {
            c.push_back(leaf());
            c.push_back(expect_identifier());
        }
        if (at("<")) {
            c.push_back(type_arguments());
        }
        while (at(".") && (at_identifier(1) || (!csharp_ && at("@", 1)))) {
            c.push_back(leaf());
            while (!csharp_ && at("@")) {
                c.push_back(annotation());
            }
            c.push_back(expect_identifier());
            if (at("<")) {
                c.push_back(type_arguments());
            }
        }
        return make(c.size() == 1 ? "type_identifier" : "generic_type", std::move(c));
    }

    bool at_nullable_marker() const {
        return csharp_ && at("?") &&
               (at_identifier(1) || at_any({"[", ")", ",", ">", "?", "]", ";", "="}, 1) ||
                peek(1).kind == TokenKind::EndOfFile);
    }

    Node type() {
        Node t = type_core();
        std::vector<Node> c{std::move(t)};
        while (true) {
            if (at_nullable_marker()) {
                c.push_back(leaf());
            } else if (at("[") && (at("]", 1) || (csharp_ && at(",", 1)))) {
                c.push_back(leaf());
                while (at(",")) {
                    c.push_back(leaf());
                }
                c.push_back(expect("]"));
            } else if (csharp_ && at("*") && (at_identifier(1) || at_any({")", ">", ","}, 1))) {
                c.push_back(leaf()); // pointer
            } else {
                break;
            }
        }
        if (c.size() == 1) {
            return with_field(std::move(c.front()), "type");
        }
        return make("array_or_nullable_type", std::move(c), "type");
    }

    // ------------------------------------------------------------ declarations

    Node member_declaration() {
        std::vector<Node> c = modifiers();
        if (at_type_declaration_keyword()) {
            return type_declaration(std::move(c));
        }
        if (csharp_ && at("delegate")) {
            c.push_back(leaf());
            c.push_back(type());
            c.push_back(expect_identifier("name"));
            if (at("<")) {
                c.push_back(type_parameters());
            }
            c.push_back(formal_parameters());
            while (at("where")) {
                c.push_back(where_clause());
            }
            c.push_back(expect(";"));
            return make("delegate_declaration", std::move(c));
        }
        if (csharp_ && at("event")) {
            c.push_back(leaf());
            c.push_back(type());
            c.push_back(expect_identifier("name"));
            if (at("{")) {
                c.push_back(accessor_list());
                return make("event_declaration", std::move(c));
            }
            c.push_back(expect(";"));
            return make("event_field_declaration", std::move(c));
        }
        if (at("{")) {
            c.push_back(block());
            return make("initializer_block", std::move(c));
        }
        if (csharp_ && at("~")) {
            c.push_back(leaf());
            c.push_back(expect_identifier("name"));
            c.push_back(formal_parameters());
            c.push_back(method_body());
            return make("destructor_declaration", std::move(c));
        }
        if (csharp_ && at_any({"implicit", "explicit"})) {
            c.push_back(leaf());
            c.push_back(expect("operator"));
            c.push_back(type());
            c.push_back(formal_parameters());
            c.push_back(method_body());
            return make("conversion_operator_declaration", std::move(c));
        }
        if (at("<")) {
            c.push_back(type_parameters()); // Java generic method
        }
        if (at_identifier() && at("(", 1)) {
            c.push_back(leaf("name"));
            c.push_back(formal_parameters());
            if (csharp_ && at(":")) {
                std::vector<Node> init{leaf()};
                if (!at_any({"base", "this"})) {
                    fail("expected 'base' or 'this'");
                }
                init.push_back(leaf());
                init.push_back(argument_list());
                c.push_back(make("constructor_initializer", std::move(init)));
            }
            if (!csharp_ && at("throws")) {
                c.push_back(throws_clause());
            }
            c.push_back(method_body());
            return make("constructor_declaration", std::move(c));
        }
        if (!csharp_ && at_identifier() && at("{", 1)) {
            // compact record constructor
            c.push_back(leaf("name"));
            c.push_back(block());
            return make("compact_constructor_declaration", std::move(c));
        }
        c.push_back(type());
        if (csharp_ && at("operator")) {
            c.push_back(leaf());
            if (peek().kind != TokenKind::Operator && !at_any({"true", "false"})) {
                fail("expected overloadable operator");
            }
            c.push_back(leaf());
            // '>>' arrives as two tokens
            while (at(">") && peek(0).begin == c.back().end) {
                c.push_back(leaf());
            }
            c.push_back(formal_parameters());
            c.push_back(method_body());
            return make("operator_declaration", std::move(c));
        }
        if (csharp_ && at("this") && at("[", 1)) {
            c.push_back(leaf());
            c.push_back(bracketed_parameters());
            c.push_back(property_body());
            return make("indexer_declaration", std::move(c));
        }
        // explicit interface implementation: IFoo.Bar
        std::vector<Node> name_parts{expect_identifier("name")};
        while (csharp_ && at(".") && at_identifier(1)) {
            name_parts.push_back(leaf());
            name_parts.push_back(leaf("name"));
        }
        if (csharp_ && at(".") && at("this", 1)) {
            name_parts.push_back(leaf());
            name_parts.push_back(leaf());
            for (auto &n : name_parts) {
                c.push_back(std::move(n));
            }
            c.push_back(bracketed_parameters());
            c.push_back(property_body());
            return make("indexer_declaration", std::move(c));
        }
        for (auto &n : name_parts) {
            c.push_back(std::move(n));
        }
        if (at("<") && csharp_) {
            c.push_back(type_parameters());
        }
        if (at("(")) {
            c.push_back(formal_parameters());
            while (!csharp_ && at("[") && at("]", 1)) {
                c.push_back(leaf());
                c.push_back(leaf());
            }
            if (!csharp_ && at("throws")) {
                c.push_back(throws_clause());
            }
            while (csharp_ && at("where")) {
                c.push_back(where_clause());
            }
            if (!csharp_ && at("default")) {
                c.push_back(leaf()); // annotation element default
                c.push_back(at("{") ? array_initializer() : expression());
                c.push_back(expect(";"));
                return make("method_declaration", std::move(c));
            }
            c.push_back(method_body());
            return make("method_declaration", std::move(c));
        }
        if (csharp_ && (at("{") || at("=>"))) {
            c.push_back(property_body());
            return make("property_declaration", std::move(c));
        }
        // field: first declarator name already consumed
        Node first_name = std::move(c.back());
        c.pop_back();
        c.push_back(variable_declarator_rest(std::move(first_name)));
        while (at(",")) {
            c.push_back(leaf());
            c.push_back(variable_declarator());
        }
        c.push_back(expect(";"));
        return make("field_declaration", std::move(c));
    }

    Node throws_clause() {
        std::vector<Node> c{leaf()};
        c.push_back(type());
        while (at(",")) {
            c.push_back(leaf());
            c.push_back(type());
        }
        return make("throws", std::move(c));
    }

    Node where_clause() {
        std::vector<Node> c{leaf()};
        c.push_back(expect_identifier());
        c.push_back(expect(":"));
        while (true) {
            if (at_any({"class", "struct"})) {
                c.push_back(leaf());
                if (at("?")) {
                    c.push_back(leaf());
                }
            } else if (at("new")) {
                c.push_back(leaf());
                c.push_back(expect("("));
                c.push_back(expect(")"));
            } else {
                c.push_back(type());
            }
            if (!at(",")) {
                break;
            }
            c.push_back(leaf());
        }
        return make("type_parameter_constraints_clause", std::move(c));
    }

    Node method_body() {
        if (at(";")) {
            return leaf();
        }
        if (csharp_ && at("=>")) {
            std::vector<Node> c{leaf()};
            c.push_back(expression());
            c.push_back(expect(";"));
            return make("arrow_expression_clause", std::move(c), "body");
        }
        return with_field(block(), "body");
    }

    Node accessor_list() {
        std::vector<Node> c{expect("{")};
        while (!at("}")) {
            std::vector<Node> a = modifiers();
            if (!at_identifier() || !(peek().text == "get" || peek().text == "set" || peek().text == "init" ||
                                      peek().text == "add" || peek().text == "remove")) {
                fail("expected accessor");
            }
            a.push_back(leaf());
            a.push_back(method_body());
            c.push_back(make("accessor_declaration", std::move(a)));
        }
        c.push_back(leaf());
        return make("accessor_list", std::move(c));
    }

    Node property_body() {
        if (at("=>")) {
            std::vector<Node> c{leaf()};
            c.push_back(expression());
            c.push_back(expect(";"));
            return make("arrow_expression_clause", std::move(c));
        }
        std::vector<Node> c{accessor_list()};
        if (at("=")) {
            c.push_back(leaf());
            c.push_back(variable_initializer());
            c.push_back(expect(";"));
        }
        return make("property_body", std::move(c));
    }

    Node bracketed_parameters() {
        std::vector<Node> c{expect("[")};
        while (!at("]")) {
            c.push_back(formal_parameter());
            if (at(",")) {
                c.push_back(leaf());
                continue;
            }
            if (!at("]")) {
                fail("expected ',' or ']'");
            }
        }
        c.push_back(leaf());
        return make("bracketed_parameter_list", std::move(c));
    }

    Node formal_parameters() {
        std::vector<Node> c{expect("(")};
        while (!at(")")) {
            c.push_back(formal_parameter());
            if (at(",")) {
                c.push_back(leaf());
                continue;
            }
            if (!at(")")) {
                fail("expected ',' or ')' in parameter list");
            }
        }
        c.push_back(leaf());
        return make("formal_parameters", std::move(c), "parameters");
    }

    Node formal_parameter() {
        std::vector<Node> c;
        while (true) {
            if (!csharp_ && at("@")) {
                c.push_back(annotation());
            } else if (csharp_ && at("[")) {
                c.push_back(attribute_list());
            } else if (!csharp_ && at("final")) {
                c.push_back(leaf());
            } else if (csharp_ && (at_any({"ref", "out", "in", "params", "this", "readonly"}) ||
                                   (at("scoped") && (at_identifier(1) || at_primitive(1))))) {
                c.push_back(leaf());
            } else {
                break;
            }
        }
        c.push_back(type());
        if (!csharp_ && at("...")) {
            c.push_back(leaf());
        }
        if (!csharp_ && at("this")) {
            c.push_back(leaf("name")); // receiver parameter
            return make("receiver_parameter", std::move(c));
        }
        c.push_back(expect_identifier("name"));
        while (!csharp_ && at("[") && at("]", 1)) {
            c.push_back(leaf());
            c.push_back(leaf());
        }
        if (csharp_ && at("=")) {
            c.push_back(leaf());
            c.push_back(with_field(expression(), "value"));
        }
        return make("formal_parameter", std::move(c));
    }

    Node type_declaration(std::vector<Node> c) {
        if (!csharp_ && at("@")) {
            c.push_back(leaf());
            c.push_back(leaf());
            c.push_back(expect_identifier("name"));
            c.push_back(class_body());
            return make("annotation_type_declaration", std::move(c));
        }
        if (at("enum")) {
            return enum_declaration(std::move(c));
        }
        const std::string keyword = peek().text;
        c.push_back(leaf());
        if (keyword == "record" && at_any({"class", "struct"})) {
            c.push_back(leaf());
        }
        c.push_back(expect_identifier("name"));
        if (at("<")) {
            c.push_back(type_parameters());
        }
        if (keyword == "record" && at("(")) {
            c.push_back(formal_parameters());
        }
        if (csharp_ && at(":")) {
            std::vector<Node> bases{leaf()};
            bases.push_back(type());
            if (at("(")) {
                bases.push_back(argument_list()); // record primary constructor base call
            }
            while (at(",")) {
                bases.push_back(leaf());
                bases.push_back(type());
            }
            c.push_back(make("base_list", std::move(bases)));
        }
        while (!csharp_ && at_any({"extends", "implements", "permits"})) {
            std::vector<Node> s{leaf()};
            s.push_back(type());
            while (at(",")) {
                s.push_back(leaf());
                s.push_back(type());
            }
            c.push_back(make("super_types", std::move(s)));
        }
        while (csharp_ && at("where")) {
            c.push_back(where_clause());
        }
        if (keyword == "record" && at(";")) {
            c.push_back(leaf());
        } else {
            c.push_back(class_body());
        }
        const std::string kind = keyword == "class"       ? "class_declaration"
                                 : keyword == "interface" ? "interface_declaration"
                                 : keyword == "struct"    ? "struct_declaration"
                                                          : "record_declaration";
        return make(kind, std::move(c));
    }

    Node enum_declaration(std::vector<Node> c) {
        c.push_back(leaf());
        c.push_back(expect_identifier("name"));
        if (csharp_ && at(":")) {
            c.push_back(leaf());
            c.push_back(type());
        }
        while (!csharp_ && at("implements")) {
            c.push_back(leaf());
            c.push_back(type());
            while (at(",")) {
                c.push_back(leaf());
                c.push_back(type());
            }
        }
        std::vector<Node> body{expect("{")};
        while (!at("}") && !at(";")) {
            std::vector<Node> k = modifiers();
            k.push_back(expect_identifier("name"));
            if (csharp_ && at("=")) {
                k.push_back(leaf());
                k.push_back(expression());
            }
            if (!csharp_ && at("(")) {
                k.push_back(argument_list());
            }
            if (!csharp_ && at("{")) {
                k.push_back(class_body());
            }
            body.push_back(make("enum_constant", std::move(k)));
            if (at(",")) {
                body.push_back(leaf());
                continue;
            }
            if (!at("}") && !at(";")) {
                fail("expected ',' or '}' in enum body");
            }
        }
        if (at(";")) {
            body.push_back(leaf());
            while (!at("}")) {
                if (at_end()) {
                    fail("expected '}'");
                }
                body.push_back(class_member());
            }
        }
        body.push_back(expect("}"));
        c.push_back(make("enum_body", std::move(body)));
        return make("enum_declaration", std::move(c));
    }

    Node class_body() {
        std::vector<Node> c{expect("{")};
        while (!at("}")) {
            if (at_end()) {
                fail("expected '}'");
            }
            c.push_back(class_member());
        }
        c.push_back(leaf());
        return make("class_body", std::move(c), "body");
    }

    Node class_member() {
        if (at(";")) {
            return leaf();
        }
        return member_declaration();
    }

    Node variable_declarator() { return variable_declarator_rest(expect_identifier("name")); }

    Node variable_declarator_rest(Node name) {
        std::vector<Node> c{with_field(std::move(name), "name")};
        while (!csharp_ && at("[") && at("]", 1)) {
            c.push_back(leaf());
            c.push_back(leaf());
        }
        if (at("=")) {
            c.push_back(leaf());
            c.push_back(with_field(variable_initializer(), "value"));
        }
        return make("variable_declarator", std::move(c));
    }

    Node variable_initializer() { return at("{") ? array_initializer() : expression(); }

    Node array_initializer() {
        std::vector<Node> c{expect("{")};
        while (!at("}")) {
            c.push_back(variable_initializer());
            if (at(",")) {
                c.push_back(leaf());
                continue;
            }
            if (!at("}")) {
                fail("expected ',' or '}' in initializer");
            }
        }
        c.push_back(leaf());
        return make("array_initializer", std::move(c));
    }

    // ------------------------------------------------------------ statements

    Node block() {
        std::vector<Node> c{expect("{")};
        while (!at("}")) {
            if (at_end()) {
                fail("expected '}'");
            }
            c.push_back(statement());
        }
        c.push_back(leaf());
        return make("block", std::move(c));
    }

    Node statement() {
        if (at("{")) {
            return block();
        }
        if (at(";")) {
            return make("empty_statement", {leaf()});
        }
        if (at("if")) {
            std::vector<Node> c{leaf()};
            c.push_back(expect("("));
            c.push_back(with_field(expression(), "condition"));
            c.push_back(expect(")"));
            c.push_back(with_field(statement(), "consequence"));
            if (at("else")) {
                c.push_back(leaf());
                c.push_back(with_field(statement(), "alternative"));
            }
            return make("if_statement", std::move(c));
        }
        if (at("while")) {
            std::vector<Node> c{leaf()};
            c.push_back(expect("("));
            c.push_back(with_field(expression(), "condition"));
            c.push_back(expect(")"));
            c.push_back(with_field(statement(), "body"));
            return make("while_statement", std::move(c));
        }
        if (at("do")) {
            std::vector<Node> c{leaf()};
            c.push_back(with_field(statement(), "body"));
            c.push_back(expect("while"));
            c.push_back(expect("("));
            c.push_back(with_field(expression(), "condition"));
            c.push_back(expect(")"));
            c.push_back(expect(";"));
            return make("do_statement", std::move(c));
        }
        if (at("for")) {
            return for_statement();
        }
        if (csharp_ && (at("foreach") || (at("await") && at("foreach", 1)))) {
            return foreach_statement();
        }
        if (at("switch")) {
            std::vector<Node> c{leaf()};
            c.push_back(expect("("));
            c.push_back(with_field(expression(), "condition"));
            c.push_back(expect(")"));
            c.push_back(switch_block());
            return make("switch_statement", std::move(c));
        }
        if (at("return")) {
            std::vector<Node> c{leaf()};
            if (!at(";")) {
                c.push_back(with_field(expression(), "value"));
            }
            c.push_back(expect(";"));
            return make("return_statement", std::move(c));
        }
        if (at("break") || at("continue")) {
            const std::string kind = at("break") ? "break_statement" : "continue_statement";
            std::vector<Node> c{leaf()};
            if (!csharp_ && at_identifier()) {
                c.push_back(leaf());
            }
            c.push_back(expect(";"));
            return make(kind, std::move(c));
        }
        if (at("throw")) {
            std::vector<Node> c{leaf()};
            if (!(csharp_ && at(";"))) {
                c.push_back(expression());
            }
            c.push_back(expect(";"));
            return make("throw_statement", std::move(c));
        }
        if (at("try")) {
            return try_statement();
        }
        if (csharp_ && at("goto")) {
            std::vector<Node> c{leaf()};
            if (at("case")) {
                c.push_back(leaf());
                c.push_back(expression());
            } else if (at("default")) {
                c.push_back(leaf());
            } else {
                c.push_back(expect_identifier());
            }
            c.push_back(expect(";"));
            return make("goto_statement", std::move(c));
        }
        if ((!csharp_ && at("synchronized")) || (csharp_ && at("lock"))) {
            std::vector<Node> c{leaf()};
            c.push_back(expect("("));
            c.push_back(expression());
            c.push_back(expect(")"));
            c.push_back(csharp_ ? statement() : block());
            return make(csharp_ ? "lock_statement" : "synchronized_statement", std::move(c));
        }
        if (csharp_ && (at("using") || (at("await") && at("using", 1)))) {
            return using_statement();
        }
        if (csharp_ && at_any({"checked", "unchecked", "unsafe"}) && at("{", 1)) {
            std::vector<Node> c{leaf()};
            c.push_back(block());
            return make("checked_statement", std::move(c));
        }
        if (csharp_ && at("fixed")) {
            std::vector<Node> c{leaf()};
            c.push_back(expect("("));
            c.push_back(local_variable_declaration());
            c.push_back(expect(")"));
            c.push_back(statement());
            return make("fixed_statement", std::move(c));
        }
        if (!csharp_ && at("assert")) {
            std::vector<Node> c{leaf()};
            c.push_back(expression());
            if (at(":")) {
                c.push_back(leaf());
                c.push_back(expression());
            }
            c.push_back(expect(";"));
            return make("assert_statement", std::move(c));
        }
        if (at("yield")) {
            if (csharp_ && at_any({"return", "break"}, 1)) {
                std::vector<Node> c{leaf(), leaf()};
                if (c.back().kind == "return") {
                    c.push_back(expression());
                }
                c.push_back(expect(";"));
                return make("yield_statement", std::move(c));
            }
            if (!csharp_ && !at_any({"=", "(", ".", "[", "++", "--", "+=", "-="}, 1)) {
                std::vector<Node> c{leaf()};
                c.push_back(expression());
                c.push_back(expect(";"));
                return make("yield_statement", std::move(c));
            }
        }
        if (at_identifier() && at(":", 1)) {
            std::vector<Node> c{leaf(), leaf()};
            c.push_back(statement());
            return make("labeled_statement", std::move(c));
        }
        if (looks_like_type_declaration_at_statement()) {
            return member_declaration();
        }
        Node decl;
        if (attempt([&] { decl = local_declaration_statement(); })) {
            return decl;
        }
        std::vector<Node> c{expression()};
        c.push_back(expect(";"));
        return make("expression_statement", std::move(c));
    }

    bool looks_like_type_declaration_at_statement() const {
        std::size_t i = 0;
        while (at_any({"final", "abstract", "static"}, i)) {
            ++i;
        }
        return at_type_declaration_keyword(i) && !at("record", i) ? true : (at("record", i) && at_identifier(i + 1) && at_any({"(", "<"}, i + 2));
    }

    bool at_local_modifier() const {
        if (!csharp_) {
            return at("final") || at("@");
        }
        return at_any({"const", "ref", "readonly", "static", "unsafe", "async"}) ||
               (at("scoped") && (at_identifier(1) || at_primitive(1)));
    }

    // `[modifiers] Type name ...;` or a C# local function.
    Node local_declaration_statement() {
        std::vector<Node> c;
        while (at_local_modifier()) {
            c.push_back(!csharp_ && at("@") ? annotation() : leaf());
        }
        c.push_back(type());
        if (csharp_ && at_identifier() && (at("(", 1) || at("<", 1))) {
            // local function
            c.push_back(leaf("name"));
            if (at("<")) {
                c.push_back(type_parameters());
            }
            c.push_back(formal_parameters());
            while (at("where")) {
                c.push_back(where_clause());
            }
            c.push_back(method_body());
            return make("local_function_statement", std::move(c));
        }
        if (!at_identifier()) {
            fail("expected identifier");
        }
        if (!at_any({"=", ";", ",", "["}, 1)) {
            pos_ += 1;
            fail("expected '=', ',' or ';'");
        }
        c.push_back(variable_declarator());
        while (at(",")) {
            c.push_back(leaf());
            c.push_back(variable_declarator());
        }
        c.push_back(expect(";"));
        return make("local_variable_declaration", std::move(c));
    }

    // Declaration without trailing ';' (for-init, using, fixed, resources).
    Node local_variable_declaration() {
        std::vector<Node> c;
        while (at_local_modifier()) {
            c.push_back(!csharp_ && at("@") ? annotation() : leaf());
        }
        c.push_back(type());
        c.push_back(variable_declarator());
        while (at(",")) {
            c.push_back(leaf());
            c.push_back(variable_declarator());
        }
        return make("local_variable_declaration", std::move(c));
    }

    Node for_statement() {
        std::vector<Node> c{leaf()};
        c.push_back(expect("("));
        // Java enhanced for: (Type name : expr)
        if (!csharp_) {
            std::vector<Node> header;
            const bool enhanced = attempt([&] {
                std::vector<Node> h;
                while (at_local_modifier()) {
                    h.push_back(at("@") ? annotation() : leaf());
                }
                h.push_back(type());
                h.push_back(expect_identifier("name"));
                h.push_back(expect(":"));
                header = std::move(h);
            });
            if (enhanced) {
                for (auto &n : header) {
                    c.push_back(std::move(n));
                }
                c.push_back(with_field(expression(), "value"));
                c.push_back(expect(")"));
                c.push_back(with_field(statement(), "body"));
                return make("enhanced_for_statement", std::move(c));
            }
        }
        if (!at(";")) {
            Node init;
            if (!attempt([&] {
                    init = local_variable_declaration();
                    if (!at(";")) {
                        fail("expected ';'");
                    }
                })) {
                init = expression_list();
            }
            c.push_back(with_field(std::move(init), "init"));
        }
        c.push_back(expect(";"));
        if (!at(";")) {
            c.push_back(with_field(expression(), "condition"));
        }
        c.push_back(expect(";"));
        if (!at(")")) {
            c.push_back(with_field(expression_list(), "update"));
        }
        c.push_back(expect(")"));
        c.push_back(with_field(statement(), "body"));
        return make("for_statement", std::move(c));
    }

    Node expression_list() {
        std::vector<Node> c{expression()};
        while (at(",")) {
            c.push_back(leaf());
            c.push_back(expression());
        }
        if (c.size() == 1) {
            return std::move(c.front());
        }
        return make("expression_list", std::move(c));
    }

    Node foreach_statement() {
        std::vector<Node> c;
        if (at("await")) {
            c.push_back(leaf());
        }
        c.push_back(leaf());
        c.push_back(expect("("));
        while (at_any({"ref", "readonly"})) {
            c.push_back(leaf());
        }
        if (at("var") && at("(", 1)) {
            c.push_back(leaf());
            c.push_back(with_field(primary(), "left")); // deconstruction (a, b)
        } else if (at("(")) {
            c.push_back(with_field(primary(), "left"));
        } else {
            c.push_back(type());
            c.push_back(expect_identifier("name"));
        }
        c.push_back(expect("in"));
        c.push_back(with_field(expression(), "value"));
        c.push_back(expect(")"));
        c.push_back(with_field(statement(), "body"));
        return make("foreach_statement", std::move(c));
    }

    Node using_statement() {
        std::vector<Node> c;
        if (at("await")) {
            c.push_back(leaf());
        }
        c.push_back(leaf());
        if (at("(")) {
            c.push_back(leaf());
            Node resource;
            if (!attempt([&] {
                    resource = local_variable_declaration();
                    if (!at(")")) {
                        fail("expected ')'");
                    }
                })) {
                resource = expression();
            }
            c.push_back(std::move(resource));
            c.push_back(expect(")"));
            c.push_back(statement());
            return make("using_statement", std::move(c));
        }
        c.push_back(local_variable_declaration());
        c.push_back(expect(";"));
        return make("using_statement", std::move(c));
    }

    Node try_statement() {
        std::vector<Node> c{leaf()};
        if (!csharp_ && at("(")) {
            std::vector<Node> r{leaf()};
            while (!at(")")) {
                Node res;
                if (!attempt([&] {
                        res = local_variable_declaration();
                        if (!at(";") && !at(")")) {
                            fail("expected ';' or ')'");
                        }
                    })) {
                    res = expression();
                }
                r.push_back(std::move(res));
                if (at(";")) {
                    r.push_back(leaf());
                    continue;
                }
                if (!at(")")) {
                    fail("expected ';' or ')' in resource specification");
                }
            }
            r.push_back(leaf());
            c.push_back(make("resource_specification", std::move(r)));
        }
        c.push_back(with_field(block(), "body"));
        bool handlers = false;
        while (at("catch")) {
            handlers = true;
            std::vector<Node> k{leaf()};
            if (at("(")) {
                k.push_back(leaf());
                std::vector<Node> p;
                if (!csharp_ && at("final")) {
                    p.push_back(leaf());
                }
                p.push_back(type());
                while (!csharp_ && at("|")) {
                    p.push_back(leaf());
                    p.push_back(type());
                }
                if (at_identifier()) {
                    p.push_back(leaf("name"));
                } else if (!csharp_) {
                    fail("expected exception parameter name");
                }
                k.push_back(make("catch_formal_parameter", std::move(p)));
                k.push_back(expect(")"));
            }
            if (csharp_ && at("when")) {
                k.push_back(leaf());
                k.push_back(expect("("));
                k.push_back(expression());
                k.push_back(expect(")"));
            }
            k.push_back(with_field(block(), "body"));
            c.push_back(make("catch_clause", std::move(k)));
        }
        if (at("finally")) {
            handlers = true;
            std::vector<Node> f{leaf()};
            f.push_back(with_field(block(), "body"));
            c.push_back(make("finally_clause", std::move(f)));
        }
        if (!handlers && c.front().kind == "try" && (csharp_ || c.size() == 2)) {
            fail("expected 'catch' or 'finally'");
        }
        return make("try_statement", std::move(c));
    }

    // Case label: type pattern (`Type name`) or constant expression.
    Node case_pattern() {
        Node pattern;
        if (attempt([&] {
                std::vector<Node> p{type()};
                p.push_back(expect_identifier("name"));
                if (!at_any({":", "->", "when", "&&", ",", "=>"})) {
                    fail("not a type pattern");
                }
                pattern = make("type_pattern", std::move(p));
            })) {
            return pattern;
        }
        if (csharp_ && at_any({"<", ">", "<=", ">="})) {
            std::vector<Node> r{leaf()};
            r.push_back(shift());
            return make("relational_pattern", std::move(r));
        }
        if (csharp_ && at("not")) {
            std::vector<Node> r{leaf()};
            r.push_back(case_pattern());
            return make("negated_pattern", std::move(r));
        }
        return conditional();
    }

    Node switch_block() {
        std::vector<Node> c{expect("{")};
        while (!at("}")) {
            if (at_end()) {
                fail("expected '}'");
            }
            std::vector<Node> section;
            bool arrow = false;
            while (at("case") || at("default")) {
                std::vector<Node> label{leaf()};
                if (label.front().kind == "case") {
                    label.push_back(case_pattern());
                    while (at(",")) {
                        label.push_back(leaf());
                        label.push_back(case_pattern());
                    }
                    if ((csharp_ && at("when")) || (!csharp_ && at("when"))) {
                        label.push_back(leaf());
                        label.push_back(expression());
                    }
                }
                if (!csharp_ && at("->")) {
                    label.push_back(leaf());
                    arrow = true;
                    section.push_back(make("switch_label", std::move(label)));
                    break;
                }
                label.push_back(expect(":"));
                section.push_back(make("switch_label", std::move(label)));
            }
            if (section.empty()) {
                fail("expected 'case' or 'default'");
            }
            if (arrow) {
                if (at("{")) {
                    section.push_back(block());
                } else if (at("throw")) {
                    section.push_back(statement());
                } else {
                    std::vector<Node> e{expression()};
                    e.push_back(expect(";"));
                    section.push_back(make("expression_statement", std::move(e)));
                }
                c.push_back(make("switch_rule", std::move(section)));
                continue;
            }
            while (!at("case") && !at("default") && !at("}")) {
                if (at_end()) {
                    fail("expected '}'");
                }
                section.push_back(statement());
            }
            c.push_back(make("switch_section", std::move(section)));
        }
        c.push_back(leaf());
        return make("switch_block", std::move(c));
    }

    // ------------------------------------------------------------ expressions

    Node expression() { return assignment(); }

    bool at_assignment_operator() const {
        if (at_any({"=", "+=", "-=", "*=", "/=", "%=", "&=", "|=", "^=", "<<=", ">>=", ">>>=", "?\?="})) {
            return true;
        }
        // '>' '>=' written adjacently is a shift-assign
        return at(">") && at(">=", 1) && adjacent(0, 1);
    }

    Node assignment() {
        Node lambda;
        if (try_lambda(lambda)) {
            return lambda;
        }
        Node left = conditional();
        if (at_assignment_operator()) {
            std::vector<Node> c{with_field(std::move(left), "left")};
            if (at(">")) {
                c.push_back(leaf());
            }
            c.push_back(leaf());
            c.push_back(with_field(at("{") && csharp_ ? array_initializer() : assignment(), "right"));
            return make("assignment_expression", std::move(c));
        }
        return left;
    }

    bool try_lambda(Node &out) {
        const std::string_view arrow = csharp_ ? "=>" : "->";
        std::size_t i = 0;
        if (csharp_ && at("async") && (at_identifier(1) || at("(", 1))) {
            i = 1;
        }
        if (at_identifier(i) && at(arrow, i + 1)) {
            std::vector<Node> c;
            if (i == 1) {
                c.push_back(leaf());
            }
            c.push_back(with_field(make("lambda_parameters", {leaf("name")}), "parameters"));
            c.push_back(leaf());
            c.push_back(lambda_body());
            out = make("lambda_expression", std::move(c));
            return true;
        }
        if (!at("(", i)) {
            return false;
        }
        std::vector<Node> head;
        const bool ok = attempt([&] {
            if (i == 1) {
                head.push_back(leaf());
            }
            std::vector<Node> p{expect("(")};
            while (!at(")")) {
                std::vector<Node> param;
                while (at_any({"final", "ref", "out", "in"})) {
                    param.push_back(leaf());
                }
                if (at_identifier() && at_any({",", ")"}, 1)) {
                    param.push_back(leaf("name"));
                } else {
                    param.push_back(type());
                    param.push_back(expect_identifier("name"));
                }
                p.push_back(make("formal_parameter", std::move(param)));
                if (at(",")) {
                    p.push_back(leaf());
                    continue;
                }
                if (!at(")")) {
                    fail("expected ',' or ')'");
                }
            }
            p.push_back(leaf());
            if (!at(arrow)) {
                fail("expected lambda arrow");
            }
            head.push_back(make("lambda_parameters", std::move(p), "parameters"));
            head.push_back(leaf());
        });
        if (!ok) {
            return false;
        }
        head.push_back(lambda_body());
        out = make("lambda_expression", std::move(head));
        return true;
    }

    Node lambda_body() { return with_field(at("{") ? block() : expression(), "body"); }

    Node conditional() {
        Node cond = csharp_ ? coalesce() : logical_or();
        if (at("?")) {
            std::vector<Node> c{with_field(std::move(cond), "condition"), leaf()};
            c.push_back(with_field(expression(), "consequence"));
            c.push_back(expect(":"));
            c.push_back(with_field(expression(), "alternative"));
            return make("ternary_expression", std::move(c));
        }
        return cond;
    }

    Node coalesce() {
        Node left = logical_or();
        if (at("??")) {
            std::vector<Node> c{with_field(std::move(left), "left"), leaf()};
            c.push_back(with_field(at("throw") ? throw_expression() : coalesce(), "right"));
            return make("binary_expression", std::move(c));
        }
        return left;
    }

    Node throw_expression() {
        std::vector<Node> c{leaf()};
        c.push_back(expression());
        return make("throw_expression", std::move(c));
    }

    template <typename Next>
    Node binary_level(std::initializer_list<std::string_view> ops, Next next) {
        Node left = (this->*next)();
        while (at_any(ops)) {
            std::vector<Node> c{with_field(std::move(left), "left"), leaf()};
            c.push_back(with_field((this->*next)(), "right"));
            left = make("binary_expression", std::move(c));
        }
        return left;
    }

    Node logical_or() { return binary_level({"||"}, &CFamilyParser::logical_and); }
    Node logical_and() { return binary_level({"&&"}, &CFamilyParser::bit_or); }
    Node bit_or() { return binary_level({"|"}, &CFamilyParser::bit_xor); }
    Node bit_xor() { return binary_level({"^"}, &CFamilyParser::bit_and); }
    Node bit_and() { return binary_level({"&"}, &CFamilyParser::equality); }
    Node equality() { return binary_level({"==", "!="}, &CFamilyParser::relational); }

    Node relational() {
        Node left = shift();
        while (true) {
            if (at_any({"<", "<=", ">="}) || (at(">") && !(at(">", 1) && adjacent(0, 1)) && !(at(">=", 1) && adjacent(0, 1)))) {
                std::vector<Node> c{with_field(std::move(left), "left"), leaf()};
                c.push_back(with_field(shift(), "right"));
                left = make("binary_expression", std::move(c));
            } else if (!csharp_ && at("instanceof")) {
                std::vector<Node> c{std::move(left), leaf()};
                if (at("final")) {
                    c.push_back(leaf());
                }
                c.push_back(type());
                if (at_identifier()) {
                    c.push_back(leaf("name"));
                }
                left = make("instanceof_expression", std::move(c));
            } else if (csharp_ && at("is")) {
                std::vector<Node> c{std::move(left), leaf()};
                c.push_back(is_pattern());
                left = make("is_pattern_expression", std::move(c));
            } else if (csharp_ && at("as")) {
                std::vector<Node> c{std::move(left), leaf()};
                c.push_back(type());
                left = make("as_expression", std::move(c));
            } else {
                return left;
            }
        }
    }

    Node is_pattern() {
        std::vector<Node> c;
        while (at("not")) {
            c.push_back(leaf());
        }
        if (at("null")) {
            c.push_back(leaf());
        } else if (at_any({"<", ">", "<=", ">="})) {
            c.push_back(leaf());
            c.push_back(shift());
        } else {
            Node typed;
            if (attempt([&] {
                    std::vector<Node> t{type()};
                    if (at_identifier() && !at_any({"and", "or"})) {
                        t.push_back(leaf("name"));
                    }
                    typed = make("type_pattern", std::move(t));
                })) {
                c.push_back(std::move(typed));
            } else {
                c.push_back(shift());
            }
        }
        while (at_any({"and", "or"})) {
            c.push_back(leaf());
            c.push_back(is_pattern());
        }
        return make("pattern", std::move(c));
    }

    Node shift() {
        Node left = additive();
        while (true) {
            if (at("<<")) {
                std::vector<Node> c{with_field(std::move(left), "left"), leaf()};
                c.push_back(with_field(additive(), "right"));
                left = make("binary_expression", std::move(c));
            } else if (at(">") && at(">", 1) && adjacent(0, 1) && !(at(">=", 2) && adjacent(1, 2))) {
                std::vector<Node> c{with_field(std::move(left), "left"), leaf(), leaf()};
                if (!csharp_ && at(">") && peek().begin == c.back().end) {
                    c.push_back(leaf()); // >>>
                }
                c.push_back(with_field(additive(), "right"));
                left = make("binary_expression", std::move(c));
            } else {
                return left;
            }
        }
    }

    Node additive() { return binary_level({"+", "-"}, &CFamilyParser::multiplicative); }

    Node multiplicative() {
        Node left = unary();
        while (at_any({"*", "/", "%"})) {
            std::vector<Node> c{with_field(std::move(left), "left"), leaf()};
            c.push_back(with_field(unary(), "right"));
            left = make("binary_expression", std::move(c));
        }
        if (csharp_ && at("switch") && at("{", 1)) {
            return switch_expression(std::move(left));
        }
        return left;
    }

    Node switch_expression(Node subject) {
        std::vector<Node> c{std::move(subject), leaf(), expect("{")};
        while (!at("}")) {
            std::vector<Node> arm{case_pattern()};
            if (at("when")) {
                arm.push_back(leaf());
                arm.push_back(expression());
            }
            arm.push_back(expect("=>"));
            arm.push_back(at("throw") ? throw_expression() : expression());
            c.push_back(make("switch_expression_arm", std::move(arm)));
            if (at(",")) {
                c.push_back(leaf());
                continue;
            }
            if (!at("}")) {
                fail("expected ',' or '}' in switch expression");
            }
        }
        c.push_back(leaf());
        return make("switch_expression", std::move(c));
    }

    bool at_cast_follower() const {
        const Token &t = peek();
        switch (t.kind) {
        case TokenKind::Identifier:
        case TokenKind::Number:
        case TokenKind::String:
        case TokenKind::Char: return true;
        case TokenKind::Keyword:
            return at_any({"this", "super", "base", "new", "true", "false", "null", "typeof", "default", "sizeof",
                           "checked", "unchecked", "switch"}) ||
                   is_primitive(t.text);
        default: return at_any({"(", "!", "~"});
        }
    }

    Node unary() {
        if (at_any({"+", "-", "!", "~", "++", "--"}) || (csharp_ && at_any({"&", "*", "^"}))) {
            std::vector<Node> c{leaf()};
            c.push_back(with_field(unary(), "operand"));
            return make("unary_expression", std::move(c));
        }
        if (csharp_ && at("await") && !at_any({";", ")", ",", ".", "=", "("}, 1)) {
            std::vector<Node> c{leaf()};
            c.push_back(unary());
            return make("await_expression", std::move(c));
        }
        if (at("(")) {
            Node cast;
            if (attempt([&] {
                    std::vector<Node> c{leaf()};
                    c.push_back(type());
                    while (!csharp_ && at("&")) {
                        c.push_back(leaf());
                        c.push_back(type());
                    }
                    c.push_back(expect(")"));
                    const Node &ty = c[1];
                    const bool primitive =
                        ty.kind == "primitive_type" ||
                        (ty.kind == "array_or_nullable_type" && ty.children.front().kind == "primitive_type");
                    if (primitive ? false : !at_cast_follower()) {
                        fail("not a cast");
                    }
                    if (!primitive && at_any({"+", "-"})) {
                        fail("not a cast");
                    }
                    c.push_back(with_field(unary(), "value"));
                    cast = make("cast_expression", std::move(c));
                })) {
                return cast;
            }
        }
        return postfix();
    }

    Node postfix() {
        Node value = primary();
        while (true) {
            if (at(".") || (csharp_ && at("?."))) {
                std::vector<Node> c{with_field(std::move(value), "object"), leaf()};
                if (!csharp_ && at("<")) {
                    c.push_back(type_arguments());
                }
                if (at_identifier()) {
                    c.push_back(leaf("name"));
                    if (csharp_ && at("<")) {
                        Node args;
                        if (attempt([&] {
                                args = type_arguments();
                                if (!at_any({"(", ".", ")", ";", ","})) {
                                    fail("not a generic name");
                                }
                            })) {
                            c.push_back(std::move(args));
                        }
                    }
                } else if (at_any({"class", "this", "super"})) {
                    c.push_back(leaf("name"));
                } else if (at("new")) {
                    c.push_back(object_creation());
                } else {
                    fail("expected member name");
                }
                value = make("member_access", std::move(c));
            } else if (at("(")) {
                std::vector<Node> c{with_field(std::move(value), "function")};
                c.push_back(with_field(argument_list(), "arguments"));
                value = make("invocation", std::move(c));
            } else if (at("[") || (csharp_ && at("?") && at("[", 1) && adjacent(0, 1))) {
                std::vector<Node> c{with_field(std::move(value), "object")};
                if (at("?")) {
                    c.push_back(leaf());
                }
                if (at("[") && at("]", 1)) {
                    // array type in expression position: String[].class, int[]::new
                    c.push_back(leaf());
                    c.push_back(leaf());
                    value = make("array_type", std::move(c));
                    continue;
                }
                c.push_back(leaf());
                c.push_back(expression());
                while (csharp_ && at(",")) {
                    c.push_back(leaf());
                    c.push_back(expression());
                }
                c.push_back(expect("]"));
                value = make("element_access", std::move(c));
            } else if (at_any({"++", "--"})) {
                std::vector<Node> c{with_field(std::move(value), "operand"), leaf()};
                value = make("postfix_expression", std::move(c));
            } else if (at("::")) {
                std::vector<Node> c{std::move(value), leaf()};
                if (at("new")) {
                    c.push_back(leaf());
                } else {
                    c.push_back(expect_identifier("name"));
                }
                value = make("method_reference", std::move(c));
            } else if (csharp_ && at("!") && at_any({".", ")", ";", ",", "]", "[", "?."}, 1)) {
                std::vector<Node> c{std::move(value), leaf()};
                value = make("null_forgiving_expression", std::move(c));
            } else if (csharp_ && at("->")) {
                std::vector<Node> c{std::move(value), leaf()};
                c.push_back(expect_identifier("name"));
                value = make("pointer_member_access", std::move(c));
            } else {
                return value;
            }
        }
    }

    Node argument_list() {
        std::vector<Node> c{expect("(")};
        while (!at(")")) {
            c.push_back(argument());
            if (at(",")) {
                c.push_back(leaf());
                continue;
            }
            if (!at(")")) {
                fail("expected ',' or ')' in argument list");
            }
        }
        c.push_back(leaf());
        return make("argument_list", std::move(c));
    }

    Node argument() {
        if (!csharp_) {
            return expression();
        }
        std::vector<Node> c;
        if (at_identifier() && at(":", 1)) {
            c.push_back(leaf("name"));
            c.push_back(leaf());
        }
        if (at_any({"ref", "out", "in"})) {
            c.push_back(leaf());
            if (c.back().kind == "out") {
                Node decl;
                if (attempt([&] {
                        std::vector<Node> d{type()};
                        d.push_back(expect_identifier("name"));
                        if (!at_any({",", ")"})) {
                            fail("not a declaration expression");
                        }
                        decl = make("declaration_expression", std::move(d));
                    })) {
                    c.push_back(std::move(decl));
                    return make("argument", std::move(c));
                }
            }
        }
        c.push_back(expression());
        if (c.size() == 1) {
            return std::move(c.front());
        }
        return make("argument", std::move(c));
    }

    Node object_creation() {
        std::vector<Node> c{expect("new")};
        if (csharp_ && at("(")) {
            c.push_back(argument_list()); // target-typed new()
            if (at("{")) {
                c.push_back(object_initializer());
            }
            return make("object_creation_expression", std::move(c));
        }
        if (csharp_ && at("{")) {
            c.push_back(object_initializer()); // anonymous object
            return make("anonymous_object_creation_expression", std::move(c));
        }
        if (csharp_ && at("[")) {
            c.push_back(leaf());
            while (at(",")) {
                c.push_back(leaf());
            }
            c.push_back(expect("]"));
            c.push_back(array_initializer());
            return make("implicit_array_creation_expression", std::move(c));
        }
        if (!csharp_ && at("<")) {
            c.push_back(type_arguments());
        }
        c.push_back(type_core());
        if (csharp_ && at_nullable_marker()) {
            c.push_back(leaf());
        }
        if (at("[")) {
            bool sized = false;
            while (at("[")) {
                c.push_back(leaf());
                if (at("]")) {
                    c.push_back(leaf());
                    continue;
                }
                if (csharp_ && at(",")) {
                    while (at(",")) {
                        c.push_back(leaf());
                    }
                    c.push_back(expect("]"));
                    continue;
                }
                sized = true;
                c.push_back(expression());
                while (csharp_ && at(",")) {
                    c.push_back(leaf());
                    c.push_back(expression());
                }
                c.push_back(expect("]"));
            }
            if (at("{")) {
                c.push_back(array_initializer());
            } else if (!sized) {
                fail("array creation needs a size or an initializer");
            }
            return make("array_creation_expression", std::move(c));
        }
        if (at("(")) {
            c.push_back(argument_list());
            if (at("{")) {
                c.push_back(csharp_ ? object_initializer() : class_body());
            }
            return make("object_creation_expression", std::move(c));
        }
        if (csharp_ && at("{")) {
            c.push_back(object_initializer());
            return make("object_creation_expression", std::move(c));
        }
        fail("expected '(' or '[' after type in creation expression");
    }

    Node object_initializer() {
        std::vector<Node> c{expect("{")};
        while (!at("}")) {
            if (at("{")) {
                c.push_back(object_initializer());
            } else if (at("[")) {
                std::vector<Node> e{leaf()};
                e.push_back(expression());
                e.push_back(expect("]"));
                e.push_back(expect("="));
                e.push_back(at("{") ? object_initializer() : expression());
                c.push_back(make("indexer_initializer", std::move(e)));
            } else {
                Node value = expression();
                if (at("{") && value.kind == "identifier") {
                    // nested member initializer without '='
                    c.push_back(std::move(value));
                    c.push_back(object_initializer());
                } else {
                    c.push_back(std::move(value));
                }
            }
            if (at(",")) {
                c.push_back(leaf());
                continue;
            }
            if (!at("}")) {
                fail("expected ',' or '}' in initializer");
            }
        }
        c.push_back(leaf());
        return make("initializer_expression", std::move(c));
    }

    Node primary() {
        const Token &t = peek();
        switch (t.kind) {
        case TokenKind::Number:
        case TokenKind::String:
        case TokenKind::Char: return leaf();
        case TokenKind::Identifier: {
            if (csharp_ && at("<", 1)) {
                Node generic;
                if (attempt([&] {
                        std::vector<Node> g{leaf()};
                        g.push_back(type_arguments());
                        if (!at_any({"(", ".", "::"})) {
                            fail("not a generic name");
                        }
                        generic = make("generic_name", std::move(g));
                    })) {
                    return generic;
                }
            }
            if (!csharp_ && at("<", 1)) {
                // Type<Args>::method or Type<Args>.class is rare; try it before comparison
                Node generic;
                if (attempt([&] {
                        std::vector<Node> g{leaf()};
                        g.push_back(type_arguments());
                        if (!at("::")) {
                            fail("not a generic type");
                        }
                        generic = make("generic_type", std::move(g));
                    })) {
                    return generic;
                }
            }
            return leaf();
        }
        default: break;
        }
        if (at_any({"true", "false", "null", "this", "super", "base"})) {
            return leaf();
        }
        if (at_primitive()) {
            return make("primitive_type", {leaf()});
        }
        if (at("(")) {
            std::vector<Node> c{leaf()};
            c.push_back(expression());
            if (csharp_ && at(",")) {
                while (at(",")) {
                    c.push_back(leaf());
                    c.push_back(expression());
                }
                c.push_back(expect(")"));
                return make("tuple_expression", std::move(c));
            }
            c.push_back(expect(")"));
            return make("parenthesized_expression", std::move(c));
        }
        if (at("new")) {
            return object_creation();
        }
        if (at("switch") && !csharp_) {
            std::vector<Node> c{leaf()};
            c.push_back(expect("("));
            c.push_back(with_field(expression(), "condition"));
            c.push_back(expect(")"));
            c.push_back(switch_block());
            return make("switch_expression", std::move(c));
        }
        if (csharp_ && at_any({"typeof", "sizeof", "default"})) {
            std::vector<Node> c{leaf()};
            if (c.front().kind == "default" && !at("(")) {
                return std::move(c.front());
            }
            c.push_back(expect("("));
            c.push_back(type());
            c.push_back(expect(")"));
            std::string kind = c.front().kind + "_expression";
            return make(std::move(kind), std::move(c));
        }
        if (csharp_ && at_any({"checked", "unchecked"})) {
            std::vector<Node> c{leaf()};
            c.push_back(expect("("));
            c.push_back(expression());
            c.push_back(expect(")"));
            return make("checked_expression", std::move(c));
        }
        if (csharp_ && at("throw")) {
            return throw_expression();
        }
        if (csharp_ && at("stackalloc")) {
            std::vector<Node> c{leaf()};
            c.push_back(type_core());
            c.push_back(expect("["));
            if (!at("]")) {
                c.push_back(expression());
            }
            c.push_back(expect("]"));
            if (at("{")) {
                c.push_back(array_initializer());
            }
            return make("stackalloc_expression", std::move(c));
        }
        if (csharp_ && at("delegate")) {
            std::vector<Node> c{leaf()};
            if (at("(")) {
                c.push_back(formal_parameters());
            }
            c.push_back(block());
            return make("anonymous_method_expression", std::move(c));
        }
        if (csharp_ && at("[")) {
            std::vector<Node> c{leaf()}; // collection expression
            while (!at("]")) {
                if (at("..")) {
                    c.push_back(leaf());
                }
                c.push_back(expression());
                if (at(",")) {
                    c.push_back(leaf());
                    continue;
                }
                if (!at("]")) {
                    fail("expected ',' or ']'");
                }
            }
            c.push_back(leaf());
            return make("collection_expression", std::move(c));
        }
        fail("expected expression");
    }
};

} // namespace

ParseOutput parse_cfamily(std::string_view source, const std::vector<Token> &tokens, Language language) {
    CFamilyParser parser(source, tokens, language);
    return parser.run();
}

} // namespace codeslice::syntax::detail
