#include "codeslice/syntax/variables.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_set>

namespace codeslice::syntax {

namespace {

enum class Mode { Plain, Def, UseDef };

bool is_identifier_leaf(const Node &n) { return n.is_leaf() && n.kind == "identifier"; }

// Subtrees that never contain variable occurrences.
bool skipped_subtree(const Node &n) {
    static const std::unordered_set<std::string_view> kinds = {
        "import_statement", "import_from_statement", "package_declaration", "import_declaration",
        "using_directive",  "annotation",            "attribute_list",      "qualified_name",
        "type_parameters",  "type_arguments",        "type_identifier",     "generic_type",
        "primitive_type",   "array_or_nullable_type", "tuple_type",         "throws",
        "base_list",        "super_types",           "type_parameter_constraints_clause"};
    return n.field == "type" || n.field == "return_type" || kinds.contains(n.kind);
}

// Containers whose identifier children are bound by a destructuring target.
bool target_container(const Node &n) {
    static const std::unordered_set<std::string_view> kinds = {
        "tuple", "list", "pattern_list", "parenthesized_expression", "expression_list", "list_splat",
        "tuple_expression"};
    return kinds.contains(n.kind);
}

// Parents whose "name" child binds a variable.
bool binds_name(std::string_view parent) {
    static const std::unordered_set<std::string_view> kinds = {
        // Python
        "parameter", "typed_parameter", "default_parameter", "typed_default_parameter", "list_splat_pattern",
        "dictionary_splat_pattern", "named_expression",
        // Java / C#
        "variable_declarator", "formal_parameter", "catch_formal_parameter", "type_pattern",
        "declaration_expression", "instanceof_expression", "enhanced_for_statement", "foreach_statement",
        "lambda_parameters"};
    return kinds.contains(parent);
}

// Statements whose bare identifier children are labels, not variables.
bool label_statement(std::string_view kind) {
    return kind == "labeled_statement" || kind == "break_statement" || kind == "continue_statement" ||
           kind == "goto_statement" || kind == "global_statement" || kind == "nonlocal_statement";
}

class Extractor {
  public:
    explicit Extractor(const SyntaxTree &tree) : tree_(tree) {}

    std::vector<VarOccurrence> run() {
        visit(tree_.root());
        std::set<std::string> defined;
        for (const auto &o : raw_) {
            if (o.is_def) {
                defined.insert(o.name);
            }
        }
        std::vector<VarOccurrence> out;
        for (auto &o : raw_) {
            if (defined.contains(o.name)) {
                out.push_back(std::move(o));
            }
        }
        std::stable_sort(out.begin(), out.end(),
                         [](const VarOccurrence &a, const VarOccurrence &b) { return a.begin < b.begin; });
        return out;
    }

  private:
    const SyntaxTree &tree_;
    std::vector<VarOccurrence> raw_;

    void record(const Node &leaf, Mode mode, std::size_t effective) {
        VarOccurrence o;
        o.token = leaf.token;
        o.name = std::string(tree_.text_of(leaf));
        if (!o.name.empty() && o.name.front() == '@') {
            o.name.erase(0, 1); // C# verbatim identifier
        }
        o.begin = leaf.begin;
        o.end = leaf.end;
        o.is_def = mode != Mode::Plain;
        o.is_use = mode != Mode::Def;
        o.effective = o.is_def ? effective : leaf.begin;
        raw_.push_back(std::move(o));
    }

    void target(const Node &n, Mode mode, std::size_t effective) {
        if (is_identifier_leaf(n)) {
            record(n, mode, effective);
        } else if (target_container(n)) {
            for (const auto &c : n.children) {
                target(c, mode, effective);
            }
        } else {
            visit(n); // attribute / subscript targets only read their parts
        }
    }

    static bool is_increment(const Node &n) {
        if (n.kind != "unary_expression" && n.kind != "postfix_expression") {
            return false;
        }
        for (const auto &c : n.children) {
            if (c.is_leaf() && (c.kind == "++" || c.kind == "--")) {
                return true;
            }
        }
        return false;
    }

    static bool plain_assignment(const Node &n) {
        for (const auto &c : n.children) {
            if (c.is_leaf() && c.field.empty() && c.kind != "=" && c.kind.back() == '=') {
                return false;
            }
        }
        return true;
    }

    void visit(const Node &n) {
        if (n.is_leaf()) {
            if (is_identifier_leaf(n)) {
                record(n, Mode::Plain, 0);
            }
            return;
        }
        if (skipped_subtree(n)) {
            return;
        }
        const bool assignment = n.kind == "assignment" || n.kind == "assignment_expression";
        const bool augmented = n.kind == "augmented_assignment" || (assignment && !plain_assignment(n));
        const bool loop = n.kind == "for_statement" || n.kind == "for_in_clause" || n.kind == "foreach_statement";
        const bool increment = is_increment(n);
        const bool labels = label_statement(n.kind);
        for (const auto &c : n.children) {
            if (c.field == "left" && (assignment || augmented)) {
                target(c, augmented ? Mode::UseDef : Mode::Def, n.end);
                continue;
            }
            if (c.field == "left" && loop) {
                target(c, Mode::Def, c.begin);
                continue;
            }
            if (c.field == "operand" && increment && is_identifier_leaf(c)) {
                record(c, Mode::UseDef, c.begin);
                continue;
            }
            if (c.field == "alias" && (n.kind == "except_clause" || n.kind == "with_item")) {
                target(c, Mode::Def, c.begin);
                continue;
            }
            if (is_identifier_leaf(c)) {
                if (c.field == "name") {
                    if (binds_name(n.kind)) {
                        const bool after = n.kind == "variable_declarator" || n.kind == "named_expression";
                        record(c, Mode::Def, after ? n.end : c.begin);
                    }
                    continue; // member, method, class, keyword-argument names
                }
                if (c.field == "attribute" || c.field == "alias" || labels) {
                    continue;
                }
            }
            if (n.kind == "parameters" && is_identifier_leaf(c)) {
                record(c, Mode::Def, c.begin);
                continue;
            }
            visit(c);
        }
    }
};

} // namespace

std::vector<VarOccurrence> variable_occurrences(const SyntaxTree &tree) { return Extractor(tree).run(); }

std::vector<DataflowEdge> dataflow_edges(const SyntaxTree &tree) {
    const std::vector<VarOccurrence> occ = variable_occurrences(tree);
    std::map<std::string, std::string> normalized;
    for (const auto &o : occ) {
        if (!normalized.contains(o.name)) {
            normalized.emplace(o.name, "v" + std::to_string(normalized.size()));
        }
    }
    struct Def {
        int index;
        std::size_t effective;
        bool used = false;
    };
    std::map<std::string, std::vector<Def>> defs;
    std::vector<DataflowEdge> edges;
    for (int i = 0; i < static_cast<int>(occ.size()); ++i) {
        const auto &o = occ[static_cast<std::size_t>(i)];
        if (o.is_use) {
            Def *reaching = nullptr;
            for (auto &d : defs[o.name]) {
                if (d.effective <= o.begin &&
                    (!reaching || d.effective > reaching->effective ||
                     (d.effective == reaching->effective && d.index > reaching->index))) {
                    reaching = &d;
                }
            }
            if (reaching) {
                reaching->used = true;
                edges.push_back({normalized[o.name], reaching->index, i});
            }
        }
        if (o.is_def) {
            defs[o.name].push_back({i, o.effective});
        }
    }
    for (const auto &[name, list] : defs) {
        for (const auto &d : list) {
            if (!d.used) {
                edges.push_back({normalized[name], d.index, -1});
            }
        }
    }
    std::sort(edges.begin(), edges.end());
    return edges;
}

std::vector<std::string> keyword_argument_names(const SyntaxTree &tree) {
    std::vector<std::string> out;
    walk(tree.root(), [&](const Node &n, const NodePath &) {
        if (n.kind != "keyword_argument" && n.kind != "argument") {
            return;
        }
        for (const auto &c : n.children) {
            if (is_identifier_leaf(c) && c.field == "name") {
                out.emplace_back(tree.text_of(c));
            }
        }
    });
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

} // namespace codeslice::syntax
