#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "codeslice/syntax/syntax.hpp"

namespace codeslice::syntax {

// One appearance of a local variable name. A name counts as a variable when
// it is bound somewhere in the snippet (assignment target, parameter, loop
// variable, declarator, ...). Member names, keyword-argument names, type
// names and function/class names are never occurrences.
struct VarOccurrence {
    int token = -1;
    std::string name;
    std::size_t begin = 0;
    std::size_t end = 0;
    bool is_def = false;
    bool is_use = false;   // augmented assignment / ++ are both
    std::size_t effective = 0; // where a def becomes visible (end of its statement for assignments)
};

// Occurrences in source order. The tree must be error-free for a meaningful
// result; trees with errors yield whatever the intact prefix contains.
std::vector<VarOccurrence> variable_occurrences(const SyntaxTree &tree);

// Def-use edge over occurrence ordinals; use == -1 marks a definition that is
// never read. `var` is the name normalized by first appearance ("v0", "v1", ...).
struct DataflowEdge {
    std::string var;
    int def = 0;
    int use = -1;

    friend auto operator<=>(const DataflowEdge &, const DataflowEdge &) = default;
};

std::vector<DataflowEdge> dataflow_edges(const SyntaxTree &tree);

// Names appearing as keyword-argument names (Python `f(x=1)`, C# `f(x: 1)`).
std::vector<std::string> keyword_argument_names(const SyntaxTree &tree);

} // namespace codeslice::syntax
