#include <algorithm>
#include <cctype>
#include <unordered_set>

#include "codeslice/error.hpp"
#include "codeslice/syntax/syntax.hpp"

namespace codeslice::syntax {

std::string_view to_string(Language language) {
    switch (language) {
    case Language::Python: return "python";
    case Language::Java: return "java";
    case Language::CSharp: return "csharp";
    }
    return "?";
}

std::optional<Language> language_from_name(std::string_view name) {
    std::string key(name);
    std::transform(key.begin(), key.end(), key.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (key == "python" || key == "py" || key == "python3") {
        return Language::Python;
    }
    if (key == "java") {
        return Language::Java;
    }
    if (key == "csharp" || key == "c#" || key == "cs" || key == "c_sharp") {
        return Language::CSharp;
    }
    return std::nullopt;
}

Language require_language(std::string_view name) {
    if (auto language = language_from_name(name)) {
        return *language;
    }
    throw Error(ErrorCode::UnsupportedLanguage, "unsupported language '" + std::string(name) + "'");
}

// Reserved words only; contextual words (match, var, yield, async, get, ...)
// lex as identifiers.
const std::vector<std::string> &keywords(Language language) {
    static const std::vector<std::string> python = {
        "False", "None",   "True",    "and",      "as",     "assert", "async",  "await",
        "break", "class",  "continue", "def",     "del",    "elif",   "else",   "except",
        "finally", "for",  "from",    "global",   "if",     "import", "in",     "is",
        "lambda", "nonlocal", "not",  "or",       "pass",   "raise",  "return", "try",
        "while", "with",   "yield"};
    static const std::vector<std::string> java = {
        "abstract", "assert",     "boolean",   "break",     "byte",     "case",      "catch",
        "char",     "class",      "const",     "continue",  "default",  "do",        "double",
        "else",     "enum",       "extends",   "final",     "finally",  "float",     "for",
        "goto",     "if",         "implements", "import",   "instanceof", "int",     "interface",
        "long",     "native",     "new",       "package",   "private",  "protected", "public",
        "return",   "short",      "static",    "strictfp",  "super",    "switch",    "synchronized",
        "this",     "throw",      "throws",    "transient", "try",      "void",      "volatile",
        "while",    "true",       "false",     "null"};
    static const std::vector<std::string> csharp = {
        "abstract", "as",       "base",      "bool",     "break",    "byte",     "case",     "catch",
        "char",     "checked",  "class",     "const",    "continue", "decimal",  "default",  "delegate",
        "do",       "double",   "else",      "enum",     "event",    "explicit", "extern",   "false",
        "finally",  "fixed",    "float",     "for",      "foreach",  "goto",     "if",       "implicit",
        "in",       "int",      "interface", "internal", "is",       "lock",     "long",     "namespace",
        "new",      "null",     "object",    "operator", "out",      "override", "params",   "private",
        "protected", "public",  "readonly",  "ref",      "return",   "sbyte",    "sealed",   "short",
        "sizeof",   "stackalloc", "static",  "string",   "struct",   "switch",   "this",     "throw",
        "true",     "try",      "typeof",    "uint",     "ulong",    "unchecked", "unsafe",  "ushort",
        "using",    "virtual",  "void",      "volatile", "while"};
    switch (language) {
    case Language::Python: return python;
    case Language::Java: return java;
    case Language::CSharp: return csharp;
    }
    return python;
}

bool is_keyword(Language language, std::string_view word) {
    static const auto build = [](Language l) {
        const auto &list = keywords(l);
        return std::unordered_set<std::string_view>(list.begin(), list.end());
    };
    static const std::unordered_set<std::string_view> python = build(Language::Python);
    static const std::unordered_set<std::string_view> java = build(Language::Java);
    static const std::unordered_set<std::string_view> csharp = build(Language::CSharp);
    switch (language) {
    case Language::Python: return python.contains(word);
    case Language::Java: return java.contains(word);
    case Language::CSharp: return csharp.contains(word);
    }
    return false;
}

} // namespace codeslice::syntax
