#include <doctest.h>

#include "codeslice/syntax/syntax.hpp"

using namespace codeslice::syntax;

TEST_CASE("python snippets parse") {
    CHECK_FALSE(parse("def f(a, b=2):\n    return a + b\n", Language::Python).has_error());
    CHECK(parse("def f(:\n    pass\n", Language::Python).has_error());
}

TEST_CASE("java snippets parse") {
    CHECK_FALSE(parse("public int add(int a, int b) { return a + b; }", Language::Java).has_error());
    CHECK(parse("public int add(int a, int b) { return a + ; }", Language::Java).has_error());
}

TEST_CASE("csharp snippets parse") {
    CHECK_FALSE(parse("public int Add(int a, int b) => a + b;", Language::CSharp).has_error());
    CHECK(parse("public int Add(int a int b) { }", Language::CSharp).has_error());
}
