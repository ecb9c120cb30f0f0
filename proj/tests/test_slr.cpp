#include <catch2/catch_amalgamated.hpp>

#include "slr/slr_ast.hpp"
#include "slr/slr_check.hpp"

using namespace slr;

namespace {

Signature base_sig() {
    Signature sig;
    sig.add_relation("R", 2);
    sig.add_relation("Q", 1);
    sig.add_constant("c");
    return sig;
}

Sid chain_sid() {
    return parse_sid(
        "rel E 2\n"
        "constsym c1\n"
        "constsym c2\n"
        "Chain() <- exists x . E(c1, x) * Chain2(x) ;\n"
        "Chain2(x) <- exists y . E(x, y) * Chain2(y) ;\n"
        "Chain2(x) <- emp * x = c2 ;\n");
}

Structure path(int n) {
    Structure s;
    s.sig.add_relation("E", 2);
    s.sig.add_constant("c1");
    s.sig.add_constant("c2");
    s.set_const("c1", 1);
    s.set_const("c2", n);
    for (int i = 1; i < n; ++i) s.add_tuple("E", {i, i + 1});
    return s;
}

}  // namespace

TEST_CASE("formula parse/print round trip") {
    Signature sig = base_sig();
    for (const std::string& text : {
             "emp",
             "x = y",
             "! (x = c)",
             "Q(c) * R(x, y)",
             "exists z . (R(x, z) * P(z))",
             "exists x . exists y . ((x = y * emp) * R(x, y))",
         }) {
        SlrPtr f = parse_slr(sig, text);
        std::string printed = print_slr(f);
        CHECK(print_slr(parse_slr(sig, printed)) == printed);
    }
    CHECK_THROWS_AS(parse_slr(sig, "R(x)"), SyntaxError);
    CHECK_THROWS_AS(parse_slr(sig, "exists . emp"), SyntaxError);
}

TEST_CASE("free variables respect binding and shadowing") {
    Signature sig = base_sig();
    CHECK(free_vars(parse_slr(sig, "R(x, y) * Q(c)")) == std::set<std::string>{"x", "y"});
    CHECK(free_vars(parse_slr(sig, "exists x . R(x, y)")) == std::set<std::string>{"y"});
    CHECK(free_vars(parse_slr(sig, "x = x * exists x . Q(x)")) == std::set<std::string>{"x"});
}

TEST_CASE("definition system parse/print round trip") {
    Sid sid = chain_sid();
    std::string printed = print_sid(sid);
    CHECK(print_sid(parse_sid(printed)) == printed);
    CHECK(sid.mentions_pred("Chain"));
    CHECK(sid.mentions_pred("Chain2"));
    CHECK(!sid.mentions_pred("Nope"));
}

TEST_CASE("chain derivability on paths, gaps, and reversals") {
    Sid sid = chain_sid();
    SlrPtr goal = parse_slr(sid.sig, "Chain()");
    for (int n = 2; n <= 4; ++n) CHECK(check_slr(path(n), {}, goal, sid));

    Structure gap = path(4);
    Structure missing;
    missing.sig = gap.sig;
    missing.consts = gap.consts;
    missing.add_tuple("E", {1, 2});
    missing.add_tuple("E", {3, 4});
    CHECK(!check_slr(missing, {}, goal, sid));

    // Extra tuples must be consumed: a stray edge defeats the exact split.
    Structure extra = path(3);
    extra.add_tuple("E", {3, 1});
    CHECK(!check_slr(extra, {}, goal, sid));

    Structure rev;
    rev.sig = gap.sig;
    rev.consts = path(3).consts;
    rev.add_tuple("E", {2, 1});
    rev.add_tuple("E", {3, 2});
    CHECK(!check_slr(rev, {}, goal, sid));
}

TEST_CASE("ring models carry exactly one unmarked node") {
    Sid sid = parse_sid(
        "rel C 1\n"
        "rel I 2\n"
        "Ring() <- exists x . exists y . (I(x, y) * Chain(y, x)) ;\n"
        "Chain(x, y) <- exists z . (C(x) * (I(x, z) * Chain(z, y))) ;\n"
        "Chain(x, y) <- emp * x = y ;\n");
    SlrPtr goal = parse_slr(sid.sig, "Ring()");
    for (int n = 2; n <= 4; ++n) {
        Structure full;
        full.sig = sid.sig;
        for (int i = 1; i <= n; ++i) {
            full.add_tuple("I", {i, i % n + 1});
            full.add_tuple("C", {i});
        }
        CHECK(!check_slr(full, {}, goal, sid));

        Structure one_clear = full;
        one_clear.tuples.erase(
            std::find(one_clear.tuples.begin(), one_clear.tuples.end(),
                      std::pair<std::string, Tuple>{"C", {1}}));
        CHECK(check_slr(one_clear, {}, goal, sid));
    }
}

TEST_CASE("normalization produces prenex single-quantifier-block rules") {
    Sid messy = parse_sid(
        "rel R 2\n"
        "A(x) <- (exists y . R(x, y)) * (exists y . A(y)) ;\n"
        "A(x) <- emp * x = x ;\n");
    CHECK(!is_normalized(messy));
    Sid norm = normalize_sid(messy);
    CHECK(is_normalized(norm));

    // Model sets agree on a few structures.
    SlrPtr goal = parse_slr(messy.sig, "A(x)");
    for (int tupsel = 0; tupsel < 4; ++tupsel) {
        Structure s;
        s.sig = messy.sig;
        if (tupsel & 1) s.add_tuple("R", {1, 2});
        if (tupsel & 2) s.add_tuple("R", {2, 2});
        for (ElemId v = 1; v <= 3; ++v) {
            Store st{{"x", v}};
            CHECK(check_slr(s, st, goal, messy) == check_slr(s, st, goal, norm));
        }
    }
}

TEST_CASE("unknown predicates are reported") {
    Sid sid = chain_sid();
    Structure s = path(2);
    CHECK_THROWS_AS(check_slr(s, {}, mk_pred("Ghost", {}), sid), UnknownPredicate);
}

TEST_CASE("injective satisfaction distinguishes starvation from refutation") {
    Sid sid = normalize_sid(parse_sid(
        "rel R 2\n"
        "A() <- exists x . exists y . (R(x, y) * ! (x = y)) ;\n"));
    Structure s;
    s.sig = sid.sig;
    s.add_tuple("R", {1, 2});
    SlrPtr goal = parse_slr(sid.sig, "A()");

    InjectiveChecker rich(s, sid, {1, 2, 3});
    CHECK(rich.check({}, goal) == InjResult::Sat);

    InjectiveChecker starved(s, sid, {1});
    CHECK(starved.check({}, goal) == InjResult::PoolExhausted);

    Structure empty;
    empty.sig = sid.sig;
    InjectiveChecker refuted(empty, sid, {1, 2, 3});
    CHECK(refuted.check({}, goal) == InjResult::Unsat);
}
