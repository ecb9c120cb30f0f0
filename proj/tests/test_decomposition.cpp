#include <catch2/catch_amalgamated.hpp>

#include "slr/decomposition.hpp"
#include "slr/generators.hpp"

using namespace slr;

namespace {

Structure path_structure(int n) {
    Structure s;
    s.sig.add_relation("E", 2);
    for (int i = 1; i < n; ++i) s.add_tuple("E", {i, i + 1});
    return s;
}

}  // namespace

TEST_CASE("decomposition parse/print round trip") {
    std::string text =
        "node 0\n"
        "node 1\n"
        "node 2\n"
        "root 0\n"
        "edge 0 1\n"
        "edge 1 2\n"
        "bag 0 1 2\n"
        "bag 1 2 3\n"
        "bag 2 3 4\n";
    TreeDecomposition td = parse_decomposition(text);
    CHECK(td.nodes.size() == 3);
    CHECK(td.root == 0);
    CHECK(td.width() == 1);
    CHECK(print_decomposition(parse_decomposition(print_decomposition(td))) ==
          print_decomposition(td));
}

TEST_CASE("exact treewidth of cliques is n-1") {
    for (int n = 2; n <= 4; ++n) {
        Structure s = clique_structure(n);
        TreewidthResult r = exact_treewidth(s);
        CHECK(r.width == n - 1);
        CHECK(validate(r.witness, s).ok);
    }
}

TEST_CASE("exact treewidth of paths is 1 and of a point is 0") {
    for (int n = 3; n <= 5; ++n) {
        TreewidthResult r = exact_treewidth(path_structure(n));
        CHECK(r.width == 1);
        CHECK(validate(r.witness, path_structure(n)).ok);
    }
    Structure pt;
    pt.sig.add_relation("Q", 1);
    pt.add_tuple("Q", {4});
    CHECK(exact_treewidth(pt).width == 0);
}

TEST_CASE("validate rejects broken decompositions") {
    Structure s = path_structure(3);
    TreewidthResult r = exact_treewidth(s);

    // Drop an element from every bag: some tuple loses its home.
    TreeDecomposition broken = r.witness;
    for (auto& [n, b] : broken.bags) b.erase(2);
    CHECK(!validate(broken, s).ok);

    // Detach a node from the tree.
    TreeDecomposition orphan = r.witness;
    int extra = *orphan.nodes.rbegin() + 1;
    orphan.nodes.insert(extra);
    orphan.bags[extra] = {1};
    CHECK(!validate(orphan, s).ok);
}

TEST_CASE("connectivity violations are caught") {
    // Element 1 appears in two bags whose connecting bag omits it.
    std::string text =
        "node 0\nnode 1\nnode 2\n"
        "root 0\n"
        "edge 0 1\nedge 1 2\n"
        "bag 0 1 2\n"
        "bag 1 2 3\n"
        "bag 2 1 3\n";
    Structure s = path_structure(3);
    CHECK(!validate(parse_decomposition(text), s).ok);
}

TEST_CASE("reduce yields a clause-correct uniform decomposition") {
    for (int n : {2, 4}) {
        Structure s = path_structure(n);
        TreewidthResult r = exact_treewidth(s);
        ReducedDecomposition rd = reduce(r.witness, s);
        int k = 0;
        for (const auto& [node, b] : rd.td.bags) k = std::max(k, (int)b.size() - 1);
        ValidationResult v = check_reduced(rd, s, k);
        INFO(v.reason);
        CHECK(v.ok);
    }
}
