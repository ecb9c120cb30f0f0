#pragma once

// Tree decompositions of relational structures.  A decomposition assigns a
// bag of elements to every node of a rooted tree such that (1) every tuple of
// the structure fits inside some bag and (2) the bags containing any given
// active-domain element form a connected subtree.  The width is the maximum
// bag size minus one.
//
// Besides validation and exact width computation (branch-and-bound over
// elimination orders) this module normalizes decompositions into a rigid
// "reduced" shape used by the bounded-width generators: binary trees with
// uniform bag size whose leaves each witness exactly one tuple and whose
// parent/child bags either coincide or differ by a single swap.

#include <cassert>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "structures.hpp"

namespace slr {

struct TreeDecomposition {
    // Node ids are arbitrary non-negative ints.
    std::set<int> nodes;
    int root = -1;
    std::map<int, int> parent;               // child -> parent, root absent
    std::map<int, std::set<ElemId>> bags;    // node -> bag

    std::vector<int> children_of(int n) const {
        std::vector<int> out;
        for (const auto& [c, p] : parent)
            if (p == n) out.push_back(c);
        return out;
    }

    int width() const {
        int w = -1;
        for (const auto& [n, b] : bags) w = std::max(w, (int)b.size() - 1);
        return w;
    }
};

struct ValidationResult {
    bool ok = true;
    std::string reason;  // empty when ok
};

// ---------------------------------------------------------------------------
// Structural sanity: nodes form one rooted tree and every node has a bag.

inline ValidationResult check_tree_shape(const TreeDecomposition& td) {
    if (td.nodes.empty()) return {false, "decomposition has no nodes"};
    if (!td.nodes.count(td.root)) return {false, "root is not a node"};
    for (const auto& [n, b] : td.bags)
        if (!td.nodes.count(n)) return {false, "bag for unknown node"};
    for (int n : td.nodes) {
        if (!td.bags.count(n)) return {false, "node without bag"};
        bool has_parent = td.parent.count(n);
        if (n == td.root && has_parent) return {false, "root has a parent"};
        if (n != td.root && !has_parent) return {false, "non-root node without parent"};
        if (has_parent && !td.nodes.count(td.parent.at(n)))
            return {false, "parent is not a node"};
    }
    // Every node must reach the root (no cycles, single tree).
    for (int n : td.nodes) {
        std::set<int> seen;
        int cur = n;
        while (cur != td.root) {
            if (!seen.insert(cur).second) return {false, "parent links contain a cycle"};
            cur = td.parent.at(cur);
        }
    }
    return {};
}

// ---------------------------------------------------------------------------
// Validation against a structure: tuple coverage and connectedness.

inline ValidationResult validate(const TreeDecomposition& td, const Structure& s) {
    if (auto r = check_tree_shape(td); !r.ok) return r;
    for (const auto& [rname, ts] : s.tuples)
        for (const auto& t : ts) {
            bool covered = false;
            for (int n : td.nodes) {
                const auto& b = td.bags.at(n);
                bool inside = true;
                for (ElemId e : t)
                    if (!b.count(e)) { inside = false; break; }
                if (inside) { covered = true; break; }
            }
            if (!covered) return {false, "tuple of " + rname + " not covered by any bag"};
        }
    for (ElemId e : s.dom()) {
        std::set<int> holding;
        for (int n : td.nodes)
            if (td.bags.at(n).count(e)) holding.insert(n);
        if (holding.empty())
            return {false, "element " + std::to_string(e) + " appears in no bag"};
        // Connected iff every holding node's parent-path hits another holding
        // node before leaving the set, except for a unique topmost one.
        int topmost = -1;
        for (int n : holding) {
            int cur = n;
            bool linked = false;
            while (td.parent.count(cur)) {
                cur = td.parent.at(cur);
                if (holding.count(cur)) { linked = true; break; }
            }
            if (!linked) {
                if (topmost != -1 && topmost != n)
                    return {false, "bags for element " + std::to_string(e) + " are disconnected"};
                topmost = n;
            }
        }
        // Also require the parent chain between a holding node and its next
        // holding ancestor to stay within the set.
        for (int n : holding) {
            int cur = n;
            std::vector<int> gap;
            while (td.parent.count(cur)) {
                cur = td.parent.at(cur);
                if (holding.count(cur)) {
                    if (!gap.empty())
                        return {false, "bags for element " + std::to_string(e) + " are disconnected"};
                    break;
                }
                gap.push_back(cur);
            }
        }
    }
    return {};
}

// ---------------------------------------------------------------------------
// Exact treewidth via elimination orders on the Gaifman graph.  For each
// candidate width w (iterative deepening) we search for an order eliminating
// every vertex while its current (fill-in) degree is at most w.  The empty
// structure has width 0 by convention.

struct TreewidthResult {
    int width = 0;
    TreeDecomposition witness;
};

namespace detail {

using AdjMatrix = std::vector<std::vector<bool>>;

inline bool elim_order_search(AdjMatrix g, std::vector<bool> alive, int w,
                              std::vector<int>& order) {
    int n = (int)g.size();
    int remaining = 0;
    for (int i = 0; i < n; ++i)
        if (alive[i]) ++remaining;
    if (remaining == 0) return true;
    // Greedy shortcut: a vertex of degree <= w whose neighborhood is already a
    // clique can always be eliminated first (simplicial rule).
    for (int v = 0; v < n; ++v) {
        if (!alive[v]) continue;
        std::vector<int> nb;
        for (int u = 0; u < n; ++u)
            if (alive[u] && u != v && g[v][u]) nb.push_back(u);
        if ((int)nb.size() > w) continue;
        bool clique = true;
        for (size_t i = 0; i < nb.size() && clique; ++i)
            for (size_t j = i + 1; j < nb.size(); ++j)
                if (!g[nb[i]][nb[j]]) { clique = false; break; }
        if (clique) {
            order.push_back(v);
            alive[v] = false;
            if (elim_order_search(g, alive, w, order)) return true;
            order.pop_back();
            return false;  // simplicial elimination is always safe; no need to branch
        }
    }
    for (int v = 0; v < n; ++v) {
        if (!alive[v]) continue;
        std::vector<int> nb;
        for (int u = 0; u < n; ++u)
            if (alive[u] && u != v && g[v][u]) nb.push_back(u);
        if ((int)nb.size() > w) continue;
        AdjMatrix g2 = g;
        std::vector<bool> alive2 = alive;
        for (size_t i = 0; i < nb.size(); ++i)
            for (size_t j = i + 1; j < nb.size(); ++j)
                g2[nb[i]][nb[j]] = g2[nb[j]][nb[i]] = true;
        alive2[v] = false;
        order.push_back(v);
        if (elim_order_search(g2, alive2, w, order)) return true;
        order.pop_back();
    }
    return false;
}

} // namespace detail

inline TreewidthResult exact_treewidth(const Structure& s, int cap = 8) {
    std::set<ElemId> dset = s.dom();
    std::vector<ElemId> dom(dset.begin(), dset.end());
    int n = (int)dom.size();
    if (n > cap) throw TooLarge("exact_treewidth: domain larger than cap");
    if (n == 0) {
        // Width 0 by convention; the witness bag holds one spare element so
        // that its width matches the report.
        TreeDecomposition td;
        td.nodes = {0};
        td.root = 0;
        td.bags[0] = {0};
        return {0, td};
    }
    std::map<ElemId, int> idx;
    for (int i = 0; i < n; ++i) idx[dom[i]] = i;
    detail::AdjMatrix g(n, std::vector<bool>(n, false));
    for (const auto& [r, ts] : s.tuples)
        for (const auto& t : ts)
            for (ElemId a : t)
                for (ElemId b : t)
                    if (a != b) g[idx[a]][idx[b]] = true;

    for (int w = 0; w < n; ++w) {
        std::vector<int> order;
        if (!detail::elim_order_search(g, std::vector<bool>(n, true), w, order)) continue;
        // Build a decomposition from the elimination order: the bag of v is v
        // plus its (fill-in) neighbors at elimination time; v's node hangs
        // below the node of its earliest-later-eliminated neighbor.
        std::vector<int> pos(n);
        for (int i = 0; i < n; ++i) pos[order[i]] = i;
        detail::AdjMatrix g2 = g;
        std::vector<std::vector<int>> bag_idx(n);
        for (int i = 0; i < n; ++i) {
            int v = order[i];
            std::vector<int> nb;
            for (int u = 0; u < n; ++u)
                if (pos[u] > i && g2[v][u]) nb.push_back(u);
            for (size_t a = 0; a < nb.size(); ++a)
                for (size_t b = a + 1; b < nb.size(); ++b)
                    g2[nb[a]][nb[b]] = g2[nb[b]][nb[a]] = true;
            bag_idx[i] = nb;
        }
        TreeDecomposition td;
        td.root = n - 1;
        for (int i = 0; i < n; ++i) {
            td.nodes.insert(i);
            std::set<ElemId> bag = {dom[order[i]]};
            for (int u : bag_idx[i]) bag.insert(dom[u]);
            td.bags[i] = bag;
            if (i < n - 1) {
                int p = n - 1;  // default: hang under the last node
                int best = n;
                for (int u : bag_idx[i])
                    if (pos[u] < best) best = pos[u];
                if (best < n) p = best;
                td.parent[i] = p;
            }
        }
        assert(validate(td, s).ok);
        int width = std::max(td.width(), w);
        return {w, td};
    }
    // Unreachable: w = n-1 always admits an order.
    throw SlrError("exact_treewidth: search failed");
}

// ---------------------------------------------------------------------------
// Reduced decompositions.  A decomposition of uniform bag size k+1 is reduced
// when:
//   (1) every tuple has a designated leaf whose bag contains it (its witness),
//   (2) every leaf is the witness of exactly one tuple,
//   (3) every node has at most two children,
//   (4) a node with two children has the same bag as both children,
//   (5) a node with one child either has the child's bag (and the child is a
//       witness leaf) or the two bags differ by exactly one element each way,
//   (6) all bags have exactly k+1 elements.
// Bags may contain spare elements outside the structure's domain (padding).

struct ReducedDecomposition {
    TreeDecomposition td;
    std::map<int, std::pair<std::string, Tuple>> witness;  // leaf -> tuple
    std::set<ElemId> padding;                              // non-domain bag members
};

// Clause-by-clause validator, written directly against the definition and
// independent of the reduce() construction below.
inline ValidationResult check_reduced(const ReducedDecomposition& rd, const Structure& s,
                                      int k) {
    const TreeDecomposition& td = rd.td;
    if (auto r = validate(td, s); !r.ok) return r;
    // Clause 6: uniform bag size.
    for (const auto& [n, b] : td.bags)
        if ((int)b.size() != k + 1)
            return {false, "clause 6: bag of node " + std::to_string(n) + " has wrong size"};
    // Leaves.
    std::set<int> leaves;
    for (int n : td.nodes)
        if (td.children_of(n).empty()) leaves.insert(n);
    // Clauses 1 and 2 via the designated witness map.
    std::set<std::pair<std::string, Tuple>> all;
    for (const auto& [r, ts] : s.tuples)
        for (const auto& t : ts) all.insert({r, t});
    std::set<std::pair<std::string, Tuple>> seen;
    for (const auto& [leaf, wt] : rd.witness) {
        if (!leaves.count(leaf)) return {false, "clause 1: witness node is not a leaf"};
        if (!all.count(wt)) return {false, "clause 1: witness maps to unknown tuple"};
        if (!seen.insert(wt).second) return {false, "clause 1: tuple has two witnesses"};
        for (ElemId e : wt.second)
            if (!td.bags.at(leaf).count(e))
                return {false, "clause 1: witness bag does not contain its tuple"};
    }
    if (seen != all) return {false, "clause 1: some tuple has no witness"};
    for (int leaf : leaves)
        if (!rd.witness.count(leaf))
            return {false, "clause 2: leaf witnesses no tuple"};
    // Clauses 3-5.
    for (int n : td.nodes) {
        auto ch = td.children_of(n);
        if (ch.size() > 2) return {false, "clause 3: node with more than two children"};
        if (ch.size() == 2) {
            if (td.bags.at(ch[0]) != td.bags.at(n) || td.bags.at(ch[1]) != td.bags.at(n))
                return {false, "clause 4: branching node with unequal bags"};
        }
        if (ch.size() == 1) {
            const auto& bn = td.bags.at(n);
            const auto& bm = td.bags.at(ch[0]);
            if (bn == bm) {
                if (!rd.witness.count(ch[0]))
                    return {false, "clause 5: equal-bag child is not a witness leaf"};
            } else {
                std::vector<ElemId> only_n, only_m;
                for (ElemId e : bn)
                    if (!bm.count(e)) only_n.push_back(e);
                for (ElemId e : bm)
                    if (!bn.count(e)) only_m.push_back(e);
                if (only_n.size() != 1 || only_m.size() != 1)
                    return {false, "clause 5: chain step differs by more than one swap"};
            }
        }
    }
    return {};
}

// Build a reduced decomposition of the same width from an arbitrary valid one.
// Requires at least one tuple (leaves must witness tuples).
inline ReducedDecomposition reduce(const TreeDecomposition& td_in, const Structure& s) {
    if (auto r = validate(td_in, s); !r.ok) throw InvalidInput("reduce: " + r.reason);
    if (s.tuple_count() == 0)
        throw InvalidInput("reduce: structure has no tuples, no leaf can be a witness");
    int k = std::max(td_in.width(), 0);
    std::set<ElemId> dom = s.dom();

    ReducedDecomposition rd;
    int next_node = 0;
    auto new_node = [&](const std::set<ElemId>& bag) {
        int n = next_node++;
        rd.td.nodes.insert(n);
        rd.td.bags[n] = bag;
        return n;
    };

    // Pad every bag to size k+1 with fresh spare elements (one private set per
    // bag; spare elements are exempt from the connectedness clause).
    std::set<ElemId> used = dom;
    for (const auto& [n, b] : td_in.bags) used.insert(b.begin(), b.end());
    std::map<int, std::set<ElemId>> padded;
    for (int n : td_in.nodes) {
        std::set<ElemId> b = td_in.bags.at(n);
        int need = k + 1 - (int)b.size();
        if (need > 0) {
            for (ElemId e : fresh_ids(used, need)) {
                b.insert(e);
                used.insert(e);
                rd.padding.insert(e);
            }
        }
        padded[n] = b;
    }

    // Assign each tuple a home node whose (original) bag covers it.
    std::map<int, std::vector<std::pair<std::string, Tuple>>> home;
    for (const auto& [rname, ts] : s.tuples)
        for (const auto& t : ts) {
            int h = -1;
            for (int n : td_in.nodes) {
                bool inside = true;
                for (ElemId e : t)
                    if (!td_in.bags.at(n).count(e)) { inside = false; break; }
                if (inside) { h = n; break; }
            }
            assert(h != -1);
            home[h].push_back({rname, t});
        }

    // One-swap chain from bag `from` down to bag `to`; returns the chain's top
    // node and links its bottom to `bottom`.  Both bags have size k+1.
    auto make_chain = [&](std::set<ElemId> from, const std::set<ElemId>& to, int bottom) {
        std::vector<ElemId> drop, add;
        for (ElemId e : from)
            if (!to.count(e)) drop.push_back(e);
        for (ElemId e : to)
            if (!from.count(e)) add.push_back(e);
        assert(drop.size() == add.size());
        // Intermediate bags between `from` (exclusive) and `to` (exclusive).
        std::vector<std::set<ElemId>> bags;
        std::set<ElemId> cur = from;
        for (size_t i = 0; i + 1 < drop.size(); ++i) {
            cur.erase(drop[i]);
            cur.insert(add[i]);
            bags.push_back(cur);
        }
        int below = bottom;
        for (auto it = bags.rbegin(); it != bags.rend(); ++it) {
            int n = new_node(*it);
            rd.td.parent[below] = n;
            below = n;
        }
        int top = new_node(from);
        rd.td.parent[below] = top;
        return top;
    };

    // Recursive rebuild.  Returns the root of the reduced subtree for n, or
    // -1 when the subtree contains no witness leaves and can be dropped.  The
    // returned root's bag is always padded[n].
    std::function<int(int)> build = [&](int n) -> int {
        const std::set<ElemId>& bag = padded.at(n);
        std::vector<int> parts;  // roots of part-trees, each with bag `bag`
        auto it = home.find(n);
        if (it != home.end())
            for (const auto& wt : it->second) {
                int leaf = new_node(bag);
                rd.witness[leaf] = wt;
                parts.push_back(leaf);
            }
        for (int c : td_in.children_of(n)) {
            int sub = build(c);
            if (sub == -1) continue;
            if (padded.at(c) == bag) {
                parts.push_back(sub);
            } else {
                parts.push_back(make_chain(bag, padded.at(c), sub));
            }
        }
        if (parts.empty()) return -1;
        // Combine parts with a left spine of branching nodes carrying `bag`.
        int acc = parts[0];
        for (size_t i = 1; i < parts.size(); ++i) {
            int b = new_node(bag);
            rd.td.parent[acc] = b;
            rd.td.parent[parts[i]] = b;
            acc = b;
        }
        return acc;
    };

    int root = build(td_in.root);
    assert(root != -1);

    // Clause-5 guard at the seam of a single non-leaf part: `build` can return
    // a node whose bag equals its single child's bag while that child is
    // internal.  This only happens when a node has exactly one surviving part
    // that is itself an equal-bag child subtree; in that case `build` returned
    // the part directly, so no extra node was created and no seam exists.

    // Elements of the domain appearing in no retained bag (isolated constants
    // whose original bags were dropped): swap them in above the root.
    std::set<ElemId> covered;
    for (const auto& [n, b] : rd.td.bags) covered.insert(b.begin(), b.end());
    std::set<ElemId> cur = rd.td.bags.at(root);
    int top = root;
    for (ElemId e : dom) {
        if (covered.count(e)) continue;
        // Swap out some element of `cur` that also occurs below.
        ElemId out_elem = *cur.begin();
        std::set<ElemId> nb = cur;
        nb.erase(out_elem);
        nb.insert(e);
        int n = new_node(nb);
        rd.td.parent[top] = n;
        top = n;
        cur = nb;
        covered.insert(e);
    }
    rd.td.root = top;
    return rd;
}

// ---------------------------------------------------------------------------
// Text format.
//
//   node <id>
//   edge <parent> <child>
//   root <id>
//   bag <node> <elem> ... <elem>

inline TreeDecomposition parse_decomposition(const std::string& text) {
    TreeDecomposition td;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        std::istringstream ls(line);
        std::string kw;
        if (!(ls >> kw)) continue;
        auto where = [&]() { return "line " + std::to_string(lineno) + ": "; };
        if (kw == "node") {
            int n;
            if (!(ls >> n)) throw SyntaxError(where() + "expected node id");
            if (!td.nodes.insert(n).second) throw SyntaxError(where() + "duplicate node");
            td.bags.emplace(n, std::set<ElemId>{});
        } else if (kw == "edge") {
            int p, c;
            if (!(ls >> p >> c)) throw SyntaxError(where() + "expected parent and child ids");
            if (td.parent.count(c)) throw SyntaxError(where() + "child has two parents");
            td.parent[c] = p;
        } else if (kw == "root") {
            int r;
            if (!(ls >> r)) throw SyntaxError(where() + "expected root id");
            td.root = r;
        } else if (kw == "bag") {
            int n;
            if (!(ls >> n)) throw SyntaxError(where() + "expected node id");
            if (!td.nodes.count(n)) throw SyntaxError(where() + "bag for undeclared node");
            ElemId e;
            while (ls >> e) td.bags[n].insert(e);
        } else {
            throw SyntaxError(where() + "unknown directive '" + kw + "'");
        }
    }
    return td;
}

inline std::string print_decomposition(const TreeDecomposition& td) {
    std::ostringstream out;
    for (int n : td.nodes) out << "node " << n << "\n";
    out << "root " << td.root << "\n";
    for (const auto& [c, p] : td.parent) out << "edge " << p << " " << c << "\n";
    for (int n : td.nodes) {
        out << "bag " << n;
        for (ElemId e : td.bags.at(n)) out << " " << e;
        out << "\n";
    }
    return out.str();
}

} // namespace slr
