#pragma once

// Generators and encoders:
//   * context-free grammars: parsing, a brute-force membership oracle,
//     Greibach normalization, and the translation of a Greibach grammar into
//     a definition system over word structures;
//   * word structures and clique structures;
//   * the bounded-treewidth definition system: a structure has treewidth at
//     most k iff some cover extension of it satisfies the generated top-level
//     predicate;
//   * its type-annotated refinement: predicates carry the rank-r MSO type of
//     the (port-encoded) substructure they generate, and the top rule keeps
//     only types containing a given sentence -- tying MSO satisfaction plus
//     bounded treewidth to derivability.

#include <functional>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mso_type.hpp"
#include "slr_ast.hpp"
#include "slr_check.hpp"
#include "so_ast.hpp"
#include "so_eval.hpp"
#include "structures.hpp"

namespace slr {

// ---------------------------------------------------------------------------
// Context-free grammars.  A symbol is a nonterminal iff it heads a production
// (or is the start symbol); anything else is a terminal.

struct Cfg {
    std::string start;
    std::vector<std::pair<std::string, std::vector<std::string>>> prods;

    std::set<std::string> nonterminals() const {
        std::set<std::string> out{start};
        for (const auto& [h, rhs] : prods) out.insert(h);
        return out;
    }

    bool is_terminal(const std::string& sym) const { return !nonterminals().count(sym); }
};

// Format: 'start <S>' once, then 'prod <Head> -> <sym> ... <sym>' lines (an
// empty right-hand side denotes the empty word).
inline Cfg parse_cfg(const std::string& text) {
    Cfg g;
    bool have_start = false;
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
        if (kw == "start") {
            if (have_start) throw SyntaxError(where() + "duplicate start directive");
            if (!(ls >> g.start)) throw SyntaxError(where() + "expected start symbol");
            have_start = true;
        } else if (kw == "prod") {
            std::string head, arrow;
            if (!(ls >> head >> arrow) || arrow != "->")
                throw SyntaxError(where() + "expected 'prod Head -> ...'");
            std::vector<std::string> rhs;
            std::string sym;
            while (ls >> sym) rhs.push_back(sym);
            g.prods.push_back({head, rhs});
        } else {
            throw SyntaxError(where() + "unknown directive '" + kw + "'");
        }
    }
    if (!have_start) throw SyntaxError("missing start directive");
    return g;
}

inline std::string print_cfg(const Cfg& g) {
    std::ostringstream out;
    out << "start " << g.start << "\n";
    for (const auto& [h, rhs] : g.prods) {
        out << "prod " << h << " ->";
        for (const auto& s : rhs) out << " " << s;
        out << "\n";
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Membership oracle: memoized substring derivability with an in-progress cut
// (a minimal parse tree never repeats (symbol, span) along a root path).

class CfgMembership {
public:
    explicit CfgMembership(const Cfg& g) : g_(g), nts_(g.nonterminals()) {}

    bool contains(const std::vector<std::string>& word) {
        word_ = word;
        memo_.clear();
        in_progress_.clear();
        return derive(g_.start, 0, (int)word.size()).value;
    }

private:
    struct Outcome {
        bool value;
        bool tainted;
    };
    using Key = std::tuple<std::string, int, int>;

    const Cfg& g_;
    std::set<std::string> nts_;
    std::vector<std::string> word_;
    std::map<Key, bool> memo_;
    std::set<Key> in_progress_;

    Outcome derive(const std::string& sym, int i, int j) {
        if (!nts_.count(sym)) return {j == i + 1 && word_[i] == sym, false};
        Key key{sym, i, j};
        auto it = memo_.find(key);
        if (it != memo_.end()) return {it->second, false};
        if (in_progress_.count(key)) return {false, true};
        in_progress_.insert(key);
        bool value = false, tainted = false;
        for (const auto& [h, rhs] : g_.prods) {
            if (h != sym) continue;
            Outcome o = match(rhs, 0, i, j);
            tainted |= o.tainted;
            if (o.value) { value = true; break; }
        }
        in_progress_.erase(key);
        if (value || !tainted) memo_[key] = value;
        return {value, value ? false : tainted};
    }

    Outcome match(const std::vector<std::string>& rhs, size_t pos, int i, int j) {
        if (pos == rhs.size()) return {i == j, false};
        bool tainted = false;
        for (int m = i; m <= j; ++m) {
            Outcome a = derive(rhs[pos], i, m);
            tainted |= a.tainted;
            if (a.value) {
                Outcome b = match(rhs, pos + 1, m, j);
                tainted |= b.tainted;
                if (b.value) return {true, false};
            }
        }
        return {false, tainted};
    }
};

inline bool cfg_contains(const Cfg& g, const std::string& word) {
    std::vector<std::string> syms;
    for (char c : word) syms.push_back(std::string(1, c));
    CfgMembership m(g);
    return m.contains(syms);
}

// ---------------------------------------------------------------------------
// Greibach normalization: every production becomes 'A -> t B1 ... Bm' with t
// a terminal.  Requires a language without the empty word.

namespace detail {

inline std::set<std::string> nullable_set(const Cfg& g) {
    std::set<std::string> out;
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& [h, rhs] : g.prods) {
            if (out.count(h)) continue;
            bool all = true;
            for (const auto& s : rhs)
                if (!out.count(s)) { all = false; break; }
            if (all) {
                out.insert(h);
                changed = true;
            }
        }
    }
    return out;
}

} // namespace detail

inline Cfg greibach_normalize(const Cfg& in) {
    std::set<std::string> nts = in.nonterminals();
    auto nullable = detail::nullable_set(in);
    if (nullable.count(in.start))
        throw InvalidInput("greibach_normalize: language contains the empty word");

    using Prods = std::set<std::pair<std::string, std::vector<std::string>>>;
    Prods prods;

    // Epsilon elimination: every variant dropping some nullable occurrences.
    for (const auto& [h, rhs] : in.prods) {
        std::vector<int> null_pos;
        for (size_t i = 0; i < rhs.size(); ++i)
            if (nullable.count(rhs[i])) null_pos.push_back((int)i);
        for (std::uint64_t m = 0; m < (std::uint64_t(1) << null_pos.size()); ++m) {
            std::set<int> drop;
            for (size_t i = 0; i < null_pos.size(); ++i)
                if (m & (std::uint64_t(1) << i)) drop.insert(null_pos[i]);
            std::vector<std::string> out;
            for (size_t i = 0; i < rhs.size(); ++i)
                if (!drop.count((int)i)) out.push_back(rhs[i]);
            if (!out.empty()) prods.insert({h, out});
        }
    }

    // Unit elimination.
    {
        bool changed = true;
        while (changed) {
            changed = false;
            Prods next = prods;
            for (const auto& [h, rhs] : prods) {
                if (rhs.size() == 1 && nts.count(rhs[0])) {
                    next.erase({h, rhs});
                    for (const auto& [h2, rhs2] : prods)
                        if (h2 == rhs[0] && !(rhs2.size() == 1 && nts.count(rhs2[0])))
                            next.insert({h, rhs2});
                    changed = true;
                }
            }
            // Also inline unit-to-unit chains by iterating to a fixpoint.
            if (next != prods) {
                prods = next;
                changed = true;
            } else {
                changed = false;
            }
        }
        // Drop any remaining pure unit cycles (they generate nothing new).
        Prods cleaned;
        for (const auto& p : prods)
            if (!(p.second.size() == 1 && nts.count(p.second[0]))) cleaned.insert(p);
        prods = cleaned;
    }

    // Useless-symbol removal.
    {
        std::set<std::string> gen;
        bool changed = true;
        while (changed) {
            changed = false;
            for (const auto& [h, rhs] : prods) {
                if (gen.count(h)) continue;
                bool all = true;
                for (const auto& s : rhs)
                    if (nts.count(s) && !gen.count(s)) { all = false; break; }
                if (all) {
                    gen.insert(h);
                    changed = true;
                }
            }
        }
        Prods kept;
        for (const auto& [h, rhs] : prods) {
            if (!gen.count(h)) continue;
            bool ok = true;
            for (const auto& s : rhs)
                if (nts.count(s) && !gen.count(s)) { ok = false; break; }
            if (ok) kept.insert({h, rhs});
        }
        std::set<std::string> reach{in.start};
        changed = true;
        while (changed) {
            changed = false;
            for (const auto& [h, rhs] : kept)
                if (reach.count(h))
                    for (const auto& s : rhs)
                        if (nts.count(s) && reach.insert(s).second) changed = true;
        }
        Prods final_;
        for (const auto& [h, rhs] : kept)
            if (reach.count(h)) final_.insert({h, rhs});
        prods = final_;
    }

    // Mutable production map for the recursion-elimination phases.
    std::map<std::string, std::vector<std::vector<std::string>>> P;
    for (const auto& [h, rhs] : prods) P[h].push_back(rhs);

    std::vector<std::string> order;
    order.push_back(in.start);
    for (const auto& n : nts)
        if (n != in.start && P.count(n)) order.push_back(n);
    std::map<std::string, int> rank;
    for (size_t i = 0; i < order.size(); ++i) rank[order[i]] = (int)i;

    auto is_nt = [&](const std::string& s) { return nts.count(s) || P.count(s); };

    // Left-recursion elimination (Paull ordering).
    int fresh = 0;
    std::vector<std::string> tails;  // fresh continuation nonterminals
    for (size_t i = 0; i < order.size(); ++i) {
        const std::string& Ai = order[i];
        // Substitute lower-ranked leading nonterminals until none remain.
        bool changed = true;
        while (changed) {
            changed = false;
            std::vector<std::vector<std::string>> next;
            for (const auto& rhs : P[Ai]) {
                const std::string& lead = rhs[0];
                if (is_nt(lead) && rank.count(lead) && rank[lead] < (int)i) {
                    for (const auto& sub : P[lead]) {
                        std::vector<std::string> r = sub;
                        r.insert(r.end(), rhs.begin() + 1, rhs.end());
                        next.push_back(r);
                    }
                    changed = true;
                } else {
                    next.push_back(rhs);
                }
            }
            P[Ai] = next;
        }
        // Immediate left recursion.
        std::vector<std::vector<std::string>> rec, base;
        for (const auto& rhs : P[Ai]) {
            if (rhs[0] == Ai)
                rec.push_back({rhs.begin() + 1, rhs.end()});
            else
                base.push_back(rhs);
        }
        if (!rec.empty()) {
            std::string Z = "_Tail" + std::to_string(fresh++);
            tails.push_back(Z);
            std::vector<std::vector<std::string>> na;
            for (const auto& b : base) {
                na.push_back(b);
                std::vector<std::string> bz = b;
                bz.push_back(Z);
                na.push_back(bz);
            }
            P[Ai] = na;
            std::vector<std::vector<std::string>> nz;
            for (const auto& a : rec) {
                if (a.empty())
                    throw InvalidInput("greibach_normalize: unit left recursion survived");
                nz.push_back(a);
                std::vector<std::string> az = a;
                az.push_back(Z);
                nz.push_back(az);
            }
            P[Z] = nz;
            nts.insert(Z);
        }
    }

    // Forward substitution until every production starts with a terminal.
    auto all_terminal_initial = [&](const std::string& n) {
        for (const auto& rhs : P[n])
            if (is_nt(rhs[0])) return false;
        return true;
    };
    bool changed = true;
    while (changed) {
        changed = false;
        for (auto& [h, rules] : P) {
            std::vector<std::vector<std::string>> next;
            for (const auto& rhs : rules) {
                if (is_nt(rhs[0]) && P.count(rhs[0]) && all_terminal_initial(rhs[0])) {
                    for (const auto& sub : P[rhs[0]]) {
                        std::vector<std::string> r = sub;
                        r.insert(r.end(), rhs.begin() + 1, rhs.end());
                        next.push_back(r);
                    }
                    changed = true;
                } else {
                    next.push_back(rhs);
                }
            }
            rules = next;
        }
    }

    // Replace non-leading terminals with wrapper nonterminals.
    std::map<std::string, std::string> wrapper;
    Cfg out;
    out.start = in.start;
    for (const auto& n : order) {
        for (const auto& rhs : P[n]) {
            if (is_nt(rhs[0]))
                throw InvalidInput("greibach_normalize: could not reach Greibach form "
                                   "(grammar may be degenerate)");
            std::vector<std::string> r = rhs;
            for (size_t k = 1; k < r.size(); ++k) {
                if (!is_nt(r[k])) {
                    auto it = wrapper.find(r[k]);
                    if (it == wrapper.end()) {
                        std::string w = "_Term_" + r[k];
                        wrapper[r[k]] = w;
                        it = wrapper.find(r[k]);
                    }
                    r[k] = it->second;
                }
            }
            out.prods.push_back({n, r});
        }
    }
    for (const auto& z : tails) {
        for (const auto& rhs : P[z]) {
            if (is_nt(rhs[0]))
                throw InvalidInput("greibach_normalize: tail nonterminal not normalized");
            std::vector<std::string> r = rhs;
            for (size_t k = 1; k < r.size(); ++k)
                if (!is_nt(r[k])) {
                    if (!wrapper.count(r[k])) wrapper[r[k]] = "_Term_" + r[k];
                    r[k] = wrapper[r[k]];
                }
            out.prods.push_back({z, r});
        }
    }
    for (const auto& [t, w] : wrapper) out.prods.push_back({w, {t}});
    return out;
}

// True when every production is 'A -> terminal nonterminal*'.
inline bool is_greibach(const Cfg& g) {
    auto nts = g.nonterminals();
    for (const auto& [h, rhs] : g.prods) {
        if (rhs.empty() || nts.count(rhs[0])) return false;
        for (size_t i = 1; i < rhs.size(); ++i)
            if (!nts.count(rhs[i])) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Word structures: positions 1..n, a vertex predicate, the successor edge,
// one letter predicate per alphabet symbol, and constants for the first and
// last position.

inline Signature word_signature(const std::vector<std::string>& alphabet) {
    Signature sig;
    sig.add_relation("V", 1);
    sig.add_relation("E", 2);
    for (const auto& t : alphabet) sig.add_relation("P_" + t, 1);
    sig.add_constant("b");
    sig.add_constant("e");
    return sig;
}

inline Structure word_to_structure(const std::string& word,
                                   const std::vector<std::string>& alphabet = {"a", "b"}) {
    if (word.empty()) throw InvalidInput("word_to_structure: empty word");
    Structure s;
    s.sig = word_signature(alphabet);
    int n = (int)word.size();
    for (int i = 1; i <= n; ++i) {
        s.add_tuple("V", {i});
        std::string letter(1, word[i - 1]);
        if (!s.sig.has_relation("P_" + letter))
            throw InvalidInput("word_to_structure: letter outside alphabet: " + letter);
        s.add_tuple("P_" + letter, {i});
        if (i < n) s.add_tuple("E", {i, i + 1});
    }
    s.set_const("b", 1);
    s.set_const("e", n);
    return s;
}

// ---------------------------------------------------------------------------
// Greibach grammar -> definition system.  Derivability of A_<NT>(b, e) over
// the word structure coincides with grammar membership.

inline std::string cfg_pred_name(const std::string& nt) { return "A_" + nt; }

inline Sid cfg_to_sid(const Cfg& g, const std::vector<std::string>& alphabet = {"a", "b"}) {
    if (!is_greibach(g)) throw InvalidInput("cfg_to_sid: grammar is not in Greibach form");
    Sid sid;
    sid.sig = word_signature(alphabet);
    auto nts = g.nonterminals();
    for (const auto& [h, rhs] : g.prods) {
        const std::string& t = rhs[0];
        if (!sid.sig.has_relation("P_" + t))
            throw InvalidInput("cfg_to_sid: terminal outside alphabet: " + t);
        int i = (int)rhs.size() - 1;  // number of nonterminals after the terminal
        std::vector<SlrPtr> atoms;
        atoms.push_back(mk_rel("V", {var("x1")}));
        atoms.push_back(mk_rel("P_" + t, {var("x1")}));
        std::vector<std::string> bound;
        if (i > 0) {
            // Positions: x1 -E-> u1; A(u1,u2); u2 -E-> u3; A(u3,u4); ...;
            // the last nonterminal ends at x2.
            for (int j = 1; j <= 2 * i - 1; ++j) bound.push_back("u" + std::to_string(j));
            atoms.push_back(mk_rel("E", {var("x1"), var("u1")}));
            for (int j = 1; j <= i; ++j) {
                Term from = var("u" + std::to_string(2 * j - 1));
                Term to = j == i ? var("x2") : var("u" + std::to_string(2 * j));
                atoms.push_back(mk_pred(cfg_pred_name(rhs[j]), {from, to}));
                if (j < i)
                    atoms.push_back(mk_rel(
                        "E", {var("u" + std::to_string(2 * j)), var("u" + std::to_string(2 * j + 1))}));
            }
        }
        PrenexBody pb;
        pb.bound = bound;
        pb.atoms = atoms;
        sid.rules.push_back(Rule{cfg_pred_name(h), {"x1", "x2"}, from_prenex(pb)});
    }
    return sid;
}

// ---------------------------------------------------------------------------
// Cliques: elements 1..n with an edge in both directions between any two
// distinct elements.

inline Structure clique_structure(int n) {
    if (n < 1) throw InvalidInput("clique_structure: need at least one vertex");
    Structure s;
    s.sig.add_relation("E", 2);
    for (int i = 1; i <= n; ++i)
        for (int j = 1; j <= n; ++j)
            if (i != j) s.add_tuple("E", {i, j});
    if (n == 1) s.add_tuple("E", {1, 1});  // keep the lone vertex in the domain
    return s;
}

// ---------------------------------------------------------------------------
// Bounded-treewidth definition system.  Over the signature extended with the
// unary cover relation, the generated system has:
//   * a composition rule   A(x...) <- A(x...) * A(x...)
//   * one replacement rule per position i:
//         A(x...) <- exists y . D(y) * A(x..., y at i, ...)
//   * one base rule per relation and argument map into the parameters
//   * a top rule  A_top() <- exists x1..x_{k+1} . D(x1)*...*D(x_{k+1})*A(x...)

inline const std::string kTwPred = "A";
inline const std::string kTwTop = "A_top";

inline Sid gen_twk_sid(int k, const Signature& sig) {
    if (k < 1) throw InvalidInput("gen_twk_sid: k must be at least 1");
    if (sig.has_relation(kCoverRelation)) throw ReservedSymbol(kCoverRelation);
    Sid sid;
    sid.sig = sig;
    sid.sig.add_relation(kCoverRelation, 1);

    std::vector<std::string> params;
    std::vector<Term> pvars;
    for (int i = 1; i <= k + 1; ++i) {
        params.push_back("x" + std::to_string(i));
        pvars.push_back(var(params.back()));
    }

    // Composition.
    sid.rules.push_back(Rule{kTwPred, params,
                             mk_star(mk_pred(kTwPred, pvars), mk_pred(kTwPred, pvars))});
    // Replacement.
    for (int i = 0; i <= k; ++i) {
        std::vector<Term> args = pvars;
        args[i] = var("y");
        SlrPtr body = mk_exists(
            "y", mk_star(mk_rel(kCoverRelation, {var("y")}), mk_pred(kTwPred, args)));
        sid.rules.push_back(Rule{kTwPred, params, body});
    }
    // Base rules: one per relation and argument map.
    for (const auto& [r, ar] : sig.relations) {
        std::vector<int> idx(ar, 0);
        while (true) {
            std::vector<Term> args;
            for (int j = 0; j < ar; ++j) args.push_back(pvars[idx[j]]);
            sid.rules.push_back(Rule{kTwPred, params, mk_rel(r, args)});
            int j = ar - 1;
            while (j >= 0 && idx[j] == k) idx[j--] = 0;
            if (j < 0) break;
            ++idx[j];
        }
    }
    // Top.
    {
        std::vector<SlrPtr> atoms;
        for (int i = 0; i <= k; ++i) atoms.push_back(mk_rel(kCoverRelation, {pvars[i]}));
        atoms.push_back(mk_pred(kTwPred, pvars));
        SlrPtr body = mk_star_all(atoms);
        for (int i = k; i >= 0; --i) body = mk_exists(params[i], body);
        sid.rules.push_back(Rule{kTwTop, {}, body});
    }
    return sid;
}

// ---------------------------------------------------------------------------
// Type-annotated variant.  Each predicate A_t<i> stands for "generates a
// substructure whose port-encoded rank-r type is types[i]"; the top rule
// keeps exactly the types containing the sentence phi.

struct TwMsoSid {
    Sid sid;
    std::vector<MsoType> types;            // index -> type
    std::map<std::string, int> type_index; // type key -> index
    TypeRegistry registry;
    std::string top;                       // top predicate name
};

namespace detail {

// Partitions of {0..n-1}; reused from the normalization machinery.
inline std::vector<std::vector<int>> port_partitions(int n) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur(n, 0);
    std::function<void(int, int)> go = [&](int i, int classes) {
        if (i == n) {
            out.push_back(cur);
            return;
        }
        for (int c = 0; c <= classes; ++c) {
            cur[i] = c;
            go(i + 1, classes + (c == classes ? 1 : 0));
        }
    };
    go(0, 0);
    return out;
}

} // namespace detail

// The annotated system for an unrestricted structure set can be astronomically
// large (the rank-1 closure over a binary relation already exceeds tens of
// thousands of types), so the closure is organized by each type's minimal
// realization cost: the least number of relation tuples a derivation of that
// type consumes.  Composition adds costs, replacement keeps them.  A
// derivation over a structure with T relation tuples only ever passes through
// types of cost at most T, so with `max_tuples = T` the generated system is
// still sound for every structure and complete for structures with at most T
// relation tuples.  The default (-1) leaves the cost unrestricted and relies
// on the type cap to diagnose divergence.
inline TwMsoSid gen_twk_mso_sid(int k, const Signature& sig, const SoPtr& phi,
                                int max_types = 512, int max_tuples = -1) {
    if (k < 1) throw InvalidInput("gen_twk_mso_sid: k must be at least 1");
    if (sig.has_relation(kCoverRelation)) throw ReservedSymbol(kCoverRelation);
    for (int i = 1; i <= k + 1; ++i)
        if (sig.has_constant(port_name(i)) || sig.has_relation(port_name(i)))
            throw ReservedSymbol(port_name(i));
    int r = quantifier_rank(phi);
    int budget = max_tuples < 0 ? std::numeric_limits<int>::max() / 4 : max_tuples;
    if (budget < 1) throw InvalidInput("gen_twk_mso_sid: tuple budget must allow one tuple");

    TwMsoSid out;
    out.sid.sig = sig;
    out.sid.sig.add_relation(kCoverRelation, 1);
    out.top = kTwTop;

    std::vector<std::string> params;
    std::vector<Term> pvars;
    for (int i = 1; i <= k + 1; ++i) {
        params.push_back("x" + std::to_string(i));
        pvars.push_back(var(params.back()));
    }

    auto pred_of = [&](int ti) { return "A_t" + std::to_string(ti); };

    std::vector<int> tcost;                   // final minimal cost per type
    std::map<int, std::vector<int>> levels;   // cost -> type indices
    // Returns the type index, or -1 when the type is new but over budget.
    auto intern = [&](const PaddedStructure& rep, int c) -> int {
        PaddedStructure small = r <= 1 ? shrink_rank1(rep) : rep;
        PaddedStructure trimmed = trim_padding(small, r);
        MsoType t = mso_type(trimmed, r, &out.registry);
        auto it = out.type_index.find(t.key);
        if (it != out.type_index.end()) return it->second;
        if (c > budget) return -1;
        int idx = (int)out.types.size();
        out.types.push_back(t);
        out.type_index[t.key] = idx;
        tcost.push_back(c);
        levels[c].push_back(idx);
        if ((int)out.types.size() > max_types)
            throw TooLarge("gen_twk_mso_sid: more than " + std::to_string(max_types) +
                           " types discovered");
        return idx;
    };

    // Replacement closure within one cost level: forget a port of the
    // representative, then glue a fresh singleton carrying the port name.
    std::set<std::pair<int, int>> repl_done;  // (type, port)
    auto close_replacements = [&](int c) {
        auto lit = levels.find(c);
        if (lit == levels.end()) return;
        auto& lvl = lit->second;
        for (size_t q = 0; q < lvl.size(); ++q) {
            int i = lvl[q];
            for (int p = 0; p <= k; ++p) {
                if (!repl_done.insert({i, p}).second) continue;
                PaddedStructure rep = out.registry.rep(out.types[i]);
                Structure forgotten = forget_constant(rep.s, port_name(p + 1));
                Structure single;
                single.sig.add_constant(port_name(p + 1));
                single.consts[port_name(p + 1)] = 0;
                PaddedStructure g = glue(PaddedStructure{forgotten, rep.domain},
                                         PaddedStructure{single, {0}});
                int ti = intern(g, c);
                if (ti < 0) continue;
                std::vector<Term> args = pvars;
                args[p] = var("y");
                SlrPtr body = mk_exists(
                    "y",
                    mk_star(mk_rel(kCoverRelation, {var("y")}), mk_pred(pred_of(i), args)));
                out.sid.rules.push_back(Rule{pred_of(ti), params, body});
            }
        }
    };

    // Base rules (cost 1): single relation tuple with ports as arguments,
    // under every equality pattern on the ports.
    for (const auto& [rname, ar] : sig.relations) {
        std::vector<int> idx(ar, 0);
        while (true) {
            for (const auto& part : detail::port_partitions(k + 1)) {
                // Representative: port i interpreted by its class id.
                Structure s;
                s.sig = sig;
                Tuple t;
                for (int j = 0; j < ar; ++j) t.push_back(part[idx[j]]);
                s.add_tuple(rname, t);
                std::vector<ElemId> pvals;
                for (int i = 0; i <= k; ++i) pvals.push_back(part[i]);
                Structure enc = encode_ports(s, pvals);
                int ti = intern(pad(enc, 1 << r), 1);
                if (ti < 0) continue;

                std::vector<SlrPtr> atoms;
                std::vector<Term> args;
                for (int j = 0; j < ar; ++j) args.push_back(pvars[idx[j]]);
                atoms.push_back(mk_rel(rname, args));
                for (int i = 0; i <= k; ++i)
                    for (int j = i + 1; j <= k; ++j)
                        atoms.push_back(part[i] == part[j]
                                            ? mk_eq(pvars[i], pvars[j])
                                            : mk_neq(pvars[i], pvars[j]));
                out.sid.rules.push_back(Rule{pred_of(ti), params, mk_star_all(atoms)});
            }
            int j = ar - 1;
            while (j >= 0 && idx[j] == k) idx[j--] = 0;
            if (j < 0) break;
            ++idx[j];
        }
    }
    close_replacements(1);

    // Composition closure in order of total cost.  Costs assigned this way
    // are final (both operands of a sum are processed no later than the sum),
    // so each unordered pair of types is combined exactly once.
    auto cmax = [&]() { return levels.empty() ? 0 : levels.rbegin()->first; };
    for (int c = 2; c <= std::min(std::min(2 * cmax(), budget),
                                  std::numeric_limits<int>::max() / 4); ++c) {
        for (int c1 = 1; c1 * 2 <= c; ++c1) {
            int c2 = c - c1;
            if (!levels.count(c1) || !levels.count(c2)) continue;
            // Level vectors can grow while iterating (via replacements at
            // level c); index-based loops keep the iteration valid.
            for (size_t a = 0; a < levels[c1].size(); ++a)
                for (size_t b = (c1 == c2 ? a : 0); b < levels[c2].size(); ++b) {
                    int i = levels[c1][a], j = levels[c2][b];
                    PaddedStructure g =
                        glue(out.registry.rep(out.types[i]), out.registry.rep(out.types[j]));
                    int ti = intern(g, c);
                    if (ti < 0) continue;
                    out.sid.rules.push_back(
                        Rule{pred_of(ti), params,
                             mk_star(mk_pred(pred_of(i), pvars), mk_pred(pred_of(j), pvars))});
                }
        }
        close_replacements(c);
    }

    // Top rules for types whose representative satisfies phi.
    for (size_t i = 0; i < out.types.size(); ++i) {
        const PaddedStructure& rep = out.registry.rep(out.types[i]);
        SoStore empty;
        if (!eval_so(rep, empty, phi)) continue;
        std::vector<SlrPtr> atoms;
        for (int p = 0; p <= k; ++p) atoms.push_back(mk_rel(kCoverRelation, {pvars[p]}));
        atoms.push_back(mk_pred(pred_of((int)i), pvars));
        SlrPtr body = mk_star_all(atoms);
        for (int p = k; p >= 0; --p) body = mk_exists(params[p], body);
        out.sid.rules.push_back(Rule{out.top, {}, body});
    }

    // Deduplicate rules (different base patterns can yield identical rules).
    std::set<std::string> seen;
    std::vector<Rule> dedup;
    for (const auto& rule : out.sid.rules) {
        std::ostringstream key;
        key << rule.head << "|" << print_slr(rule.body);
        if (seen.insert(key.str()).second) dedup.push_back(rule);
    }
    out.sid.rules = dedup;
    return out;
}

} // namespace slr
