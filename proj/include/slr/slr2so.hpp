// Translation from SLR predicate atoms to second-order sentences.
//
// A predicate atom A(t1..tm) holds in a structure iff some derivation tree
// rooted at a rule for A consumes the structure exactly.  The translated
// formula asserts the existence of such a tree inside the evaluation domain:
// unary variables X_i label vertices with rules, binary variables Y_j are the
// j-th-child edges, binary variables Z_{k,l} map each vertex to the l-th
// coordinate of the (unique, after split_relation_atoms) R_k-tuple it
// introduces, and binary variables W_v map each vertex to the value of rule
// variable v at that vertex.  The W maps materialize one store per tree node,
// which renders equalities, disequalities and parameter passing as local
// clauses instead of path-based tracking predicates; the path-based
// tracking predicates are still available standalone via emit_param_tracking.
//
// Tree vertices live in the same universe as structure elements, so the
// evaluation domain must be padded with enough fresh elements to host the
// tree (see translation_padding).

#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "slr_ast.hpp"
#include "slr_check.hpp"
#include "so_ast.hpp"
#include "structures.hpp"
#include "unfolding.hpp"

namespace slr {

struct UnknownIndex : SlrError {
    explicit UnknownIndex(const std::string& what) : SlrError("unknown index: " + what) {}
};

// ---------------------------------------------------------------------------
// Translation context: the split SID plus the inventories the clause schemas
// are instantiated over.

struct TranslationContext {
    Sid sid;  // after split_relation_atoms; every relation occurs <= once per rule

    struct RuleInfo {
        std::vector<std::string> vars;               // params then bound, in order
        std::map<int, std::vector<Term>> rel_atoms;  // relation index -> argument terms
        std::vector<const SlrFormula*> pred_atoms;   // in body order
        std::vector<std::pair<Term, Term>> eqs;
        std::vector<std::pair<Term, Term>> neqs;
    };

    int R = 0;                                      // rule count
    int P = 0;                                      // max predicate atoms per rule
    std::vector<std::pair<std::string, int>> rels;  // relation inventory (name, arity)
    std::map<std::string, int> rel_index;
    std::vector<RuleInfo> rules;                    // parallel to sid.rules
    std::set<std::string> all_vars;                 // union of per-rule variables

    // Second-order variable inventory.
    std::string x_name() const { return "_x"; }
    std::string X(int i) const { return "X" + std::to_string(i + 1); }
    std::string Y(int j) const { return "Y" + std::to_string(j + 1); }
    std::string Z(int k, int l) const {
        return "Z_" + std::to_string(k + 1) + "_" + std::to_string(l + 1);
    }
    std::string W(const std::string& v) const { return "W_" + v; }
};

inline TranslationContext make_translation_context(const Sid& sid_in) {
    TranslationContext ctx;
    ctx.sid = split_relation_atoms(sid_in);
    ctx.R = (int)ctx.sid.rules.size();
    for (const auto& [rname, ar] : ctx.sid.sig.relations) {
        ctx.rel_index[rname] = (int)ctx.rels.size();
        ctx.rels.push_back({rname, ar});
    }
    for (const auto& rule : ctx.sid.rules) {
        TranslationContext::RuleInfo info;
        PrenexBody pb = prenex_view(rule.body);
        info.vars = rule.params;
        for (const auto& b : pb.bound) info.vars.push_back(b);
        for (const auto& a : pb.atoms) {
            switch (a->kind) {
                case SlrKind::Emp:
                    break;
                case SlrKind::Eq:
                    info.eqs.push_back({a->lhs, a->rhs});
                    break;
                case SlrKind::Neq:
                    info.neqs.push_back({a->lhs, a->rhs});
                    break;
                case SlrKind::Rel:
                    info.rel_atoms[ctx.rel_index.at(a->name)] = a->args;
                    break;
                case SlrKind::Pred:
                    info.pred_atoms.push_back(a.get());
                    break;
                default:
                    throw SlrError("unexpected connective in prenex atom list");
            }
        }
        ctx.P = std::max(ctx.P, (int)info.pred_atoms.size());
        for (const auto& v : info.vars) ctx.all_vars.insert(v);
        ctx.rules.push_back(std::move(info));
    }
    return ctx;
}

namespace detail {

// "Some rule labels n": X_1(n) | ... | X_R(n).
inline SoPtr labeled(const TranslationContext& ctx, const Term& n) {
    std::vector<SoPtr> alts;
    for (int i = 0; i < ctx.R; ++i) alts.push_back(so_relvar(ctx.X(i), {n}));
    return so_or(std::move(alts));
}

// "Some edge n -> n2": Y_1(n,n2) | ... | Y_P(n,n2).
inline SoPtr edge(const TranslationContext& ctx, const Term& n, const Term& n2) {
    std::vector<SoPtr> alts;
    for (int j = 0; j < ctx.P; ++j) alts.push_back(so_relvar(ctx.Y(j), {n, n2}));
    return so_or(std::move(alts));
}

// "The value of rule term t at tree vertex n is z": a W lookup for variables,
// a direct equality for constant terms.
inline SoPtr value_at(const TranslationContext& ctx, const Term& n, const Term& t,
                      const Term& z) {
    if (!t.is_var) return so_eq(z, t);
    return so_relvar(ctx.W(t.name), {n, z});
}

// Tree-shape clauses shared by both reachability renderings: root label,
// label disjointness, edge hygiene, unique incoming edge, rootlessness of the
// root, and per-rule outgoing-edge profiles.
inline std::vector<SoPtr> tree_shape_clauses(const TranslationContext& ctx,
                                             const std::string& goal) {
    Term x = var(ctx.x_name());
    Term n = var("_n"), n2 = var("_n2"), n3 = var("_n3");
    std::vector<SoPtr> cs;

    // The root is labeled with a rule defining the goal predicate.
    {
        std::vector<SoPtr> alts;
        for (int i = 0; i < ctx.R; ++i)
            if (ctx.sid.rules[i].head == goal) alts.push_back(so_relvar(ctx.X(i), {x}));
        cs.push_back(so_or(std::move(alts)));
    }
    // Labels are pairwise disjoint.
    for (int i = 0; i < ctx.R; ++i)
        for (int j = i + 1; j < ctx.R; ++j)
            cs.push_back(so_forall(
                "_n", so_not(so_and({so_relvar(ctx.X(i), {n}), so_relvar(ctx.X(j), {n})}))));
    // Edges connect labeled vertices only.
    for (int j = 0; j < ctx.P; ++j)
        cs.push_back(so_forall(
            "_n", so_forall("_n2", so_implies(so_relvar(ctx.Y(j), {n, n2}),
                                              so_and({labeled(ctx, n), labeled(ctx, n2)})))));
    // Every labeled vertex except the root has an incoming edge ...
    cs.push_back(so_forall(
        "_n", so_implies(so_and({labeled(ctx, n), so_not(so_eq(n, x))}),
                         so_exists("_n2", edge(ctx, n2, n)))));
    // ... at most one incoming edge overall ...
    for (int j = 0; j < ctx.P; ++j)
        for (int l = j; l < ctx.P; ++l)
            cs.push_back(so_forall(
                "_n",
                so_forall(
                    "_n2",
                    so_forall("_n3",
                              so_implies(so_and({so_relvar(ctx.Y(j), {n2, n}),
                                                 so_relvar(ctx.Y(l), {n3, n})}),
                                         j == l ? so_eq(n2, n3) : so_false())))));
    // ... and the root has none.
    cs.push_back(so_forall("_n", so_not(edge(ctx, n, x))));
    // Outgoing edges are functional per child index.
    for (int j = 0; j < ctx.P; ++j)
        cs.push_back(so_forall(
            "_n", so_forall("_n2", so_forall("_n3", so_implies(so_and({so_relvar(ctx.Y(j), {n, n2}),
                                                                      so_relvar(ctx.Y(j), {n, n3})}),
                                                               so_eq(n2, n3))))));
    // A vertex labeled with rule i has exactly one child per predicate atom of
    // rule i, labeled with a rule defining that predicate, and no further
    // children.
    for (int i = 0; i < ctx.R; ++i) {
        const auto& info = ctx.rules[i];
        std::vector<SoPtr> reqs;
        int h = (int)info.pred_atoms.size();
        for (int j = 0; j < h; ++j) {
            std::vector<SoPtr> alts;
            for (int l = 0; l < ctx.R; ++l)
                if (ctx.sid.rules[l].head == info.pred_atoms[j]->name)
                    alts.push_back(so_relvar(ctx.X(l), {n2}));
            reqs.push_back(
                so_exists("_n2", so_and({so_relvar(ctx.Y(j), {n, n2}), so_or(std::move(alts))})));
        }
        for (int j = h; j < ctx.P; ++j)
            reqs.push_back(so_forall("_n2", so_not(so_relvar(ctx.Y(j), {n, n2}))));
        cs.push_back(so_forall("_n", so_implies(so_relvar(ctx.X(i), {n}), so_and(std::move(reqs)))));
    }
    return cs;
}

// Acyclicity via an existential strict ancestor order _L: edges are in _L,
// _L is transitive and irreflexive.  Together with the unique-incoming-edge
// clauses this implies that every labeled vertex is reachable from the root,
// without an inner monadic quantifier (which evaluation would have to expand
// by enumerating every subset of the domain).
inline std::vector<SoPtr> ancestor_order_clauses(const TranslationContext& ctx) {
    Term n = var("_n"), n2 = var("_n2"), n3 = var("_n3");
    std::vector<SoPtr> cs;
    cs.push_back(so_forall(
        "_n", so_forall("_n2", so_implies(edge(ctx, n, n2), so_relvar("_L", {n, n2})))));
    cs.push_back(so_forall(
        "_n",
        so_forall("_n2", so_forall("_n3", so_implies(so_and({so_relvar("_L", {n, n2}),
                                                             so_relvar("_L", {n2, n3})}),
                                                     so_relvar("_L", {n, n3}))))));
    cs.push_back(so_forall("_n", so_not(so_relvar("_L", {n, n}))));
    return cs;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Tree-shape formula with free root variable _x and free X/Y variables.
// Reachability of every labeled vertex from the root is stated with a least-
// set quantifier: every set containing the root and closed under the edges
// contains all labeled vertices.

inline SoPtr build_tree_formula(const TranslationContext& ctx, const std::string& goal) {
    Term x = var(ctx.x_name());
    Term n = var("_n"), n2 = var("_n2");
    std::vector<SoPtr> cs = detail::tree_shape_clauses(ctx, goal);
    SoPtr closed = so_forall(
        "_n", so_forall("_n2", so_implies(so_and({so_relvar("_S", {n}), detail::edge(ctx, n, n2)}),
                                          so_relvar("_S", {n2}))));
    SoPtr covers = so_forall("_n", so_implies(detail::labeled(ctx, n), so_relvar("_S", {n})));
    cs.push_back(so_forall2(
        "_S", 1, so_implies(so_and({so_relvar("_S", {x}), closed}), covers)));
    return so_and(std::move(cs));
}

// ---------------------------------------------------------------------------
// Linking formula: ties the labeled tree to the structure's relations via the
// Z coordinate maps and the per-vertex stores W.  Free variables: the root
// _x, the X/Y/Z/W second-order families, and the goal atom's terms.

inline SoPtr build_link_formula(const TranslationContext& ctx, const SlrPtr& goal_atom) {
    if (goal_atom->kind != SlrKind::Pred)
        throw InvalidInput("build_link_formula: expected a predicate atom");
    const std::string& goal = goal_atom->name;
    Term x = var(ctx.x_name());
    Term n = var("_n"), n2 = var("_n2");
    Term v = var("_v"), v2 = var("_v2");
    std::vector<SoPtr> cs;

    // (functionality) Each Z_{k,l} and each W_v is a partial function.
    auto functional = [&](const std::string& name) {
        return so_forall(
            "_n", so_forall("_v", so_forall("_v2", so_implies(so_and({so_relvar(name, {n, v}),
                                                                     so_relvar(name, {n, v2})}),
                                                              so_eq(v, v2)))));
    };
    for (int k = 0; k < (int)ctx.rels.size(); ++k)
        for (int l = 0; l < ctx.rels[k].second; ++l) cs.push_back(functional(ctx.Z(k, l)));
    for (const auto& w : ctx.all_vars) cs.push_back(functional(ctx.W(w)));

    // (totality) A vertex labeled with rule i has a W value for each of the
    // rule's variables.
    for (int i = 0; i < ctx.R; ++i) {
        std::vector<SoPtr> reqs;
        for (const auto& w : ctx.rules[i].vars)
            reqs.push_back(so_exists("_v", so_relvar(ctx.W(w), {n, v})));
        if (reqs.empty()) continue;
        cs.push_back(so_forall("_n", so_implies(so_relvar(ctx.X(i), {n}), so_and(std::move(reqs)))));
    }

    // (introduction) A vertex labeled with rule i introduces, for each
    // relation atom R_k(t1..ta) of rule i, a tuple of the structure's
    // R_k-relation whose coordinates are recorded in Z_{k,.} and agree with
    // the store values of t1..ta; for relations without an atom in rule i the
    // vertex records no Z coordinates.
    for (int i = 0; i < ctx.R; ++i) {
        const auto& info = ctx.rules[i];
        std::vector<SoPtr> reqs;
        for (int k = 0; k < (int)ctx.rels.size(); ++k) {
            auto it = info.rel_atoms.find(k);
            int ar = ctx.rels[k].second;
            if (it == info.rel_atoms.end()) {
                for (int l = 0; l < ar; ++l)
                    reqs.push_back(so_forall("_v", so_not(so_relvar(ctx.Z(k, l), {n, v}))));
                continue;
            }
            std::vector<Term> zs;
            std::vector<SoPtr> parts;
            for (int l = 0; l < ar; ++l) zs.push_back(var("_z" + std::to_string(l + 1)));
            parts.push_back(so_rel(ctx.rels[k].first, zs));
            for (int l = 0; l < ar; ++l) {
                parts.push_back(so_relvar(ctx.Z(k, l), {n, zs[l]}));
                parts.push_back(detail::value_at(ctx, n, it->second[l], zs[l]));
            }
            SoPtr intro = so_and(std::move(parts));
            for (int l = ar - 1; l >= 0; --l) intro = so_exists("_z" + std::to_string(l + 1), intro);
            reqs.push_back(std::move(intro));
        }
        if (reqs.empty()) continue;
        cs.push_back(so_forall("_n", so_implies(so_relvar(ctx.X(i), {n}), so_and(std::move(reqs)))));
    }
    // Unlabeled vertices record no Z coordinates.
    for (int k = 0; k < (int)ctx.rels.size(); ++k)
        for (int l = 0; l < ctx.rels[k].second; ++l)
            cs.push_back(so_forall(
                "_n", so_forall("_v", so_implies(so_relvar(ctx.Z(k, l), {n, v}),
                                                 detail::labeled(ctx, n)))));

    // (distinctness) Two distinct introducing vertices introduce distinct
    // tuples: some coordinate map separates them.
    for (int k = 0; k < (int)ctx.rels.size(); ++k) {
        std::vector<int> owners;
        for (int i = 0; i < ctx.R; ++i)
            if (ctx.rules[i].rel_atoms.count(k)) owners.push_back(i);
        if (owners.empty()) continue;
        std::vector<SoPtr> left, right, seps;
        for (int i : owners) {
            left.push_back(so_relvar(ctx.X(i), {n}));
            right.push_back(so_relvar(ctx.X(i), {n2}));
        }
        for (int l = 0; l < ctx.rels[k].second; ++l)
            seps.push_back(so_exists(
                "_v", so_and({so_relvar(ctx.Z(k, l), {n, v}),
                              so_not(so_relvar(ctx.Z(k, l), {n2, v}))})));
        cs.push_back(so_forall(
            "_n", so_forall("_n2", so_implies(so_and({so_or(std::move(left)),
                                                      so_or(std::move(right)),
                                                      so_not(so_eq(n, n2))}),
                                              so_or(std::move(seps))))));
    }

    // (coverage) Every tuple of every relation is introduced by some vertex.
    for (int k = 0; k < (int)ctx.rels.size(); ++k) {
        int ar = ctx.rels[k].second;
        std::vector<Term> zs;
        for (int l = 0; l < ar; ++l) zs.push_back(var("_z" + std::to_string(l + 1)));
        std::vector<SoPtr> alts;
        for (int i = 0; i < ctx.R; ++i) {
            if (!ctx.rules[i].rel_atoms.count(k)) continue;
            std::vector<SoPtr> parts{so_relvar(ctx.X(i), {n})};
            for (int l = 0; l < ar; ++l) parts.push_back(so_relvar(ctx.Z(k, l), {n, zs[l]}));
            alts.push_back(so_and(std::move(parts)));
        }
        SoPtr body = so_implies(so_rel(ctx.rels[k].first, zs),
                                so_exists("_n", so_or(std::move(alts))));
        for (int l = ar - 1; l >= 0; --l) body = so_forall("_z" + std::to_string(l + 1), body);
        cs.push_back(std::move(body));
    }

    // (equalities / disequalities) The per-vertex store satisfies the rule's
    // equality and disequality atoms.  Since the W maps are functional and
    // total on labeled vertices, "same value" is stated with one value
    // variable: whatever value the left term takes, the right term takes it
    // too (or does not, for disequalities).
    for (int i = 0; i < ctx.R; ++i) {
        auto local = [&](const Term& a, const Term& b, bool want_eq) {
            SoPtr rhs = detail::value_at(ctx, n, b, v);
            cs.push_back(so_forall(
                "_n", so_forall("_v", so_implies(so_and({so_relvar(ctx.X(i), {n}),
                                                         detail::value_at(ctx, n, a, v)}),
                                                 want_eq ? rhs : so_not(rhs)))));
        };
        for (const auto& [a, b] : ctx.rules[i].eqs) local(a, b, true);
        for (const auto& [a, b] : ctx.rules[i].neqs) local(a, b, false);
    }

    // (parameter passing) Along a j-th-child edge, the argument values of the
    // j-th predicate atom equal the child rule's parameter values.
    for (int i = 0; i < ctx.R; ++i) {
        const auto& info = ctx.rules[i];
        for (int j = 0; j < (int)info.pred_atoms.size(); ++j) {
            const SlrFormula* atom = info.pred_atoms[j];
            for (int l = 0; l < ctx.R; ++l) {
                const Rule& child = ctx.sid.rules[l];
                if (child.head != atom->name) continue;
                if (child.params.size() != atom->args.size())
                    throw InvalidInput("predicate " + atom->name + " applied with wrong arity");
                for (size_t q = 0; q < child.params.size(); ++q)
                    cs.push_back(so_forall(
                        "_n",
                        so_forall(
                            "_n2",
                            so_forall(
                                "_v",
                                so_implies(
                                    so_and({so_relvar(ctx.X(i), {n}),
                                            so_relvar(ctx.Y(j), {n, n2}),
                                            so_relvar(ctx.X(l), {n2}),
                                            detail::value_at(ctx, n, atom->args[q], v)}),
                                    detail::value_at(ctx, n2, var(child.params[q]), v))))));
            }
        }
    }

    // (goal binding) The root's parameter values are the goal atom's terms.
    for (int i = 0; i < ctx.R; ++i) {
        const Rule& rule = ctx.sid.rules[i];
        if (rule.head != goal) continue;
        if (rule.params.size() != goal_atom->args.size())
            throw InvalidInput("predicate " + goal + " applied with wrong arity");
        for (size_t q = 0; q < rule.params.size(); ++q)
            cs.push_back(so_forall(
                "_v", so_implies(so_and({so_relvar(ctx.X(i), {x}),
                                         so_relvar(ctx.W(rule.params[q]), {x, v})}),
                                 so_eq(v, goal_atom->args[q]))));
    }
    return so_and(std::move(cs));
}

// ---------------------------------------------------------------------------
// Standalone path-based parameter-tracking predicates over the X/Y families.
//
// Both predicates quantify over one unary set per rule variable and state
// that the designated coordinates are connected in the least family closed
// under the per-rule equality classes and parameter passing along tree
// edges; free first-order variables _t and _t2 name the two tree vertices.
// isEq uses the undirected closure (values flow both ways across an edge),
// varEq the downward closure from the variable at _t.

enum class TrackKind { IsEq, VarEq };

struct TrackIndices {
    // isEq: coordinates m of the R_k-atom at _t and n of the R_l-atom at _t2.
    int k = -1, l = -1, m = -1, n = -1;
    // varEq: variable xi at _t and coordinate r of the R_k-atom at _t2.
    std::string xi;
    int r = -1;
};

inline SoPtr emit_param_tracking(const TranslationContext& ctx, TrackKind kind,
                                 const TrackIndices& ix) {
    auto check_rel = [&](int k) {
        if (k < 0 || k >= (int)ctx.rels.size()) throw UnknownIndex("relation index");
    };
    auto check_coord = [&](int k, int c) {
        if (c < 0 || c >= ctx.rels[k].second) throw UnknownIndex("coordinate index");
    };
    Term t = var("_t"), t2 = var("_t2");
    Term n = var("_n"), n2 = var("_n2");
    auto S = [&](const std::string& w) { return "_S_" + w; };

    // Initial membership at _t.
    std::vector<SoPtr> init;
    if (kind == TrackKind::VarEq) {
        if (!ctx.all_vars.count(ix.xi)) throw UnknownIndex("rule variable " + ix.xi);
        init.push_back(so_relvar(S(ix.xi), {t}));
    } else {
        check_rel(ix.k);
        check_coord(ix.k, ix.m);
        for (int i = 0; i < ctx.R; ++i) {
            auto it = ctx.rules[i].rel_atoms.find(ix.k);
            if (it == ctx.rules[i].rel_atoms.end()) continue;
            const Term& arg = it->second[ix.m];
            init.push_back(so_implies(so_relvar(ctx.X(i), {t}),
                                      arg.is_var ? so_relvar(S(arg.name), {t}) : so_false()));
        }
    }

    // Closure conditions.
    std::vector<SoPtr> closure;
    for (int i = 0; i < ctx.R; ++i) {
        // Per-rule equality classes (union-find over the rule's equalities).
        std::map<std::string, std::string> parent;
        std::function<std::string(const std::string&)> find =
            [&](const std::string& a) -> std::string {
            auto it = parent.find(a);
            if (it == parent.end() || it->second == a) return a;
            return it->second = find(it->second);
        };
        for (const auto& [a, b] : ctx.rules[i].eqs)
            if (a.is_var && b.is_var) parent[find(a.name)] = find(b.name);
        for (const auto& a : ctx.rules[i].vars)
            for (const auto& b : ctx.rules[i].vars) {
                if (a == b || find(a) != find(b)) continue;
                closure.push_back(so_forall(
                    "_n", so_implies(so_and({so_relvar(ctx.X(i), {n}), so_relvar(S(a), {n})}),
                                     so_relvar(S(b), {n}))));
            }
        // Parameter passing along the rule's child edges.
        for (int j = 0; j < (int)ctx.rules[i].pred_atoms.size(); ++j) {
            const SlrFormula* atom = ctx.rules[i].pred_atoms[j];
            for (int l = 0; l < ctx.R; ++l) {
                const Rule& child = ctx.sid.rules[l];
                if (child.head != atom->name) continue;
                for (size_t q = 0; q < child.params.size() && q < atom->args.size(); ++q) {
                    if (!atom->args[q].is_var) continue;
                    SoPtr guard = so_and({so_relvar(ctx.X(i), {n}), so_relvar(ctx.Y(j), {n, n2}),
                                          so_relvar(ctx.X(l), {n2})});
                    closure.push_back(so_forall(
                        "_n", so_forall("_n2",
                                        so_implies(so_and({guard,
                                                           so_relvar(S(atom->args[q].name), {n})}),
                                                   so_relvar(S(child.params[q]), {n2})))));
                    if (kind == TrackKind::IsEq)  // undirected: flow upward too
                        closure.push_back(so_forall(
                            "_n",
                            so_forall("_n2",
                                      so_implies(so_and({guard,
                                                         so_relvar(S(child.params[q]), {n2})}),
                                                 so_relvar(S(atom->args[q].name), {n})))));
                }
            }
        }
    }

    // Target membership at _t2.
    int tk = kind == TrackKind::IsEq ? ix.l : ix.k;
    int tc = kind == TrackKind::IsEq ? ix.n : ix.r;
    check_rel(tk);
    check_coord(tk, tc);
    std::vector<SoPtr> hit;
    for (int i = 0; i < ctx.R; ++i) {
        auto it = ctx.rules[i].rel_atoms.find(tk);
        if (it == ctx.rules[i].rel_atoms.end()) continue;
        const Term& arg = it->second[tc];
        if (!arg.is_var) continue;
        hit.push_back(so_and({so_relvar(ctx.X(i), {t2}), so_relvar(S(arg.name), {t2})}));
    }

    SoPtr body = so_implies(so_and({so_and(std::move(init)), so_and(std::move(closure))}),
                            so_or(std::move(hit)));
    for (auto it = ctx.all_vars.rbegin(); it != ctx.all_vars.rend(); ++it)
        body = so_forall2(S(*it), 1, body);
    return body;
}

// ---------------------------------------------------------------------------
// Full translation and the padding heuristic for evaluating its output.

inline SoPtr translate(const SlrPtr& atom, const Sid& sid) {
    if (atom->kind != SlrKind::Pred) {
        // Sentences are translated through a wrapper predicate.
        Sid wrapped = sid;
        wrapped.rules.push_back(Rule{"_Goal", {}, atom});
        return translate(mk_pred("_Goal", {}), wrapped);
    }
    if (!sid.mentions_pred(atom->name)) throw UnknownPredicate(atom->name);
    TranslationContext ctx = make_translation_context(sid);

    std::vector<SoPtr> cs = detail::tree_shape_clauses(ctx, atom->name);
    for (auto& c : detail::ancestor_order_clauses(ctx)) cs.push_back(std::move(c));
    cs.push_back(build_link_formula(ctx, atom));
    SoPtr body = so_exists(ctx.x_name(), so_and(std::move(cs)));

    body = so_exists2("_L", 2, std::move(body));
    for (auto it = ctx.all_vars.rbegin(); it != ctx.all_vars.rend(); ++it)
        body = so_exists2(ctx.W(*it), 2, std::move(body));
    for (int k = (int)ctx.rels.size() - 1; k >= 0; --k)
        for (int l = ctx.rels[k].second - 1; l >= 0; --l)
            body = so_exists2(ctx.Z(k, l), 2, std::move(body));
    for (int j = ctx.P - 1; j >= 0; --j) body = so_exists2(ctx.Y(j), 2, std::move(body));
    for (int i = ctx.R - 1; i >= 0; --i) body = so_exists2(ctx.X(i), 1, std::move(body));
    return body;
}

// Evaluation domain for a translated formula on a given structure: the active
// domain padded to at least N(s) + |Dom(s)| elements, where N(s) is the
// derivation-size bound — enough to host any unfolding tree (vertices may
// also reuse structure elements) next to the structure itself.
inline std::set<ElemId> translation_padding(const Structure& s, const Sid& sid) {
    std::set<ElemId> dom = s.dom();
    for (const auto& [c, e] : s.consts) dom.insert(e);
    int target = derivation_size_bound(s, sid) + (int)dom.size();
    int extra = std::max(target - (int)dom.size(), dom.empty() ? 1 : 0);
    for (ElemId f : fresh_ids(dom, extra)) dom.insert(f);
    return dom;
}

} // namespace slr
