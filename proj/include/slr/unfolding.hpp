#pragma once

// Unfolding trees: finite derivation trees of a definition system.  Each node
// is labeled by a rule; its children correspond, in order, to the predicate
// atoms of that rule's body.  The characteristic formula of a tree replaces
// every predicate atom by the child's formula (bound variables renamed apart,
// relation atoms tagged with the introducing node) and is predicate-free.
//
// oracle_check decides predicate-atom satisfaction by brute force: enumerate
// every unfolding tree up to a size bound sufficient for a minimal
// derivation, evaluate each characteristic formula with a small independent
// predicate-free evaluator, and report whether any tree works.  This is the
// reference oracle the memoized checker is tested against, so it shares no
// machinery with SlrChecker.

#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "slr_ast.hpp"
#include "slr_check.hpp"
#include "structures.hpp"

namespace slr {

struct UnfoldingTree {
    struct Node {
        int rule_index;           // index into Sid::rules
        std::vector<int> children;
    };
    std::vector<Node> nodes;      // node 0 is the root
};

namespace detail {

// Predicate atoms of a rule body, in left-to-right order.
inline std::vector<const SlrFormula*> pred_atoms(const SlrPtr& body) {
    std::vector<const SlrFormula*> out;
    std::function<void(const SlrPtr&)> go = [&](const SlrPtr& f) {
        switch (f->kind) {
            case SlrKind::Pred:
                out.push_back(f.get());
                break;
            case SlrKind::Star:
                go(f->left);
                go(f->right);
                break;
            case SlrKind::Exists:
                go(f->body);
                break;
            default:
                break;
        }
    };
    go(body);
    return out;
}

inline int count_rel_atoms(const SlrPtr& body) {
    int n = 0;
    std::function<void(const SlrPtr&)> go = [&](const SlrPtr& f) {
        switch (f->kind) {
            case SlrKind::Rel:
                ++n;
                break;
            case SlrKind::Star:
                go(f->left);
                go(f->right);
                break;
            case SlrKind::Exists:
                go(f->body);
                break;
            default:
                break;
        }
    };
    go(body);
    return n;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Enumeration.  Visits every unfolding tree for `pred` with at most
// `max_nodes` nodes, at most `max_rel` relation atoms in total, and at most
// `max_relfree` nodes whose rule body has no relation atom (budgets that any
// minimal derivation respects: each relation atom consumes one tuple).

class UnfoldingTrees {
public:
    explicit UnfoldingTrees(const Sid& sid) : sid_(sid) {
        for (size_t i = 0; i < sid_.rules.size(); ++i) {
            by_pred_[sid_.rules[i].head].push_back((int)i);
            kids_[(int)i] = detail::pred_atoms(sid_.rules[i].body);
            rel_[(int)i] = detail::count_rel_atoms(sid_.rules[i].body);
        }
    }

    // Visit every unfolding tree for `pred` within the budgets; the visitor
    // returns false to stop.  Returns false when stopped early.
    bool visit_all(const std::string& pred, int max_nodes, int max_rel, int max_relfree,
                   const std::function<bool(const UnfoldingTree&)>& visit) const {
        if (!sid_.mentions_pred(pred)) throw UnknownPredicate(pred);
        UnfoldingTree t;
        return subtree(pred, max_nodes, max_rel, max_relfree, t,
                       [&](int, int, int) { return visit(t); });
    }

    // Materialize (for tests / small cases).
    std::vector<UnfoldingTree> enumerate(const std::string& pred, int max_nodes,
                                         int max_rel = 1 << 20,
                                         int max_relfree = 1 << 20) const {
        std::vector<UnfoldingTree> out;
        visit_all(pred, max_nodes, max_rel, max_relfree, [&](const UnfoldingTree& t) {
            out.push_back(t);
            return true;
        });
        return out;
    }

private:
    const Sid& sid_;
    std::map<std::string, std::vector<int>> by_pred_;
    std::map<int, std::vector<const SlrFormula*>> kids_;
    std::map<int, int> rel_;

    // Build one subtree for `pred`; `done(nodes_used, rel_used, relfree_used)`
    // continues the surrounding enumeration.  Returns false on early stop.
    bool subtree(const std::string& pred, int max_nodes, int max_rel, int max_relfree,
                 UnfoldingTree& t,
                 const std::function<bool(int, int, int)>& done) const {
        auto it = by_pred_.find(pred);
        if (it == by_pred_.end()) return true;  // no rules -> no trees
        if (max_nodes <= 0) return true;
        for (int ri : it->second) {
            int rel = rel_.at(ri);
            int relfree = rel == 0 ? 1 : 0;
            if (rel > max_rel || relfree > max_relfree) continue;
            int me = (int)t.nodes.size();
            t.nodes.push_back({ri, {}});
            bool cont = row(ri, 0, me, 1, rel, relfree, max_nodes, max_rel, max_relfree,
                            t, done);
            t.nodes.resize(me);
            if (!cont) return false;
        }
        return true;
    }

    // Enumerate subtrees for children ci.. of node `me` (rule ri), given
    // resources already used in this subtree.
    bool row(int ri, size_t ci, int me, int used_nodes, int used_rel, int used_relfree,
             int max_nodes, int max_rel, int max_relfree, UnfoldingTree& t,
             const std::function<bool(int, int, int)>& done) const {
        const auto& kids = kids_.at(ri);
        if (ci == kids.size()) return done(used_nodes, used_rel, used_relfree);
        const std::string& cpred = kids[ci]->name;
        if (!sid_.mentions_pred(cpred)) throw UnknownPredicate(cpred);
        return subtree(cpred, max_nodes - used_nodes, max_rel - used_rel,
                       max_relfree - used_relfree, t,
                       [&](int cn, int cr, int cf) {
                           // Nodes are pushed in DFS order, so the completed
                           // child subtree occupies the last cn slots and its
                           // root sits at size - cn.
                           t.nodes[me].children.push_back((int)t.nodes.size() - cn);
                           bool cont = row(ri, ci + 1, me, used_nodes + cn, used_rel + cr,
                                           used_relfree + cf, max_nodes, max_rel,
                                           max_relfree, t, done);
                           t.nodes[me].children.pop_back();
                           return cont;
                       });
    }
};

// ---------------------------------------------------------------------------
// Characteristic formula.

inline SlrPtr characteristic_formula(const UnfoldingTree& t, const Sid& sid,
                                     const std::vector<Term>& root_args) {
    std::function<SlrPtr(int, const std::vector<Term>&)> build =
        [&](int node, const std::vector<Term>& args) -> SlrPtr {
        const auto& n = t.nodes[node];
        const Rule& rule = sid.rules[n.rule_index];
        if (args.size() != rule.params.size())
            throw InvalidInput("characteristic_formula: arity mismatch at node " +
                               std::to_string(node));
        // Rename bound variables apart with a node-unique prefix, then bind
        // parameters to the incoming argument terms.
        int counter = 0;
        SlrPtr body = freshen_bound(rule.body, "y_" + std::to_string(node) + "_", counter);
        std::map<std::string, Term> sub;
        for (size_t i = 0; i < args.size(); ++i) sub[rule.params[i]] = args[i];
        body = substitute(body, sub);

        // Replace predicate atoms (in order) by the children's formulas and
        // tag relation atoms with the introducing node.
        size_t next_child = 0;
        std::function<SlrPtr(const SlrPtr&)> weave = [&](const SlrPtr& f) -> SlrPtr {
            switch (f->kind) {
                case SlrKind::Pred: {
                    if (next_child >= n.children.size())
                        throw InvalidInput("characteristic_formula: missing child");
                    int c = n.children[next_child++];
                    return build(c, f->args);
                }
                case SlrKind::Rel:
                    return mk_rel(f->name, f->args, node);
                case SlrKind::Star:
                    // Evaluation order matters for child indexing.
                    {
                        SlrPtr l = weave(f->left);
                        SlrPtr r = weave(f->right);
                        return mk_star(l, r);
                    }
                case SlrKind::Exists:
                    return mk_exists(f->name, weave(f->body));
                default:
                    return f;
            }
        };
        SlrPtr res = weave(body);
        if (next_child != n.children.size())
            throw InvalidInput("characteristic_formula: extra children");
        return res;
    };
    if (t.nodes.empty()) throw InvalidInput("characteristic_formula: empty tree");
    return build(0, root_args);
}

// ---------------------------------------------------------------------------
// Independent predicate-free evaluator (no memoization, no canonicalization).

namespace detail {

inline bool eval_pf(const Structure& s, const SlrPtr& f, const Store& store,
                    const std::vector<std::pair<std::string, Tuple>>& items,
                    TupleMask mask) {
    auto val = [&](const Term& t) -> ElemId {
        if (!t.is_var) return s.const_value(t.name);
        return store.at(t.name);
    };
    switch (f->kind) {
        case SlrKind::Emp:
            return mask == 0;
        case SlrKind::Eq:
            return mask == 0 && val(f->lhs) == val(f->rhs);
        case SlrKind::Neq:
            return mask == 0 && val(f->lhs) != val(f->rhs);
        case SlrKind::Rel: {
            if (mask == 0 || (mask & (mask - 1)) != 0) return false;
            int i = std::countr_zero(mask);
            if (items[i].first != f->name) return false;
            Tuple want;
            for (const auto& a : f->args) want.push_back(val(a));
            return items[i].second == want;
        }
        case SlrKind::Star: {
            for (TupleMask sub = mask;; sub = (sub - 1) & mask) {
                if (eval_pf(s, f->left, store, items, sub) &&
                    eval_pf(s, f->right, store, items, mask & ~sub))
                    return true;
                if (sub == 0) break;
            }
            return false;
        }
        case SlrKind::Exists: {
            // Candidate witnesses: the active domain, the values of store
            // variables the body can still see, and one representative
            // outside element (outside elements not referenced by any free
            // variable are interchangeable).
            std::set<std::string> fv = free_vars(f->body);
            std::set<ElemId> dom = s.dom();
            std::set<ElemId> witnesses;
            std::set<ElemId> used = dom;
            for (const auto& [v, e] : store) {
                used.insert(e);
                if (fv.count(v) && v != f->name) witnesses.insert(e);
            }
            if (!fv.count(f->name)) {
                // The bound variable is unused; any single witness will do.
                witnesses.clear();
            } else {
                witnesses.insert(dom.begin(), dom.end());
            }
            witnesses.insert(fresh_ids(used, 1)[0]);
            for (ElemId w : witnesses) {
                Store st2 = store;
                st2[f->name] = w;
                if (eval_pf(s, f->body, st2, items, mask)) return true;
            }
            return false;
        }
        case SlrKind::Pred:
            throw InvalidInput("eval_pf: predicate atom in predicate-free formula");
    }
    throw SlrError("unreachable");
}

} // namespace detail

inline bool eval_predicate_free(const Structure& s, const Store& store, const SlrPtr& f) {
    std::vector<std::pair<std::string, Tuple>> items;
    for (const auto& [r, ar] : s.sig.relations)
        for (const auto& t : s.rel(r)) items.push_back({r, t});
    if (items.size() > 62) throw TooLarge("structure has more than 62 tuples");
    TupleMask full = (TupleMask(1) << items.size()) - 1;
    return detail::eval_pf(s, f, store, items, full);
}

// ---------------------------------------------------------------------------
// Derivation size bound and the oracle.

inline int derivation_size_bound(const Structure& s, const Sid& sid) {
    std::set<std::string> preds;
    int relfree_rules = 0;
    for (const auto& r : sid.rules) {
        preds.insert(r.head);
        if (detail::count_rel_atoms(r.body) == 0) ++relfree_rules;
    }
    return (int)s.tuple_count() + (int)preds.size() * relfree_rules + 1;
}

namespace detail {

// Top-down unfolding search.  An implicit derivation tree is explored rule by
// rule; a branch is cut when the (predicate, canonicalized arguments,
// remaining tuple mask) triple already occurs on the current root path, since
// a derivation of the repeated triple could replace the earlier occurrence
// outright and a minimal derivation therefore never repeats one.  Outside
// elements are canonicalized by first occurrence, so the key space — and with
// it every root path — is finite.
//
// Two accelerations keep the search exhaustive but fast: rules mentioning a
// predicate with no derivation at all (computed by the usual useless-symbol
// fixpoint) are skipped, and fully-explored triples are cached.  A failed
// triple is cached only when its exploration was never cut against a strict
// ancestor, because such a cut makes the failure context-dependent.
class OracleSearch {
public:
    OracleSearch(const Structure& s, const Sid& sid) : s_(s), sid_(sid), dom_(s.dom()) {
        for (const auto& [r, ar] : s.sig.relations)
            for (const auto& t : s.rel(r)) items_.push_back({r, t});
        if (items_.size() > 62) throw TooLarge("structure has more than 62 tuples");
        for (const auto& r : sid_.rules) rules_of_[r.head].push_back(&r);
        // Cheap successes first: rules with fewer predicate atoms.
        for (auto& [p, rs] : rules_of_)
            std::stable_sort(rs.begin(), rs.end(), [](const Rule* a, const Rule* b) {
                return pred_atoms(a->body).size() < pred_atoms(b->body).size();
            });
        // Productive predicates: least fixpoint of "has a rule whose predicate
        // atoms are all productive".
        bool grew = true;
        while (grew) {
            grew = false;
            for (const auto& r : sid_.rules) {
                if (productive_.count(r.head)) continue;
                bool all = true;
                for (const SlrFormula* a : pred_atoms(r.body))
                    if (!productive_.count(a->name)) all = false;
                if (all) {
                    productive_.insert(r.head);
                    grew = true;
                }
            }
        }
    }

    bool derivable(const std::string& pred, const std::vector<ElemId>& vals, TupleMask mask) {
        if (!productive_.count(pred)) return false;
        Key key{pred, canonical(vals), mask};
        if (auto it = path_depth_.find(key); it != path_depth_.end()) {
            taint_ = std::min(taint_, it->second);
            return false;
        }
        if (derived_.count(key)) return true;
        if (failed_.count(key)) return false;
        auto it = rules_of_.find(pred);
        if (it == rules_of_.end()) return false;
        int d = (int)path_depth_.size();
        path_depth_[key] = d;
        int saved_taint = taint_;
        taint_ = kUntainted;
        bool ok = false;
        for (const Rule* r : it->second) {
            if ((int)r->params.size() != (int)vals.size())
                throw InvalidInput("oracle_check: arity mismatch for " + pred);
            bool dead = false;
            for (const SlrFormula* a : pred_atoms(r->body))
                if (!productive_.count(a->name)) dead = true;
            if (dead) continue;
            Store store;
            for (size_t i = 0; i < vals.size(); ++i) store[r->params[i]] = vals[i];
            if (sat(r->body, store, mask)) {
                ok = true;
                break;
            }
        }
        path_depth_.erase(key);
        if (ok)
            derived_.insert(key);
        else if (taint_ >= d)
            failed_.insert(key);
        taint_ = taint_ < d ? std::min(saved_taint, taint_) : saved_taint;
        return ok;
    }

    TupleMask full() const { return (TupleMask(1) << items_.size()) - 1; }

private:
    using Key = std::tuple<std::string, std::vector<ElemId>, TupleMask>;
    static constexpr int kUntainted = 1 << 30;

    const Structure& s_;
    const Sid& sid_;
    std::set<ElemId> dom_;
    std::vector<std::pair<std::string, Tuple>> items_;
    std::map<std::string, std::vector<const Rule*>> rules_of_;
    std::set<std::string> productive_;
    std::map<Key, int> path_depth_;
    std::set<Key> derived_, failed_;
    int taint_ = kUntainted;
    std::map<const SlrFormula*, bool> has_pred_;

    bool has_pred(const SlrPtr& f) {
        auto it = has_pred_.find(f.get());
        if (it != has_pred_.end()) return it->second;
        bool v;
        switch (f->kind) {
            case SlrKind::Pred: v = true; break;
            case SlrKind::Star: v = has_pred(f->left) || has_pred(f->right); break;
            case SlrKind::Exists: v = has_pred(f->body); break;
            default: v = false; break;
        }
        has_pred_[f.get()] = v;
        return v;
    }

    std::vector<ElemId> canonical(const std::vector<ElemId>& vals) const {
        std::vector<ElemId> out;
        for (ElemId v : vals) {
            if (dom_.count(v)) {
                out.push_back(v);
                continue;
            }
            ElemId code = -(ElemId)(out.size() + 1);
            for (size_t i = 0; i < out.size(); ++i)
                if (!dom_.count(vals[i]) && vals[i] == v) {
                    code = out[i];
                    break;
                }
            out.push_back(code);
        }
        return out;
    }

    bool sat(const SlrPtr& f, const Store& store, TupleMask mask) {
        auto val = [&](const Term& t) -> ElemId {
            if (!t.is_var) return s_.const_value(t.name);
            return store.at(t.name);
        };
        switch (f->kind) {
            case SlrKind::Emp:
                return mask == 0;
            case SlrKind::Eq:
                return mask == 0 && val(f->lhs) == val(f->rhs);
            case SlrKind::Neq:
                return mask == 0 && val(f->lhs) != val(f->rhs);
            case SlrKind::Rel: {
                if (mask == 0 || (mask & (mask - 1)) != 0) return false;
                int i = std::countr_zero(mask);
                if (items_[i].first != f->name) return false;
                Tuple want;
                for (const auto& a : f->args) want.push_back(val(a));
                return items_[i].second == want;
            }
            case SlrKind::Star: {
                // Check the predicate-free side of each split first; it fails
                // fast and avoids recursing into doomed splits.
                bool right_first = !has_pred(f->right) && has_pred(f->left);
                for (TupleMask sub = mask;; sub = (sub - 1) & mask) {
                    bool hit = right_first
                                   ? sat(f->right, store, mask & ~sub) && sat(f->left, store, sub)
                                   : sat(f->left, store, sub) && sat(f->right, store, mask & ~sub);
                    if (hit) return true;
                    if (sub == 0) break;
                }
                return false;
            }
            case SlrKind::Exists: {
                // Same witness restriction as eval_pf above.
                std::set<std::string> fv = free_vars(f->body);
                std::set<ElemId> witnesses;
                std::set<ElemId> used = dom_;
                for (const auto& [v, e] : store) {
                    used.insert(e);
                    if (fv.count(v) && v != f->name) witnesses.insert(e);
                }
                if (!fv.count(f->name)) {
                    witnesses.clear();
                } else {
                    witnesses.insert(dom_.begin(), dom_.end());
                }
                witnesses.insert(fresh_ids(used, 1)[0]);
                for (ElemId w : witnesses) {
                    Store st2 = store;
                    st2[f->name] = w;
                    if (sat(f->body, st2, mask)) return true;
                }
                return false;
            }
            case SlrKind::Pred: {
                std::vector<ElemId> vals;
                for (const auto& a : f->args) vals.push_back(val(a));
                return derivable(f->name, vals, mask);
            }
        }
        throw SlrError("unreachable");
    }
};

}  // namespace detail

inline bool oracle_check(const Structure& s, const Store& store, const SlrPtr& atom,
                         const Sid& sid) {
    if (atom->kind != SlrKind::Pred) throw InvalidInput("oracle_check: expected predicate atom");
    if (!sid.mentions_pred(atom->name)) throw UnknownPredicate(atom->name);
    detail::OracleSearch search(s, sid);
    std::vector<ElemId> vals;
    for (const auto& a : atom->args)
        vals.push_back(a.is_var ? store.at(a.name) : s.const_value(a.name));
    return search.derivable(atom->name, vals, search.full());
}

// ---------------------------------------------------------------------------
// Tree serialization (for the CLI): preorder 'label <node> <rule-index>' and
// 'child <parent> <child>' lines.

inline std::string print_unfolding_tree(const UnfoldingTree& t) {
    std::ostringstream out;
    for (size_t i = 0; i < t.nodes.size(); ++i)
        out << "label " << i << " " << t.nodes[i].rule_index << "\n";
    for (size_t i = 0; i < t.nodes.size(); ++i)
        for (int c : t.nodes[i].children) out << "child " << i << " " << c << "\n";
    return out.str();
}

} // namespace slr
