#pragma once

// Deciding satisfaction of SLR formulas over a fixed finite structure.
//
// The semantics are precise-by-construction: 'emp' and pure atoms demand an
// empty tuple set, a relation atom demands exactly its own tuple, and star
// splits the tuple set between the conjuncts.  Predicate atoms unfold the
// least fixed point of the definition system.  The procedure tabulates, per
// (predicate, canonicalized arguments) instantiation, the set of tuple
// subsets it can consume, growing all demanded instantiations together until
// the least fixed point is reached; star then only combines subsets that are
// actually derivable, which keeps the search polynomial in the number of
// derivable facts.
//
// Also here: prenex normalization helpers, equality removal (normalize_sid),
// injective satisfaction over an explicit element pool, the per-rule variable
// bound, and splitting rules so no relation symbol occurs twice in a body.

#include <bit>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "slr_ast.hpp"
#include "structures.hpp"

namespace slr {

using Store = std::map<std::string, ElemId>;

struct UnknownPredicate : SlrError {
    explicit UnknownPredicate(const std::string& p) : SlrError("unknown predicate: " + p) {}
};

struct NormalizationRequired : SlrError {
    explicit NormalizationRequired(const std::string& w)
        : SlrError("normalization required: " + w) {}
};

using TupleMask = std::uint64_t;

namespace detail {

// Deterministic indexing of a structure's tuples for subset masks.
struct TupleIndex {
    std::vector<std::pair<std::string, Tuple>> items;

    explicit TupleIndex(const Structure& s) {
        for (const auto& [r, ar] : s.sig.relations)
            for (const auto& t : s.rel(r)) items.push_back({r, t});
        if (items.size() > 62) throw TooLarge("structure has more than 62 tuples");
    }

    TupleMask full() const { return (TupleMask(1) << items.size()) - 1; }
};

} // namespace detail

// ---------------------------------------------------------------------------
// The checker.  Satisfaction of a formula under a store is tabulated as the
// set of tuple subsets (bit masks) it can consume; a predicate instantiation
// is keyed by (name, canonicalized arguments) and its mask set is grown to
// the least fixed point by demand-driven iteration.  Star multiplies the two
// operand sets over disjoint pairs only, so the cost tracks the number of
// derivable facts rather than the number of candidate subsets.

class SlrChecker {
public:
    SlrChecker(const Structure& s, const Sid& sid)
        : s_(s), sid_(sid), index_(s), dom_(s.dom()) {
        for (const auto& r : sid_.rules) {
            rule_map_[r.head].push_back(&r);
            known_preds_.insert(r.head);
            collect_preds(r.body);
        }
    }

    bool check(const Store& store, const SlrPtr& formula) {
        eval(formula, store);  // registers the needed instantiations
        while (!dirty_.empty()) {
            Key key = dirty_.front();
            dirty_.pop_front();
            queued_.erase(key);
            update(key);
        }
        return eval(formula, store).count(index_.full()) != 0;
    }

private:
    using MaskSet = std::set<TupleMask>;
    using Key = std::pair<std::string, std::vector<ElemId>>;

    const Structure& s_;
    const Sid& sid_;
    detail::TupleIndex index_;
    std::set<ElemId> dom_;

    std::map<std::string, std::vector<const Rule*>> rule_map_;
    std::set<std::string> known_preds_;

    void collect_preds(const SlrPtr& f) {
        switch (f->kind) {
            case SlrKind::Pred: known_preds_.insert(f->name); break;
            case SlrKind::Star:
                collect_preds(f->left);
                collect_preds(f->right);
                break;
            case SlrKind::Exists: collect_preds(f->body); break;
            default: break;
        }
    }

    std::map<Key, MaskSet> table_;
    std::map<Key, std::set<Key>> readers_;  // key -> instantiations reading it
    std::deque<Key> dirty_;
    std::set<Key> queued_;
    const Key* current_ = nullptr;  // instantiation being recomputed, if any

    void enqueue(const Key& key) {
        if (queued_.insert(key).second) dirty_.push_back(key);
    }

    ElemId eval_term(const Term& t, const Store& store) const {
        if (!t.is_var) return s_.const_value(t.name);
        auto it = store.find(t.name);
        if (it == store.end()) throw InvalidInput("unbound variable " + t.name);
        return it->second;
    }

    // Canonicalize argument values: elements of the active domain keep their
    // identity, others are replaced by -(1 + first occurrence index).  Two
    // argument vectors with the same canonical form are satisfaction-
    // equivalent because satisfaction is invariant under bijections fixing
    // the active domain.
    std::vector<ElemId> canonical_args(const std::vector<ElemId>& vals) const {
        std::vector<ElemId> out;
        std::map<ElemId, ElemId> outside;
        for (ElemId v : vals) {
            if (dom_.count(v)) {
                out.push_back(v);
            } else {
                auto it = outside.find(v);
                if (it == outside.end()) {
                    ElemId c = -(ElemId)(outside.size() + 1);
                    outside[v] = c;
                    out.push_back(c);
                } else {
                    out.push_back(it->second);
                }
            }
        }
        return out;
    }

    // The set of tuple subsets the formula can consume under the store,
    // relative to the current table.  Predicate atoms read the table and
    // register their instantiation for the fixpoint loop.
    MaskSet eval(const SlrPtr& f, const Store& store) {
        switch (f->kind) {
            case SlrKind::Emp:
                return {0};
            case SlrKind::Eq:
                return eval_term(f->lhs, store) == eval_term(f->rhs, store) ? MaskSet{0}
                                                                            : MaskSet{};
            case SlrKind::Neq:
                return eval_term(f->lhs, store) != eval_term(f->rhs, store) ? MaskSet{0}
                                                                            : MaskSet{};
            case SlrKind::Rel: {
                Tuple want;
                for (const auto& a : f->args) want.push_back(eval_term(a, store));
                for (size_t i = 0; i < index_.items.size(); ++i) {
                    const auto& [r, t] = index_.items[i];
                    if (r == f->name && t == want) return {TupleMask(1) << i};
                }
                return {};
            }
            case SlrKind::Star: {
                MaskSet l = eval(f->left, store);
                MaskSet r = eval(f->right, store);
                MaskSet out;
                for (TupleMask a : l)
                    for (TupleMask b : r)
                        if ((a & b) == 0) out.insert(a | b);
                return out;
            }
            case SlrKind::Exists: {
                std::set<ElemId> witnesses = dom_;
                for (const auto& [v, e] : store) witnesses.insert(e);
                witnesses.insert(fresh_ids(witnesses, 1)[0]);
                MaskSet out;
                for (ElemId w : witnesses) {
                    Store st2 = store;
                    st2[f->name] = w;
                    MaskSet m = eval(f->body, st2);
                    out.insert(m.begin(), m.end());
                }
                return out;
            }
            case SlrKind::Pred: {
                if (!known_preds_.count(f->name)) throw UnknownPredicate(f->name);
                std::vector<ElemId> vals;
                for (const auto& a : f->args) vals.push_back(eval_term(a, store));
                Key key{f->name, canonical_args(vals)};
                if (current_) readers_[key].insert(*current_);
                auto it = table_.find(key);
                if (it == table_.end()) {
                    it = table_.emplace(key, MaskSet{}).first;
                    enqueue(key);
                }
                return it->second;
            }
        }
        throw SlrError("unreachable");
    }

    // Recompute one instantiation from its rules; if its set grows, every
    // instantiation that reads it is re-queued.  Processing the queue until
    // it drains reaches the least fixed point, since a set only changes by
    // growing and every growth re-dirties its readers.
    void update(const Key& key) {
        const auto& [name, vals] = key;
        MaskSet acc = table_[key];
        size_t old = acc.size();
        auto rit = rule_map_.find(name);
        static const std::vector<const Rule*> kNoRules;
        for (const Rule* r : rit == rule_map_.end() ? kNoRules : rit->second) {
            if (r->params.size() != vals.size())
                throw InvalidInput("predicate " + name + " applied with wrong arity");
            Store st;
            for (size_t i = 0; i < vals.size(); ++i) st[r->params[i]] = vals[i];
            current_ = &key;
            MaskSet m = eval(r->body, st);
            current_ = nullptr;
            acc.insert(m.begin(), m.end());
        }
        if (acc.size() != old) {
            table_[key] = std::move(acc);
            for (const Key& rd : readers_[key]) enqueue(rd);
        }
    }
};

inline bool check_slr(const Structure& s, const Store& store, const SlrPtr& formula,
                      const Sid& sid) {
    SlrChecker c(s, sid);
    return c.check(store, formula);
}

// ---------------------------------------------------------------------------
// Prenex view of a rule body: quantifier prefix plus a flat atom list.

struct PrenexBody {
    std::vector<std::string> bound;
    std::vector<SlrPtr> atoms;  // no Star/Exists inside
};

inline PrenexBody prenex_view(const SlrPtr& body) {
    PrenexBody out;
    SlrPtr cur = body;
    while (cur->kind == SlrKind::Exists) {
        out.bound.push_back(cur->name);
        cur = cur->body;
    }
    std::function<void(const SlrPtr&)> flat = [&](const SlrPtr& f) {
        if (f->kind == SlrKind::Star) {
            flat(f->left);
            flat(f->right);
        } else if (f->kind == SlrKind::Exists) {
            throw NormalizationRequired("rule body is not in prenex form");
        } else {
            out.atoms.push_back(f);
        }
    };
    flat(cur);
    return out;
}

inline SlrPtr from_prenex(const PrenexBody& pb) {
    SlrPtr body = mk_star_all(pb.atoms);
    for (auto it = pb.bound.rbegin(); it != pb.bound.rend(); ++it)
        body = mk_exists(*it, body);
    return body;
}

// ---------------------------------------------------------------------------
// normalize_sid: eliminate equalities between variables.  For every rule and
// every partition of its variables compatible with the rule's equalities we
// emit a copy of the rule over one representative per class, headed by a
// partition-indexed predicate; the original predicate keeps thin forwarding
// rules, one per partition of its parameters.

namespace detail {

// All partitions of {0..n-1} as class-index vectors (partition[i] = class of
// element i; classes numbered by first occurrence).
inline std::vector<std::vector<int>> all_partitions(int n) {
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

inline std::string partition_suffix(const std::vector<int>& classes) {
    std::string s = "_q";
    for (int c : classes) s += std::to_string(c);
    return s;
}

} // namespace detail

inline Sid normalize_sid(const Sid& in) {
    // Pre-pass: predicate-atom arguments must be variables; replace constant
    // arguments by fresh bound variables pinned with an equality.
    Sid pre = in;
    for (auto& rule : pre.rules) {
        PrenexBody pb = prenex_view(rule.body);
        int fresh = 0;
        std::vector<SlrPtr> atoms;
        for (auto& a : pb.atoms) {
            if (a->kind != SlrKind::Pred) {
                atoms.push_back(a);
                continue;
            }
            std::vector<Term> args = a->args;
            for (auto& t : args) {
                if (t.is_var) continue;
                std::string v = "_c" + std::to_string(fresh++);
                pb.bound.push_back(v);
                atoms.push_back(mk_eq(var(v), t));
                t = var(v);
            }
            atoms.push_back(mk_pred(a->name, args));
        }
        pb.atoms = atoms;
        rule.body = from_prenex(pb);
    }

    Sid out;
    out.sig = pre.sig;
    std::set<std::string> preds;
    std::map<std::string, int> arity;
    for (const auto& r : pre.rules) {
        preds.insert(r.head);
        arity[r.head] = (int)r.params.size();
    }

    // Forwarding rules: A(x1..xn) <- A_q...(reps).
    for (const auto& p : preds) {
        int n = arity[p];
        std::vector<std::string> params;
        for (int i = 0; i < n; ++i) params.push_back("x" + std::to_string(i + 1));
        for (const auto& part : detail::all_partitions(n)) {
            int classes = n == 0 ? 0 : *std::max_element(part.begin(), part.end()) + 1;
            std::vector<Term> rep_args;
            std::vector<SlrPtr> eqs;
            for (int c = 0; c < classes; ++c) {
                int first = -1;
                for (int i = 0; i < n; ++i)
                    if (part[i] == c) {
                        if (first == -1) {
                            first = i;
                            rep_args.push_back(var(params[i]));
                        } else {
                            eqs.push_back(mk_eq(var(params[i]), var(params[first])));
                        }
                    }
            }
            std::vector<SlrPtr> atoms = eqs;
            atoms.push_back(mk_pred(p + detail::partition_suffix(part), rep_args));
            out.rules.push_back(Rule{p, params, mk_star_all(atoms)});
        }
    }

    // Partition rules.
    for (const auto& rule : pre.rules) {
        PrenexBody pb = prenex_view(rule.body);
        std::vector<std::string> vars = rule.params;
        for (const auto& b : pb.bound) vars.push_back(b);
        int n = (int)vars.size();
        std::map<std::string, int> vidx;
        for (int i = 0; i < n; ++i) vidx[vars[i]] = i;
        int np = (int)rule.params.size();

        for (const auto& part : detail::all_partitions(n)) {
            // Compatibility: every variable-variable equality must be within
            // one class, and no disequality may collapse.
            bool ok = true;
            for (const auto& a : pb.atoms) {
                if (a->kind == SlrKind::Eq && a->lhs.is_var && a->rhs.is_var &&
                    part[vidx[a->lhs.name]] != part[vidx[a->rhs.name]])
                    ok = false;
                if (a->kind == SlrKind::Neq && a->lhs.is_var && a->rhs.is_var &&
                    part[vidx[a->lhs.name]] == part[vidx[a->rhs.name]])
                    ok = false;
                if (!ok) break;
            }
            if (!ok) continue;

            // Representative of each class: the first variable in it.
            int classes = n == 0 ? 0 : *std::max_element(part.begin(), part.end()) + 1;
            std::vector<std::string> rep(classes);
            for (int c = 0; c < classes; ++c)
                for (int i = 0; i < n; ++i)
                    if (part[i] == c) { rep[c] = vars[i]; break; }
            std::map<std::string, Term> sub;
            for (int i = 0; i < n; ++i) sub[vars[i]] = var(rep[part[i]]);

            // Head: partition induced on the parameter positions.
            std::vector<int> ppart(part.begin(), part.begin() + np);
            std::map<int, int> renum;
            for (int& c : ppart) {
                auto it = renum.find(c);
                if (it == renum.end()) {
                    int nc = (int)renum.size();
                    renum[c] = nc;
                    c = nc;
                } else {
                    c = it->second;
                }
            }
            std::string head = rule.head + detail::partition_suffix(ppart);
            // Head parameters: representatives of the param-position classes
            // (these are always parameters, being first occurrences).
            std::vector<std::string> hparams;
            std::set<int> seen_cls;
            for (int i = 0; i < np; ++i)
                if (seen_cls.insert(part[i]).second) hparams.push_back(vars[i]);

            // Body: substitute representatives; equalities become emp (kept
            // only when one side is a constant), disequalities stay.
            std::vector<SlrPtr> atoms;
            for (const auto& a : pb.atoms) {
                if (a->kind == SlrKind::Eq && a->lhs.is_var && a->rhs.is_var) continue;
                SlrPtr b = substitute(a, sub);
                if (b->kind == SlrKind::Pred) {
                    // Re-target to the partition predicate induced on its args.
                    std::vector<int> apart;
                    std::map<std::string, int> first;
                    std::vector<Term> aargs;
                    for (const auto& t : b->args) {
                        auto it = first.find(t.name);
                        if (it == first.end()) {
                            int c = (int)first.size();
                            first[t.name] = c;
                            apart.push_back(c);
                            aargs.push_back(t);
                        } else {
                            apart.push_back(it->second);
                        }
                    }
                    b = mk_pred(b->name + detail::partition_suffix(apart), aargs);
                }
                atoms.push_back(b);
            }
            if (atoms.empty()) atoms.push_back(mk_emp());

            // Surviving bound variables: representatives that are not head
            // parameters but do occur.
            std::set<std::string> used;
            for (const auto& a : atoms)
                for (const auto& v : free_vars(a)) used.insert(v);
            PrenexBody npb;
            for (int c = 0; c < classes; ++c) {
                const std::string& r = rep[c];
                if (std::find(hparams.begin(), hparams.end(), r) == hparams.end() &&
                    used.count(r))
                    npb.bound.push_back(r);
            }
            npb.atoms = atoms;
            out.rules.push_back(Rule{head, hparams, from_prenex(npb)});
        }
    }
    return out;
}

// True when no rule body contains an equality between two variables.
inline bool is_normalized(const Sid& sid) {
    for (const auto& r : sid.rules) {
        std::function<bool(const SlrPtr&)> scan = [&](const SlrPtr& f) -> bool {
            switch (f->kind) {
                case SlrKind::Eq:
                    return f->lhs.is_var && f->rhs.is_var;
                case SlrKind::Star:
                    return scan(f->left) || scan(f->right);
                case SlrKind::Exists:
                    return scan(f->body);
                default:
                    return false;
            }
        };
        if (scan(r.body)) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Injective satisfaction: existential witnesses are drawn from an explicit
// finite pool; star splits the pool disjointly between its conjuncts.  The
// result distinguishes genuine refutation from pool starvation.

enum class InjResult { Sat, Unsat, PoolExhausted };

class InjectiveChecker {
public:
    InjectiveChecker(const Structure& s, const Sid& sid, std::vector<ElemId> pool)
        : s_(s), sid_(sid), index_(s), pool_(std::move(pool)) {
        if (!is_normalized(sid)) throw NormalizationRequired("injective check");
        if (pool_.size() > 20) throw TooLarge("pool larger than 20 elements");
    }

    InjResult check(const Store& store, const SlrPtr& formula) {
        starved_ = false;
        TupleMask pm = (TupleMask(1) << pool_.size()) - 1;
        Outcome o = sat(formula, store, index_.full(), pm);
        if (o.value) return InjResult::Sat;
        return starved_ ? InjResult::PoolExhausted : InjResult::Unsat;
    }

private:
    struct Outcome {
        bool value;
        bool tainted;
    };

    const Structure& s_;
    const Sid& sid_;
    detail::TupleIndex index_;
    std::vector<ElemId> pool_;
    bool starved_ = false;

    using Key = std::tuple<std::string, std::vector<ElemId>, TupleMask, TupleMask>;
    std::map<Key, bool> memo_;
    std::set<Key> in_progress_;

    ElemId eval_term(const Term& t, const Store& store) const {
        if (!t.is_var) return s_.const_value(t.name);
        auto it = store.find(t.name);
        if (it == store.end()) throw InvalidInput("unbound variable " + t.name);
        return it->second;
    }

    Outcome sat(const SlrPtr& f, const Store& store, TupleMask mask, TupleMask poolmask) {
        switch (f->kind) {
            case SlrKind::Emp:
                return {mask == 0, false};
            case SlrKind::Eq:
                return {mask == 0 && eval_term(f->lhs, store) == eval_term(f->rhs, store),
                        false};
            case SlrKind::Neq:
                return {mask == 0 && eval_term(f->lhs, store) != eval_term(f->rhs, store),
                        false};
            case SlrKind::Rel: {
                if (mask == 0 || (mask & (mask - 1)) != 0) return {false, false};
                int i = std::countr_zero(mask);
                const auto& [r, t] = index_.items[i];
                if (r != f->name) return {false, false};
                Tuple want;
                for (const auto& a : f->args) want.push_back(eval_term(a, store));
                return {t == want, false};
            }
            case SlrKind::Star: {
                bool tainted = false;
                // Split both the tuple set and the pool.
                for (TupleMask sub = mask;; sub = (sub - 1) & mask) {
                    for (TupleMask psub = poolmask;; psub = (psub - 1) & poolmask) {
                        Outcome l = sat(f->left, store, sub, psub);
                        tainted |= l.tainted;
                        if (l.value) {
                            Outcome r = sat(f->right, store, mask & ~sub, poolmask & ~psub);
                            tainted |= r.tainted;
                            if (r.value) return {true, false};
                        }
                        if (psub == 0) break;
                    }
                    if (sub == 0) break;
                }
                return {false, tainted};
            }
            case SlrKind::Exists: {
                // Witnesses: pool elements not already used for the other
                // free variables of the body.
                std::set<std::string> fv = free_vars(f->body);
                fv.erase(f->name);
                std::set<ElemId> taken;
                for (const auto& v : fv) {
                    auto it = store.find(v);
                    if (it != store.end()) taken.insert(it->second);
                }
                bool tainted = false;
                bool any_candidate = false;
                for (size_t i = 0; i < pool_.size(); ++i) {
                    if (!(poolmask & (TupleMask(1) << i))) continue;
                    ElemId w = pool_[i];
                    if (taken.count(w)) continue;
                    any_candidate = true;
                    Store st2 = store;
                    st2[f->name] = w;
                    Outcome o = sat(f->body, st2, mask, poolmask);
                    tainted |= o.tainted;
                    if (o.value) return {true, false};
                }
                if (!any_candidate) starved_ = true;
                return {false, tainted};
            }
            case SlrKind::Pred: {
                if (!sid_.mentions_pred(f->name)) throw UnknownPredicate(f->name);
                std::vector<ElemId> vals;
                for (const auto& a : f->args) vals.push_back(eval_term(a, store));
                Key key{f->name, vals, mask, poolmask};
                auto it = memo_.find(key);
                if (it != memo_.end()) return {it->second, false};
                if (in_progress_.count(key)) return {false, true};
                in_progress_.insert(key);
                bool tainted = false;
                bool value = false;
                for (const Rule* r : sid_.rules_of(f->name)) {
                    if (r->params.size() != vals.size())
                        throw InvalidInput("predicate " + f->name + " applied with wrong arity");
                    Store st;
                    for (size_t i = 0; i < vals.size(); ++i) st[r->params[i]] = vals[i];
                    Outcome o = sat(r->body, st, mask, poolmask);
                    tainted |= o.tainted;
                    if (o.value) { value = true; break; }
                }
                in_progress_.erase(key);
                if (value || !tainted) memo_[key] = value;
                return {value, value ? false : tainted};
            }
        }
        throw SlrError("unreachable");
    }
};

inline InjResult check_slr_injective(const Structure& s, const Store& store,
                                     const SlrPtr& formula, const Sid& sid,
                                     const std::vector<ElemId>& pool) {
    InjectiveChecker c(s, sid, pool);
    return c.check(store, formula);
}

// ---------------------------------------------------------------------------
// Width bound: the maximal number of variables (parameters plus bound
// variables) appearing in any rule.

inline int sid_width_bound(const Sid& sid) {
    int best = 0;
    for (const auto& r : sid.rules) {
        std::set<std::string> vars(r.params.begin(), r.params.end());
        std::function<void(const SlrPtr&)> scan = [&](const SlrPtr& f) {
            if (f->kind == SlrKind::Star) {
                scan(f->left);
                scan(f->right);
            } else if (f->kind == SlrKind::Exists) {
                vars.insert(f->name);
                scan(f->body);
            }
        };
        scan(r.body);
        best = std::max(best, (int)vars.size());
    }
    return best;
}

// ---------------------------------------------------------------------------
// split_relation_atoms: rewrite so every rule body contains at most one
// relation atom per relation symbol.  Extra occurrences are forwarded through
// fresh single-atom predicates.

inline Sid split_relation_atoms(const Sid& in) {
    Sid out;
    out.sig = in.sig;
    int fresh = 0;
    std::vector<Rule> extra;
    for (const auto& rule : in.rules) {
        PrenexBody pb = prenex_view(rule.body);
        std::set<std::string> seen;
        for (auto& a : pb.atoms) {
            if (a->kind != SlrKind::Rel) continue;
            if (seen.insert(a->name).second) continue;
            std::string aux = "_Split" + std::to_string(fresh++);
            int ar = (int)a->args.size();
            std::vector<std::string> params;
            std::vector<Term> pargs;
            for (int i = 0; i < ar; ++i) {
                params.push_back("x" + std::to_string(i + 1));
                pargs.push_back(var(params.back()));
            }
            extra.push_back(Rule{aux, params, mk_rel(a->name, pargs)});
            a = mk_pred(aux, a->args);
        }
        out.rules.push_back(Rule{rule.head, rule.params, from_prenex(pb)});
    }
    for (auto& r : extra) out.rules.push_back(std::move(r));
    return out;
}

} // namespace slr
