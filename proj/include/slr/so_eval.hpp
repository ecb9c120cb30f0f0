#pragma once

// Evaluating second-order formulas over a structure with an explicit finite
// evaluation domain.  Second-order quantifiers range over all relations of
// the matching arity on that domain.
//
// Small quantifiers are evaluated by direct enumeration.  A leading block of
// existential relation quantifiers that is too large to enumerate (as in the
// output of the SLR-to-SO translation) is decided instead by grounding the
// body to CNF -- one boolean per potential tuple of each prefix variable,
// first-order quantifiers expanded over the domain -- and running the CDCL
// solver.  Both paths implement the same semantics.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sat.hpp"
#include "so_ast.hpp"
#include "structures.hpp"

namespace slr {

struct SoStore {
    std::map<std::string, ElemId> fo;                 // first-order variables
    std::map<std::string, std::set<Tuple>> so;        // relation variables
};

namespace detail {

// All tuples of the given arity over the domain, in lexicographic order.
inline std::vector<Tuple> all_tuples(const std::vector<ElemId>& domain, int arity) {
    std::vector<Tuple> out;
    Tuple cur(arity);
    std::function<void(int)> go = [&](int i) {
        if (i == arity) {
            out.push_back(cur);
            return;
        }
        for (ElemId e : domain) {
            cur[i] = e;
            go(i + 1);
        }
    };
    go(0);
    return out;
}

constexpr int kEnumBits = 16;  // max 2^16 relation candidates per quantifier

inline bool eval_naive(const Structure& s, const std::vector<ElemId>& domain,
                       SoStore& store, const SoPtr& f) {
    auto val = [&](const Term& t) -> ElemId {
        if (!t.is_var) return s.const_value(t.name);
        auto it = store.fo.find(t.name);
        if (it == store.fo.end()) throw InvalidInput("unbound variable " + t.name);
        return it->second;
    };
    switch (f->kind) {
        case SoKind::True:
            return true;
        case SoKind::False:
            return false;
        case SoKind::Eq:
            return val(f->lhs) == val(f->rhs);
        case SoKind::Rel: {
            Tuple t;
            for (const auto& a : f->args) t.push_back(val(a));
            return s.rel(f->name).count(t) > 0;
        }
        case SoKind::RelVar: {
            auto it = store.so.find(f->name);
            if (it == store.so.end())
                throw InvalidInput("unbound relation variable " + f->name);
            Tuple t;
            for (const auto& a : f->args) t.push_back(val(a));
            return it->second.count(t) > 0;
        }
        case SoKind::Not:
            return !eval_naive(s, domain, store, f->kids[0]);
        case SoKind::And:
            for (const auto& k : f->kids)
                if (!eval_naive(s, domain, store, k)) return false;
            return true;
        case SoKind::Or:
            for (const auto& k : f->kids)
                if (eval_naive(s, domain, store, k)) return true;
            return false;
        case SoKind::ExistsFo:
        case SoKind::ForallFo: {
            bool exists = f->kind == SoKind::ExistsFo;
            auto saved = store.fo.find(f->name) != store.fo.end()
                             ? std::optional<ElemId>(store.fo[f->name])
                             : std::nullopt;
            for (ElemId e : domain) {
                store.fo[f->name] = e;
                bool v = eval_naive(s, domain, store, f->kids[0]);
                if (v == exists) {
                    if (saved) store.fo[f->name] = *saved; else store.fo.erase(f->name);
                    return exists;
                }
            }
            if (saved) store.fo[f->name] = *saved; else store.fo.erase(f->name);
            return !exists;
        }
        case SoKind::ExistsSo:
        case SoKind::ForallSo: {
            bool exists = f->kind == SoKind::ExistsSo;
            std::vector<Tuple> tuples = all_tuples(domain, f->arity);
            if (tuples.size() > kEnumBits)
                throw TooLarge("second-order quantifier over " +
                               std::to_string(tuples.size()) + " potential tuples");
            auto saved = store.so.find(f->name) != store.so.end()
                             ? std::optional<std::set<Tuple>>(store.so[f->name])
                             : std::nullopt;
            std::uint64_t limit = std::uint64_t(1) << tuples.size();
            for (std::uint64_t m = 0; m < limit; ++m) {
                std::set<Tuple> rel;
                for (size_t i = 0; i < tuples.size(); ++i)
                    if (m & (std::uint64_t(1) << i)) rel.insert(tuples[i]);
                store.so[f->name] = rel;
                bool v = eval_naive(s, domain, store, f->kids[0]);
                if (v == exists) {
                    if (saved) store.so[f->name] = *saved; else store.so.erase(f->name);
                    return exists;
                }
            }
            if (saved) store.so[f->name] = *saved; else store.so.erase(f->name);
            return !exists;
        }
    }
    throw SlrError("unreachable");
}

// ---------------------------------------------------------------------------
// Grounding path.

class SoGrounder {
public:
    SoGrounder(const Structure& s, const std::vector<ElemId>& domain, const SoStore& store)
        : s_(s), domain_(domain), base_(store) {
        true_lit_ = sat::pos(solver_.new_var());
        solver_.add_clause({true_lit_});
    }

    // Declare a prefix variable; its tuples become solver booleans.
    void add_prefix_var(const std::string& name, int arity) {
        auto tuples = all_tuples(domain_, arity);
        std::map<Tuple, sat::Lit>& bits = prefix_[name];
        for (const auto& t : tuples) bits[t] = sat::pos(solver_.new_var());
    }

    // The caller asserts that the given elements are fully interchangeable
    // (they occur in no tuple, constant, or store binding, so permuting them
    // maps satisfying prefix assignments to satisfying prefix assignments).
    // For each adjacent pair, require the assignment to be lexicographically
    // no larger than its image under the transposition; this prunes the
    // symmetric copies that otherwise dominate unsatisfiable instances.
    void add_symmetry_breaking(const std::vector<ElemId>& elems) {
        for (size_t i = 0; i + 1 < elems.size(); ++i) {
            ElemId a = elems[i], b = elems[i + 1];
            std::vector<std::pair<sat::Lit, sat::Lit>> pairs;
            for (const auto& [name, bits] : prefix_)
                for (const auto& [tup, lit] : bits) {
                    bool touches = false;
                    Tuple sw = tup;
                    for (auto& e : sw) {
                        if (e == a) e = b, touches = true;
                        else if (e == b) e = a, touches = true;
                    }
                    if (!touches || sw == tup) continue;
                    pairs.push_back({lit, bits.at(sw)});
                }
            sat::Lit eq = true_lit_;
            for (const auto& [x, y] : pairs) {
                solver_.add_clause({sat::negate(eq), sat::negate(x), y});
                sat::Lit eq2 = sat::pos(solver_.new_var());
                solver_.add_clause({sat::negate(eq2), eq});
                solver_.add_clause({sat::negate(eq2), sat::negate(x), y});
                solver_.add_clause({sat::negate(eq2), x, sat::negate(y)});
                solver_.add_clause({eq2, sat::negate(eq), sat::negate(x), sat::negate(y)});
                solver_.add_clause({eq2, sat::negate(eq), x, y});
                eq = eq2;
            }
        }
    }

    bool solve(const SoPtr& body) {
        SoStore env = base_;
        sat::Lit root = ground(body, env);
        solver_.add_clause({root});
        return solver_.solve();
    }

private:
    const Structure& s_;
    std::vector<ElemId> domain_;
    SoStore base_;
    sat::Solver solver_;
    sat::Lit true_lit_;
    std::map<std::string, std::map<Tuple, sat::Lit>> prefix_;

    // Grounding cache: a subformula grounds to the same literal whenever the
    // assignment to its free first-order variables is the same, so quantified
    // copies that do not mention the quantified variable are shared instead
    // of duplicated.  Disabled under inner second-order bindings.
    std::map<const SoFormula*, std::vector<std::string>> fv_;
    std::map<std::pair<const SoFormula*, std::vector<ElemId>>, sat::Lit> memo_;
    std::map<std::pair<bool, std::vector<sat::Lit>>, sat::Lit> gates_;

    const std::vector<std::string>& free_fo(const SoPtr& f) {
        auto it = fv_.find(f.get());
        if (it != fv_.end()) return it->second;
        std::set<std::string> fo, so;
        so_free_vars(f, fo, so);
        return fv_.emplace(f.get(), std::vector<std::string>(fo.begin(), fo.end())).first->second;
    }

    sat::Lit false_lit() const { return sat::negate(true_lit_); }

    sat::Lit combine(bool is_and, std::vector<sat::Lit> kids) {
        std::vector<sat::Lit> keep;
        for (sat::Lit k : kids) {
            if (k == (is_and ? true_lit_ : false_lit())) continue;
            if (k == (is_and ? false_lit() : true_lit_)) return is_and ? false_lit() : true_lit_;
            keep.push_back(k);
        }
        if (keep.empty()) return is_and ? true_lit_ : false_lit();
        if (keep.size() == 1) return keep[0];
        std::sort(keep.begin(), keep.end());
        keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
        if (keep.size() == 1) return keep[0];
        auto git = gates_.find({is_and, keep});
        if (git != gates_.end()) return git->second;
        sat::Lit y = sat::pos(solver_.new_var());
        gates_.emplace(std::make_pair(is_and, keep), y);
        if (is_and) {
            std::vector<sat::Lit> big{y};
            for (sat::Lit k : keep) {
                solver_.add_clause({sat::negate(y), k});
                big.push_back(sat::negate(k));
            }
            solver_.add_clause(big);
        } else {
            std::vector<sat::Lit> big{sat::negate(y)};
            for (sat::Lit k : keep) {
                solver_.add_clause({y, sat::negate(k)});
                big.push_back(k);
            }
            solver_.add_clause(big);
        }
        return y;
    }

    sat::Lit ground(const SoPtr& f, SoStore& env) {
        bool cacheable = env.so.empty() &&
                         (f->kind == SoKind::And || f->kind == SoKind::Or ||
                          f->kind == SoKind::Not || f->kind == SoKind::ExistsFo ||
                          f->kind == SoKind::ForallFo);
        std::pair<const SoFormula*, std::vector<ElemId>> key{f.get(), {}};
        if (cacheable) {
            for (const auto& v : free_fo(f)) {
                auto it = env.fo.find(v);
                if (it == env.fo.end()) {
                    cacheable = false;
                    break;
                }
                key.second.push_back(it->second);
            }
            if (cacheable) {
                auto it = memo_.find(key);
                if (it != memo_.end()) return it->second;
            }
        }
        sat::Lit out = ground_raw(f, env);
        if (cacheable) memo_.emplace(std::move(key), out);
        return out;
    }

    sat::Lit ground_raw(const SoPtr& f, SoStore& env) {
        auto val = [&](const Term& t) -> ElemId {
            if (!t.is_var) return s_.const_value(t.name);
            auto it = env.fo.find(t.name);
            if (it == env.fo.end()) throw InvalidInput("unbound variable " + t.name);
            return it->second;
        };
        switch (f->kind) {
            case SoKind::True:
                return true_lit_;
            case SoKind::False:
                return false_lit();
            case SoKind::Eq:
                return val(f->lhs) == val(f->rhs) ? true_lit_ : false_lit();
            case SoKind::Rel: {
                Tuple t;
                for (const auto& a : f->args) t.push_back(val(a));
                return s_.rel(f->name).count(t) ? true_lit_ : false_lit();
            }
            case SoKind::RelVar: {
                Tuple t;
                for (const auto& a : f->args) t.push_back(val(a));
                auto pit = prefix_.find(f->name);
                if (pit != prefix_.end()) {
                    auto bit = pit->second.find(t);
                    if (bit == pit->second.end()) return false_lit();
                    return bit->second;
                }
                auto it = env.so.find(f->name);
                if (it == env.so.end())
                    throw InvalidInput("unbound relation variable " + f->name);
                return it->second.count(t) ? true_lit_ : false_lit();
            }
            case SoKind::Not:
                return sat::negate(ground(f->kids[0], env));
            case SoKind::And:
            case SoKind::Or: {
                std::vector<sat::Lit> kids;
                bool is_and = f->kind == SoKind::And;
                for (const auto& k : f->kids) {
                    sat::Lit l = ground(k, env);
                    if (l == (is_and ? false_lit() : true_lit_)) return l;  // short circuit
                    kids.push_back(l);
                }
                return combine(is_and, std::move(kids));
            }
            case SoKind::ExistsFo:
            case SoKind::ForallFo: {
                bool is_and = f->kind == SoKind::ForallFo;
                std::vector<sat::Lit> kids;
                auto saved = env.fo.count(f->name)
                                 ? std::optional<ElemId>(env.fo[f->name])
                                 : std::nullopt;
                for (ElemId e : domain_) {
                    env.fo[f->name] = e;
                    sat::Lit l = ground(f->kids[0], env);
                    if (l == (is_and ? false_lit() : true_lit_)) {
                        kids = {l};
                        break;
                    }
                    kids.push_back(l);
                }
                if (saved) env.fo[f->name] = *saved; else env.fo.erase(f->name);
                return combine(is_and, std::move(kids));
            }
            case SoKind::ExistsSo:
            case SoKind::ForallSo: {
                // Inner second-order quantifiers are expanded by enumeration;
                // they must be small (e.g. monadic over a modest domain).
                bool is_and = f->kind == SoKind::ForallSo;
                auto tuples = all_tuples(domain_, f->arity);
                if (tuples.size() > kEnumBits)
                    throw TooLarge("inner second-order quantifier over " +
                                   std::to_string(tuples.size()) + " potential tuples");
                std::vector<sat::Lit> kids;
                auto saved = env.so.count(f->name)
                                 ? std::optional<std::set<Tuple>>(env.so[f->name])
                                 : std::nullopt;
                std::uint64_t limit = std::uint64_t(1) << tuples.size();
                for (std::uint64_t m = 0; m < limit; ++m) {
                    std::set<Tuple> rel;
                    for (size_t i = 0; i < tuples.size(); ++i)
                        if (m & (std::uint64_t(1) << i)) rel.insert(tuples[i]);
                    env.so[f->name] = rel;
                    sat::Lit l = ground(f->kids[0], env);
                    if (l == (is_and ? false_lit() : true_lit_)) {
                        kids = {l};
                        break;
                    }
                    kids.push_back(l);
                }
                if (saved) env.so[f->name] = *saved; else env.so.erase(f->name);
                return combine(is_and, std::move(kids));
            }
        }
        throw SlrError("unreachable");
    }
};

} // namespace detail

// ---------------------------------------------------------------------------
// Entry point.

inline bool eval_so(const Structure& s, const std::set<ElemId>& domain_set,
                    const SoStore& store, const SoPtr& formula,
                    const std::set<ElemId>& interchangeable = {}) {
    for (ElemId e : s.dom())
        if (!domain_set.count(e))
            throw InvalidInput("evaluation domain misses active-domain element " +
                               std::to_string(e));
    if (domain_set.empty()) throw InvalidInput("evaluation domain is empty");
    std::vector<ElemId> domain(domain_set.begin(), domain_set.end());

    // Peel a leading block of existential relation quantifiers; if it is too
    // large to enumerate, ground the remainder to CNF instead.
    std::vector<std::pair<std::string, int>> prefix;
    SoPtr body = formula;
    double bits = 0;
    while (body->kind == SoKind::ExistsSo) {
        double cnt = 1;
        for (int i = 0; i < body->arity; ++i) cnt *= (double)domain.size();
        bits += cnt;
        prefix.push_back({body->name, body->arity});
        body = body->kids[0];
    }
    if (!prefix.empty() && bits > detail::kEnumBits) {
        detail::SoGrounder g(s, domain, store);
        for (const auto& [n, a] : prefix) g.add_prefix_var(n, a);
        // Keep only elements that really are untouched by the structure and
        // the store; permuting those cannot change the verdict.
        std::vector<ElemId> sym;
        std::set<ElemId> used = s.dom();
        for (const auto& [c, e] : s.consts) used.insert(e);
        for (const auto& [v, e] : store.fo) used.insert(e);
        for (const auto& [v, rel] : store.so)
            for (const auto& t : rel) used.insert(t.begin(), t.end());
        for (ElemId e : interchangeable)
            if (domain_set.count(e) && !used.count(e)) sym.push_back(e);
        g.add_symmetry_breaking(sym);
        return g.solve(body);
    }
    SoStore st = store;
    return detail::eval_naive(s, domain, st, formula);
}

inline bool eval_so(const PaddedStructure& ps, const SoStore& store, const SoPtr& formula) {
    return eval_so(ps.s, ps.domain, store, formula);
}

} // namespace slr
