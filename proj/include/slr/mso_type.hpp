#pragma once

// Rank-r MSO types of structures with explicit finite evaluation domains,
// represented Ehrenfeucht-Fraisse style: the rank-0 type is the set of true
// atomic sentences over the signature's constants; the rank-(r+1) type pairs
// the rank-r types reachable by adding one new constant (a point move) with
// those reachable by adding one new unary relation (a set move), alongside
// the atomic base.  Types are canonicalized to nested-brace strings, so equal
// keys mean the structures satisfy the same sentences up to that rank.
//
// A registry remembers one (or more) representative structures per type; the
// abstract operations (glue, forget-constant) act on representatives and
// return the type of the result, which is well defined because both concrete
// operations preserve type equality rank for rank.

#include <cstdint>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "structures.hpp"

namespace slr {

struct MsoType {
    int rank = 0;
    std::string key;

    bool operator==(const MsoType& o) const = default;
    auto operator<=>(const MsoType& o) const = default;
};

struct RankMismatch : SlrError {
    explicit RankMismatch(const std::string& w) : SlrError("rank mismatch: " + w) {}
};

struct UnregisteredType : SlrError {
    explicit UnregisteredType(const std::string& w) : SlrError("unregistered type: " + w) {}
};

class TypeRegistry {
public:
    void put(const MsoType& t, const PaddedStructure& rep) {
        auto& v = reps_[t.key];
        v.push_back(rep);
    }

    bool has(const MsoType& t) const { return reps_.count(t.key) > 0; }

    const PaddedStructure& rep(const MsoType& t, size_t which = 0) const {
        auto it = reps_.find(t.key);
        if (it == reps_.end() || which >= it->second.size())
            throw UnregisteredType(t.key);
        return it->second[which];
    }

    size_t rep_count(const MsoType& t) const {
        auto it = reps_.find(t.key);
        return it == reps_.end() ? 0 : it->second.size();
    }

    size_t size() const { return reps_.size(); }

private:
    std::map<std::string, std::vector<PaddedStructure>> reps_;
};

namespace detail {

inline std::string atomic_sentences(const Structure& s) {
    std::set<std::string> atoms;
    const auto& cs = s.sig.constants;
    for (size_t i = 0; i < cs.size(); ++i)
        for (size_t j = i + 1; j < cs.size(); ++j) {
            if (!s.consts.count(cs[i]) || !s.consts.count(cs[j])) continue;
            if (s.consts.at(cs[i]) == s.consts.at(cs[j]))
                atoms.insert("=(" + cs[i] + "," + cs[j] + ")");
        }
    for (const auto& [r, ar] : s.sig.relations) {
        // All constant-value combinations of the right arity.
        std::vector<std::string> named;
        for (const auto& c : cs)
            if (s.consts.count(c)) named.push_back(c);
        std::vector<int> idx(ar, 0);
        if (named.empty() && ar > 0) continue;
        while (true) {
            Tuple t;
            std::string a = r + "(";
            for (int k = 0; k < ar; ++k) {
                t.push_back(s.consts.at(named[idx[k]]));
                a += (k ? "," : "") + named[idx[k]];
            }
            a += ")";
            if (s.rel(r).count(t)) atoms.insert(a);
            int k = ar - 1;
            while (k >= 0 && idx[k] == (int)named.size() - 1) idx[k--] = 0;
            if (k < 0) break;
            ++idx[k];
        }
    }
    std::string out = "{";
    bool first = true;
    for (const auto& a : atoms) {
        if (!first) out += ";";
        out += a;
        first = false;
    }
    return out + "}";
}

inline std::string type_key(const PaddedStructure& ps, int r) {
    if ((r >= 2 && (int)ps.domain.size() > 8) || (int)ps.domain.size() > 24)
        throw TooLarge("mso_type: domain too large for rank " + std::to_string(r));
    std::string base = atomic_sentences(ps.s);
    if (r == 0) return "0" + base;

    std::string ext_const = "@e" + std::to_string(r);
    std::string ext_rel = "@U" + std::to_string(r);

    std::set<std::string> point_moves;
    for (ElemId e : ps.domain) {
        PaddedStructure q = ps;
        q.s.sig.add_constant(ext_const);
        q.s.consts[ext_const] = e;
        point_moves.insert(type_key(q, r - 1));
    }

    std::set<std::string> set_moves;
    if (r == 1) {
        // A rank-0 type only sees the new unary relation on constant values,
        // and every restriction to the constant values is realized, so it
        // suffices to enumerate subsets of the constant values.
        std::set<ElemId> cvals;
        for (const auto& [c, v] : ps.s.consts) cvals.insert(v);
        std::vector<ElemId> cv(cvals.begin(), cvals.end());
        for (std::uint64_t m = 0; m < (std::uint64_t(1) << cv.size()); ++m) {
            PaddedStructure q = ps;
            q.s.sig.add_relation(ext_rel, 1);
            for (size_t i = 0; i < cv.size(); ++i)
                if (m & (std::uint64_t(1) << i)) q.s.tuples[ext_rel].insert({cv[i]});
            set_moves.insert(type_key(q, 0));
        }
    } else {
        std::vector<ElemId> dom(ps.domain.begin(), ps.domain.end());
        if (dom.size() > 14)
            throw TooLarge("mso_type: domain too large for rank " + std::to_string(r));
        std::uint64_t limit = std::uint64_t(1) << dom.size();
        for (std::uint64_t m = 0; m < limit; ++m) {
            PaddedStructure q = ps;
            q.s.sig.add_relation(ext_rel, 1);
            for (size_t i = 0; i < dom.size(); ++i)
                if (m & (std::uint64_t(1) << i)) q.s.tuples[ext_rel].insert({dom[i]});
            set_moves.insert(type_key(q, r - 1));
        }
    }

    std::string out = std::to_string(r) + base + "|P{";
    bool first = true;
    for (const auto& k : point_moves) {
        if (!first) out += ";";
        out += k;
        first = false;
    }
    out += "}|S{";
    first = true;
    for (const auto& k : set_moves) {
        if (!first) out += ";";
        out += k;
        first = false;
    }
    return out + "}";
}

} // namespace detail

inline MsoType mso_type(const PaddedStructure& ps, int r, TypeRegistry* reg = nullptr) {
    if (r < 0) throw InvalidInput("mso_type: negative rank");
    if (ps.domain.empty()) throw InvalidInput("mso_type: empty evaluation domain");
    for (ElemId e : ps.s.dom())
        if (!ps.domain.count(e))
            throw InvalidInput("mso_type: domain misses an active element");
    MsoType t{r, detail::type_key(ps, r)};
    if (reg && !reg->has(t)) reg->put(t, ps);
    return t;
}

inline MsoType mso_type(const Structure& s, int r, TypeRegistry* reg = nullptr) {
    // Pad with 2^r spare elements: beyond that, extra spare elements no
    // longer change the rank-r type, so this captures the type the structure
    // has over an unbounded supply of fresh elements.
    return mso_type(pad(s, 1 << r), r, reg);
}

// Reduce the number of spare (non-active) domain elements to exactly 2^r;
// beyond that count they do not affect the rank-r type, so trimming keeps the
// type while keeping representatives small.  Structures with fewer spares are
// topped up instead.
inline PaddedStructure trim_padding(const PaddedStructure& ps, int r) {
    std::set<ElemId> active = ps.s.dom();
    int want = 1 << r;
    PaddedStructure out{ps.s, active};
    int kept = 0;
    for (ElemId e : ps.domain) {
        if (active.count(e)) continue;
        if (kept < want) {
            out.domain.insert(e);
            ++kept;
        }
    }
    if (kept < want) {
        std::set<ElemId> used = out.domain;
        for (ElemId e : fresh_ids(used, want - kept)) out.domain.insert(e);
    }
    return out;
}

// Rank-1 representative minimization.  At rank 1 a non-constant element is
// visible only through tuples linking it to constant values (including
// self-tuples); its "profile" is that set of patterns.  Elements with equal
// profiles are interchangeable, elements with empty profiles act as padding,
// and tuples involving two or more distinct non-constant elements are
// invisible altogether.  Keeping one element per profile therefore preserves
// the rank-1 (and rank-0) type while bounding the representative's size.
inline PaddedStructure shrink_rank1(const PaddedStructure& ps) {
    std::set<ElemId> cvals;
    for (const auto& [c, v] : ps.s.consts) cvals.insert(v);

    std::map<ElemId, std::set<std::string>> prof;
    for (const auto& [r, ts] : ps.s.tuples)
        for (const auto& t : ts) {
            std::set<ElemId> nc;
            for (ElemId x : t)
                if (!cvals.count(x)) nc.insert(x);
            if (nc.size() != 1) continue;
            ElemId e = *nc.begin();
            std::ostringstream p;
            p << r;
            for (ElemId x : t) p << "," << (cvals.count(x) ? x : ElemId(-1));
            prof[e].insert(p.str());
        }

    std::set<ElemId> keep = cvals;
    std::set<std::string> seen;
    for (const auto& [e, pr] : prof) {
        std::string key;
        for (const auto& p : pr) key += p + ";";
        if (seen.insert(key).second) keep.insert(e);
    }

    Structure out;
    out.sig = ps.s.sig;
    out.consts = ps.s.consts;
    for (const auto& [r, ts] : ps.s.tuples)
        for (const auto& t : ts) {
            std::set<ElemId> nc;
            bool kept = true;
            for (ElemId x : t) {
                if (!cvals.count(x)) nc.insert(x);
                if (!keep.count(x)) kept = false;
            }
            if (kept && nc.size() <= 1) out.tuples[r].insert(t);
        }
    return PaddedStructure{std::move(out), std::move(keep)};
}

// ---------------------------------------------------------------------------
// Abstract operations on types via registered representatives.

inline MsoType abstract_glue(const MsoType& a, const MsoType& b, TypeRegistry& reg) {
    if (a.rank != b.rank) throw RankMismatch("abstract_glue");
    PaddedStructure g = glue(reg.rep(a), reg.rep(b));
    return mso_type(g, a.rank, &reg);
}

inline MsoType abstract_forget(const MsoType& a, const std::string& constant,
                               TypeRegistry& reg) {
    PaddedStructure rep = reg.rep(a);
    PaddedStructure out{forget_constant(rep.s, constant), rep.domain};
    return mso_type(out, a.rank, &reg);
}

} // namespace slr
