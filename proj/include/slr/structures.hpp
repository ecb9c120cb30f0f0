#pragma once

// Finite relational structures with designated constants, plus the basic
// operations used throughout the library: disjoint composition, gluing two
// structures along their shared constants, forgetting constants, isomorphism
// testing, D-extensions and port encodings, and padding with spare universe
// elements.  A structure interprets every relation symbol of its signature by
// a finite set of tuples and every constant symbol by a single element.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace slr {

using ElemId = int;
using Tuple = std::vector<ElemId>;

// ---------------------------------------------------------------------------
// Errors

struct SlrError : std::runtime_error {
    explicit SlrError(const std::string& what) : std::runtime_error(what) {}
};

struct SyntaxError : SlrError {
    explicit SyntaxError(const std::string& what) : SlrError("syntax error: " + what) {}
};

struct InvalidInput : SlrError {
    explicit InvalidInput(const std::string& what) : SlrError("invalid input: " + what) {}
};

struct NotDisjoint : SlrError {
    explicit NotDisjoint(const std::string& what) : SlrError("not disjoint: " + what) {}
};

struct Incompatible : SlrError {
    explicit Incompatible(const std::string& what) : SlrError("incompatible: " + what) {}
};

struct ReservedSymbol : SlrError {
    explicit ReservedSymbol(const std::string& what) : SlrError("reserved symbol: " + what) {}
};

struct TooLarge : SlrError {
    explicit TooLarge(const std::string& what) : SlrError("problem too large: " + what) {}
};

// ---------------------------------------------------------------------------
// Signature

struct Signature {
    // Relation symbols with arities, in declaration order.
    std::vector<std::pair<std::string, int>> relations;
    // Constant symbols, in declaration order.
    std::vector<std::string> constants;

    bool has_relation(const std::string& name) const {
        for (const auto& [r, a] : relations)
            if (r == name) return true;
        return false;
    }

    int arity_of(const std::string& name) const {
        for (const auto& [r, a] : relations)
            if (r == name) return a;
        throw InvalidInput("unknown relation symbol: " + name);
    }

    bool has_constant(const std::string& name) const {
        return std::find(constants.begin(), constants.end(), name) != constants.end();
    }

    void add_relation(const std::string& name, int arity) {
        if (has_relation(name) || has_constant(name))
            throw InvalidInput("duplicate symbol in signature: " + name);
        if (arity < 1) throw InvalidInput("relation arity must be positive: " + name);
        relations.emplace_back(name, arity);
    }

    void add_constant(const std::string& name) {
        if (has_relation(name) || has_constant(name))
            throw InvalidInput("duplicate symbol in signature: " + name);
        constants.push_back(name);
    }

    bool operator==(const Signature& o) const = default;
};

// ---------------------------------------------------------------------------
// Structure

struct Structure {
    Signature sig;
    // Relation name -> set of tuples (each of matching arity).
    std::map<std::string, std::set<Tuple>> tuples;
    // Constant name -> interpreting element.
    std::map<std::string, ElemId> consts;

    const std::set<Tuple>& rel(const std::string& name) const {
        static const std::set<Tuple> empty;
        auto it = tuples.find(name);
        return it == tuples.end() ? empty : it->second;
    }

    void add_tuple(const std::string& name, const Tuple& t) {
        if ((int)t.size() != sig.arity_of(name))
            throw InvalidInput("tuple arity mismatch for relation " + name);
        tuples[name].insert(t);
    }

    void set_const(const std::string& name, ElemId v) {
        if (!sig.has_constant(name)) throw InvalidInput("unknown constant: " + name);
        consts[name] = v;
    }

    ElemId const_value(const std::string& name) const {
        auto it = consts.find(name);
        if (it == consts.end()) throw InvalidInput("constant has no value: " + name);
        return it->second;
    }

    // Elements occurring in some tuple.
    std::set<ElemId> rel_elems() const {
        std::set<ElemId> out;
        for (const auto& [r, ts] : tuples)
            for (const auto& t : ts)
                for (ElemId e : t) out.insert(e);
        return out;
    }

    // Active domain: elements occurring in a tuple or named by a constant.
    std::set<ElemId> dom() const {
        std::set<ElemId> out = rel_elems();
        for (const auto& [c, v] : consts) out.insert(v);
        return out;
    }

    size_t tuple_count() const {
        size_t n = 0;
        for (const auto& [r, ts] : tuples) n += ts.size();
        return n;
    }

    bool fully_interpreted() const {
        for (const auto& c : sig.constants)
            if (!consts.count(c)) return false;
        return true;
    }

    bool operator==(const Structure& o) const = default;
};

// A structure together with an explicit finite evaluation domain (a superset
// of its active domain).  Used wherever spare "padding" elements matter:
// sentence evaluation, type computation, representative bookkeeping.
struct PaddedStructure {
    Structure s;
    std::set<ElemId> domain;
};

// ---------------------------------------------------------------------------
// Fresh identifiers: the m smallest non-negative ids not in `used`, increasing.

inline std::vector<ElemId> fresh_ids(const std::set<ElemId>& used, int m) {
    std::vector<ElemId> out;
    ElemId next = 0;
    while ((int)out.size() < m) {
        while (used.count(next)) ++next;
        out.push_back(next++);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Composition: union of tuple sets; defined only when the operands share no
// tuple in any common relation and agree on every shared constant.

inline Structure compose(const Structure& a, const Structure& b) {
    if (!(a.sig == b.sig)) throw Incompatible("compose: signatures differ");
    for (const auto& [r, ts] : a.tuples)
        for (const auto& t : ts)
            if (b.rel(r).count(t))
                throw NotDisjoint("compose: shared tuple in relation " + r);
    for (const auto& [c, v] : a.consts) {
        auto it = b.consts.find(c);
        if (it != b.consts.end() && it->second != v)
            throw Incompatible("compose: constant " + c + " disagrees");
    }
    Structure out = a;
    for (const auto& [r, ts] : b.tuples) out.tuples[r].insert(ts.begin(), ts.end());
    for (const auto& [c, v] : b.consts) out.consts[c] = v;
    return out;
}

// ---------------------------------------------------------------------------
// Canonical renumbering: relabel elements by order of first occurrence
// (constants in signature order, then tuples in relation/tuple order),
// assigning 0,1,2,...  Extra domain elements (padding) come last.

namespace detail {

inline std::map<ElemId, ElemId> first_occurrence_map(const Structure& s,
                                                     const std::set<ElemId>& extra) {
    std::map<ElemId, ElemId> m;
    ElemId next = 0;
    auto touch = [&](ElemId e) {
        if (!m.count(e)) m[e] = next++;
    };
    for (const auto& c : s.sig.constants)
        if (s.consts.count(c)) touch(s.consts.at(c));
    for (const auto& [r, ar] : s.sig.relations)
        for (const auto& t : s.rel(r))
            for (ElemId e : t) touch(e);
    for (ElemId e : extra) touch(e);
    return m;
}

inline Structure apply_renaming(const Structure& s, const std::map<ElemId, ElemId>& m) {
    Structure out;
    out.sig = s.sig;
    for (const auto& [r, ts] : s.tuples)
        for (const auto& t : ts) {
            Tuple u;
            for (ElemId e : t) u.push_back(m.at(e));
            out.tuples[r].insert(u);
        }
    for (const auto& [c, v] : s.consts) out.consts[c] = m.at(v);
    return out;
}

} // namespace detail

inline Structure canonical_renumber(const Structure& s) {
    return detail::apply_renaming(s, detail::first_occurrence_map(s, {}));
}

// ---------------------------------------------------------------------------
// Glue: disjoint union of two structures (over possibly different signatures)
// followed by fusing, for every shared constant, the two interpreting
// elements.  For a relation in only one signature the tuples come from that
// side; for a shared relation they come from both.  The result is renumbered
// canonically so glue is deterministic.

namespace detail {

struct UnionFind {
    std::map<long long, long long> parent;
    long long find(long long x) {
        if (!parent.count(x)) parent[x] = x;
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(long long a, long long b) { parent[find(a)] = find(b); }
};

} // namespace detail

// Domain-carrying glue; the plain overload below discards the domains.
inline PaddedStructure glue(const PaddedStructure& pa, const PaddedStructure& pb) {
    const Structure& a = pa.s;
    const Structure& b = pb.s;
    // Tag elements by side so the union is disjoint before fusing.
    auto key = [](int side, ElemId e) { return (long long)side * 1000000007LL + e; };
    detail::UnionFind uf;
    for (const auto& c : a.sig.constants)
        if (b.sig.has_constant(c)) {
            if (!a.consts.count(c) || !b.consts.count(c))
                throw InvalidInput("glue: shared constant " + c + " lacks a value");
            uf.unite(key(0, a.consts.at(c)), key(1, b.consts.at(c)));
        }

    Signature sig = a.sig;
    for (const auto& [r, ar] : b.sig.relations)
        if (!sig.has_relation(r)) {
            sig.add_relation(r, ar);
        } else if (sig.arity_of(r) != ar) {
            throw Incompatible("glue: relation " + r + " has conflicting arities");
        }
    for (const auto& c : b.sig.constants)
        if (!sig.has_constant(c)) sig.add_constant(c);

    // Class id for each tagged element, then canonical renumbering by first
    // occurrence: a's constants, a's tuples, b's constants, b's tuples,
    // finally leftover domain elements.
    std::map<long long, ElemId> canon;
    ElemId next = 0;
    auto id_of = [&](int side, ElemId e) {
        long long cls = uf.find(key(side, e));
        auto it = canon.find(cls);
        if (it != canon.end()) return it->second;
        canon[cls] = next;
        return next++;
    };

    Structure out;
    out.sig = sig;
    auto pull = [&](const Structure& src, int side) {
        for (const auto& c : src.sig.constants)
            if (src.consts.count(c)) {
                ElemId v = id_of(side, src.consts.at(c));
                // The first side to define a shared constant wins; both map to
                // the same fused element anyway.
                if (!out.consts.count(c)) out.consts[c] = v;
            }
        for (const auto& [r, ar] : src.sig.relations)
            for (const auto& t : src.rel(r)) {
                Tuple u;
                for (ElemId e : t) u.push_back(id_of(side, e));
                out.tuples[r].insert(u);
            }
    };
    pull(a, 0);
    pull(b, 1);

    std::set<ElemId> domain;
    for (ElemId e : pa.domain) domain.insert(id_of(0, e));
    for (ElemId e : pb.domain) domain.insert(id_of(1, e));
    for (ElemId e : a.dom()) domain.insert(id_of(0, e));
    for (ElemId e : b.dom()) domain.insert(id_of(1, e));
    return PaddedStructure{std::move(out), std::move(domain)};
}

inline Structure glue(const Structure& a, const Structure& b) {
    return glue(PaddedStructure{a, a.dom()}, PaddedStructure{b, b.dom()}).s;
}

// ---------------------------------------------------------------------------
// Forget a constant: drop the symbol (and its value) from the signature.

inline Structure forget_constant(const Structure& s, const std::string& name) {
    if (!s.sig.has_constant(name)) throw InvalidInput("forget_constant: unknown constant " + name);
    Structure out = s;
    std::erase(out.sig.constants, name);
    out.consts.erase(name);
    return out;
}

// ---------------------------------------------------------------------------
// Isomorphism: a bijection between active domains preserving all tuples and
// constants.  Returns a witness mapping (a -> b) when one exists.

inline std::optional<std::map<ElemId, ElemId>> find_isomorphism(const Structure& a,
                                                                const Structure& b) {
    if (!(a.sig == b.sig)) return std::nullopt;
    std::set<ElemId> da_set = a.dom();
    std::vector<ElemId> da(da_set.begin(), da_set.end());
    std::set<ElemId> db_set = b.dom();
    if (da.size() != db_set.size()) return std::nullopt;
    for (const auto& [r, ar] : a.sig.relations)
        if (a.rel(r).size() != b.rel(r).size()) return std::nullopt;

    std::map<ElemId, ElemId> fwd;
    std::map<ElemId, ElemId> bwd;
    // Constants pin part of the mapping immediately.
    for (const auto& c : a.sig.constants) {
        bool ha = a.consts.count(c), hb = b.consts.count(c);
        if (ha != hb) return std::nullopt;
        if (!ha) continue;
        ElemId va = a.consts.at(c), vb = b.consts.at(c);
        auto f = fwd.find(va);
        if (f != fwd.end()) {
            if (f->second != vb) return std::nullopt;
        } else {
            if (bwd.count(vb)) return std::nullopt;
            fwd[va] = vb;
            bwd[vb] = va;
        }
    }

    auto consistent = [&]() {
        // Check only tuples whose elements are all mapped.
        for (const auto& [r, ts] : a.tuples)
            for (const auto& t : ts) {
                Tuple u;
                bool complete = true;
                for (ElemId e : t) {
                    auto it = fwd.find(e);
                    if (it == fwd.end()) { complete = false; break; }
                    u.push_back(it->second);
                }
                if (complete && !b.rel(r).count(u)) return false;
            }
        for (const auto& [r, ts] : b.tuples)
            for (const auto& t : ts) {
                Tuple u;
                bool complete = true;
                for (ElemId e : t) {
                    auto it = bwd.find(e);
                    if (it == bwd.end()) { complete = false; break; }
                    u.push_back(it->second);
                }
                if (complete && !a.rel(r).count(u)) return false;
            }
        return true;
    };

    std::vector<ElemId> unmapped;
    for (ElemId e : da)
        if (!fwd.count(e)) unmapped.push_back(e);
    std::vector<ElemId> candidates;
    for (ElemId e : db_set)
        if (!bwd.count(e)) candidates.push_back(e);

    std::function<bool(size_t)> search = [&](size_t i) -> bool {
        if (i == unmapped.size()) return consistent();
        ElemId x = unmapped[i];
        for (ElemId y : candidates) {
            if (bwd.count(y)) continue;
            fwd[x] = y;
            bwd[y] = x;
            if (consistent() && search(i + 1)) return true;
            fwd.erase(x);
            bwd.erase(y);
        }
        return false;
    };
    if (!search(0)) return std::nullopt;
    return fwd;
}

inline bool is_isomorphic(const Structure& a, const Structure& b) {
    return find_isomorphism(a, b).has_value();
}

// ---------------------------------------------------------------------------
// D-extensions.  The cover relation is a fixed unary symbol; extending a
// structure adds that symbol interpreted by a superset of the elements that
// occur in tuples.

inline const std::string kCoverRelation = "D";

// Check that `ext` is a cover extension of `base`: same interpretation on the
// base signature, plus the unary cover relation holding at least every
// element that occurs in a tuple of `base`.
inline bool d_extension_check(const Structure& base, const Structure& ext) {
    if (base.sig.has_relation(kCoverRelation)) throw ReservedSymbol(kCoverRelation);
    Signature want = base.sig;
    want.add_relation(kCoverRelation, 1);
    if (!(ext.sig == want)) return false;
    for (const auto& [r, ar] : base.sig.relations)
        if (ext.rel(r) != base.rel(r)) return false;
    if (ext.consts != base.consts) return false;
    for (ElemId e : base.rel_elems())
        if (!ext.rel(kCoverRelation).count({e})) return false;
    return true;
}

// Build a cover extension with the given cover set (must include rel_elems).
inline Structure make_d_extension(const Structure& base, const std::set<ElemId>& cover) {
    if (base.sig.has_relation(kCoverRelation)) throw ReservedSymbol(kCoverRelation);
    for (ElemId e : base.rel_elems())
        if (!cover.count(e)) throw InvalidInput("cover set misses a tuple element");
    Structure out = base;
    out.sig.add_relation(kCoverRelation, 1);
    for (ElemId e : cover) out.tuples[kCoverRelation].insert({e});
    return out;
}

// Drop the cover relation again.
inline Structure strip_d(const Structure& s) {
    if (!s.sig.has_relation(kCoverRelation))
        throw InvalidInput("strip_d: no cover relation present");
    Structure out = s;
    std::erase_if(out.sig.relations,
                  [](const auto& p) { return p.first == kCoverRelation; });
    out.tuples.erase(kCoverRelation);
    return out;
}

// ---------------------------------------------------------------------------
// Port encoding: add fresh constants port1..port<k> naming given elements.

inline std::string port_name(int i) { return "port" + std::to_string(i); }

inline Structure encode_ports(const Structure& s, const std::vector<ElemId>& values) {
    Structure out = s;
    for (size_t i = 0; i < values.size(); ++i) {
        std::string c = port_name((int)i + 1);
        if (out.sig.has_constant(c) || out.sig.has_relation(c)) throw ReservedSymbol(c);
        out.sig.add_constant(c);
        out.consts[c] = values[i];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Padding: evaluation domain = active domain plus m fresh elements.

inline PaddedStructure pad(const Structure& s, int m) {
    std::set<ElemId> domain = s.dom();
    for (ElemId e : fresh_ids(domain, m)) domain.insert(e);
    return PaddedStructure{s, domain};
}

// ---------------------------------------------------------------------------
// Text format.
//
//   # comment
//   rel <name> <arity>
//   const <name> <id>
//   tuple <relname> <id> ... <id>
//
// Lines may appear in any order except that symbols must be declared before
// use.  Parsing is strict: unknown directives, arity mismatches and duplicate
// declarations are errors.

inline Structure parse_structure(const std::string& text) {
    Structure s;
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
        auto want_int = [&](const char* what) {
            long long v;
            if (!(ls >> v)) throw SyntaxError("line " + std::to_string(lineno) + ": expected " + what);
            return v;
        };
        auto where = [&]() { return "line " + std::to_string(lineno) + ": "; };
        try {
            if (kw == "rel") {
                std::string name;
                if (!(ls >> name)) throw SyntaxError(where() + "expected relation name");
                s.sig.add_relation(name, (int)want_int("arity"));
            } else if (kw == "const") {
                std::string name;
                if (!(ls >> name)) throw SyntaxError(where() + "expected constant name");
                s.sig.add_constant(name);
                s.consts[name] = (ElemId)want_int("element id");
            } else if (kw == "tuple") {
                std::string name;
                if (!(ls >> name)) throw SyntaxError(where() + "expected relation name");
                int ar = s.sig.arity_of(name);
                Tuple t;
                for (int i = 0; i < ar; ++i) t.push_back((ElemId)want_int("element id"));
                ElemId extra;
                if (ls >> extra) throw SyntaxError(where() + "too many elements in tuple");
                s.tuples[name].insert(t);
            } else {
                throw SyntaxError(where() + "unknown directive '" + kw + "'");
            }
        } catch (const SyntaxError&) {
            throw;
        } catch (const SlrError& e) {
            throw SyntaxError(where() + e.what());
        }
        std::string trailing;
        if (ls >> trailing) throw SyntaxError(where() + "trailing tokens");
    }
    return s;
}

inline std::string print_structure(const Structure& s) {
    std::ostringstream out;
    for (const auto& [r, ar] : s.sig.relations) out << "rel " << r << " " << ar << "\n";
    for (const auto& c : s.sig.constants)
        if (s.consts.count(c)) out << "const " << c << " " << s.consts.at(c) << "\n";
    for (const auto& [r, ar] : s.sig.relations)
        for (const auto& t : s.rel(r)) {
            out << "tuple " << r;
            for (ElemId e : t) out << " " << e;
            out << "\n";
        }
    return out.str();
}

} // namespace slr
