#pragma once

// Abstract syntax for separation-logic-of-relations formulas and inductive
// definition systems (SIDs), with a strict text format.
//
// Formula grammar (text form):
//   body   ::= atomseq | 'exists' var+ '.' body
//   atomseq::= atom ('*' atom)*
//   atom   ::= 'emp' | term '=' term | term '!=' term
//            | Name '(' term (',' term)* ')' | '(' body ')'
// A name in atom position is a relation atom when the signature declares it
// as a relation, otherwise a predicate atom.  Terms are variables or declared
// constants.
//
// SID text format: optional 'rel <name> <arity>' / 'constsym <name>' header
// lines declaring the signature, then rules 'Head(x1,...) <- body ;'.
// Rule heads with repeated parameters are rewritten on input: the repeated
// occurrence becomes a fresh parameter equated to the original in the body.

#include <cctype>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "structures.hpp"

namespace slr {

struct Term {
    bool is_var = true;
    std::string name;

    bool operator==(const Term& o) const = default;
    auto operator<=>(const Term& o) const = default;
};

inline Term var(const std::string& n) { return Term{true, n}; }
inline Term cst(const std::string& n) { return Term{false, n}; }

enum class SlrKind { Emp, Eq, Neq, Rel, Pred, Star, Exists };

struct SlrFormula;
using SlrPtr = std::shared_ptr<const SlrFormula>;

struct SlrFormula {
    SlrKind kind;
    Term lhs, rhs;               // Eq/Neq
    std::string name;            // Rel/Pred: symbol; Exists: bound variable
    std::vector<Term> args;      // Rel/Pred
    SlrPtr left, right;          // Star
    SlrPtr body;                 // Exists
    int annotation = -1;         // optional occurrence tag on Rel atoms
};

inline SlrPtr mk_emp() { return std::make_shared<SlrFormula>(SlrFormula{SlrKind::Emp}); }
inline SlrPtr mk_eq(Term a, Term b) {
    return std::make_shared<SlrFormula>(SlrFormula{SlrKind::Eq, a, b});
}
inline SlrPtr mk_neq(Term a, Term b) {
    return std::make_shared<SlrFormula>(SlrFormula{SlrKind::Neq, a, b});
}
inline SlrPtr mk_rel(const std::string& r, std::vector<Term> args, int anno = -1) {
    SlrFormula f{SlrKind::Rel};
    f.name = r;
    f.args = std::move(args);
    f.annotation = anno;
    return std::make_shared<SlrFormula>(std::move(f));
}
inline SlrPtr mk_pred(const std::string& p, std::vector<Term> args) {
    SlrFormula f{SlrKind::Pred};
    f.name = p;
    f.args = std::move(args);
    return std::make_shared<SlrFormula>(std::move(f));
}
inline SlrPtr mk_star(SlrPtr a, SlrPtr b) {
    SlrFormula f{SlrKind::Star};
    f.left = std::move(a);
    f.right = std::move(b);
    return std::make_shared<SlrFormula>(std::move(f));
}
inline SlrPtr mk_exists(const std::string& v, SlrPtr body) {
    SlrFormula f{SlrKind::Exists};
    f.name = v;
    f.body = std::move(body);
    return std::make_shared<SlrFormula>(std::move(f));
}
inline SlrPtr mk_star_all(const std::vector<SlrPtr>& parts) {
    if (parts.empty()) return mk_emp();
    SlrPtr acc = parts[0];
    for (size_t i = 1; i < parts.size(); ++i) acc = mk_star(acc, parts[i]);
    return acc;
}

// ---------------------------------------------------------------------------
// Free variables and substitution.

inline void free_vars_into(const SlrPtr& f, std::set<std::string>& out,
                           std::set<std::string>& bound) {
    switch (f->kind) {
        case SlrKind::Emp:
            break;
        case SlrKind::Eq:
        case SlrKind::Neq:
            if (f->lhs.is_var && !bound.count(f->lhs.name)) out.insert(f->lhs.name);
            if (f->rhs.is_var && !bound.count(f->rhs.name)) out.insert(f->rhs.name);
            break;
        case SlrKind::Rel:
        case SlrKind::Pred:
            for (const auto& t : f->args)
                if (t.is_var && !bound.count(t.name)) out.insert(t.name);
            break;
        case SlrKind::Star:
            free_vars_into(f->left, out, bound);
            free_vars_into(f->right, out, bound);
            break;
        case SlrKind::Exists: {
            bool fresh = bound.insert(f->name).second;
            free_vars_into(f->body, out, bound);
            if (fresh) bound.erase(f->name);
            break;
        }
    }
}

inline std::set<std::string> free_vars(const SlrPtr& f) {
    std::set<std::string> out, bound;
    free_vars_into(f, out, bound);
    return out;
}

// Simultaneous substitution of terms for free variables.  Bound variables are
// assumed distinct from substituted names (callers rename apart first).
inline SlrPtr substitute(const SlrPtr& f, const std::map<std::string, Term>& sub) {
    auto st = [&](const Term& t) {
        if (t.is_var) {
            auto it = sub.find(t.name);
            if (it != sub.end()) return it->second;
        }
        return t;
    };
    switch (f->kind) {
        case SlrKind::Emp:
            return f;
        case SlrKind::Eq:
            return mk_eq(st(f->lhs), st(f->rhs));
        case SlrKind::Neq:
            return mk_neq(st(f->lhs), st(f->rhs));
        case SlrKind::Rel: {
            std::vector<Term> a;
            for (const auto& t : f->args) a.push_back(st(t));
            return mk_rel(f->name, std::move(a), f->annotation);
        }
        case SlrKind::Pred: {
            std::vector<Term> a;
            for (const auto& t : f->args) a.push_back(st(t));
            return mk_pred(f->name, std::move(a));
        }
        case SlrKind::Star:
            return mk_star(substitute(f->left, sub), substitute(f->right, sub));
        case SlrKind::Exists: {
            if (sub.count(f->name))
                throw InvalidInput("substitute: capture of bound variable " + f->name);
            return mk_exists(f->name, substitute(f->body, sub));
        }
    }
    throw SlrError("unreachable");
}

// Rename all bound variables apart using a prefix unique to the call site.
inline SlrPtr freshen_bound(const SlrPtr& f, const std::string& prefix, int& counter) {
    switch (f->kind) {
        case SlrKind::Emp:
        case SlrKind::Eq:
        case SlrKind::Neq:
        case SlrKind::Rel:
        case SlrKind::Pred:
            return f;
        case SlrKind::Star:
            return mk_star(freshen_bound(f->left, prefix, counter),
                           freshen_bound(f->right, prefix, counter));
        case SlrKind::Exists: {
            std::string nv = prefix + std::to_string(counter++);
            SlrPtr body = substitute(f->body, {{f->name, var(nv)}});
            return mk_exists(nv, freshen_bound(body, prefix, counter));
        }
    }
    throw SlrError("unreachable");
}

// ---------------------------------------------------------------------------
// Rules and SIDs.

struct Rule {
    std::string head;
    std::vector<std::string> params;  // pairwise distinct
    SlrPtr body;                      // free_vars(body) subset of params
};

struct Sid {
    Signature sig;
    std::vector<Rule> rules;

    std::vector<const Rule*> rules_of(const std::string& pred) const {
        std::vector<const Rule*> out;
        for (const auto& r : rules)
            if (r.head == pred) out.push_back(&r);
        return out;
    }

    bool mentions_pred(const std::string& pred) const {
        for (const auto& r : rules) {
            if (r.head == pred) return true;
            std::function<bool(const SlrPtr&)> scan = [&](const SlrPtr& f) {
                switch (f->kind) {
                    case SlrKind::Pred: return f->name == pred;
                    case SlrKind::Star: return scan(f->left) || scan(f->right);
                    case SlrKind::Exists: return scan(f->body);
                    default: return false;
                }
            };
            if (scan(r.body)) return true;
        }
        return false;
    }
};

// ---------------------------------------------------------------------------
// Parsing.

namespace detail {

struct SlrTokenizer {
    std::string src;
    size_t pos = 0;

    void skip_ws() {
        while (pos < src.size()) {
            if (std::isspace((unsigned char)src[pos])) {
                ++pos;
            } else if (src[pos] == '#') {
                while (pos < src.size() && src[pos] != '\n') ++pos;
            } else {
                break;
            }
        }
    }

    bool eof() {
        skip_ws();
        return pos >= src.size();
    }

    std::string peek() {
        skip_ws();
        size_t p = pos;
        std::string t = next_raw(p);
        return t;
    }

    std::string next() {
        skip_ws();
        return next_raw(pos);
    }

    std::string next_raw(size_t& p) {
        if (p >= src.size()) return "";
        char c = src[p];
        if (std::isalnum((unsigned char)c) || c == '_') {
            size_t start = p;
            while (p < src.size() &&
                   (std::isalnum((unsigned char)src[p]) || src[p] == '_'))
                ++p;
            return src.substr(start, p - start);
        }
        if (c == '<' && p + 1 < src.size() && src[p + 1] == '-') {
            p += 2;
            return "<-";
        }
        if (c == '!' && p + 1 < src.size() && src[p + 1] == '=') {
            p += 2;
            return "!=";
        }
        ++p;
        return std::string(1, c);
    }

    void expect(const std::string& t) {
        std::string got = next();
        if (got != t)
            throw SyntaxError("expected '" + t + "', got '" + got + "'");
    }
};

} // namespace detail

class SlrParser {
public:
    SlrParser(const Signature& sig, std::string text) : sig_(sig) { tok_.src = std::move(text); }

    // Parse a single formula covering the whole input.
    SlrPtr parse_formula() {
        SlrPtr f = body();
        if (!tok_.eof()) throw SyntaxError("trailing input after formula");
        return f;
    }

private:
    friend Sid parse_sid(const std::string&, const Signature*);
    friend SlrPtr parse_slr(const Signature&, const std::string&);

    Signature sig_;
    detail::SlrTokenizer tok_;

    static bool is_name(const std::string& t) {
        return !t.empty() && (std::isalpha((unsigned char)t[0]) || t[0] == '_');
    }

    Term term() {
        std::string t = tok_.next();
        if (!is_name(t)) throw SyntaxError("expected term, got '" + t + "'");
        if (sig_.has_constant(t)) return cst(t);
        return var(t);
    }

    SlrPtr body() {
        if (tok_.peek() == "exists") {
            tok_.next();
            std::vector<std::string> vars;
            while (tok_.peek() != ".") {
                std::string v = tok_.next();
                if (!is_name(v)) throw SyntaxError("expected bound variable, got '" + v + "'");
                if (sig_.has_constant(v))
                    throw SyntaxError("bound variable shadows constant " + v);
                vars.push_back(v);
            }
            tok_.expect(".");
            SlrPtr inner = body();
            for (auto it = vars.rbegin(); it != vars.rend(); ++it)
                inner = mk_exists(*it, inner);
            return inner;
        }
        SlrPtr acc = atom();
        while (tok_.peek() == "*") {
            tok_.next();
            acc = mk_star(acc, atom());
        }
        return acc;
    }

    SlrPtr atom() {
        std::string t = tok_.peek();
        if (t == "(") {
            tok_.next();
            SlrPtr f = body();
            tok_.expect(")");
            return f;
        }
        if (t == "emp") {
            tok_.next();
            return mk_emp();
        }
        if (!is_name(t)) throw SyntaxError("expected atom, got '" + t + "'");
        tok_.next();
        if (tok_.peek() == "(") {
            tok_.next();
            std::vector<Term> args;
            if (tok_.peek() != ")") {
                args.push_back(term());
                while (tok_.peek() == ",") {
                    tok_.next();
                    args.push_back(term());
                }
            }
            tok_.expect(")");
            if (sig_.has_relation(t)) {
                if ((int)args.size() != sig_.arity_of(t))
                    throw SyntaxError("relation " + t + " applied with wrong arity");
                return mk_rel(t, std::move(args));
            }
            return mk_pred(t, std::move(args));
        }
        // Equality or disequality atom.
        Term l = sig_.has_constant(t) ? cst(t) : var(t);
        std::string op = tok_.next();
        if (op != "=" && op != "!=")
            throw SyntaxError("expected '=' or '!=' after term, got '" + op + "'");
        Term r = term();
        return op == "=" ? mk_eq(l, r) : mk_neq(l, r);
    }
};

inline SlrPtr parse_slr(const Signature& sig, const std::string& text) {
    SlrParser p(sig, text);
    return p.parse_formula();
}

// Parse a SID.  When `base` is given its symbols seed the signature; header
// lines may extend it.
inline Sid parse_sid(const std::string& text, const Signature* base = nullptr) {
    Sid sid;
    if (base) sid.sig = *base;
    detail::SlrTokenizer header{text};
    // Header lines.
    size_t body_start = 0;
    while (true) {
        size_t save = header.pos;
        std::string t = header.peek();
        if (t == "rel") {
            header.next();
            std::string name = header.next();
            std::string ar = header.next();
            try {
                sid.sig.add_relation(name, std::stoi(ar));
            } catch (const std::exception& e) {
                throw SyntaxError(std::string("bad relation declaration: ") + e.what());
            }
        } else if (t == "constsym") {
            header.next();
            sid.sig.add_constant(header.next());
        } else {
            header.pos = save;
            body_start = header.pos;
            break;
        }
    }

    SlrParser p(sid.sig, text.substr(body_start));
    while (!p.tok_.eof()) {
        std::string head = p.tok_.next();
        if (!SlrParser::is_name(head))
            throw SyntaxError("expected rule head, got '" + head + "'");
        p.tok_.expect("(");
        std::vector<std::string> params;
        if (p.tok_.peek() != ")") {
            while (true) {
                std::string v = p.tok_.next();
                if (!SlrParser::is_name(v))
                    throw SyntaxError("expected parameter, got '" + v + "'");
                params.push_back(v);
                if (p.tok_.peek() != ",") break;
                p.tok_.next();
            }
        }
        p.tok_.expect(")");
        p.tok_.expect("<-");
        SlrPtr body = p.body();
        p.tok_.expect(";");

        // Rewrite repeated parameters: the later occurrence becomes a fresh
        // parameter equated to the first one.
        std::set<std::string> seen;
        std::vector<SlrPtr> eqs;
        int fresh = 1;
        for (auto& v : params) {
            if (seen.insert(v).second) continue;
            std::string nv;
            do {
                nv = v + "_dup" + std::to_string(fresh++);
            } while (seen.count(nv));
            eqs.push_back(mk_eq(var(nv), var(v)));
            v = nv;
            seen.insert(nv);
        }
        for (auto it = eqs.rbegin(); it != eqs.rend(); ++it) body = mk_star(*it, body);

        for (const auto& v : free_vars(body)) {
            if (std::find(params.begin(), params.end(), v) == params.end())
                throw SyntaxError("free variable " + v + " of rule " + head +
                                  " is not a parameter");
        }
        sid.rules.push_back(Rule{head, std::move(params), std::move(body)});
    }
    return sid;
}

// ---------------------------------------------------------------------------
// Printing.

inline std::string print_term(const Term& t) { return t.name; }

inline std::string print_slr(const SlrPtr& f) {
    std::ostringstream out;
    std::function<void(const SlrPtr&, bool)> go = [&](const SlrPtr& g, bool in_star) {
        switch (g->kind) {
            case SlrKind::Emp:
                out << "emp";
                break;
            case SlrKind::Eq:
                out << print_term(g->lhs) << " = " << print_term(g->rhs);
                break;
            case SlrKind::Neq:
                out << print_term(g->lhs) << " != " << print_term(g->rhs);
                break;
            case SlrKind::Rel:
            case SlrKind::Pred: {
                out << g->name << "(";
                for (size_t i = 0; i < g->args.size(); ++i) {
                    if (i) out << ", ";
                    out << print_term(g->args[i]);
                }
                out << ")";
                break;
            }
            case SlrKind::Star:
                go(g->left, true);
                out << " * ";
                go(g->right, true);
                break;
            case SlrKind::Exists: {
                if (in_star) out << "(";
                out << "exists";
                const SlrFormula* cur = g.get();
                while (true) {
                    out << " " << cur->name;
                    if (cur->body->kind == SlrKind::Exists) {
                        cur = cur->body.get();
                    } else {
                        break;
                    }
                }
                out << " . ";
                go(cur->body, false);
                if (in_star) out << ")";
                break;
            }
        }
    };
    go(f, false);
    return out.str();
}

inline std::string print_sid(const Sid& sid) {
    std::ostringstream out;
    for (const auto& [r, a] : sid.sig.relations) out << "rel " << r << " " << a << "\n";
    for (const auto& c : sid.sig.constants) out << "constsym " << c << "\n";
    for (const auto& r : sid.rules) {
        out << r.head << "(";
        for (size_t i = 0; i < r.params.size(); ++i) {
            if (i) out << ", ";
            out << r.params[i];
        }
        out << ") <- " << print_slr(r.body) << " ;\n";
    }
    return out.str();
}

} // namespace slr
