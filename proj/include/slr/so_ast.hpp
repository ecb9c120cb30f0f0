#pragma once

// Second-order formulas over a relational signature: first-order variables,
// relation variables of fixed arity, equality, negation, conjunction and the
// two existential quantifiers (universal forms are sugar).
//
// Text grammar (lowest to highest precedence):
//   f ::= q | f '->' f            (right associative)
//   q ::= 'forall' x '.' f | 'exists' x '.' f
//       | 'forall2' X '/' k '.' f | 'exists2' X '/' k '.' f
//       | d
//   d ::= c ('|' c)*
//   c ::= u ('&' u)*
//   u ::= '!' u | '(' f ')' | atom
//   atom ::= term '=' term | Name '(' term,... ')' | 'true' | 'false'
// A name in atom position is a signature relation, a declared constant makes
// a term, anything else applied to arguments is a relation variable.

#include <cctype>
#include <functional>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include "slr_ast.hpp"  // Term, tokenizer-ish helpers
#include "structures.hpp"

namespace slr {

enum class SoKind {
    True,
    False,
    Eq,       // lhs = rhs
    Rel,      // signature relation applied to terms
    RelVar,   // second-order variable applied to terms
    Not,
    And,
    Or,
    ExistsFo,
    ForallFo,
    ExistsSo,
    ForallSo,
};

struct SoFormula;
using SoPtr = std::shared_ptr<const SoFormula>;

struct SoFormula {
    SoKind kind;
    Term lhs, rhs;            // Eq
    std::string name;         // Rel/RelVar: symbol; quantifiers: variable
    int arity = 0;            // ExistsSo/ForallSo
    std::vector<Term> args;   // Rel/RelVar
    std::vector<SoPtr> kids;  // Not(1), And/Or(n), quantifiers(1)
};

inline SoPtr so_true() { return std::make_shared<SoFormula>(SoFormula{SoKind::True}); }
inline SoPtr so_false() { return std::make_shared<SoFormula>(SoFormula{SoKind::False}); }
inline SoPtr so_eq(Term a, Term b) {
    return std::make_shared<SoFormula>(SoFormula{SoKind::Eq, a, b});
}
inline SoPtr so_rel(const std::string& r, std::vector<Term> args) {
    SoFormula f{SoKind::Rel};
    f.name = r;
    f.args = std::move(args);
    return std::make_shared<SoFormula>(std::move(f));
}
inline SoPtr so_relvar(const std::string& x, std::vector<Term> args) {
    SoFormula f{SoKind::RelVar};
    f.name = x;
    f.args = std::move(args);
    return std::make_shared<SoFormula>(std::move(f));
}
inline SoPtr so_not(SoPtr a) {
    SoFormula f{SoKind::Not};
    f.kids = {std::move(a)};
    return std::make_shared<SoFormula>(std::move(f));
}
inline SoPtr so_and(std::vector<SoPtr> kids) {
    if (kids.empty()) return so_true();
    if (kids.size() == 1) return kids[0];
    SoFormula f{SoKind::And};
    f.kids = std::move(kids);
    return std::make_shared<SoFormula>(std::move(f));
}
inline SoPtr so_or(std::vector<SoPtr> kids) {
    if (kids.empty()) return so_false();
    if (kids.size() == 1) return kids[0];
    SoFormula f{SoKind::Or};
    f.kids = std::move(kids);
    return std::make_shared<SoFormula>(std::move(f));
}
inline SoPtr so_implies(SoPtr a, SoPtr b) { return so_or({so_not(std::move(a)), std::move(b)}); }
inline SoPtr so_exists(const std::string& v, SoPtr body) {
    SoFormula f{SoKind::ExistsFo};
    f.name = v;
    f.kids = {std::move(body)};
    return std::make_shared<SoFormula>(std::move(f));
}
inline SoPtr so_forall(const std::string& v, SoPtr body) {
    SoFormula f{SoKind::ForallFo};
    f.name = v;
    f.kids = {std::move(body)};
    return std::make_shared<SoFormula>(std::move(f));
}
inline SoPtr so_exists2(const std::string& v, int arity, SoPtr body) {
    SoFormula f{SoKind::ExistsSo};
    f.name = v;
    f.arity = arity;
    f.kids = {std::move(body)};
    return std::make_shared<SoFormula>(std::move(f));
}
inline SoPtr so_forall2(const std::string& v, int arity, SoPtr body) {
    SoFormula f{SoKind::ForallSo};
    f.name = v;
    f.arity = arity;
    f.kids = {std::move(body)};
    return std::make_shared<SoFormula>(std::move(f));
}

// ---------------------------------------------------------------------------
// Quantifier rank: atoms have rank 0, negation passes through, conjunction
// and disjunction take the maximum, every quantifier adds one.

inline int quantifier_rank(const SoPtr& f) {
    switch (f->kind) {
        case SoKind::True:
        case SoKind::False:
        case SoKind::Eq:
        case SoKind::Rel:
        case SoKind::RelVar:
            return 0;
        case SoKind::Not:
            return quantifier_rank(f->kids[0]);
        case SoKind::And:
        case SoKind::Or: {
            int m = 0;
            for (const auto& k : f->kids) m = std::max(m, quantifier_rank(k));
            return m;
        }
        case SoKind::ExistsFo:
        case SoKind::ForallFo:
        case SoKind::ExistsSo:
        case SoKind::ForallSo:
            return 1 + quantifier_rank(f->kids[0]);
    }
    throw SlrError("unreachable");
}

// Free first-order variables (for closedness checks).
inline void so_free_vars(const SoPtr& f, std::set<std::string>& fo, std::set<std::string>& so,
                         std::set<std::string> bound_fo = {},
                         std::set<std::string> bound_so = {}) {
    switch (f->kind) {
        case SoKind::True:
        case SoKind::False:
            return;
        case SoKind::Eq:
            for (const Term* t : {&f->lhs, &f->rhs})
                if (t->is_var && !bound_fo.count(t->name)) fo.insert(t->name);
            return;
        case SoKind::Rel:
        case SoKind::RelVar:
            for (const auto& t : f->args)
                if (t.is_var && !bound_fo.count(t.name)) fo.insert(t.name);
            if (f->kind == SoKind::RelVar && !bound_so.count(f->name)) so.insert(f->name);
            return;
        case SoKind::Not:
        case SoKind::And:
        case SoKind::Or:
            for (const auto& k : f->kids) so_free_vars(k, fo, so, bound_fo, bound_so);
            return;
        case SoKind::ExistsFo:
        case SoKind::ForallFo:
            bound_fo.insert(f->name);
            so_free_vars(f->kids[0], fo, so, bound_fo, bound_so);
            return;
        case SoKind::ExistsSo:
        case SoKind::ForallSo:
            bound_so.insert(f->name);
            so_free_vars(f->kids[0], fo, so, bound_fo, bound_so);
            return;
    }
}

// ---------------------------------------------------------------------------
// Parser.

class SoParser {
public:
    SoParser(const Signature& sig, std::string text) : sig_(sig) { tok_.src = std::move(text); }

    SoPtr parse() {
        SoPtr f = implication();
        if (!tok_.eof()) throw SyntaxError("trailing input after formula");
        return f;
    }

private:
    Signature sig_;
    detail::SlrTokenizer tok_;

    static bool is_name(const std::string& t) {
        return !t.empty() && (std::isalpha((unsigned char)t[0]) || t[0] == '_');
    }

    Term term() {
        std::string t = tok_.next();
        if (!is_name(t)) throw SyntaxError("expected term, got '" + t + "'");
        return sig_.has_constant(t) ? cst(t) : var(t);
    }

    SoPtr implication() {
        SoPtr l = quantified();
        if (tok_.peek() == "-") {
            // '->': the tokenizer splits it as '-' '>'.
            tok_.next();
            tok_.expect(">");
            return so_implies(l, implication());
        }
        return l;
    }

    SoPtr quantified() {
        std::string t = tok_.peek();
        if (t == "forall" || t == "exists") {
            tok_.next();
            std::string v = tok_.next();
            if (!is_name(v)) throw SyntaxError("expected variable after quantifier");
            tok_.expect(".");
            SoPtr body = implication();
            return t == "forall" ? so_forall(v, body) : so_exists(v, body);
        }
        if (t == "forall2" || t == "exists2") {
            tok_.next();
            std::string v = tok_.next();
            if (!is_name(v)) throw SyntaxError("expected variable after quantifier");
            tok_.expect("/");
            std::string a = tok_.next();
            int ar;
            try {
                ar = std::stoi(a);
            } catch (const std::exception&) {
                throw SyntaxError("expected arity after '/', got '" + a + "'");
            }
            if (ar < 1) throw SyntaxError("relation variable arity must be positive");
            tok_.expect(".");
            SoPtr body = implication();
            return t == "forall2" ? so_forall2(v, ar, body) : so_exists2(v, ar, body);
        }
        return disjunction();
    }

    SoPtr disjunction() {
        std::vector<SoPtr> kids{conjunction()};
        while (tok_.peek() == "|") {
            tok_.next();
            kids.push_back(conjunction());
        }
        return so_or(std::move(kids));
    }

    SoPtr conjunction() {
        std::vector<SoPtr> kids{unary()};
        while (tok_.peek() == "&") {
            tok_.next();
            kids.push_back(unary());
        }
        return so_and(std::move(kids));
    }

    SoPtr unary() {
        std::string t = tok_.peek();
        if (t == "!") {
            tok_.next();
            return so_not(unary());
        }
        if (t == "(") {
            tok_.next();
            SoPtr f = implication();
            tok_.expect(")");
            return f;
        }
        if (t == "forall" || t == "exists" || t == "forall2" || t == "exists2")
            return quantified();
        if (t == "true") {
            tok_.next();
            return so_true();
        }
        if (t == "false") {
            tok_.next();
            return so_false();
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
                return so_rel(t, std::move(args));
            }
            return so_relvar(t, std::move(args));
        }
        Term l = sig_.has_constant(t) ? cst(t) : var(t);
        tok_.expect("=");
        return so_eq(l, term());
    }
};

inline SoPtr parse_so(const Signature& sig, const std::string& text) {
    SoParser p(sig, text);
    return p.parse();
}

// ---------------------------------------------------------------------------
// Printer (re-parseable).

inline std::string print_so(const SoPtr& f) {
    std::ostringstream out;
    std::function<void(const SoPtr&)> go = [&](const SoPtr& g) {
        switch (g->kind) {
            case SoKind::True:
                out << "true";
                break;
            case SoKind::False:
                out << "false";
                break;
            case SoKind::Eq:
                out << g->lhs.name << " = " << g->rhs.name;
                break;
            case SoKind::Rel:
            case SoKind::RelVar: {
                out << g->name << "(";
                for (size_t i = 0; i < g->args.size(); ++i) {
                    if (i) out << ", ";
                    out << g->args[i].name;
                }
                out << ")";
                break;
            }
            case SoKind::Not:
                out << "!(";
                go(g->kids[0]);
                out << ")";
                break;
            case SoKind::And:
            case SoKind::Or: {
                const char* op = g->kind == SoKind::And ? " & " : " | ";
                out << "(";
                for (size_t i = 0; i < g->kids.size(); ++i) {
                    if (i) out << op;
                    go(g->kids[i]);
                }
                out << ")";
                break;
            }
            case SoKind::ExistsFo:
            case SoKind::ForallFo:
                out << (g->kind == SoKind::ExistsFo ? "exists " : "forall ") << g->name
                    << ". (";
                go(g->kids[0]);
                out << ")";
                break;
            case SoKind::ExistsSo:
            case SoKind::ForallSo:
                out << (g->kind == SoKind::ExistsSo ? "exists2 " : "forall2 ") << g->name
                    << "/" << g->arity << ". (";
                go(g->kids[0]);
                out << ")";
                break;
        }
    };
    go(f);
    return out.str();
}

} // namespace slr
