#pragma once

// A small CDCL SAT solver (watched literals, first-UIP clause learning,
// activity-based branching, geometric restarts).  Used by the second-order
// evaluator to decide big blocks of existential relation quantifiers after
// grounding; nothing here knows about logic beyond CNF.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

namespace slr::sat {

// Literals: variable v (0-based) has literals 2v (positive) and 2v+1
// (negative).
using Lit = int;
inline Lit pos(int v) { return 2 * v; }
inline Lit neg(int v) { return 2 * v + 1; }
inline Lit negate(Lit l) { return l ^ 1; }
inline int var_of(Lit l) { return l >> 1; }
inline bool sign_of(Lit l) { return (l & 1) == 0; }  // true for positive

class Solver {
public:
    int new_var() {
        int v = nvars_++;
        assign_.push_back(Unassigned);
        level_.push_back(-1);
        reason_.push_back(-1);
        activity_.push_back(0.0);
        watches_.emplace_back();
        watches_.emplace_back();
        seen_.push_back(false);
        phase_.push_back(false);
        return v;
    }

    int num_vars() const { return nvars_; }

    // Returns false if the clause makes the instance trivially unsat.
    bool add_clause(std::vector<Lit> lits) {
        std::sort(lits.begin(), lits.end());
        lits.erase(std::unique(lits.begin(), lits.end()), lits.end());
        for (size_t i = 0; i + 1 < lits.size(); ++i)
            if (lits[i] == negate(lits[i + 1])) return true;  // tautology
        // Remove literals already false at level 0; detect satisfied clauses.
        std::vector<Lit> out;
        for (Lit l : lits) {
            int8_t v = value(l);
            if (v == True_ && level_[var_of(l)] == 0) return true;
            if (v == False_ && level_[var_of(l)] == 0) continue;
            out.push_back(l);
        }
        if (out.empty()) {
            ok_ = false;
            return false;
        }
        if (out.size() == 1) {
            if (value(out[0]) == False_) {
                ok_ = false;
                return false;
            }
            if (value(out[0]) == Unassigned) enqueue(out[0], -1);
            if (propagate() != -1) {
                ok_ = false;
                return false;
            }
            return true;
        }
        attach(std::move(out));
        return true;
    }

    // Solve; returns true iff satisfiable.  Model readable via model_value.
    bool solve() {
        if (!ok_) return false;
        if (propagate() != -1) return false;
        int64_t conflicts = 0;
        int64_t restart_limit = 100;
        while (true) {
            int confl = propagate();
            if (confl != -1) {
                ++conflicts;
                if (decision_level() == 0) return false;
                std::vector<Lit> learnt;
                int back_level;
                analyze(confl, learnt, back_level);
                backjump(back_level);
                if (learnt.size() == 1) {
                    enqueue(learnt[0], -1);
                } else {
                    int ci = attach(learnt);
                    enqueue(learnt[0], ci);
                }
                decay_activities();
                if (conflicts >= restart_limit) {
                    conflicts = 0;
                    restart_limit = (int64_t)(restart_limit * 1.5);
                    backjump(0);
                }
            } else {
                int v = pick_branch();
                if (v == -1) return true;  // all assigned
                trail_lim_.push_back((int)trail_.size());
                enqueue(phase_[v] ? pos(v) : neg(v), -1);
            }
        }
    }

    bool model_value(int v) const { return assign_[v] == True_; }

private:
    static constexpr int8_t True_ = 1, False_ = -1, Unassigned = 0;

    struct Clause {
        std::vector<Lit> lits;
    };

    int nvars_ = 0;
    bool ok_ = true;
    std::vector<Clause> clauses_;
    std::vector<std::vector<int>> watches_;  // per literal: clause indices
    std::vector<int8_t> assign_;             // per var
    std::vector<int> level_;
    std::vector<int> reason_;                // clause index or -1
    std::vector<Lit> trail_;
    std::vector<int> trail_lim_;
    size_t qhead_ = 0;
    std::vector<double> activity_;
    double var_inc_ = 1.0;
    std::vector<bool> seen_;
    std::vector<bool> phase_ = {};

    int8_t value(Lit l) const {
        int8_t a = assign_[var_of(l)];
        if (a == Unassigned) return Unassigned;
        return sign_of(l) ? a : (int8_t)-a;
    }

    int decision_level() const { return (int)trail_lim_.size(); }

    int attach(std::vector<Lit> lits) {
        int ci = (int)clauses_.size();
        watches_[lits[0]].push_back(ci);
        watches_[lits[1]].push_back(ci);
        clauses_.push_back({std::move(lits)});
        return ci;
    }

    void enqueue(Lit l, int reason) {
        int v = var_of(l);
        assign_[v] = sign_of(l) ? True_ : False_;
        level_[v] = decision_level();
        reason_[v] = reason;
        trail_.push_back(l);
        phase_[v] = sign_of(l);
    }

    // Returns index of a conflicting clause, or -1.
    int propagate() {
        while (qhead_ < trail_.size()) {
            Lit p = trail_[qhead_++];
            Lit np = negate(p);
            std::vector<int>& ws = watches_[np];
            size_t keep = 0;
            for (size_t i = 0; i < ws.size(); ++i) {
                int ci = ws[i];
                auto& lits = clauses_[ci].lits;
                // Ensure the false literal sits at position 1.
                if (lits[0] == np) std::swap(lits[0], lits[1]);
                if (value(lits[0]) == True_) {
                    ws[keep++] = ci;
                    continue;
                }
                // Look for a replacement watch.
                bool moved = false;
                for (size_t j = 2; j < lits.size(); ++j) {
                    if (value(lits[j]) != False_) {
                        std::swap(lits[1], lits[j]);
                        watches_[lits[1]].push_back(ci);
                        moved = true;
                        break;
                    }
                }
                if (moved) continue;
                // Unit or conflict.
                ws[keep++] = ci;
                if (value(lits[0]) == False_) {
                    for (size_t j = i + 1; j < ws.size(); ++j) ws[keep++] = ws[j];
                    ws.resize(keep);
                    qhead_ = trail_.size();
                    return ci;
                }
                enqueue(lits[0], ci);
            }
            ws.resize(keep);
        }
        return -1;
    }

    void analyze(int confl, std::vector<Lit>& learnt, int& back_level) {
        learnt.clear();
        learnt.push_back(-1);  // placeholder for the UIP
        int counter = 0;
        Lit p = -1;
        int index = (int)trail_.size() - 1;
        int ci = confl;
        std::vector<int> to_clear;
        do {
            const auto& lits = clauses_[ci].lits;
            for (Lit q : lits) {
                if (q == p) continue;
                int v = var_of(q);
                if (seen_[v] || level_[v] == 0) continue;
                seen_[v] = true;
                to_clear.push_back(v);
                bump(v);
                if (level_[v] == decision_level()) {
                    ++counter;
                } else {
                    learnt.push_back(q);
                }
            }
            // Next literal to resolve on.
            while (!seen_[var_of(trail_[index])]) --index;
            p = trail_[index];
            int v = var_of(p);
            seen_[v] = false;
            ci = reason_[v];
            --counter;
            --index;
        } while (counter > 0);
        learnt[0] = negate(p);

        back_level = 0;
        if (learnt.size() > 1) {
            // Second-highest level watch at position 1.
            size_t best = 1;
            for (size_t i = 2; i < learnt.size(); ++i)
                if (level_[var_of(learnt[i])] > level_[var_of(learnt[best])]) best = i;
            std::swap(learnt[1], learnt[best]);
            back_level = level_[var_of(learnt[1])];
        }
        for (int v : to_clear) seen_[v] = false;
    }

    void backjump(int level) {
        while (!trail_lim_.empty() && decision_level() > level) {
            int lim = trail_lim_.back();
            trail_lim_.pop_back();
            while ((int)trail_.size() > lim) {
                int v = var_of(trail_.back());
                assign_[v] = Unassigned;
                reason_[v] = -1;
                trail_.pop_back();
            }
        }
        qhead_ = trail_.size();
    }

    void bump(int v) {
        activity_[v] += var_inc_;
        if (activity_[v] > 1e100) {
            for (auto& a : activity_) a *= 1e-100;
            var_inc_ *= 1e-100;
        }
    }

    void decay_activities() { var_inc_ /= 0.95; }

    int pick_branch() {
        int best = -1;
        double best_act = -1.0;
        for (int v = 0; v < nvars_; ++v)
            if (assign_[v] == Unassigned && activity_[v] > best_act) {
                best = v;
                best_act = activity_[v];
            }
        return best;
    }
};

} // namespace slr::sat
