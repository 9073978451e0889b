#include "provrefine/sat.hpp"

#include <algorithm>

namespace provrefine {

namespace {

double luby(double y, std::uint64_t x) {
    std::uint64_t size = 1, seq = 0;
    while (size < x + 1) {
        ++seq;
        size = 2 * size + 1;
    }
    while (size - 1 != x) {
        size = (size - 1) >> 1;
        --seq;
        x = x % size;
    }
    double r = 1;
    for (std::uint64_t i = 0; i < seq; ++i) r *= y;
    return r;
}

}  // namespace

SatSolver::SatSolver(std::uint32_t nvars) {
    for (std::uint32_t i = 0; i < nvars; ++i) new_var();
}

std::uint32_t SatSolver::new_var() {
    std::uint32_t v = num_vars();
    value_.push_back(-1);
    level_.push_back(0);
    reason_.push_back(kNoReason);
    pb_reason_.emplace_back();
    pb_index_.push_back(-1);
    activity_.push_back(0.0);
    phase_.push_back(0);
    seen_.push_back(0);
    heap_pos_.push_back(-1);
    watches_.emplace_back();
    watches_.emplace_back();
    heap_insert(v);
    return v;
}

void SatSolver::set_priority(std::uint32_t v, double priority, bool phase) {
    activity_[v] = priority;
    phase_[v] = phase ? 1 : 0;
    if (heap_pos_[v] >= 0) {
        heap_up(static_cast<std::size_t>(heap_pos_[v]));
        heap_down(static_cast<std::size_t>(heap_pos_[v]));
    }
}

void SatSolver::set_random(std::mt19937_64* rng, double freq) {
    rng_ = rng;
    random_freq_ = freq;
}

void SatSolver::add_clause(std::vector<Lit> lits) {
    if (unsat_) return;
    backtrack(0);
    std::sort(lits.begin(), lits.end());
    lits.erase(std::unique(lits.begin(), lits.end()), lits.end());
    std::vector<Lit> kept;
    for (std::size_t i = 0; i < lits.size(); ++i) {
        if (i + 1 < lits.size() && lits[i + 1] == lit_not(lits[i])) return;  // tautology
        std::int8_t v = lit_value(lits[i]);
        if (v == 1) return;
        if (v == -1) kept.push_back(lits[i]);
    }
    if (kept.empty()) {
        unsat_ = true;
        return;
    }
    if (kept.size() == 1) {
        enqueue(kept[0], kNoReason);
        return;
    }
    add_clause_internal(std::move(kept));
}

std::uint32_t SatSolver::add_clause_internal(std::vector<Lit> lits) {
    auto idx = static_cast<std::uint32_t>(clauses_.size());
    watches_[lits[0]].push_back(idx);
    watches_[lits[1]].push_back(idx);
    clauses_.push_back({std::move(lits)});
    return idx;
}

void SatSolver::set_objective(std::vector<std::pair<Lit, std::int64_t>> terms) {
    backtrack(0);
    std::stable_sort(terms.begin(), terms.end(), [](auto& a, auto& b) { return a.second > b.second; });
    pb_ = std::move(terms);
    std::fill(pb_index_.begin(), pb_index_.end(), -1);
    pb_total_ = 0;
    for (std::size_t i = 0; i < pb_.size(); ++i) {
        pb_index_[lit_var(pb_[i].first)] = static_cast<std::int32_t>(i);
        if (lit_value(pb_[i].first) != 0) pb_total_ += pb_[i].second;
    }
    has_pb_ = true;
}

void SatSolver::set_bound(std::int64_t k) { bound_ = k; }

void SatSolver::enqueue(Lit l, std::int32_t reason) {
    std::uint32_t v = lit_var(l);
    value_[v] = lit_sign(l) ? 0 : 1;
    level_[v] = static_cast<std::uint32_t>(trail_lim_.size());
    reason_[v] = reason;
    trail_.push_back(l);
    if (has_pb_ && pb_index_[v] >= 0) {
        const auto& t = pb_[static_cast<std::size_t>(pb_index_[v])];
        if (lit_value(t.first) == 0) pb_total_ -= t.second;
    }
}

void SatSolver::backtrack(std::uint32_t level) {
    if (trail_lim_.size() <= level) return;
    std::size_t keep = trail_lim_[level];
    for (std::size_t i = trail_.size(); i-- > keep;) {
        std::uint32_t v = lit_var(trail_[i]);
        if (has_pb_ && pb_index_[v] >= 0) {
            const auto& t = pb_[static_cast<std::size_t>(pb_index_[v])];
            if (lit_value(t.first) == 0) pb_total_ += t.second;
        }
        phase_[v] = value_[v] == 1;
        value_[v] = -1;
        reason_[v] = kNoReason;
        if (heap_pos_[v] < 0) heap_insert(v);
    }
    trail_.resize(keep);
    trail_lim_.resize(level);
    qhead_ = std::min(qhead_, trail_.size());
}

bool SatSolver::propagate_pb(std::vector<Lit>& conflict) {
    if (!has_pb_ || bound_ == INT64_MIN) return true;
    std::int64_t slack = pb_total_ - bound_;
    if (slack >= 0 && (pb_.empty() || pb_.front().second <= slack)) return true;
    std::vector<Lit> falsified;
    for (const auto& t : pb_)
        if (lit_value(t.first) == 0) falsified.push_back(t.first);
    if (slack < 0) {
        conflict = std::move(falsified);
        return false;
    }
    for (const auto& t : pb_) {
        if (t.second <= slack) break;
        if (lit_value(t.first) != -1) continue;
        std::uint32_t v = lit_var(t.first);
        std::vector<Lit> r{t.first};
        r.insert(r.end(), falsified.begin(), falsified.end());
        pb_reason_[v] = std::move(r);
        enqueue(t.first, kPbReason);
    }
    return true;
}

std::int32_t SatSolver::propagate() {
    while (true) {
        while (qhead_ < trail_.size()) {
            Lit p = trail_[qhead_++];
            Lit false_lit = lit_not(p);
            std::vector<std::uint32_t>& ws = watches_[false_lit];
            std::size_t i = 0, j = 0;
            while (i < ws.size()) {
                std::uint32_t ci = ws[i++];
                std::vector<Lit>& c = clauses_[ci].lits;
                if (c[0] == false_lit) std::swap(c[0], c[1]);
                if (lit_value(c[0]) == 1) {
                    ws[j++] = ci;
                    continue;
                }
                bool moved = false;
                for (std::size_t k = 2; k < c.size(); ++k) {
                    if (lit_value(c[k]) != 0) {
                        std::swap(c[1], c[k]);
                        watches_[c[1]].push_back(ci);
                        moved = true;
                        break;
                    }
                }
                if (moved) continue;
                ws[j++] = ci;
                if (lit_value(c[0]) == 0) {
                    while (i < ws.size()) ws[j++] = ws[i++];
                    ws.resize(j);
                    return static_cast<std::int32_t>(ci);
                }
                enqueue(c[0], static_cast<std::int32_t>(ci));
            }
            ws.resize(j);
        }
        std::size_t before = trail_.size();
        std::vector<Lit> conflict;
        if (!propagate_pb(conflict)) {
            pb_conflict_ = std::move(conflict);
            return kPbReason;
        }
        if (trail_.size() == before) return kNoReason;
    }
}

void SatSolver::bump(std::uint32_t v) {
    activity_[v] += inc_;
    if (activity_[v] > 1e100) {
        for (double& a : activity_) a *= 1e-100;
        inc_ *= 1e-100;
    }
    if (heap_pos_[v] >= 0) heap_up(static_cast<std::size_t>(heap_pos_[v]));
}

void SatSolver::analyze(std::vector<Lit> conflict, std::vector<Lit>& learnt, std::uint32_t& bt_level) {
    learnt.assign(1, 0);
    std::uint32_t cur = static_cast<std::uint32_t>(trail_lim_.size());
    int pending = 0;
    std::size_t idx = trail_.size();
    std::vector<std::uint32_t> touched;
    const std::vector<Lit>* reason = &conflict;
    std::uint32_t skip_var = UINT32_MAX;
    Lit p = 0;
    while (true) {
        for (Lit q : *reason) {
            std::uint32_t v = lit_var(q);
            if (v == skip_var || seen_[v] || level_[v] == 0) continue;
            seen_[v] = 1;
            touched.push_back(v);
            bump(v);
            if (level_[v] == cur) ++pending;
            else learnt.push_back(q);
        }
        do p = trail_[--idx];
        while (!seen_[lit_var(p)]);
        skip_var = lit_var(p);
        if (--pending == 0) break;
        reason = &reason_lits(skip_var);
    }
    learnt[0] = lit_not(p);
    for (std::uint32_t v : touched) seen_[v] = 0;
    bt_level = 0;
    std::size_t max_i = 1;
    for (std::size_t i = 1; i < learnt.size(); ++i) {
        if (level_[lit_var(learnt[i])] > bt_level) {
            bt_level = level_[lit_var(learnt[i])];
            max_i = i;
        }
    }
    if (learnt.size() > 1) std::swap(learnt[1], learnt[max_i]);
}

void SatSolver::heap_insert(std::uint32_t v) {
    heap_pos_[v] = static_cast<std::int32_t>(heap_.size());
    heap_.push_back(v);
    heap_up(heap_.size() - 1);
}

void SatSolver::heap_up(std::size_t i) {
    std::uint32_t v = heap_[i];
    while (i > 0) {
        std::size_t parent = (i - 1) / 2;
        if (!heap_less(v, heap_[parent])) break;
        heap_[i] = heap_[parent];
        heap_pos_[heap_[i]] = static_cast<std::int32_t>(i);
        i = parent;
    }
    heap_[i] = v;
    heap_pos_[v] = static_cast<std::int32_t>(i);
}

void SatSolver::heap_down(std::size_t i) {
    std::uint32_t v = heap_[i];
    while (true) {
        std::size_t c = 2 * i + 1;
        if (c >= heap_.size()) break;
        if (c + 1 < heap_.size() && heap_less(heap_[c + 1], heap_[c])) ++c;
        if (!heap_less(heap_[c], v)) break;
        heap_[i] = heap_[c];
        heap_pos_[heap_[i]] = static_cast<std::int32_t>(i);
        i = c;
    }
    heap_[i] = v;
    heap_pos_[v] = static_cast<std::int32_t>(i);
}

std::uint32_t SatSolver::heap_pop() {
    std::uint32_t v = heap_.front();
    heap_pos_[v] = -1;
    std::uint32_t last = heap_.back();
    heap_.pop_back();
    if (!heap_.empty()) {
        heap_[0] = last;
        heap_pos_[last] = 0;
        heap_down(0);
    }
    return v;
}

std::optional<Lit> SatSolver::pick_branch() {
    if (rng_ && random_freq_ > 0 && !heap_.empty() &&
        std::uniform_real_distribution<double>(0, 1)(*rng_) < random_freq_) {
        std::uint32_t v = heap_[std::uniform_int_distribution<std::size_t>(0, heap_.size() - 1)(*rng_)];
        if (value_[v] < 0) {
            bool ph = std::uniform_int_distribution<int>(0, 1)(*rng_) == 1;
            return ph ? pos_lit(v) : neg_lit(v);
        }
    }
    while (!heap_.empty()) {
        std::uint32_t v = heap_pop();
        if (value_[v] < 0) return phase_[v] ? pos_lit(v) : neg_lit(v);
    }
    return std::nullopt;
}

SatSolver::Result SatSolver::solve(const std::vector<Lit>& assumptions, std::uint64_t conflict_limit,
                                   std::optional<std::chrono::steady_clock::time_point> deadline) {
    model_.clear();
    if (unsat_) return Result::unsat;
    backtrack(0);
    if (has_pb_) {
        // the bound may have changed since the last call
        qhead_ = 0;
    }
    std::uint64_t start = conflicts_;
    std::uint64_t restart_no = 0;
    std::uint64_t next_restart = conflicts_ + static_cast<std::uint64_t>(100 * luby(2, restart_no));
    std::vector<Lit> learnt;
    while (true) {
        std::int32_t confl = propagate();
        if (confl != kNoReason) {
            ++conflicts_;
            if (trail_lim_.empty()) {
                unsat_ = true;
                return Result::unsat;
            }
            std::vector<Lit> c = confl == kPbReason ? std::move(pb_conflict_)
                                                    : clauses_[static_cast<std::size_t>(confl)].lits;
            std::uint32_t bt = 0;
            // a conflict whose literals were all fixed below the current level
            std::uint32_t top = 0;
            for (Lit l : c) top = std::max(top, level_[lit_var(l)]);
            if (top == 0) {
                unsat_ = true;
                return Result::unsat;
            }
            if (top < trail_lim_.size()) backtrack(top);
            analyze(std::move(c), learnt, bt);
            backtrack(bt);
            if (learnt.size() == 1) {
                enqueue(learnt[0], kNoReason);
            } else {
                std::uint32_t ci = add_clause_internal(learnt);
                enqueue(learnt[0], static_cast<std::int32_t>(ci));
            }
            decay();
            if (conflict_limit && conflicts_ - start >= conflict_limit) {
                backtrack(0);
                return Result::unknown;
            }
            if (deadline && (conflicts_ & 63u) == 0 && std::chrono::steady_clock::now() > *deadline) {
                backtrack(0);
                return Result::unknown;
            }
            continue;
        }
        if (conflicts_ >= next_restart) {
            ++restart_no;
            next_restart = conflicts_ + static_cast<std::uint64_t>(100 * luby(2, restart_no));
            backtrack(0);
            continue;
        }
        std::optional<Lit> next;
        while (trail_lim_.size() < assumptions.size()) {
            Lit a = assumptions[trail_lim_.size()];
            std::int8_t v = lit_value(a);
            if (v == 1) {
                trail_lim_.push_back(trail_.size());
            } else if (v == 0) {
                backtrack(0);
                return Result::unsat;
            } else {
                next = a;
                break;
            }
        }
        if (!next) {
            next = pick_branch();
            if (!next) {
                model_.assign(value_.begin(), value_.end());
                backtrack(0);
                return Result::sat;
            }
        }
        ++decisions_;
        trail_lim_.push_back(trail_.size());
        enqueue(*next, kNoReason);
    }
}

}  // namespace provrefine
