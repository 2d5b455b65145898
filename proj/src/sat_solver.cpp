#include "gatescope/sat_solver.hpp"

#include <algorithm>

namespace gatescope {

namespace {

// Luby sequence 1,1,2,1,1,2,4,...
std::uint64_t luby(std::uint64_t i) {
  std::uint64_t size = 1;
  std::uint64_t seq = 0;
  while (size < i + 1) {
    ++seq;
    size = 2 * size + 1;
  }
  while (size - 1 != i) {
    size = (size - 1) >> 1;
    --seq;
    i = i % size;
  }
  return std::uint64_t{1} << seq;
}

}  // namespace

std::uint32_t SatSolver::new_variable() {
  const auto v = static_cast<std::uint32_t>(assigns_.size());
  assigns_.push_back(undef);
  phase_.push_back(0);
  level_.push_back(0);
  reason_.push_back(no_reason);
  activity_.push_back(0.0);
  heap_pos_.push_back(-1);
  seen_.push_back(0);
  watches_.emplace_back();
  watches_.emplace_back();
  heap_insert(v);
  return v;
}

void SatSolver::add_clause(std::span<const Literal> clause) {
  if (inconsistent_) return;
  std::vector<Literal> c(clause.begin(), clause.end());
  std::sort(c.begin(), c.end(), [](Literal a, Literal b) { return a.code < b.code; });
  c.erase(std::unique(c.begin(), c.end()), c.end());
  for (std::size_t i = 0; i + 1 < c.size(); ++i) {
    if (c[i].var() == c[i + 1].var()) return;  // tautology
  }
  if (c.empty()) {
    inconsistent_ = true;
    return;
  }
  if (c.size() == 1) {
    pending_units_.push_back(c[0]);
    return;
  }
  attach(std::move(c));
}

std::uint32_t SatSolver::attach(std::vector<Literal> clause) {
  const auto idx = static_cast<std::uint32_t>(clauses_.size());
  watches_[(~clause[0]).code].push_back(idx);
  watches_[(~clause[1]).code].push_back(idx);
  clauses_.push_back(std::move(clause));
  return idx;
}

void SatSolver::assign(Literal l, std::uint32_t reason) {
  assigns_[l.var()] = static_cast<std::int8_t>(!l.negated());
  level_[l.var()] = static_cast<std::uint32_t>(trail_limits_.size());
  reason_[l.var()] = reason;
  trail_.push_back(l);
}

// Watch lists are keyed by the literal whose assignment to true falsifies a
// watched literal of the clause.
std::uint32_t SatSolver::propagate() {
  while (propagated_ < trail_.size()) {
    const Literal p = trail_[propagated_++];
    auto& ws = watches_[p.code];
    std::size_t keep = 0;
    for (std::size_t i = 0; i < ws.size(); ++i) {
      const std::uint32_t ci = ws[i];
      auto& c = clauses_[ci];
      const Literal false_lit = ~p;
      if (c[0] == false_lit) std::swap(c[0], c[1]);
      if (value(c[0]) == 1) {
        ws[keep++] = ci;
        continue;
      }
      bool moved = false;
      for (std::size_t k = 2; k < c.size(); ++k) {
        if (value(c[k]) != 0) {
          std::swap(c[1], c[k]);
          watches_[(~c[1]).code].push_back(ci);
          moved = true;
          break;
        }
      }
      if (moved) continue;
      ws[keep++] = ci;
      if (value(c[0]) == 0) {
        for (std::size_t k = i + 1; k < ws.size(); ++k) ws[keep++] = ws[k];
        ws.resize(keep);
        return ci;
      }
      assign(c[0], ci);
    }
    ws.resize(keep);
  }
  return no_reason;
}

void SatSolver::bump(std::uint32_t var) {
  activity_[var] += bump_amount_;
  if (activity_[var] > 1e100) {
    for (auto& a : activity_) a *= 1e-100;
    bump_amount_ *= 1e-100;
  }
  if (heap_pos_[var] >= 0) heap_up(static_cast<std::size_t>(heap_pos_[var]));
}

void SatSolver::analyze(std::uint32_t conflict, std::vector<Literal>& learnt, std::uint32_t& backtrack_level) {
  learnt.clear();
  learnt.push_back(Literal{});  // placeholder for the asserting literal
  const auto current = static_cast<std::uint32_t>(trail_limits_.size());
  int open = 0;
  Literal p{};
  bool have_p = false;
  std::size_t index = trail_.size();
  std::uint32_t reason = conflict;
  do {
    const auto& c = clauses_[reason];
    for (std::size_t k = have_p ? 1 : 0; k < c.size(); ++k) {
      const Literal q = c[k];
      const auto v = q.var();
      if (seen_[v] || level_[v] == 0) continue;
      seen_[v] = 1;
      bump(v);
      if (level_[v] >= current) {
        ++open;
      } else {
        learnt.push_back(q);
      }
    }
    do {
      p = trail_[--index];
    } while (!seen_[p.var()]);
    have_p = true;
    seen_[p.var()] = 0;
    reason = reason_[p.var()];
    --open;
    if (open > 0) {
      // reason clauses keep their implied literal at position 0
      auto& rc = clauses_[reason];
      if (rc[0].var() != p.var()) {
        for (std::size_t k = 1; k < rc.size(); ++k) {
          if (rc[k].var() == p.var()) {
            std::swap(rc[0], rc[k]);
            break;
          }
        }
      }
    }
  } while (open > 0);
  learnt[0] = ~p;
  for (std::size_t k = 1; k < learnt.size(); ++k) seen_[learnt[k].var()] = 0;

  backtrack_level = 0;
  if (learnt.size() > 1) {
    std::size_t max_i = 1;
    for (std::size_t k = 2; k < learnt.size(); ++k) {
      if (level_[learnt[k].var()] > level_[learnt[max_i].var()]) max_i = k;
    }
    std::swap(learnt[1], learnt[max_i]);
    backtrack_level = level_[learnt[1].var()];
  }
  bump_amount_ *= 1.0 / 0.95;
}

void SatSolver::backtrack(std::uint32_t level) {
  if (trail_limits_.size() <= level) return;
  for (std::size_t i = trail_.size(); i > trail_limits_[level]; --i) {
    const auto v = trail_[i - 1].var();
    phase_[v] = assigns_[v];
    assigns_[v] = undef;
    reason_[v] = no_reason;
    if (heap_pos_[v] < 0) heap_insert(v);
  }
  trail_.resize(trail_limits_[level]);
  trail_limits_.resize(level);
  propagated_ = trail_.size();
}

SatResult SatSolver::solve(std::uint64_t conflict_budget) {
  if (inconsistent_) return SatResult::unsatisfiable;
  backtrack(0);
  for (const Literal u : pending_units_) {
    const auto v = value(u);
    if (v == 0) {
      inconsistent_ = true;
      return SatResult::unsatisfiable;
    }
    if (v == undef) assign(u, no_reason);
  }
  pending_units_.clear();
  if (propagate() != no_reason) {
    inconsistent_ = true;
    return SatResult::unsatisfiable;
  }

  std::uint64_t restart_index = 0;
  std::uint64_t until_restart = 64 * luby(restart_index);
  std::uint64_t budget_used = 0;
  std::vector<Literal> learnt;
  while (true) {
    const std::uint32_t conflict = propagate();
    if (conflict != no_reason) {
      ++conflicts_;
      ++budget_used;
      if (trail_limits_.empty()) {
        inconsistent_ = true;
        return SatResult::unsatisfiable;
      }
      std::uint32_t bt = 0;
      analyze(conflict, learnt, bt);
      backtrack(bt);
      if (learnt.size() == 1) {
        assign(learnt[0], no_reason);
      } else {
        const auto ci = attach(learnt);
        assign(learnt[0], ci);
      }
      if (budget_used >= conflict_budget) {
        backtrack(0);
        return SatResult::budget_exhausted;
      }
      if (--until_restart == 0) {
        backtrack(0);
        until_restart = 64 * luby(++restart_index);
      }
      continue;
    }
    std::uint32_t next = no_reason;
    while (!heap_.empty()) {
      const auto v = heap_pop();
      if (assigns_[v] == undef) {
        next = v;
        break;
      }
    }
    if (next == no_reason) {
      model_.assign(assigns_.size(), false);
      for (std::size_t v = 0; v < assigns_.size(); ++v) model_[v] = assigns_[v] == 1;
      backtrack(0);
      return SatResult::satisfiable;
    }
    trail_limits_.push_back(trail_.size());
    assign(phase_[next] == 1 ? Literal::positive(next) : Literal::negative(next), no_reason);
  }
}

// --- activity heap (max-heap on activity_) --------------------------------

void SatSolver::heap_insert(std::uint32_t var) {
  heap_pos_[var] = static_cast<std::int64_t>(heap_.size());
  heap_.push_back(var);
  heap_up(heap_.size() - 1);
}

std::uint32_t SatSolver::heap_pop() {
  const auto top = heap_.front();
  heap_pos_[top] = -1;
  heap_.front() = heap_.back();
  heap_.pop_back();
  if (!heap_.empty()) {
    heap_pos_[heap_.front()] = 0;
    heap_down(0);
  }
  return top;
}

void SatSolver::heap_up(std::size_t pos) {
  const auto v = heap_[pos];
  while (pos > 0) {
    const std::size_t parent = (pos - 1) / 2;
    if (activity_[heap_[parent]] >= activity_[v]) break;
    heap_[pos] = heap_[parent];
    heap_pos_[heap_[pos]] = static_cast<std::int64_t>(pos);
    pos = parent;
  }
  heap_[pos] = v;
  heap_pos_[v] = static_cast<std::int64_t>(pos);
}

void SatSolver::heap_down(std::size_t pos) {
  const auto v = heap_[pos];
  while (true) {
    std::size_t child = 2 * pos + 1;
    if (child >= heap_.size()) break;
    if (child + 1 < heap_.size() && activity_[heap_[child + 1]] > activity_[heap_[child]]) ++child;
    if (activity_[heap_[child]] <= activity_[v]) break;
    heap_[pos] = heap_[child];
    heap_pos_[heap_[pos]] = static_cast<std::int64_t>(pos);
    pos = child;
  }
  heap_[pos] = v;
  heap_pos_[v] = static_cast<std::int64_t>(pos);
}

}  // namespace gatescope
