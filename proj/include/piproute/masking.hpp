#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "piproute/env.hpp"
#include "piproute/instance.hpp"

namespace piproute {

enum class MaskLevel { Local, PI1, PI2, Exact, Predicted };

inline const char* to_string(MaskLevel level) {
    switch (level) {
        case MaskLevel::Local: return "local";
        case MaskLevel::PI1: return "pi1";
        case MaskLevel::PI2: return "pi2";
        case MaskLevel::Exact: return "exact";
        case MaskLevel::Predicted: return "predicted";
    }
    return "local";
}

// Per-node selectability at a construction state. Visited nodes are never
// selectable; the depot counts as visited from the start.
struct Mask {
    std::vector<std::uint8_t> selectable;
    MaskLevel level = MaskLevel::Local;

    int count() const {
        int c = 0;
        for (auto b : selectable) c += b;
        return c;
    }
    bool empty() const { return count() == 0; }
    bool is_subset_of(const Mask& other) const {
        for (std::size_t i = 0; i < selectable.size(); ++i)
            if (selectable[i] && !other.selectable[i]) return false;
        return true;
    }
};

// Immediate feasibility of moving to `node` from the current state.
inline bool locally_feasible(const State<TsptwInstance>& s, int node) {
    return s.progress + s.inst->travel(s.cur, node) <= s.inst->tw_hi[static_cast<std::size_t>(node)];
}

inline bool locally_feasible(const State<TspdlInstance>& s, int node) {
    return s.progress + s.inst->demand[static_cast<std::size_t>(node)] <=
           s.inst->draft[static_cast<std::size_t>(node)];
}

// Clock after moving to `node` (arrival plus any wait), or load after the
// pickup at `node`.
inline double progress_after(const State<TsptwInstance>& s, int node) {
    return std::max(s.progress + s.inst->travel(s.cur, node),
                    s.inst->tw_lo[static_cast<std::size_t>(node)]);
}

inline double progress_after(const State<TspdlInstance>& s, int node) {
    return s.progress + s.inst->demand[static_cast<std::size_t>(node)];
}

template <class Inst>
Mask local_mask(const State<Inst>& s) {
    Mask m;
    m.level = MaskLevel::Local;
    m.selectable.assign(s.visited.size(), 0);
    for (int c = 1; c < s.inst->size(); ++c)
        if (!s.visited[static_cast<std::size_t>(c)] && locally_feasible(s, c))
            m.selectable[static_cast<std::size_t>(c)] = 1;
    return m;
}

namespace detail {

// One-step doom: after taking `cand`, node `other` can no longer be served
// even directly.
inline bool dooms(const State<TsptwInstance>& s, double prog_after_cand, int cand, int other) {
    return prog_after_cand + s.inst->travel(cand, other) >
           s.inst->tw_hi[static_cast<std::size_t>(other)];
}

inline bool dooms(const State<TspdlInstance>& s, double prog_after_cand, int /*cand*/, int other) {
    return prog_after_cand + s.inst->demand[static_cast<std::size_t>(other)] >
           s.inst->draft[static_cast<std::size_t>(other)];
}

// Size-2 doom certificate: serving {a, b} right after `cand` fails in both
// orders, at earliest times with waiting. Sound under the triangle
// inequality (TSPTW) and monotone load (TSPDL).
inline bool pair_doomed(const State<TsptwInstance>& s, double prog_after_cand, int cand, int a, int b) {
    const TsptwInstance& inst = *s.inst;
    const auto order_fails = [&](int j, int k) {
        const double arr_j = prog_after_cand + inst.travel(cand, j);
        if (arr_j > inst.tw_hi[static_cast<std::size_t>(j)]) return true;
        const double dep_j = std::max(arr_j, inst.tw_lo[static_cast<std::size_t>(j)]);
        return dep_j + inst.travel(j, k) > inst.tw_hi[static_cast<std::size_t>(k)];
    };
    return order_fails(a, b) && order_fails(b, a);
}

inline bool pair_doomed(const State<TspdlInstance>& s, double prog_after_cand, int /*cand*/, int a, int b) {
    const TspdlInstance& inst = *s.inst;
    const auto order_fails = [&](int j, int k) {
        const double load_j = prog_after_cand + inst.demand[static_cast<std::size_t>(j)];
        if (load_j > inst.draft[static_cast<std::size_t>(j)]) return true;
        return load_j + inst.demand[static_cast<std::size_t>(k)] >
               inst.draft[static_cast<std::size_t>(k)];
    };
    return order_fails(a, b) && order_fails(b, a);
}

template <class Inst>
std::vector<int> unvisited_nodes(const State<Inst>& s) {
    std::vector<int> r;
    r.reserve(static_cast<std::size_t>(s.remaining()));
    for (int c = 1; c < s.inst->size(); ++c)
        if (!s.visited[static_cast<std::size_t>(c)]) r.push_back(c);
    return r;
}

// Lookahead test applied to an already locally feasible candidate.
template <class Inst>
bool pi_doomed(const State<Inst>& s, const std::vector<int>& rest, int cand, int k) {
    const double prog = progress_after(s, cand);
    for (int other : rest) {
        if (other == cand) continue;
        if (dooms(s, prog, cand, other)) return true;
    }
    if (k >= 2) {
        for (std::size_t i = 0; i < rest.size(); ++i) {
            if (rest[i] == cand) continue;
            for (std::size_t j = i + 1; j < rest.size(); ++j) {
                if (rest[j] == cand) continue;
                if (pair_doomed(s, prog, cand, rest[i], rest[j])) return true;
            }
        }
    }
    return false;
}

}  // namespace detail

// Preventative infeasibility mask at lookahead depth k in {0, 1, 2}.
// k = 0 is the local mask; larger k masks locally feasible candidates that
// carry a doom certificate of size <= k.
template <class Inst>
Mask pi_mask(const State<Inst>& s, int k) {
    if (k < 0 || k > 2) throw std::invalid_argument("pi_mask: k must be in {0, 1, 2}");
    Mask m = local_mask(s);
    if (k == 0) return m;
    m.level = k == 1 ? MaskLevel::PI1 : MaskLevel::PI2;
    const std::vector<int> rest = detail::unvisited_nodes(s);
    for (int cand : rest) {
        if (!m.selectable[static_cast<std::size_t>(cand)]) continue;
        if (detail::pi_doomed(s, rest, cand, k)) m.selectable[static_cast<std::size_t>(cand)] = 0;
    }
    return m;
}

inline constexpr int kExactMaskLimit = 15;

// Exact feasibility mask for TSPTW: candidate c stays selectable iff some
// violation-free completion of all remaining nodes (returning to the depot
// by its deadline) starts with c.
//
// Computed with a subset DP over (set-still-to-visit, node) that stores the
// latest clock at which the node can be reached while a feasible completion
// of the set still exists; O(2^m * m^2) for m remaining nodes.
inline Mask exact_mask_tsptw(const State<TsptwInstance>& s) {
    const std::vector<int> rest = detail::unvisited_nodes(s);
    const int m = static_cast<int>(rest.size());
    if (m > kExactMaskLimit) throw std::invalid_argument("exact_mask_tsptw: too many remaining nodes");

    Mask mask;
    mask.level = MaskLevel::Exact;
    mask.selectable.assign(s.visited.size(), 0);
    if (m == 0) return mask;

    const TsptwInstance& inst = *s.inst;
    std::vector<double> lo(static_cast<std::size_t>(m)), hi(static_cast<std::size_t>(m));
    std::vector<double> tt(static_cast<std::size_t>(m) * static_cast<std::size_t>(m));
    std::vector<double> to_depot(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        lo[static_cast<std::size_t>(i)] = inst.tw_lo[static_cast<std::size_t>(rest[static_cast<std::size_t>(i)])];
        hi[static_cast<std::size_t>(i)] = inst.tw_hi[static_cast<std::size_t>(rest[static_cast<std::size_t>(i)])];
        to_depot[static_cast<std::size_t>(i)] = inst.travel(rest[static_cast<std::size_t>(i)], 0);
        for (int j = 0; j < m; ++j)
            tt[static_cast<std::size_t>(i) * static_cast<std::size_t>(m) + static_cast<std::size_t>(j)] =
                inst.travel(rest[static_cast<std::size_t>(i)], rest[static_cast<std::size_t>(j)]);
    }

    constexpr double kNoCompletion = -std::numeric_limits<double>::infinity();
    const std::size_t nsets = std::size_t{1} << m;
    // latest[set * m + j]: latest clock at node j from which the set can
    // still be completed feasibly (j not in set).
    std::vector<double> latest(nsets * static_cast<std::size_t>(m), kNoCompletion);

    for (int j = 0; j < m; ++j) {
        const double bound = inst.tw_hi[0] - to_depot[static_cast<std::size_t>(j)];
        // leaving j can happen no earlier than its window opening
        latest[static_cast<std::size_t>(j)] =
            bound < lo[static_cast<std::size_t>(j)] ? kNoCompletion
                                                    : std::min(hi[static_cast<std::size_t>(j)], bound);
    }

    for (std::size_t set = 1; set < nsets; ++set) {
        for (int j = 0; j < m; ++j) {
            if (set & (std::size_t{1} << j)) continue;
            double best = kNoCompletion;
            for (int k = 0; k < m; ++k) {
                if (!(set & (std::size_t{1} << k))) continue;
                const double next = latest[(set ^ (std::size_t{1} << k)) * static_cast<std::size_t>(m) +
                                           static_cast<std::size_t>(k)];
                if (next == kNoCompletion) continue;
                const double bound =
                    next - tt[static_cast<std::size_t>(j) * static_cast<std::size_t>(m) + static_cast<std::size_t>(k)];
                // departure waits until the window opens, so the bound must
                // admit the wait as well
                if (bound < lo[static_cast<std::size_t>(j)]) continue;
                best = std::max(best, bound);
            }
            latest[set * static_cast<std::size_t>(m) + static_cast<std::size_t>(j)] =
                std::min(hi[static_cast<std::size_t>(j)], best);
        }
    }

    const std::size_t full = nsets - 1;
    for (int c = 0; c < m; ++c) {
        const double arrival = s.progress + inst.travel(s.cur, rest[static_cast<std::size_t>(c)]);
        const double limit =
            latest[(full ^ (std::size_t{1} << c)) * static_cast<std::size_t>(m) + static_cast<std::size_t>(c)];
        if (arrival <= limit)
            mask.selectable[static_cast<std::size_t>(rest[static_cast<std::size_t>(c)])] = 1;
    }
    return mask;
}

// Exact feasibility mask for unit-demand TSPDL via the Hall condition:
// after taking c, the r-th smallest remaining draft must cover the load at
// the r-th later position. Polynomial and exact for unit demands.
inline Mask exact_mask_tspdl(const State<TspdlInstance>& s) {
    const TspdlInstance& inst = *s.inst;
    if (inst.demand[0] != 0) throw non_unit_demand_error("exact_mask_tspdl: depot demand must be 0");
    for (int i = 1; i < inst.size(); ++i)
        if (inst.demand[static_cast<std::size_t>(i)] != 1)
            throw non_unit_demand_error("exact_mask_tspdl: non-unit customer demand");

    Mask mask;
    mask.level = MaskLevel::Exact;
    mask.selectable.assign(s.visited.size(), 0);
    const std::vector<int> rest = detail::unvisited_nodes(s);

    std::vector<int> drafts;
    drafts.reserve(rest.size());
    for (int cand : rest) {
        if (!locally_feasible(s, cand)) continue;
        const double load = progress_after(s, cand);
        drafts.clear();
        for (int other : rest)
            if (other != cand) drafts.push_back(inst.draft[static_cast<std::size_t>(other)]);
        std::sort(drafts.begin(), drafts.end());
        bool ok = true;
        for (std::size_t r = 0; r < drafts.size(); ++r) {
            if (drafts[r] < load + static_cast<double>(r) + 1.0) {
                ok = false;
                break;
            }
        }
        if (ok) mask.selectable[static_cast<std::size_t>(cand)] = 1;
    }
    return mask;
}

inline Mask exact_mask(const State<TsptwInstance>& s) { return exact_mask_tsptw(s); }
inline Mask exact_mask(const State<TspdlInstance>& s) { return exact_mask_tspdl(s); }

inline constexpr int kExactSolveLimit = 12;

struct ExactSolution {
    Tour tour;
    double length = 0.0;
};

namespace detail {

// Sum over remaining nodes of the cheapest incoming arc, plus the cheapest
// return arc; a valid lower bound on the completion length.
template <class Inst>
double completion_bound(const Inst& inst, const State<Inst>& s, const std::vector<int>& rest) {
    double lb = 0.0;
    for (int v : rest) {
        double best = inst.distance(s.cur, v);
        for (int u : rest)
            if (u != v) best = std::min(best, inst.distance(u, v));
        lb += best;
    }
    double ret = std::numeric_limits<double>::infinity();
    if (rest.empty()) return inst.distance(s.cur, 0);
    for (int v : rest) ret = std::min(ret, inst.distance(v, 0));
    return lb + ret;
}

struct BnbResult {
    std::optional<ExactSolution> best;
    bool complete = true;  // false when the node budget ran out
};

template <class Inst>
void bnb_recurse(State<Inst>& s, std::optional<ExactSolution>& best, long long& budget, bool& complete) {
    if (budget-- <= 0) {
        complete = false;
        return;
    }
    if (s.complete()) {
        State<Inst> done = s;
        const TourMetrics m = finalize(done);
        if (!m.feasible) return;
        if (!best || m.length < best->length) best = ExactSolution{done.tour, m.length};
        return;
    }
    const std::vector<int> rest = unvisited_nodes(s);
    if (best && s.length + completion_bound(*s.inst, s, rest) >= best->length) return;
    for (int cand : rest) {
        if (!locally_feasible(s, cand)) continue;
        if (pi_doomed(s, rest, cand, 1)) continue;
        State<Inst> next = s;
        step(next, cand);
        bnb_recurse(next, best, budget, complete);
    }
}

// Depth-first branch and bound over feasible tours; candidates are explored
// in ascending node order so the first minimum found is the
// lexicographically smallest one.
template <class Inst>
BnbResult solve_bnb(const Inst& inst, long long node_budget) {
    State<Inst> root = init_state(inst);
    BnbResult res;
    bnb_recurse(root, res.best, node_budget, res.complete);
    return res;
}

}  // namespace detail

// Minimum-length feasible tour for desk-scale instances, or nullopt when no
// feasible tour exists. Ties resolve to the lexicographically smallest tour.
template <class Inst>
std::optional<ExactSolution> exact_solve_small(const Inst& inst) {
    if (inst.n > kExactSolveLimit) throw std::invalid_argument("exact_solve_small: instance too large");
    return detail::solve_bnb(inst, std::numeric_limits<long long>::max()).best;
}

}  // namespace piproute
