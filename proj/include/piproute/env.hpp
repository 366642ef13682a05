#pragma once

#include <algorithm>
#include <cstdint>
#include <stdexcept>
#include <type_traits>
#include <vector>

#include "piproute/instance.hpp"

namespace piproute {

// A tour is a permutation of all nodes starting at the depot; the return
// arc to the depot is implicit.
using Tour = std::vector<int>;

// Partial-construction state. `progress` is the arrival clock for TSPTW and
// the cumulative load for TSPDL; both are nondecreasing along a trajectory.
// Violating steps are permitted and recorded (soft semantics), so complete
// tours can always be produced.
template <class Inst>
struct State {
    const Inst* inst = nullptr;
    int cur = 0;
    double progress = 0.0;
    double length = 0.0;
    double j_violation = 0.0;
    int j_in = 0;
    std::vector<std::uint8_t> visited;
    Tour tour;

    int visited_count() const { return static_cast<int>(tour.size()); }
    int remaining() const { return inst->size() - visited_count(); }
    bool complete() const { return remaining() == 0; }
};

template <class Inst>
State<Inst> init_state(const Inst& inst) {
    State<Inst> s;
    s.inst = &inst;
    s.visited.assign(static_cast<std::size_t>(inst.size()), 0);
    s.visited[0] = 1;
    s.tour.push_back(0);
    return s;
}

namespace detail {
template <class Inst>
inline void check_step_target(const State<Inst>& s, int node) {
    if (node < 0 || node >= s.inst->size()) throw std::invalid_argument("step: node out of range");
    if (s.visited[static_cast<std::size_t>(node)]) throw std::invalid_argument("step: node already visited");
}
}  // namespace detail

inline void step(State<TsptwInstance>& s, int node) {
    detail::check_step_target(s, node);
    const TsptwInstance& inst = *s.inst;
    const double arrival = s.progress + inst.travel(s.cur, node);
    if (arrival > inst.tw_hi[static_cast<std::size_t>(node)]) {
        s.j_violation += arrival - inst.tw_hi[static_cast<std::size_t>(node)];
        s.j_in += 1;
    }
    s.progress = std::max(arrival, inst.tw_lo[static_cast<std::size_t>(node)]);
    s.length += inst.distance(s.cur, node);
    s.cur = node;
    s.visited[static_cast<std::size_t>(node)] = 1;
    s.tour.push_back(node);
}

inline void step(State<TspdlInstance>& s, int node) {
    detail::check_step_target(s, node);
    const TspdlInstance& inst = *s.inst;
    const double load = s.progress + inst.demand[static_cast<std::size_t>(node)];
    if (load > inst.draft[static_cast<std::size_t>(node)]) {
        s.j_violation += load - inst.draft[static_cast<std::size_t>(node)];
        s.j_in += 1;
    }
    s.progress = load;
    s.length += inst.distance(s.cur, node);
    s.cur = node;
    s.visited[static_cast<std::size_t>(node)] = 1;
    s.tour.push_back(node);
}

struct TourMetrics {
    double length = 0.0;
    double j_c = 0.0;
    int j_in = 0;
    bool feasible = true;
};

// Appends the return arc and checks the depot deadline (TSPTW). Non-binding
// for generated instances by construction; benchmark files can bind it.
template <class Inst>
TourMetrics finalize(State<Inst>& s) {
    if (!s.complete()) throw std::invalid_argument("finalize: unvisited nodes remain");
    s.length += s.inst->distance(s.cur, 0);
    if constexpr (std::is_same_v<Inst, TsptwInstance>) {
        const double arrival = s.progress + s.inst->travel(s.cur, 0);
        if (arrival > s.inst->tw_hi[0]) {
            s.j_violation += arrival - s.inst->tw_hi[0];
            s.j_in += 1;
        }
    }
    s.cur = 0;
    return {s.length, s.j_violation, s.j_in, s.j_in == 0};
}

// Replays a complete tour through step/finalize.
template <class Inst>
TourMetrics tour_metrics(const Inst& inst, const Tour& tour) {
    if (static_cast<int>(tour.size()) != inst.size() || tour.empty() || tour[0] != 0)
        throw std::invalid_argument("tour_metrics: not a depot-rooted permutation");
    State<Inst> s = init_state(inst);
    for (std::size_t i = 1; i < tour.size(); ++i) step(s, tour[i]);
    return finalize(s);
}

// -(length + lambda * J_C + J_IN); for feasible tours this is -length
// regardless of lambda.
template <class Inst>
double lagrangian_reward(const Inst& inst, const Tour& tour, double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("lagrangian_reward: lambda must be nonnegative");
    const TourMetrics m = tour_metrics(inst, tour);
    return -(m.length + lambda * m.j_c + m.j_in);
}

template <class Inst>
double lagrangian_reward(const Inst& inst, const TourMetrics& m, double lambda) {
    if (lambda < 0.0) throw std::invalid_argument("lagrangian_reward: lambda must be nonnegative");
    return -(m.length + lambda * m.j_c + m.j_in);
}

}  // namespace piproute
