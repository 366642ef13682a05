#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "piproute/env.hpp"
#include "piproute/masking.hpp"
#include "piproute/policy.hpp"

namespace piproute {

struct TourRecord {
    Tour tour;
    double length = 0.0;
    bool feasible = false;
};

// All solutions produced for one dataset by one method, instance-major.
struct SolutionSet {
    std::string method;
    int ns = 1;
    std::vector<std::vector<TourRecord>> per_instance;
};

struct EvalReport {
    std::string method;
    std::string dataset;
    int n = 0;
    std::string hardness;
    int ns = 1;
    double sol_infsb = 0.0;
    double inst_infsb = 0.0;
    std::optional<double> mean_obj;
    std::optional<double> mean_gap;
    double wall_s = 0.0;
};

// Produces N_s solutions per instance from a per-sample solver callback.
// Deterministic methods are run once per instance regardless of N_s.
template <class Inst>
SolutionSet run_method(const std::string& name, const std::vector<Inst>& instances, int ns,
                       bool deterministic,
                       const std::function<Tour(const Inst&, int inst_idx, int sample_idx)>& solve) {
    if (ns < 1) throw std::invalid_argument("run_method: N_s must be >= 1");
    SolutionSet set;
    set.method = name;
    set.ns = deterministic ? 1 : ns;
    set.per_instance.resize(instances.size());
    for (std::size_t i = 0; i < instances.size(); ++i) {
        set.per_instance[i].reserve(static_cast<std::size_t>(set.ns));
        for (int s = 0; s < set.ns; ++s) {
            Tour tour = solve(instances[i], static_cast<int>(i), s);
            const TourMetrics m = tour_metrics(instances[i], tour);
            set.per_instance[i].push_back({std::move(tour), m.length, m.feasible});
        }
    }
    return set;
}

// Best feasible length per instance; nullopt when no sample is feasible.
inline std::vector<std::optional<double>> best_feasible(const SolutionSet& set) {
    std::vector<std::optional<double>> best(set.per_instance.size());
    for (std::size_t i = 0; i < set.per_instance.size(); ++i)
        for (const TourRecord& rec : set.per_instance[i])
            if (rec.feasible && (!best[i] || rec.length < *best[i])) best[i] = rec.length;
    return best;
}

// Aggregates the four metrics. Gap averaging is per instance: mean over
// instances of (obj - ref) / ref, restricted to instances that have both a
// feasible best and a reference. `include` (when given) further restricts
// obj/gap aggregation, e.g. to the overlap of feasible instances.
inline EvalReport aggregate(const SolutionSet& set, const std::string& dataset, int n,
                            const std::string& hardness,
                            const std::vector<std::optional<double>>* refs = nullptr,
                            const std::vector<bool>* include = nullptr) {
    EvalReport rep;
    rep.method = set.method;
    rep.dataset = dataset;
    rep.n = n;
    rep.hardness = hardness;
    rep.ns = set.ns;

    long long solutions = 0;
    long long infeasible_solutions = 0;
    long long infeasible_instances = 0;
    const auto best = best_feasible(set);
    double obj_sum = 0.0;
    long long obj_count = 0;
    double gap_sum = 0.0;
    long long gap_count = 0;

    for (std::size_t i = 0; i < set.per_instance.size(); ++i) {
        for (const TourRecord& rec : set.per_instance[i]) {
            solutions += 1;
            infeasible_solutions += rec.feasible ? 0 : 1;
        }
        if (!best[i]) {
            infeasible_instances += 1;
            continue;
        }
        if (include && !(*include)[i]) continue;
        obj_sum += *best[i];
        obj_count += 1;
        if (refs) {
            const auto& ref = (*refs)[i];
            if (ref && *ref > 0.0) {
                gap_sum += (*best[i] - *ref) / *ref;
                gap_count += 1;
            }
        }
    }

    rep.sol_infsb = solutions > 0 ? static_cast<double>(infeasible_solutions) / solutions : 0.0;
    rep.inst_infsb = set.per_instance.empty()
                         ? 0.0
                         : static_cast<double>(infeasible_instances) /
                               static_cast<double>(set.per_instance.size());
    if (obj_count > 0) rep.mean_obj = obj_sum / static_cast<double>(obj_count);
    if (gap_count > 0) rep.mean_gap = gap_sum / static_cast<double>(gap_count);
    return rep;
}

enum class RefMode { ExactSmall, BestAcrossMethods, File };

// Per-instance reference lengths for gap computation.
template <class Inst>
std::vector<std::optional<double>> gap_reference_exact_small(const std::vector<Inst>& instances) {
    std::vector<std::optional<double>> refs(instances.size());
    for (std::size_t i = 0; i < instances.size(); ++i) {
        if (instances[i].n > kExactSolveLimit)
            throw std::invalid_argument("gap_reference: exact-small requires n <= 12");
        if (const auto sol = exact_solve_small(instances[i])) refs[i] = sol->length;
    }
    return refs;
}

inline std::vector<std::optional<double>> gap_reference_best(
    const std::vector<SolutionSet>& sets) {
    if (sets.empty()) throw std::invalid_argument("gap_reference: no methods");
    std::vector<std::optional<double>> refs(sets[0].per_instance.size());
    for (const SolutionSet& set : sets) {
        const auto best = best_feasible(set);
        for (std::size_t i = 0; i < refs.size(); ++i)
            if (best[i] && (!refs[i] || *best[i] < *refs[i])) refs[i] = best[i];
    }
    return refs;
}

// Instances for which every method found at least one feasible solution.
inline std::vector<bool> overlap_feasible(const std::vector<SolutionSet>& sets) {
    if (sets.empty()) return {};
    std::vector<bool> keep(sets[0].per_instance.size(), true);
    for (const SolutionSet& set : sets) {
        const auto best = best_feasible(set);
        for (std::size_t i = 0; i < keep.size(); ++i)
            if (!best[i]) keep[i] = false;
    }
    return keep;
}

struct Stopwatch {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

}  // namespace piproute
