#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "piproute/rng.hpp"

namespace piproute {

enum class Hardness { Easy, Medium, Hard };

inline std::string to_string(Hardness h) {
    switch (h) {
        case Hardness::Easy: return "easy";
        case Hardness::Medium: return "medium";
        case Hardness::Hard: return "hard";
    }
    return "easy";
}

inline Hardness hardness_from_string(const std::string& s) {
    if (s == "easy") return Hardness::Easy;
    if (s == "medium") return Hardness::Medium;
    if (s == "hard") return Hardness::Hard;
    throw std::invalid_argument("unknown hardness: " + s);
}

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

inline double euclid(const Vec2& a, const Vec2& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return std::sqrt(dx * dx + dy * dy);
}

// Thrown when an operation is defined only for unit customer demands.
struct non_unit_demand_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Depot is node 0 throughout. `n` counts customers only.
//
// Travel time between nodes i and j is euclid(coords) * time_scale; the
// scale keeps arrival-time arithmetic consistent with window bounds that
// were normalized by the depot deadline while coordinates were normalized
// by a fixed factor.
struct TsptwInstance {
    int n = 0;
    std::vector<Vec2> coords;      // n+1 entries
    std::vector<double> tw_lo;     // window open, per node
    std::vector<double> tw_hi;     // window close, per node
    Hardness hardness = Hardness::Easy;
    std::uint64_t seed = 0;
    double time_scale = 1.0;

    int size() const { return n + 1; }
    double distance(int i, int j) const { return euclid(coords[i], coords[j]); }
    double travel(int i, int j) const { return distance(i, j) * time_scale; }
};

struct TspdlInstance {
    int n = 0;
    std::vector<Vec2> coords;   // n+1 entries
    std::vector<int> demand;    // delta_0 = 0, unit for customers
    std::vector<int> draft;     // d_i, d_0 = total demand
    Hardness hardness = Hardness::Medium;
    std::uint64_t seed = 0;

    int size() const { return n + 1; }
    double distance(int i, int j) const { return euclid(coords[i], coords[j]); }
    int total_demand() const { return std::accumulate(demand.begin(), demand.end(), 0); }
};

// Unnormalized TSPTW data as produced by the generators or a benchmark
// parser. Time unit equals the coordinate distance unit at this stage.
struct RawTsptw {
    std::vector<Vec2> coords;
    std::vector<double> tw_lo;
    std::vector<double> tw_hi;
};

// Monte-Carlo estimate of the expected closed random-tour length over n+1
// uniform points in the unit square. Deterministic given the seed.
inline double estimate_tn(int n, int samples, std::uint64_t seed) {
    if (samples < 1) throw std::invalid_argument("estimate_tn: samples must be >= 1");
    if (n <= 0) return 0.0;
    Rng rng(seed);
    double total = 0.0;
    std::vector<Vec2> pts(static_cast<std::size_t>(n) + 1);
    for (int s = 0; s < samples; ++s) {
        for (auto& p : pts) {
            p.x = rng.uniform();
            p.y = rng.uniform();
        }
        double len = 0.0;
        for (std::size_t i = 0; i + 1 < pts.size(); ++i) len += euclid(pts[i], pts[i + 1]);
        len += euclid(pts.back(), pts.front());
        total += len;
    }
    return total / samples;
}

namespace detail {
constexpr int kTnSamples = 100000;
constexpr std::uint64_t kTnSeed = 0x746e5f657374ULL;
}  // namespace detail

// Cached T_N used by the generators (fixed internal sample count and seed).
inline double cached_tn(int n) {
    static std::map<int, double> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    const double tn = estimate_tn(n, detail::kTnSamples, detail::kTnSeed);
    cache.emplace(n, tn);
    return tn;
}

// Rescales a raw instance so that every window bound lands in [0, 1]:
// the depot deadline becomes max_i(u_i + dist(i, depot)) and all bounds are
// divided by it, while coordinates are divided by coord_scale. The returned
// time_scale carries the ratio between those two divisors so feasibility is
// unchanged.
inline TsptwInstance normalize_tsptw(const RawTsptw& raw, double coord_scale = 100.0) {
    const std::size_t m = raw.coords.size();
    if (m < 2) throw std::invalid_argument("normalize_tsptw: instance needs at least one customer");
    if (raw.tw_lo.size() != m || raw.tw_hi.size() != m)
        throw std::invalid_argument("normalize_tsptw: window/coordinate size mismatch");

    double u0 = 0.0;
    for (std::size_t i = 1; i < m; ++i)
        u0 = std::max(u0, raw.tw_hi[i] + euclid(raw.coords[i], raw.coords[0]));
    if (!(u0 > 0.0)) throw std::invalid_argument("normalize_tsptw: degenerate depot deadline");

    TsptwInstance inst;
    inst.n = static_cast<int>(m) - 1;
    inst.coords.resize(m);
    inst.tw_lo.resize(m);
    inst.tw_hi.resize(m);
    for (std::size_t i = 0; i < m; ++i) {
        inst.coords[i] = {raw.coords[i].x / coord_scale, raw.coords[i].y / coord_scale};
        inst.tw_lo[i] = raw.tw_lo[i] / u0;
        inst.tw_hi[i] = raw.tw_hi[i] / u0;
    }
    // synthetic raws carry an unbounded depot deadline, which lands on
    // exactly 1; a tighter deadline from a benchmark file stays binding
    inst.tw_lo[0] = raw.tw_lo[0] / u0;
    inst.tw_hi[0] = std::min(raw.tw_hi[0] / u0, 1.0);
    inst.time_scale = coord_scale / u0;
    return inst;
}

namespace detail {

struct TsptwParams {
    double alpha;
    double beta;
};

inline TsptwParams tsptw_window_params(Hardness h) {
    switch (h) {
        case Hardness::Easy: return {0.5, 0.75};
        case Hardness::Medium: return {0.1, 0.2};
        default: throw std::invalid_argument("window params undefined for hard instances");
    }
}

constexpr double kHardEta = 50.0;
constexpr double kHardCoordScale = 100.0;

}  // namespace detail

// Unnormalized generator output. Easy/Medium draw coordinates in the unit
// square with windows around U[0, T_N]; Hard draws coordinates in [0, 100]^2
// and windows of width eta around the cumulative distance of a random
// customer permutation (depot fixed first).
inline RawTsptw gen_tsptw_raw(int n, Hardness hardness, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("gen_tsptw: n must be >= 1");
    Rng rng = Rng::derive(seed, static_cast<std::uint64_t>(0x7477), static_cast<std::uint64_t>(hardness), n);
    RawTsptw raw;
    const std::size_t m = static_cast<std::size_t>(n) + 1;
    raw.coords.resize(m);
    raw.tw_lo.assign(m, 0.0);
    raw.tw_hi.assign(m, std::numeric_limits<double>::infinity());

    if (hardness == Hardness::Hard) {
        for (auto& p : raw.coords) {
            p.x = rng.uniform(0.0, detail::kHardCoordScale);
            p.y = rng.uniform(0.0, detail::kHardCoordScale);
        }
        std::vector<int> perm(static_cast<std::size_t>(n));
        std::iota(perm.begin(), perm.end(), 1);
        rng.shuffle(perm);
        double psi = 0.0;
        int prev = 0;
        for (int node : perm) {
            psi += euclid(raw.coords[prev], raw.coords[node]);
            raw.tw_lo[node] = std::max(0.0, rng.uniform(psi - detail::kHardEta, psi));
            raw.tw_hi[node] = rng.uniform(psi, psi + detail::kHardEta);
            prev = node;
        }
    } else {
        const auto [alpha, beta] = detail::tsptw_window_params(hardness);
        const double tn = cached_tn(n);
        for (auto& p : raw.coords) {
            p.x = rng.uniform();
            p.y = rng.uniform();
        }
        for (std::size_t i = 1; i < m; ++i) {
            raw.tw_lo[i] = rng.uniform(0.0, tn);
            raw.tw_hi[i] = raw.tw_lo[i] + tn * rng.uniform(alpha, beta);
        }
    }
    return raw;
}

inline TsptwInstance gen_tsptw(int n, Hardness hardness, std::uint64_t seed) {
    const RawTsptw raw = gen_tsptw_raw(n, hardness, seed);
    const double coord_scale = hardness == Hardness::Hard ? detail::kHardCoordScale : 1.0;
    TsptwInstance inst = normalize_tsptw(raw, coord_scale);
    inst.hardness = hardness;
    inst.seed = seed;
    return inst;
}

// Pigeonhole (Hall) feasibility for unit-demand draft limits: for every k,
// at most k customers may have d_i <= k. Exact for unit demands only.
inline bool tspdl_draft_feasible(const std::vector<int>& draft, const std::vector<int>& demand) {
    if (draft.size() != demand.size() || draft.empty())
        throw std::invalid_argument("tspdl_draft_feasible: size mismatch");
    if (demand[0] != 0) throw non_unit_demand_error("tspdl_draft_feasible: depot demand must be 0");
    for (std::size_t i = 1; i < demand.size(); ++i)
        if (demand[i] != 1) throw non_unit_demand_error("tspdl_draft_feasible: non-unit customer demand");

    std::vector<int> sorted(draft.begin() + 1, draft.end());
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t r = 0; r < sorted.size(); ++r)
        if (sorted[r] < static_cast<int>(r) + 1) return false;
    return true;
}

namespace detail {
inline int tspdl_mutation_pct(Hardness h) {
    switch (h) {
        case Hardness::Medium: return 75;
        case Hardness::Hard: return 90;
        default: throw std::invalid_argument("tspdl hardness must be medium or hard");
    }
}
}  // namespace detail

// Unit customer demands; floor(n * sigma / 100) customers get a draft drawn
// uniformly from [1, total-1], the rest keep the total demand. The whole
// mutation set is redrawn until the pigeonhole condition holds.
inline TspdlInstance gen_tspdl(int n, Hardness hardness, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("gen_tspdl: n must be >= 1");
    const int sigma = detail::tspdl_mutation_pct(hardness);
    Rng rng = Rng::derive(seed, static_cast<std::uint64_t>(0x646c), static_cast<std::uint64_t>(hardness), n);

    TspdlInstance inst;
    inst.n = n;
    inst.hardness = hardness;
    inst.seed = seed;
    const std::size_t m = static_cast<std::size_t>(n) + 1;
    inst.coords.resize(m);
    for (auto& p : inst.coords) {
        p.x = rng.uniform();
        p.y = rng.uniform();
    }
    inst.demand.assign(m, 1);
    inst.demand[0] = 0;
    const int total = n;

    const int mutated = n * sigma / 100;
    std::vector<int> customers(static_cast<std::size_t>(n));
    std::iota(customers.begin(), customers.end(), 1);
    do {
        inst.draft.assign(m, total);
        rng.shuffle(customers);
        for (int i = 0; i < mutated; ++i)
            inst.draft[static_cast<std::size_t>(customers[static_cast<std::size_t>(i)])] =
                total > 1 ? static_cast<int>(rng.uniform_int(1, total - 1)) : 1;
    } while (!tspdl_draft_feasible(inst.draft, inst.demand));
    return inst;
}

}  // namespace piproute
