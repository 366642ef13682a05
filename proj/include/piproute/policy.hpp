#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "piproute/env.hpp"
#include "piproute/masking.hpp"
#include "piproute/rng.hpp"

namespace piproute {

inline constexpr int kFeatureDim = 7;
using FeatureVec = std::array<double, kFeatureDim>;

// Linear-softmax routing policy over hand-built constraint features; stands
// in for a learned decoder while keeping log-probability gradients exact.
struct PolicyParams {
    FeatureVec w{};
    double temperature = 1.0;
};

// [dist; window slack; wait; urgency; fraction remaining; locally-feasible
// flag; bias]
inline FeatureVec features(const State<TsptwInstance>& s, int cand) {
    const TsptwInstance& inst = *s.inst;
    const double d = inst.travel(s.cur, cand);
    const double arrival = s.progress + d;
    const double lo = inst.tw_lo[static_cast<std::size_t>(cand)];
    const double hi = inst.tw_hi[static_cast<std::size_t>(cand)];
    return {inst.distance(s.cur, cand),
            hi - arrival,
            std::max(lo - arrival, 0.0),
            hi - s.progress,
            static_cast<double>(s.remaining()) / inst.n,
            arrival <= hi ? 1.0 : 0.0,
            1.0};
}

// [dist; draft slack; draft; demand; fraction remaining; locally-feasible
// flag; bias]
inline FeatureVec features(const State<TspdlInstance>& s, int cand) {
    const TspdlInstance& inst = *s.inst;
    const double delta = inst.demand[static_cast<std::size_t>(cand)];
    const double draft = inst.draft[static_cast<std::size_t>(cand)];
    const double load = s.progress + delta;
    return {inst.distance(s.cur, cand),
            draft - load,
            draft,
            delta,
            static_cast<double>(s.remaining()) / inst.n,
            load <= draft ? 1.0 : 0.0,
            1.0};
}

inline double dot(const FeatureVec& a, const FeatureVec& b) {
    double r = 0.0;
    for (int i = 0; i < kFeatureDim; ++i) r += a[i] * b[i];
    return r;
}

struct StepSample {
    int node = -1;
    double logprob = 0.0;
    FeatureVec score{};  // d log pi / d w at the chosen node
};

namespace detail {

struct SoftmaxScratch {
    std::vector<int> nodes;
    std::vector<FeatureVec> phi;
    std::vector<double> logits;
    std::vector<double> probs;
};

template <class Inst>
void fill_softmax(const PolicyParams& params, const State<Inst>& s, const Mask& mask,
                  SoftmaxScratch& sc) {
    sc.nodes.clear();
    sc.phi.clear();
    sc.logits.clear();
    for (int c = 1; c < s.inst->size(); ++c) {
        if (!mask.selectable[static_cast<std::size_t>(c)]) continue;
        sc.nodes.push_back(c);
        sc.phi.push_back(features(s, c));
        sc.logits.push_back(dot(params.w, sc.phi.back()) / params.temperature);
    }
    if (sc.nodes.empty()) throw std::invalid_argument("policy_step: empty mask");
    const double zmax = *std::max_element(sc.logits.begin(), sc.logits.end());
    sc.probs.assign(sc.logits.size(), 0.0);
    double norm = 0.0;
    for (std::size_t i = 0; i < sc.logits.size(); ++i) {
        sc.probs[i] = std::exp(sc.logits[i] - zmax);
        norm += sc.probs[i];
    }
    for (auto& p : sc.probs) p /= norm;
}

template <class Inst>
StepSample sample_from(const PolicyParams& params, const State<Inst>& s, const SoftmaxScratch& sc,
                       std::size_t pick) {
    StepSample out;
    out.node = sc.nodes[pick];
    out.logprob = std::log(sc.probs[pick]);
    FeatureVec mean{};
    for (std::size_t i = 0; i < sc.nodes.size(); ++i)
        for (int d = 0; d < kFeatureDim; ++d) mean[d] += sc.probs[i] * sc.phi[i][d];
    for (int d = 0; d < kFeatureDim; ++d)
        out.score[d] = (sc.phi[pick][d] - mean[d]) / params.temperature;
    (void)s;
    return out;
}

}  // namespace detail

// Samples a node from the masked softmax; the score vector is the exact
// gradient of the chosen log-probability w.r.t. the weights.
template <class Inst>
StepSample policy_step(const PolicyParams& params, const State<Inst>& s, const Mask& mask, Rng& rng) {
    detail::SoftmaxScratch sc;
    detail::fill_softmax(params, s, mask, sc);
    const double u = rng.uniform();
    double acc = 0.0;
    std::size_t pick = sc.probs.size() - 1;
    for (std::size_t i = 0; i < sc.probs.size(); ++i) {
        acc += sc.probs[i];
        if (u < acc) {
            pick = i;
            break;
        }
    }
    return detail::sample_from(params, s, sc, pick);
}

// Highest-logit node; ties resolve to the lowest index.
template <class Inst>
StepSample policy_argmax(const PolicyParams& params, const State<Inst>& s, const Mask& mask) {
    detail::SoftmaxScratch sc;
    detail::fill_softmax(params, s, mask, sc);
    std::size_t pick = 0;
    for (std::size_t i = 1; i < sc.logits.size(); ++i)
        if (sc.logits[i] > sc.logits[pick]) pick = i;
    return detail::sample_from(params, s, sc, pick);
}

enum class MaskMode { PI0, PI1, PI2, Exact, Predicted };

inline const char* to_string(MaskMode m) {
    switch (m) {
        case MaskMode::PI0: return "pi0";
        case MaskMode::PI1: return "pi1";
        case MaskMode::PI2: return "pi2";
        case MaskMode::Exact: return "exact";
        case MaskMode::Predicted: return "predicted";
    }
    return "pi0";
}

inline MaskMode mask_mode_from_string(const std::string& s) {
    if (s == "pi0") return MaskMode::PI0;
    if (s == "pi1") return MaskMode::PI1;
    if (s == "pi2") return MaskMode::PI2;
    if (s == "exact") return MaskMode::Exact;
    if (s == "predicted") return MaskMode::Predicted;
    throw std::invalid_argument("unknown mask mode: " + s);
}

// PI-mask ground-truth label for one candidate at one decoding step:
// locally feasible but doomed one step ahead.
struct LabelSample {
    FeatureVec phi{};
    std::uint8_t g = 0;
};

struct RolloutTrace {
    Tour tour;
    std::vector<double> logprobs;                 // one per constructed step
    std::vector<FeatureVec> scores;               // one per constructed step
    std::vector<std::vector<LabelSample>> labels; // per step, when collected
    int fallback_steps = 0;
    double length = 0.0;
    double j_violation = 0.0;
    int j_in = 0;
    bool feasible = false;
};

struct PredictorParams;  // defined in predictor.hpp

namespace detail {
template <class Inst>
Mask predicted_mask(const PredictorParams& pred, const State<Inst>& s);
}

struct RolloutOptions {
    MaskMode mode = MaskMode::PI0;
    const PredictorParams* predictor = nullptr;  // required for Predicted
    bool argmax = false;
    bool collect_labels = false;
    int early_stop_steps = -1;  // PI mask only for the first s steps; -1 = always
};

namespace detail {

// Local mask plus one-step doom flags in a single pass.
template <class Inst>
Mask pi1_mask_with_labels(const State<Inst>& s, std::vector<LabelSample>* labels) {
    Mask m = local_mask(s);
    m.level = MaskLevel::PI1;
    const std::vector<int> rest = unvisited_nodes(s);
    for (int cand : rest) {
        if (!m.selectable[static_cast<std::size_t>(cand)]) continue;
        const bool doomed = pi_doomed(s, rest, cand, 1);
        if (labels) labels->push_back({features(s, cand), doomed ? std::uint8_t{1} : std::uint8_t{0}});
        if (doomed) m.selectable[static_cast<std::size_t>(cand)] = 0;
    }
    return m;
}

template <class Inst>
Mask mask_for_step(const State<Inst>& s, const RolloutOptions& opt, int step_index,
                   std::vector<LabelSample>* labels) {
    const bool lookahead_active = opt.early_stop_steps < 0 || step_index < opt.early_stop_steps;
    if (opt.collect_labels && labels &&
        !(lookahead_active && opt.mode == MaskMode::PI1)) {
        // labels are always ground truth, even when another mask drives the
        // rollout
        std::vector<int> rest = unvisited_nodes(s);
        for (int cand : rest)
            if (locally_feasible(s, cand))
                labels->push_back({features(s, cand),
                                   pi_doomed(s, rest, cand, 1) ? std::uint8_t{1} : std::uint8_t{0}});
    }
    if (!lookahead_active) return local_mask(s);
    switch (opt.mode) {
        case MaskMode::PI0: return local_mask(s);
        case MaskMode::PI1:
            return pi1_mask_with_labels(s, opt.collect_labels ? labels : nullptr);
        case MaskMode::PI2: return pi_mask(s, 2);
        case MaskMode::Exact: return exact_mask(s);
        case MaskMode::Predicted:
            if (!opt.predictor) throw std::invalid_argument("rollout: predictor required");
            return predicted_mask(*opt.predictor, s);
    }
    return local_mask(s);
}

}  // namespace detail

// Constructs a complete tour under the requested mask. An empty mask falls
// back to the local mask for that step, then to all unvisited nodes, so
// construction always finishes (soft semantics).
template <class Inst>
RolloutTrace rollout(const PolicyParams& params, const Inst& inst, const RolloutOptions& opt, Rng& rng) {
    State<Inst> s = init_state(inst);
    RolloutTrace trace;
    trace.logprobs.reserve(static_cast<std::size_t>(inst.n));
    trace.scores.reserve(static_cast<std::size_t>(inst.n));
    if (opt.collect_labels) trace.labels.resize(static_cast<std::size_t>(inst.n));

    for (int t = 0; t < inst.n; ++t) {
        std::vector<LabelSample>* labels =
            opt.collect_labels ? &trace.labels[static_cast<std::size_t>(t)] : nullptr;
        Mask mask = detail::mask_for_step(s, opt, t, labels);
        if (mask.empty()) {
            trace.fallback_steps += 1;
            mask = local_mask(s);
            if (mask.empty()) {
                for (int c = 1; c < inst.size(); ++c)
                    if (!s.visited[static_cast<std::size_t>(c)])
                        mask.selectable[static_cast<std::size_t>(c)] = 1;
            }
        }
        const StepSample pick =
            opt.argmax ? policy_argmax(params, s, mask) : policy_step(params, s, mask, rng);
        trace.logprobs.push_back(pick.logprob);
        trace.scores.push_back(pick.score);
        step(s, pick.node);
    }
    const TourMetrics m = finalize(s);
    trace.tour = s.tour;
    trace.length = m.length;
    trace.j_violation = m.j_c;
    trace.j_in = m.j_in;
    trace.feasible = m.feasible;
    return trace;
}

// Recomputes log-probabilities and scores along a forced tour; masks are a
// deterministic function of the state, so this reproduces the rollout that
// produced the tour without consuming randomness.
template <class Inst>
RolloutTrace replay_trace(const PolicyParams& params, const Inst& inst, const Tour& tour,
                          const RolloutOptions& opt) {
    State<Inst> s = init_state(inst);
    RolloutTrace trace;
    if (opt.collect_labels) trace.labels.resize(static_cast<std::size_t>(inst.n));
    for (int t = 0; t < inst.n; ++t) {
        std::vector<LabelSample>* labels =
            opt.collect_labels ? &trace.labels[static_cast<std::size_t>(t)] : nullptr;
        Mask mask = detail::mask_for_step(s, opt, t, labels);
        if (mask.empty()) {
            trace.fallback_steps += 1;
            mask = local_mask(s);
            if (mask.empty()) {
                for (int c = 1; c < inst.size(); ++c)
                    if (!s.visited[static_cast<std::size_t>(c)])
                        mask.selectable[static_cast<std::size_t>(c)] = 1;
            }
        }
        const int forced = tour[static_cast<std::size_t>(t) + 1];
        detail::SoftmaxScratch sc;
        detail::fill_softmax(params, s, mask, sc);
        const auto it = std::find(sc.nodes.begin(), sc.nodes.end(), forced);
        if (it == sc.nodes.end()) throw std::invalid_argument("replay_trace: tour leaves the mask");
        const StepSample pick =
            detail::sample_from(params, s, sc, static_cast<std::size_t>(it - sc.nodes.begin()));
        trace.logprobs.push_back(pick.logprob);
        trace.scores.push_back(pick.score);
        step(s, forced);
    }
    const TourMetrics m = finalize(s);
    trace.tour = s.tour;
    trace.length = m.length;
    trace.j_violation = m.j_c;
    trace.j_in = m.j_in;
    trace.feasible = m.feasible;
    return trace;
}

// Nearest unvisited node each step, blind to constraints; ties go to the
// lowest index.
template <class Inst>
Tour greedy_l(const Inst& inst) {
    State<Inst> s = init_state(inst);
    for (int t = 0; t < inst.n; ++t) {
        int best = -1;
        double best_d = 0.0;
        for (int c = 1; c < inst.size(); ++c) {
            if (s.visited[static_cast<std::size_t>(c)]) continue;
            const double d = inst.distance(s.cur, c);
            if (best < 0 || d < best_d) {
                best = c;
                best_d = d;
            }
        }
        step(s, best);
    }
    finalize(s);
    return s.tour;
}

namespace detail {
inline double constraint_key(const State<TsptwInstance>& s, int c) {
    return s.inst->tw_hi[static_cast<std::size_t>(c)];
}
inline double constraint_key(const State<TspdlInstance>& s, int c) {
    return s.inst->draft[static_cast<std::size_t>(c)];
}
}  // namespace detail

// Constraint-greedy baseline: soonest-closing window (TSPTW) or minimal
// draft (TSPDL); ties go to the lowest index. Index ties keep draft-tied
// TSPDL tours order-agnostic, which is what the published mean lengths
// reflect.
template <class Inst>
Tour greedy_c(const Inst& inst) {
    State<Inst> s = init_state(inst);
    for (int t = 0; t < inst.n; ++t) {
        int best = -1;
        double best_key = 0.0;
        for (int c = 1; c < inst.size(); ++c) {
            if (s.visited[static_cast<std::size_t>(c)]) continue;
            const double key = detail::constraint_key(s, c);
            if (best < 0 || key < best_key) {
                best = c;
                best_key = key;
            }
        }
        step(s, best);
    }
    finalize(s);
    return s.tour;
}

}  // namespace piproute
