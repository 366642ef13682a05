#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "piproute/env.hpp"
#include "piproute/masking.hpp"
#include "piproute/policy.hpp"
#include "piproute/rng.hpp"

namespace piproute {

struct AuditResult {
    long long states_checked = 0;
    long long nesting_violations = 0;
    long long soundness_violations = 0;
    long long masked_pi1 = 0;   // candidates removed by the one-step test
    long long masked_pi2 = 0;   // removed only by the pair test
    bool ok() const { return nesting_violations == 0 && soundness_violations == 0; }
};

struct AuditOptions {
    std::vector<int> steps = {0, 1, 2};
    long long samples = 10000;
    std::uint64_t seed = 1;
    std::ostream* dump = nullptr;  // per-step mask lines when set
};

namespace detail {

inline void dump_mask(std::ostream& out, int step_index, const Mask& m) {
    out << "step " << step_index << ": level=" << to_string(m.level) << " selectable=";
    for (auto b : m.selectable) out << (b ? '1' : '0');
    out << "\n";
}

}  // namespace detail

// Walks random rollouts and, at every visited state, checks the mask
// hierarchy against the exact oracle: PI masks must never exclude a
// candidate that still has a feasible completion, and selectable sets must
// nest as local >= PI1 >= PI2 >= exact.
template <class Inst>
AuditResult audit_masks(const std::vector<Inst>& instances, const AuditOptions& opt) {
    AuditResult res;
    if (instances.empty()) return res;
    PolicyParams uniform;  // zero weights: uniform over the mask
    bool want1 = false;
    bool want2 = false;
    for (int s : opt.steps) {
        if (s == 1) want1 = true;
        if (s == 2) want2 = true;
    }

    std::size_t inst_idx = 0;
    long long rollout_id = 0;
    while (res.states_checked < opt.samples) {
        const Inst& inst = instances[inst_idx];
        inst_idx = (inst_idx + 1) % instances.size();
        Rng rng = Rng::derive(opt.seed, static_cast<std::uint64_t>(0x617564), rollout_id++);

        State<Inst> s = init_state(inst);
        for (int t = 0; t < inst.n && res.states_checked < opt.samples; ++t) {
            const Mask local = local_mask(s);
            const Mask m1 = want1 || want2 ? pi_mask(s, 1) : local;
            const Mask m2 = want2 ? pi_mask(s, 2) : m1;
            const Mask exact = exact_mask(s);
            res.states_checked += 1;

            if (opt.dump) {
                detail::dump_mask(*opt.dump, t, local);
                if (want1 || want2) detail::dump_mask(*opt.dump, t, m1);
                if (want2) detail::dump_mask(*opt.dump, t, m2);
                detail::dump_mask(*opt.dump, t, exact);
            }

            if (!m1.is_subset_of(local) || !m2.is_subset_of(m1) || !exact.is_subset_of(m2))
                res.nesting_violations += 1;
            for (std::size_t c = 0; c < exact.selectable.size(); ++c) {
                const bool has_completion = exact.selectable[c] != 0;
                if (want1 && local.selectable[c] && !m1.selectable[c]) {
                    res.masked_pi1 += 1;
                    if (has_completion) res.soundness_violations += 1;
                }
                if (want2 && m1.selectable[c] && !m2.selectable[c]) {
                    res.masked_pi2 += 1;
                    if (has_completion) res.soundness_violations += 1;
                }
            }

            // advance along a uniform-random construction
            Mask move = local;
            if (move.empty()) {
                move.selectable.assign(s.visited.size(), 0);
                for (int c = 1; c < inst.size(); ++c)
                    if (!s.visited[static_cast<std::size_t>(c)])
                        move.selectable[static_cast<std::size_t>(c)] = 1;
            }
            const StepSample pick = policy_step(uniform, s, move, rng);
            step(s, pick.node);
        }
    }
    return res;
}

}  // namespace piproute
