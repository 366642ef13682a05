#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "piproute/masking.hpp"
#include "piproute/policy.hpp"

namespace piproute {

// Logistic PI-mask predictor on the policy feature map. The threshold is
// compared strictly (mask iff p > threshold) so an untrained zero predictor
// masks nothing: failing open can never empty a mask.
struct PredictorParams {
    FeatureVec v{};
    double threshold = 0.5;

    double logit_threshold() const {
        if (!(threshold > 0.0 && threshold < 1.0))
            throw std::invalid_argument("predictor threshold must lie in (0, 1)");
        return std::log(threshold / (1.0 - threshold));
    }
};

// Balancing weights for the two label classes: each class weight is half the
// total count over its own count, so weight * count matches across classes.
// A class with zero samples gets weight 0 and the other weight 1.
inline std::pair<double, double> class_weights(long long n_infsb, long long n_fsb) {
    if (n_infsb < 0 || n_fsb < 0) throw std::invalid_argument("class_weights: negative count");
    if (n_infsb + n_fsb < 1) throw std::invalid_argument("class_weights: both counts zero");
    if (n_infsb == 0) return {0.0, 1.0};
    if (n_fsb == 0) return {1.0, 0.0};
    const double half_total = static_cast<double>(n_infsb + n_fsb) / 2.0;

    // Each weight is half the total over its own count, adjusted within a
    // few ulps so both products round to one common double; this keeps the
    // balancing identity weight * count exact in double arithmetic.
    const auto ladder = [half_total](long long count) {
        const double c = static_cast<double>(count);
        std::array<std::pair<double, double>, 49> out;  // (product, weight)
        double w = half_total / c;
        for (int i = 0; i < 24; ++i) w = std::nextafter(w, 0.0);
        for (auto& entry : out) {
            entry = {w * c, w};
            w = std::nextafter(w, std::numeric_limits<double>::infinity());
        }
        return out;
    };
    const auto pa = ladder(n_infsb);
    const auto pb = ladder(n_fsb);
    double best_err = std::numeric_limits<double>::infinity();
    double wi = half_total / static_cast<double>(n_infsb);
    double wf = half_total / static_cast<double>(n_fsb);
    for (const auto& [prod_a, wa] : pa) {
        for (const auto& [prod_b, wb] : pb) {
            if (prod_a != prod_b) continue;
            const double err = std::fabs(prod_a - half_total);
            if (err < best_err) {
                best_err = err;
                wi = wa;
                wf = wb;
            }
        }
    }
    return {wi, wf};
}

// Weighted binary cross entropy over ground-truth PI labels, averaged over
// candidates within each decoding step and then over steps.
inline double wbce_loss(const FeatureVec& v, const std::vector<std::vector<LabelSample>>& steps,
                        std::pair<double, double> weights) {
    const auto [w_infsb, w_fsb] = weights;
    double total = 0.0;
    int counted_steps = 0;
    for (const auto& samples : steps) {
        if (samples.empty()) continue;
        double step_loss = 0.0;
        for (const auto& smp : samples) {
            const double z = dot(v, smp.phi);
            const auto softplus = [](double x) {
                return std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x)));
            };
            // log(sigmoid(z)) = -softplus(-z), log(1 - sigmoid(z)) = -softplus(z)
            step_loss += smp.g ? w_infsb * softplus(-z) : w_fsb * softplus(z);
        }
        total += step_loss / static_cast<double>(samples.size());
        counted_steps += 1;
    }
    return counted_steps == 0 ? 0.0 : total / counted_steps;
}

inline FeatureVec wbce_grad(const FeatureVec& v, const std::vector<std::vector<LabelSample>>& steps,
                            std::pair<double, double> weights) {
    const auto [w_infsb, w_fsb] = weights;
    FeatureVec grad{};
    int counted_steps = 0;
    for (const auto& samples : steps) {
        if (samples.empty()) continue;
        FeatureVec step_grad{};
        for (const auto& smp : samples) {
            const double z = dot(v, smp.phi);
            const double p = 1.0 / (1.0 + std::exp(-z));
            // d/dz of the weighted loss term
            const double coeff = smp.g ? -w_infsb * (1.0 - p) : w_fsb * p;
            for (int d = 0; d < kFeatureDim; ++d) step_grad[d] += coeff * smp.phi[d];
        }
        for (int d = 0; d < kFeatureDim; ++d)
            grad[d] += step_grad[d] / static_cast<double>(samples.size());
        counted_steps += 1;
    }
    if (counted_steps > 0)
        for (int d = 0; d < kFeatureDim; ++d) grad[d] /= counted_steps;
    return grad;
}

// Masked iff locally infeasible or the predictor flags the candidate
// (strictly above threshold). Empty masks are the caller's fallback.
template <class Inst>
Mask predictor_mask(const PredictorParams& pred, const State<Inst>& s) {
    Mask m = local_mask(s);
    m.level = MaskLevel::Predicted;
    const double z_cut = pred.logit_threshold();
    for (int c = 1; c < s.inst->size(); ++c) {
        if (!m.selectable[static_cast<std::size_t>(c)]) continue;
        if (dot(pred.v, features(s, c)) > z_cut) m.selectable[static_cast<std::size_t>(c)] = 0;
    }
    return m;
}

namespace detail {
template <class Inst>
Mask predicted_mask(const PredictorParams& pred, const State<Inst>& s) {
    return predictor_mask(pred, s);
}
}  // namespace detail

struct PredictorRecall {
    double feasible = 0.0;    // fraction of g=0 samples predicted selectable
    double infeasible = 0.0;  // fraction of g=1 samples predicted masked
    long long n_fsb = 0;
    long long n_infsb = 0;
};

inline PredictorRecall predictor_recall(const PredictorParams& pred,
                                        const std::vector<std::vector<LabelSample>>& steps) {
    const double z_cut = pred.logit_threshold();
    PredictorRecall r;
    long long fsb_hit = 0;
    long long infsb_hit = 0;
    for (const auto& samples : steps) {
        for (const auto& smp : samples) {
            const bool flagged = dot(pred.v, smp.phi) > z_cut;
            if (smp.g) {
                r.n_infsb += 1;
                infsb_hit += flagged ? 1 : 0;
            } else {
                r.n_fsb += 1;
                fsb_hit += flagged ? 0 : 1;
            }
        }
    }
    r.feasible = r.n_fsb > 0 ? static_cast<double>(fsb_hit) / r.n_fsb : 1.0;
    r.infeasible = r.n_infsb > 0 ? static_cast<double>(infsb_hit) / r.n_infsb : 1.0;
    return r;
}

}  // namespace piproute
