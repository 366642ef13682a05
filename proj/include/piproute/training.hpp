#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "piproute/env.hpp"
#include "piproute/instance.hpp"
#include "piproute/policy.hpp"
#include "piproute/predictor.hpp"
#include "piproute/rng.hpp"

namespace piproute {

// Periodic predictor-update schedule: train for the first e_init epochs,
// then e_u epochs at the start of every e_p-epoch window, then every one of
// the final e_l epochs.
struct UpdateSchedule {
    int e_init = 0;
    int e_p = 1;
    int e_u = 0;
    int e_l = 0;
};

inline bool is_update_epoch(const UpdateSchedule& s, int total_epochs, int epoch) {
    if (epoch < 0 || epoch >= total_epochs) throw std::invalid_argument("epoch out of range");
    if (epoch < s.e_init) return true;
    if (epoch >= total_epochs - s.e_l) return true;
    return (epoch - s.e_init) % s.e_p < s.e_u;
}

struct TrainConfig {
    std::string variant = "tsptw";
    int n = 20;
    Hardness hardness = Hardness::Medium;

    double lambda = 1.0;
    int k_samples = 8;  // rollouts per instance for the shared baseline
    double lr_policy = 0.05;
    double lr_predictor = 1.0;
    int batch = 32;
    int batches_per_epoch = 25;
    int epochs = 40;
    UpdateSchedule schedule{8, 8, 2, 4};
    double alpha_mix = 1.0;
    double beta_mix = 1.0;
    MaskMode mask_mode = MaskMode::PI1;
    int early_stop_steps = -1;
    std::uint64_t seed = 1;
    double temperature = 1.0;
    double predictor_threshold = 0.5;
    std::string init_checkpoint;  // fine-tune input

    void validate() const {
        if (k_samples < 2) throw std::invalid_argument("config: K must be >= 2");
        if (!(lr_policy > 0.0) || !(lr_predictor > 0.0))
            throw std::invalid_argument("config: learning rates must be positive");
        if (batch < 1 || batches_per_epoch < 1 || epochs < 0)
            throw std::invalid_argument("config: batch sizes and epochs must be positive");
        if (schedule.e_init < 0 || schedule.e_p < 1 || schedule.e_u < 0 || schedule.e_l < 0)
            throw std::invalid_argument("config: invalid schedule");
        if (schedule.e_init + schedule.e_l > epochs)
            throw std::invalid_argument("config: schedule exceeds epoch budget");
        if (lambda < 0.0) throw std::invalid_argument("config: lambda must be nonnegative");
    }
};

namespace detail {

template <class Inst>
Inst generate_instance(const TrainConfig& cfg, std::uint64_t seed);

template <>
inline TsptwInstance generate_instance<TsptwInstance>(const TrainConfig& cfg, std::uint64_t seed) {
    return gen_tsptw(cfg.n, cfg.hardness, seed);
}

template <>
inline TspdlInstance generate_instance<TspdlInstance>(const TrainConfig& cfg, std::uint64_t seed) {
    return gen_tspdl(cfg.n, cfg.hardness, seed);
}

constexpr std::uint64_t kStreamGen = 0x67656e;       // instance generation
constexpr std::uint64_t kStreamRollout = 0x726f6c;   // policy sampling
constexpr std::uint64_t kStreamPool = 0x706f6f6c;    // predictor held-out pool

}  // namespace detail

// Freshly generated training instances for one (epoch, batch) slot.
template <class Inst>
std::vector<Inst> make_batch(const TrainConfig& cfg, int epoch, int batch_index) {
    std::vector<Inst> out;
    out.reserve(static_cast<std::size_t>(cfg.batch));
    for (int i = 0; i < cfg.batch; ++i) {
        const std::uint64_t s =
            Rng::derive(cfg.seed, detail::kStreamGen, epoch, batch_index, i).bits();
        out.push_back(detail::generate_instance<Inst>(cfg, s));
    }
    return out;
}

struct BatchStats {
    double mean_reward = 0.0;
    double sol_infsb = 0.0;
    double inst_infsb = 0.0;
    double advantage_abs_sum = 0.0;  // diagnostic; zero when all rewards tie
    double max_advantage_sum_error = 0.0;  // |sum of advantages| per instance
    std::vector<std::vector<LabelSample>> labels;  // grouped by decoding step
};

// One REINFORCE ascent step with the shared per-instance mean baseline:
// K sampled rollouts per instance, advantage = reward - mean, gradient
// accumulated over steps and averaged over the batch.
template <class Inst>
BatchStats reinforce_update(PolicyParams& params, const std::vector<Inst>& instances,
                            const TrainConfig& cfg, int epoch, int batch_index,
                            const RolloutOptions& opt) {
    if (cfg.k_samples < 2) throw std::invalid_argument("reinforce_update: K must be >= 2");
    BatchStats stats;
    if (opt.collect_labels && !instances.empty())
        stats.labels.resize(static_cast<std::size_t>(instances[0].n));

    FeatureVec grad{};
    long long infeasible_solutions = 0;
    long long infeasible_instances = 0;
    double reward_total = 0.0;

    for (std::size_t i = 0; i < instances.size(); ++i) {
        std::vector<RolloutTrace> traces;
        std::vector<double> rewards;
        traces.reserve(static_cast<std::size_t>(cfg.k_samples));
        double mean_reward = 0.0;
        bool any_feasible = false;
        for (int k = 0; k < cfg.k_samples; ++k) {
            Rng rng = Rng::derive(cfg.seed, detail::kStreamRollout, epoch, batch_index,
                                  static_cast<int>(i), k);
            traces.push_back(rollout(params, instances[i], opt, rng));
            const RolloutTrace& tr = traces.back();
            const double r = -(tr.length + cfg.lambda * tr.j_violation + tr.j_in);
            rewards.push_back(r);
            mean_reward += r;
            infeasible_solutions += tr.feasible ? 0 : 1;
            any_feasible = any_feasible || tr.feasible;
            if (opt.collect_labels)
                for (std::size_t t = 0; t < tr.labels.size(); ++t)
                    stats.labels[t].insert(stats.labels[t].end(), tr.labels[t].begin(),
                                           tr.labels[t].end());
        }
        mean_reward /= cfg.k_samples;
        reward_total += mean_reward;
        if (!any_feasible) infeasible_instances += 1;

        double adv_sum = 0.0;
        for (int k = 0; k < cfg.k_samples; ++k) {
            const double adv = rewards[static_cast<std::size_t>(k)] - mean_reward;
            adv_sum += adv;
            stats.advantage_abs_sum += std::fabs(adv);
            for (const FeatureVec& score : traces[static_cast<std::size_t>(k)].scores)
                for (int d = 0; d < kFeatureDim; ++d)
                    grad[d] += adv * score[d] / cfg.k_samples;
        }
        stats.max_advantage_sum_error = std::max(stats.max_advantage_sum_error, std::fabs(adv_sum));
    }

    const double scale = cfg.lr_policy * cfg.alpha_mix / static_cast<double>(instances.size());
    for (int d = 0; d < kFeatureDim; ++d) params.w[d] += scale * grad[d];

    const double total = static_cast<double>(instances.size()) * cfg.k_samples;
    stats.mean_reward = reward_total / static_cast<double>(instances.size());
    stats.sol_infsb = static_cast<double>(infeasible_solutions) / total;
    stats.inst_infsb = static_cast<double>(infeasible_instances) / static_cast<double>(instances.size());
    return stats;
}

struct EpochStats {
    int epoch = 0;
    double mean_reward = 0.0;
    double sol_infsb = 0.0;
    double inst_infsb = 0.0;
    std::optional<double> predictor_acc_fsb;
    std::optional<double> predictor_acc_infsb;
    double wall_s = 0.0;
    bool predictor_updated = false;
};

struct TrainResult {
    PolicyParams policy;
    PredictorParams predictor;
    bool has_predictor = false;
    std::vector<EpochStats> log;
};

namespace detail {

template <class Inst>
std::vector<std::vector<LabelSample>> collect_label_pool(const PolicyParams& params,
                                                         const TrainConfig& cfg, int window_id,
                                                         int target_samples) {
    std::vector<std::vector<LabelSample>> pool(static_cast<std::size_t>(cfg.n));
    RolloutOptions opt;
    opt.mode = MaskMode::PI1;
    opt.collect_labels = true;
    int collected = 0;
    int idx = 0;
    while (collected < target_samples) {
        const std::uint64_t s = Rng::derive(cfg.seed, kStreamPool, window_id, idx, 0).bits();
        const Inst inst = generate_instance<Inst>(cfg, s);
        Rng rng = Rng::derive(cfg.seed, kStreamPool, window_id, idx, 1);
        const RolloutTrace tr = rollout(params, inst, opt, rng);
        for (std::size_t t = 0; t < tr.labels.size(); ++t) {
            pool[t].insert(pool[t].end(), tr.labels[t].begin(), tr.labels[t].end());
            collected += static_cast<int>(tr.labels[t].size());
        }
        idx += 1;
    }
    return pool;
}

inline void merge_recall_into(EpochStats& es, const PredictorRecall& rec) {
    es.predictor_acc_fsb = rec.feasible;
    es.predictor_acc_infsb = rec.infeasible;
}

}  // namespace detail

// Lagrangian-penalized REINFORCE with a fixed mask mode; the PIP trainer is
// this with ground-truth one-step masks on every rollout.
template <class Inst>
TrainResult train_policy(const TrainConfig& cfg, PolicyParams init = {}) {
    cfg.validate();
    TrainResult res;
    res.policy = init;
    res.policy.temperature = cfg.temperature;
    RolloutOptions opt;
    opt.mode = cfg.mask_mode;
    opt.early_stop_steps = cfg.early_stop_steps;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        EpochStats es;
        es.epoch = epoch;
        for (int b = 0; b < cfg.batches_per_epoch; ++b) {
            const std::vector<Inst> batch = make_batch<Inst>(cfg, epoch, b);
            const BatchStats bs = reinforce_update(res.policy, batch, cfg, epoch, b, opt);
            es.mean_reward += bs.mean_reward;
            es.sol_infsb += bs.sol_infsb;
            es.inst_infsb += bs.inst_infsb;
        }
        es.mean_reward /= cfg.batches_per_epoch;
        es.sol_infsb /= cfg.batches_per_epoch;
        es.inst_infsb /= cfg.batches_per_epoch;
        es.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        res.log.push_back(es);
    }
    return res;
}

template <class Inst>
TrainResult train_pip(const TrainConfig& cfg) {
    TrainConfig c = cfg;
    c.mask_mode = MaskMode::PI1;
    return train_policy<Inst>(c);
}

// PIP-D: the policy trains as in PIP while a logistic predictor learns the
// ground-truth PI labels. During frozen phases rollouts use the best
// predictor so far (highest feasible-class recall on a held-out pool);
// update epochs collect fresh labels and train the predictor each batch.
template <class Inst>
TrainResult train_pipd(const TrainConfig& cfg) {
    cfg.validate();
    constexpr int kPoolTarget = 10000;

    TrainResult res;
    res.has_predictor = true;
    res.policy.temperature = cfg.temperature;
    res.predictor.threshold = cfg.predictor_threshold;

    PredictorParams best = res.predictor;
    double best_recall = -1.0;
    std::vector<std::vector<LabelSample>> pool;
    int window_id = -1;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        const bool update = is_update_epoch(cfg.schedule, cfg.epochs, epoch);
        const bool window_start =
            update && (epoch == 0 || !is_update_epoch(cfg.schedule, cfg.epochs, epoch - 1));
        if (window_start) {
            window_id += 1;
            pool = detail::collect_label_pool<Inst>(res.policy, cfg, window_id, kPoolTarget);
            // re-anchor the incumbent on the fresh pool
            best_recall = predictor_recall(best, pool).feasible;
        }

        EpochStats es;
        es.epoch = epoch;
        es.predictor_updated = update;

        RolloutOptions opt;
        if (update) {
            opt.mode = MaskMode::PI1;
            opt.collect_labels = true;
        } else {
            opt.mode = MaskMode::Predicted;
            opt.predictor = &best;
        }
        opt.early_stop_steps = cfg.early_stop_steps;

        for (int b = 0; b < cfg.batches_per_epoch; ++b) {
            const std::vector<Inst> batch = make_batch<Inst>(cfg, epoch, b);
            const BatchStats bs = reinforce_update(res.policy, batch, cfg, epoch, b, opt);
            es.mean_reward += bs.mean_reward;
            es.sol_infsb += bs.sol_infsb;
            es.inst_infsb += bs.inst_infsb;
            if (update) {
                long long n_i = 0;
                long long n_f = 0;
                for (const auto& step_samples : bs.labels)
                    for (const auto& smp : step_samples) (smp.g ? n_i : n_f) += 1;
                if (n_i + n_f > 0) {
                    const auto weights = class_weights(n_i, n_f);
                    const FeatureVec g = wbce_grad(res.predictor.v, bs.labels, weights);
                    for (int d = 0; d < kFeatureDim; ++d)
                        res.predictor.v[d] -= cfg.lr_predictor * cfg.beta_mix * g[d];
                }
            }
        }
        es.mean_reward /= cfg.batches_per_epoch;
        es.sol_infsb /= cfg.batches_per_epoch;
        es.inst_infsb /= cfg.batches_per_epoch;

        if (update) {
            const PredictorRecall rec = predictor_recall(res.predictor, pool);
            detail::merge_recall_into(es, rec);
            if (rec.feasible > best_recall) {
                best_recall = rec.feasible;
                best = res.predictor;
            }
        }
        es.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        res.log.push_back(es);
    }
    res.predictor = best;
    return res;
}

// Continues training a pretrained policy under ground-truth PI masks for
// cfg.epochs more epochs; zero epochs returns the input unchanged.
template <class Inst>
TrainResult fine_tune(const PolicyParams& pretrained, const TrainConfig& cfg) {
    TrainConfig c = cfg;
    c.mask_mode = MaskMode::PI1;
    return train_policy<Inst>(c, pretrained);
}

}  // namespace piproute
