#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "testutil.hpp"

using namespace piproute;

namespace {

// independent unrolling of the update rule
std::set<int> schedule_oracle(int total, int e_init, int e_p, int e_u, int e_l) {
    std::set<int> epochs;
    for (int e = 0; e < e_init; ++e) epochs.insert(e);
    for (int w = e_init; w < total; w += e_p)
        for (int e = w; e < std::min(w + e_u, total); ++e) epochs.insert(e);
    for (int e = total - e_l; e < total; ++e) epochs.insert(e);
    return epochs;
}

TrainConfig tiny_config() {
    TrainConfig cfg;
    cfg.variant = "tsptw";
    cfg.n = 6;
    cfg.hardness = Hardness::Medium;
    cfg.k_samples = 4;
    cfg.batch = 4;
    cfg.batches_per_epoch = 2;
    cfg.epochs = 3;
    cfg.schedule = {1, 2, 1, 1};
    cfg.lr_policy = 0.05;
    cfg.seed = 11;
    return cfg;
}

}  // namespace

TEST_CASE("predictor update epochs match the stated example") {
    // E=100, E_init=10, E_p=10, E_u=2, E_l=5 ->
    // {0..9} + {10,11,20,21,...} + {95..99}
    const UpdateSchedule s{10, 10, 2, 5};
    std::set<int> got;
    for (int e = 0; e < 100; ++e)
        if (is_update_epoch(s, 100, e)) got.insert(e);
    std::set<int> expected;
    for (int e = 0; e <= 9; ++e) expected.insert(e);
    for (int w = 10; w < 100; w += 10) {
        expected.insert(w);
        expected.insert(w + 1);
    }
    for (int e = 95; e <= 99; ++e) expected.insert(e);
    REQUIRE(got == expected);
}

TEST_CASE("predictor update epochs match an independent unroll on random schedules") {
    Rng rng(7);
    for (int trial = 0; trial < 100; ++trial) {
        const int total = static_cast<int>(rng.uniform_int(2, 60));
        const int e_init = static_cast<int>(rng.uniform_int(0, total / 2));
        const int e_l = static_cast<int>(rng.uniform_int(0, total - e_init));
        const int e_p = static_cast<int>(rng.uniform_int(1, 12));
        const int e_u = static_cast<int>(rng.uniform_int(0, e_p));
        const UpdateSchedule s{e_init, e_p, e_u, e_l};
        const auto expected = schedule_oracle(total, e_init, e_p, e_u, e_l);
        for (int e = 0; e < total; ++e) {
            INFO("trial " << trial << " epoch " << e << " of " << total << " init " << e_init
                          << " p " << e_p << " u " << e_u << " l " << e_l);
            REQUIRE(is_update_epoch(s, total, e) == (expected.count(e) > 0));
        }
    }
}

TEST_CASE("equal rewards produce a zero update") {
    // single customer: every rollout is the same tour, so advantages vanish
    TrainConfig cfg = tiny_config();
    cfg.n = 1;
    cfg.mask_mode = MaskMode::PI0;
    PolicyParams params;
    params.w = {0.3, -0.2, 0.1, 0.0, 0.5, -0.4, 0.2};
    const PolicyParams before = params;
    const auto batch = make_batch<TsptwInstance>(cfg, 0, 0);
    const BatchStats stats = reinforce_update(params, batch, cfg, 0, 0, RolloutOptions{});
    REQUIRE(params.w == before.w);
    REQUIRE(stats.advantage_abs_sum == 0.0);
}

TEST_CASE("advantages sum to zero per instance") {
    TrainConfig cfg = tiny_config();
    PolicyParams params;
    const auto batch = make_batch<TsptwInstance>(cfg, 0, 0);
    RolloutOptions opt;
    opt.mode = MaskMode::PI0;
    const BatchStats stats = reinforce_update(params, batch, cfg, 0, 0, opt);
    REQUIRE(stats.max_advantage_sum_error < 1e-9);
}

TEST_CASE("K below two is rejected") {
    TrainConfig cfg = tiny_config();
    cfg.k_samples = 1;
    PolicyParams params;
    const auto batch = make_batch<TsptwInstance>(cfg, 0, 0);
    REQUIRE_THROWS_AS(reinforce_update(params, batch, cfg, 0, 0, RolloutOptions{}),
                      std::invalid_argument);
    REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("analytic update matches finite differences on the frozen surrogate") {
    TrainConfig cfg;
    cfg.n = 2;
    cfg.k_samples = 6;
    cfg.batch = 1;
    cfg.lr_policy = 1.0;  // update equals the gradient
    cfg.lambda = 1.0;
    cfg.seed = 4;
    cfg.schedule = {0, 1, 0, 0};
    cfg.epochs = 1;

    const TsptwInstance inst = gen_tsptw(2, Hardness::Medium, 123);
    PolicyParams base;
    base.w = {0.2, -0.1, 0.4, 0.0, -0.3, 0.1, 0.0};
    RolloutOptions opt;
    opt.mode = MaskMode::PI0;

    // freeze the sampled tours and rewards
    std::vector<Tour> tours;
    std::vector<double> rewards;
    double mean = 0.0;
    for (int k = 0; k < cfg.k_samples; ++k) {
        Rng rng = Rng::derive(cfg.seed, detail::kStreamRollout, 0, 0, 0, k);
        const RolloutTrace tr = rollout(base, inst, opt, rng);
        tours.push_back(tr.tour);
        const double r = -(tr.length + cfg.lambda * tr.j_violation + tr.j_in);
        rewards.push_back(r);
        mean += r;
    }
    mean /= cfg.k_samples;

    // analytic gradient from the library
    PolicyParams updated = base;
    const std::vector<TsptwInstance> batch{inst};
    reinforce_update(updated, batch, cfg, 0, 0, opt);
    FeatureVec analytic{};
    for (int d = 0; d < kFeatureDim; ++d) analytic[d] = updated.w[d] - base.w[d];

    // surrogate(w) = (1/K) sum_k (R_k - b) logprob_k(w) on the frozen tours
    const auto surrogate = [&](const PolicyParams& p) {
        double total = 0.0;
        for (int k = 0; k < cfg.k_samples; ++k) {
            const RolloutTrace tr = replay_trace(p, inst, tours[static_cast<std::size_t>(k)], opt);
            double lp = 0.0;
            for (double v : tr.logprobs) lp += v;
            total += (rewards[static_cast<std::size_t>(k)] - mean) * lp;
        }
        return total / cfg.k_samples;
    };

    const double h = 1e-6;
    for (int d = 0; d < kFeatureDim; ++d) {
        PolicyParams lo = base;
        PolicyParams hi = base;
        lo.w[d] -= h;
        hi.w[d] += h;
        const double fd = (surrogate(hi) - surrogate(lo)) / (2 * h);
        INFO("dim " << d);
        REQUIRE(analytic[d] == Catch::Approx(fd).epsilon(1e-4).margin(1e-7));
    }
}

TEST_CASE("training is bit-deterministic per seed") {
    TrainConfig cfg = tiny_config();
    const TrainResult a = train_pip<TsptwInstance>(cfg);
    const TrainResult b = train_pip<TsptwInstance>(cfg);
    REQUIRE(a.policy.w == b.policy.w);
    cfg.seed += 1;
    const TrainResult c = train_pip<TsptwInstance>(cfg);
    REQUIRE(a.policy.w != c.policy.w);
}

TEST_CASE("always-update pipd matches pip on the policy trajectory") {
    TrainConfig cfg = tiny_config();
    cfg.epochs = 2;
    cfg.schedule = {2, 1, 0, 0};  // every epoch updates
    const TrainResult pip = train_pip<TsptwInstance>(cfg);
    const TrainResult pipd = train_pipd<TsptwInstance>(cfg);
    REQUIRE(pip.policy.w == pipd.policy.w);
    REQUIRE(pipd.has_predictor);
}

TEST_CASE("pipd logs recalls during update epochs only") {
    TrainConfig cfg = tiny_config();
    cfg.epochs = 4;
    cfg.schedule = {1, 2, 1, 1};
    const TrainResult res = train_pipd<TsptwInstance>(cfg);
    REQUIRE(res.log.size() == 4);
    for (const EpochStats& es : res.log) {
        REQUIRE(es.predictor_updated == is_update_epoch(cfg.schedule, cfg.epochs, es.epoch));
        REQUIRE(es.predictor_acc_fsb.has_value() == es.predictor_updated);
    }
}

TEST_CASE("zero fine-tune epochs return the input unchanged") {
    TrainConfig cfg = tiny_config();
    cfg.epochs = 0;
    cfg.schedule = {0, 1, 0, 0};
    PolicyParams pre;
    pre.w = {1, 2, 3, 4, 5, 6, 7};
    const TrainResult res = fine_tune<TsptwInstance>(pre, cfg);
    REQUIRE(res.policy.w == pre.w);
}

TEST_CASE("fine-tune is deterministic") {
    TrainConfig cfg = tiny_config();
    cfg.epochs = 2;
    cfg.schedule = {0, 1, 0, 0};
    PolicyParams pre;
    pre.w = {0.1, 0.0, -0.1, 0.2, 0.0, 0.3, 0.0};
    const TrainResult a = fine_tune<TsptwInstance>(pre, cfg);
    const TrainResult b = fine_tune<TsptwInstance>(pre, cfg);
    REQUIRE(a.policy.w == b.policy.w);
    // and it actually moved
    REQUIRE(a.policy.w != pre.w);
}

TEST_CASE("config validation rejects inconsistent schedules") {
    TrainConfig cfg = tiny_config();
    cfg.schedule = {3, 2, 1, 1};  // e_init + e_l > epochs
    REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = tiny_config();
    cfg.lambda = -1.0;
    REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = tiny_config();
    cfg.lr_policy = 0.0;
    REQUIRE_THROWS_AS(cfg.validate(), std::invalid_argument);
}
