#include <catch2/catch_amalgamated.hpp>

#include "testutil.hpp"

using namespace piproute;

namespace {

SolutionSet synthetic_set(const std::string& name, int ns,
                          const std::vector<std::vector<std::pair<double, bool>>>& table) {
    SolutionSet set;
    set.method = name;
    set.ns = ns;
    for (const auto& rows : table) {
        set.per_instance.emplace_back();
        for (const auto& [len, feas] : rows) set.per_instance.back().push_back({{}, len, feas});
    }
    return set;
}

// independently coded aggregation over a synthetic solution table
struct OracleAgg {
    double sol_infsb;
    double inst_infsb;
    std::optional<double> mean_obj;
};

OracleAgg oracle_aggregate(const std::vector<std::vector<std::pair<double, bool>>>& table) {
    int total = 0;
    int bad = 0;
    int inst_bad = 0;
    double obj = 0.0;
    int obj_n = 0;
    for (const auto& rows : table) {
        bool any = false;
        double best = 0.0;
        for (const auto& [len, feas] : rows) {
            total += 1;
            if (!feas) bad += 1;
            if (feas && (!any || len < best)) {
                any = true;
                best = len;
            }
        }
        if (!any)
            inst_bad += 1;
        else {
            obj += best;
            obj_n += 1;
        }
    }
    OracleAgg r{static_cast<double>(bad) / total, static_cast<double>(inst_bad) / table.size(),
                std::nullopt};
    if (obj_n > 0) r.mean_obj = obj / obj_n;
    return r;
}

}  // namespace

TEST_CASE("aggregate matches an independent implementation on random tables") {
    Rng rng(15);
    for (int trial = 0; trial < 200; ++trial) {
        const int instances = static_cast<int>(rng.uniform_int(1, 12));
        const int ns = static_cast<int>(rng.uniform_int(1, 6));
        std::vector<std::vector<std::pair<double, bool>>> table(
            static_cast<std::size_t>(instances));
        for (auto& rows : table)
            for (int s = 0; s < ns; ++s)
                rows.push_back({rng.uniform(1.0, 30.0), rng.uniform() < 0.6});
        const SolutionSet set = synthetic_set("m", ns, table);
        const EvalReport rep = aggregate(set, "d", 5, "medium");
        const OracleAgg oracle = oracle_aggregate(table);
        REQUIRE(rep.sol_infsb == Catch::Approx(oracle.sol_infsb));
        REQUIRE(rep.inst_infsb == Catch::Approx(oracle.inst_infsb));
        REQUIRE(rep.mean_obj.has_value() == oracle.mean_obj.has_value());
        if (rep.mean_obj) REQUIRE(*rep.mean_obj == Catch::Approx(*oracle.mean_obj));
        // instance-level rate can never exceed the solution-level rate
        REQUIRE(rep.inst_infsb <= rep.sol_infsb + 1e-15);
    }
}

TEST_CASE("deterministic methods have equal rates at both levels") {
    Rng rng(25);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<std::vector<std::pair<double, bool>>> table(
            static_cast<std::size_t>(rng.uniform_int(1, 10)));
        for (auto& rows : table) rows.push_back({rng.uniform(1.0, 9.0), rng.uniform() < 0.5});
        const EvalReport rep = aggregate(synthetic_set("m", 1, table), "d", 5, "medium");
        REQUIRE(rep.sol_infsb == rep.inst_infsb);
    }
}

TEST_CASE("gap averaging is per instance, not gap of means") {
    const auto table = std::vector<std::vector<std::pair<double, bool>>>{
        {{11.0, true}}, {{21.0, true}}};
    const SolutionSet set = synthetic_set("m", 1, table);
    std::vector<std::optional<double>> refs{10.0, 20.0};
    const EvalReport rep = aggregate(set, "d", 5, "medium", &refs);
    REQUIRE(rep.mean_gap.has_value());
    REQUIRE(*rep.mean_gap == Catch::Approx(0.075));  // (10% + 5%) / 2
}

TEST_CASE("all-infeasible and all-feasible implications") {
    const auto all_bad = std::vector<std::vector<std::pair<double, bool>>>{
        {{1.0, false}, {2.0, false}}, {{1.0, false}, {2.0, false}}};
    const EvalReport rep = aggregate(synthetic_set("m", 2, all_bad), "d", 3, "easy");
    REQUIRE(rep.sol_infsb == 1.0);
    REQUIRE(rep.inst_infsb == 1.0);
    REQUIRE_FALSE(rep.mean_obj.has_value());

    const auto all_good = std::vector<std::vector<std::pair<double, bool>>>{
        {{1.0, true}, {2.0, true}}};
    const EvalReport rep2 = aggregate(synthetic_set("m", 2, all_good), "d", 3, "easy");
    REQUIRE(rep2.inst_infsb == 0.0);
}

TEST_CASE("exact-small references match the solver") {
    std::vector<TsptwInstance> instances{testutil::fig1_instance()};
    const auto refs = gap_reference_exact_small(instances);
    REQUIRE(refs[0].has_value());
    const auto brute = testutil::brute_opt(instances[0]);
    REQUIRE(*refs[0] == Catch::Approx(brute->second));

    std::vector<TsptwInstance> big{gen_tsptw(13, Hardness::Easy, 1)};
    REQUIRE_THROWS_AS(gap_reference_exact_small(big), std::invalid_argument);
}

TEST_CASE("best-across-methods with a single method zeroes its own gaps") {
    Rng rng(55);
    std::vector<std::vector<std::pair<double, bool>>> table(6);
    for (auto& rows : table)
        for (int s = 0; s < 3; ++s) rows.push_back({rng.uniform(2.0, 9.0), rng.uniform() < 0.8});
    const SolutionSet set = synthetic_set("only", 3, table);
    const auto refs = gap_reference_best({set});
    const EvalReport rep = aggregate(set, "d", 4, "easy", &refs);
    if (rep.mean_gap) REQUIRE(*rep.mean_gap == Catch::Approx(0.0));
}

TEST_CASE("overlap restricts aggregation to mutually feasible instances") {
    const auto table_a = std::vector<std::vector<std::pair<double, bool>>>{
        {{10.0, true}}, {{99.0, false}}, {{20.0, true}}};
    const auto table_b = std::vector<std::vector<std::pair<double, bool>>>{
        {{12.0, true}}, {{15.0, true}}, {{40.0, true}}};
    const SolutionSet a = synthetic_set("a", 1, table_a);
    const SolutionSet b = synthetic_set("b", 1, table_b);
    const auto keep = overlap_feasible({a, b});
    REQUIRE(keep == std::vector<bool>{true, false, true});
    const EvalReport rep_b = aggregate(b, "d", 2, "easy", nullptr, &keep);
    REQUIRE(*rep_b.mean_obj == Catch::Approx((12.0 + 40.0) / 2));
}

TEST_CASE("csv report has the stable ten-column layout") {
    EvalReport rep;
    rep.method = "greedy-c";
    rep.dataset = "set";
    rep.n = 50;
    rep.hardness = "easy";
    rep.ns = 1;
    rep.sol_infsb = 0.25;
    rep.inst_infsb = 0.25;
    rep.mean_obj = 26.08;
    rep.wall_s = 1.5;
    const std::string csv = report_csv({rep});
    const std::string header = csv.substr(0, csv.find('\n'));
    REQUIRE(header == "method,dataset,n,hardness,N_s,sol_infsb,inst_infsb,mean_obj,mean_gap,wall_s");
    const std::string row = csv.substr(csv.find('\n') + 1);
    REQUIRE(std::count(row.begin(), row.end(), ',') == 9);
    REQUIRE(row.find("greedy-c,set,50,easy,1,0.250000,0.250000,26.080000,,1.500000") == 0);

    // json mirrors the same values
    const Json j = to_json(rep);
    REQUIRE(j["sol_infsb"].get<double>() == rep.sol_infsb);
    REQUIRE(j["mean_gap"].is_null());
    REQUIRE(j["mean_obj"].get<double>() == 26.08);
}
