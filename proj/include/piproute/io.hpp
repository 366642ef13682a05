#pragma once

#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "piproute/eval.hpp"
#include "piproute/instance.hpp"
#include "piproute/predictor.hpp"
#include "piproute/training.hpp"

namespace piproute {

struct parse_error : std::runtime_error {
    explicit parse_error(const std::string& msg, int line = -1)
        : std::runtime_error(line >= 0 ? "line " + std::to_string(line) + ": " + msg : msg),
          line_number(line) {}
    int line_number;
};

struct io_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using Json = nlohmann::json;

// ---- native instance format: one JSON document per line ----

inline Json to_json(const TsptwInstance& inst) {
    Json j;
    j["variant"] = "tsptw";
    j["n"] = inst.n;
    Json coords = Json::array();
    for (const Vec2& p : inst.coords) coords.push_back({p.x, p.y});
    j["coords"] = std::move(coords);
    Json tw = Json::array();
    for (std::size_t i = 0; i < inst.tw_lo.size(); ++i) tw.push_back({inst.tw_lo[i], inst.tw_hi[i]});
    j["tw"] = std::move(tw);
    j["demand"] = nullptr;
    j["draft"] = nullptr;
    j["hardness"] = to_string(inst.hardness);
    j["seed"] = inst.seed;
    j["time_scale"] = inst.time_scale;
    return j;
}

inline Json to_json(const TspdlInstance& inst) {
    Json j;
    j["variant"] = "tspdl";
    j["n"] = inst.n;
    Json coords = Json::array();
    for (const Vec2& p : inst.coords) coords.push_back({p.x, p.y});
    j["coords"] = std::move(coords);
    j["tw"] = nullptr;
    j["demand"] = inst.demand;
    j["draft"] = inst.draft;
    j["hardness"] = to_string(inst.hardness);
    j["seed"] = inst.seed;
    return j;
}

template <class Inst>
std::string serialize_instance(const Inst& inst) {
    return to_json(inst).dump();
}

using AnyInstance = std::variant<TsptwInstance, TspdlInstance>;

inline AnyInstance parse_instance(const std::string& text, int line = -1) {
    Json j;
    try {
        j = Json::parse(text);
    } catch (const Json::exception& e) {
        throw parse_error(std::string("invalid JSON: ") + e.what(), line);
    }
    try {
        const std::string variant = j.at("variant").get<std::string>();
        const int n = j.at("n").get<int>();
        if (n < 1) throw parse_error("n must be >= 1", line);
        std::vector<Vec2> coords;
        for (const auto& c : j.at("coords")) coords.push_back({c.at(0).get<double>(), c.at(1).get<double>()});
        if (static_cast<int>(coords.size()) != n + 1) throw parse_error("coords size mismatch", line);

        if (variant == "tsptw") {
            TsptwInstance inst;
            inst.n = n;
            inst.coords = std::move(coords);
            for (const auto& w : j.at("tw")) {
                inst.tw_lo.push_back(w.at(0).get<double>());
                inst.tw_hi.push_back(w.at(1).get<double>());
            }
            if (static_cast<int>(inst.tw_lo.size()) != n + 1) throw parse_error("tw size mismatch", line);
            for (std::size_t i = 0; i < inst.tw_lo.size(); ++i)
                if (inst.tw_lo[i] < 0.0 || inst.tw_hi[i] < inst.tw_lo[i])
                    throw parse_error("invalid time window", line);
            inst.hardness = hardness_from_string(j.at("hardness").get<std::string>());
            inst.seed = j.at("seed").get<std::uint64_t>();
            inst.time_scale = j.value("time_scale", 1.0);
            return inst;
        }
        if (variant == "tspdl") {
            TspdlInstance inst;
            inst.n = n;
            inst.coords = std::move(coords);
            inst.demand = j.at("demand").get<std::vector<int>>();
            inst.draft = j.at("draft").get<std::vector<int>>();
            if (static_cast<int>(inst.demand.size()) != n + 1 ||
                static_cast<int>(inst.draft.size()) != n + 1)
                throw parse_error("demand/draft size mismatch", line);
            inst.hardness = hardness_from_string(j.at("hardness").get<std::string>());
            inst.seed = j.at("seed").get<std::uint64_t>();
            return inst;
        }
        throw parse_error("unknown variant: " + variant, line);
    } catch (const Json::exception& e) {
        throw parse_error(std::string("bad instance document: ") + e.what(), line);
    }
}

using Dataset = std::variant<std::vector<TsptwInstance>, std::vector<TspdlInstance>>;

inline Dataset load_instances(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path);
    std::vector<TsptwInstance> tw;
    std::vector<TspdlInstance> dl;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        lineno += 1;
        if (line.empty()) continue;
        AnyInstance any = parse_instance(line, lineno);
        if (std::holds_alternative<TsptwInstance>(any)) {
            if (!dl.empty()) throw parse_error("mixed variants in one file", lineno);
            tw.push_back(std::get<TsptwInstance>(std::move(any)));
        } else {
            if (!tw.empty()) throw parse_error("mixed variants in one file", lineno);
            dl.push_back(std::get<TspdlInstance>(std::move(any)));
        }
    }
    if (!tw.empty()) return tw;
    if (!dl.empty()) return dl;
    throw parse_error("no instances in " + path);
}

template <class Inst>
void save_instances(const std::vector<Inst>& instances, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write " + path);
    for (const Inst& inst : instances) out << serialize_instance(inst) << "\n";
    if (!out) throw io_error("write failed: " + path);
}

// ---- Dumas benchmark format ----
//
// Header lines followed by one row per node:
//   id  x  y  demand  ready-time  due-date  service-time
// id 1 is the depot; a row with id 999 terminates the list.

inline RawTsptw parse_dumas_raw(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    RawTsptw raw;
    std::vector<int> ids;
    bool done = false;
    while (std::getline(in, line)) {
        lineno += 1;
        if (done) break;
        std::istringstream row(line);
        double id, x, y, demand, ready, due, service;
        if (!(row >> id)) continue;  // header / blank line
        if (id == 999) {
            done = true;
            continue;
        }
        if (!(row >> x >> y >> demand >> ready >> due >> service)) {
            if (id == static_cast<double>(static_cast<int>(id)) && !ids.empty())
                throw parse_error("malformed node row", lineno);
            continue;  // header line that happened to start with a number
        }
        if (id != static_cast<double>(static_cast<int>(id)))
            throw parse_error("non-integer node id", lineno);
        const int node_id = static_cast<int>(id);
        for (int seen : ids)
            if (seen == node_id) throw parse_error("duplicate node id", lineno);
        if (ready < 0.0 || due < ready) throw parse_error("negative or inverted time window", lineno);
        ids.push_back(node_id);
        raw.coords.push_back({x, y});
        raw.tw_lo.push_back(ready);
        raw.tw_hi.push_back(due);
    }
    if (raw.coords.size() < 2) throw parse_error("no node rows found");
    for (std::size_t i = 0; i < ids.size(); ++i)
        if (ids[i] != static_cast<int>(i) + 1) throw parse_error("node ids must be 1..n+1 in order");
    return raw;
}

inline TsptwInstance parse_dumas(const std::string& text) {
    TsptwInstance inst = normalize_tsptw(parse_dumas_raw(text), 100.0);
    inst.hardness = Hardness::Hard;
    return inst;
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---- tours ----

inline Json to_json(const TourRecord& rec) {
    Json j;
    j["tour"] = rec.tour;
    j["length"] = rec.length;
    j["feasible"] = rec.feasible;
    return j;
}

inline void save_solutions(const SolutionSet& set, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw io_error("cannot write " + path);
    for (const auto& records : set.per_instance)
        for (const TourRecord& rec : records) out << to_json(rec).dump() << "\n";
    if (!out) throw io_error("write failed: " + path);
}

// Solutions are stored instance-major; N_s is inferred from the line count.
inline SolutionSet load_solutions(const std::string& path, std::size_t instance_count,
                                  const std::string& method_name) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open " + path);
    std::vector<TourRecord> records;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        lineno += 1;
        if (line.empty()) continue;
        try {
            Json j = Json::parse(line);
            TourRecord rec;
            rec.tour = j.at("tour").get<Tour>();
            rec.length = j.at("length").get<double>();
            rec.feasible = j.at("feasible").get<bool>();
            records.push_back(std::move(rec));
        } catch (const Json::exception& e) {
            throw parse_error(std::string("bad tour document: ") + e.what(), lineno);
        }
    }
    if (instance_count == 0 || records.size() % instance_count != 0)
        throw parse_error("solution count does not divide evenly across instances");
    SolutionSet set;
    set.method = method_name;
    set.ns = static_cast<int>(records.size() / instance_count);
    set.per_instance.resize(instance_count);
    std::size_t k = 0;
    for (std::size_t i = 0; i < instance_count; ++i)
        for (int s = 0; s < set.ns; ++s) set.per_instance[i].push_back(std::move(records[k++]));
    return set;
}

// ---- checkpoints ----

struct Checkpoint {
    std::string variant = "tsptw";
    PolicyParams policy;
    bool has_predictor = false;
    PredictorParams predictor;
    Json meta = Json::object();
};

inline void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    Json j;
    j["variant"] = ckpt.variant;
    j["w"] = std::vector<double>(ckpt.policy.w.begin(), ckpt.policy.w.end());
    j["temperature"] = ckpt.policy.temperature;
    if (ckpt.has_predictor)
        j["predictor_w"] = std::vector<double>(ckpt.predictor.v.begin(), ckpt.predictor.v.end());
    else
        j["predictor_w"] = nullptr;
    Json meta = ckpt.meta;
    meta["threshold"] = ckpt.predictor.threshold;
    j["meta"] = std::move(meta);
    std::ofstream out(path);
    if (!out) throw io_error("cannot write " + path);
    out << j.dump(2) << "\n";
    if (!out) throw io_error("write failed: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
    Json j;
    try {
        j = Json::parse(read_file(path));
    } catch (const Json::exception& e) {
        throw parse_error(std::string("bad checkpoint: ") + e.what());
    }
    Checkpoint ckpt;
    ckpt.variant = j.at("variant").get<std::string>();
    const auto w = j.at("w").get<std::vector<double>>();
    if (w.size() != kFeatureDim) throw parse_error("checkpoint weight dimension mismatch");
    std::copy(w.begin(), w.end(), ckpt.policy.w.begin());
    ckpt.policy.temperature = j.at("temperature").get<double>();
    if (!j.at("predictor_w").is_null()) {
        const auto v = j.at("predictor_w").get<std::vector<double>>();
        if (v.size() != kFeatureDim) throw parse_error("predictor weight dimension mismatch");
        std::copy(v.begin(), v.end(), ckpt.predictor.v.begin());
        ckpt.has_predictor = true;
    }
    if (j.contains("meta") && j.at("meta").is_object()) {
        ckpt.meta = j.at("meta");
        ckpt.predictor.threshold = ckpt.meta.value("threshold", 0.5);
    }
    return ckpt;
}

// ---- training config ----

inline TrainConfig load_train_config(const std::string& path) {
    Json j;
    try {
        j = Json::parse(read_file(path));
    } catch (const Json::exception& e) {
        throw parse_error(std::string("bad config: ") + e.what());
    }
    TrainConfig cfg;
    cfg.variant = j.value("variant", cfg.variant);
    cfg.n = j.value("n", cfg.n);
    cfg.hardness = hardness_from_string(j.value("hardness", to_string(cfg.hardness)));
    cfg.lambda = j.value("lambda", cfg.lambda);
    cfg.k_samples = j.value("K", cfg.k_samples);
    cfg.lr_policy = j.value("lr_policy", cfg.lr_policy);
    cfg.lr_predictor = j.value("lr_predictor", cfg.lr_predictor);
    cfg.batch = j.value("batch", cfg.batch);
    cfg.batches_per_epoch = j.value("batches_per_epoch", cfg.batches_per_epoch);
    cfg.epochs = j.value("epochs", cfg.epochs);
    cfg.schedule.e_init = j.value("e_init", cfg.schedule.e_init);
    cfg.schedule.e_p = j.value("e_p", cfg.schedule.e_p);
    cfg.schedule.e_u = j.value("e_u", cfg.schedule.e_u);
    cfg.schedule.e_l = j.value("e_l", cfg.schedule.e_l);
    cfg.alpha_mix = j.value("alpha_mix", cfg.alpha_mix);
    cfg.beta_mix = j.value("beta_mix", cfg.beta_mix);
    cfg.mask_mode = mask_mode_from_string(j.value("mask_mode", std::string(to_string(cfg.mask_mode))));
    cfg.early_stop_steps = j.value("early_stop_steps", cfg.early_stop_steps);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.temperature = j.value("temperature", cfg.temperature);
    cfg.predictor_threshold = j.value("predictor_threshold", cfg.predictor_threshold);
    cfg.init_checkpoint = j.value("init_checkpoint", cfg.init_checkpoint);
    return cfg;
}

// ---- reports ----

namespace detail {
inline std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}
}  // namespace detail

inline std::string report_csv(const std::vector<EvalReport>& reports) {
    std::ostringstream out;
    out << "method,dataset,n,hardness,N_s,sol_infsb,inst_infsb,mean_obj,mean_gap,wall_s\n";
    for (const EvalReport& r : reports) {
        out << r.method << ',' << r.dataset << ',' << r.n << ',' << r.hardness << ',' << r.ns << ','
            << detail::fmt(r.sol_infsb) << ',' << detail::fmt(r.inst_infsb) << ','
            << (r.mean_obj ? detail::fmt(*r.mean_obj) : "") << ','
            << (r.mean_gap ? detail::fmt(*r.mean_gap) : "") << ',' << detail::fmt(r.wall_s) << "\n";
    }
    return out.str();
}

inline Json to_json(const EvalReport& r) {
    Json j;
    j["method"] = r.method;
    j["dataset"] = r.dataset;
    j["n"] = r.n;
    j["hardness"] = r.hardness;
    j["N_s"] = r.ns;
    j["sol_infsb"] = r.sol_infsb;
    j["inst_infsb"] = r.inst_infsb;
    j["mean_obj"] = r.mean_obj ? Json(*r.mean_obj) : Json(nullptr);
    j["mean_gap"] = r.mean_gap ? Json(*r.mean_gap) : Json(nullptr);
    j["wall_s"] = r.wall_s;
    return j;
}

inline void write_reports(const std::vector<EvalReport>& reports, const std::string& csv_path) {
    {
        std::ofstream out(csv_path);
        if (!out) throw io_error("cannot write " + csv_path);
        out << report_csv(reports);
        if (!out) throw io_error("write failed: " + csv_path);
    }
    std::string json_path = csv_path;
    const auto pos = json_path.rfind(".csv");
    if (pos != std::string::npos && pos == json_path.size() - 4)
        json_path = json_path.substr(0, pos) + ".json";
    else
        json_path += ".json";
    Json arr = Json::array();
    for (const EvalReport& r : reports) arr.push_back(to_json(r));
    std::ofstream out(json_path);
    if (!out) throw io_error("cannot write " + json_path);
    out << arr.dump(2) << "\n";
    if (!out) throw io_error("write failed: " + json_path);
}

// External reference lengths: a JSON array, one value or null per instance.
inline std::vector<std::optional<double>> load_refs(const std::string& path,
                                                    std::size_t instance_count) {
    Json j;
    try {
        j = Json::parse(read_file(path));
    } catch (const Json::exception& e) {
        throw parse_error(std::string("bad reference file: ") + e.what());
    }
    if (!j.is_array() || j.size() != instance_count)
        throw parse_error("reference file must hold one value per instance");
    std::vector<std::optional<double>> refs(instance_count);
    for (std::size_t i = 0; i < instance_count; ++i)
        if (!j[i].is_null()) refs[i] = j[i].get<double>();
    return refs;
}

// Training log: one JSON document per epoch.
inline Json to_json(const EpochStats& es) {
    Json j;
    j["epoch"] = es.epoch;
    j["mean_reward"] = es.mean_reward;
    j["sol_infsb"] = es.sol_infsb;
    j["inst_infsb"] = es.inst_infsb;
    j["predictor_acc_fsb"] = es.predictor_acc_fsb ? Json(*es.predictor_acc_fsb) : Json(nullptr);
    j["predictor_acc_infsb"] = es.predictor_acc_infsb ? Json(*es.predictor_acc_infsb) : Json(nullptr);
    j["wall_s"] = es.wall_s;
    return j;
}

}  // namespace piproute
