#include "dolqr/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "dolqr/errors.hpp"

namespace dolqr {

using nlohmann::json;

MatrixXd MatrixSpec::materialize(int rows, int cols) const {
    if (kind == Kind::ScaledIdentity) {
        MatrixXd M = MatrixXd::Zero(rows, cols);
        for (int i = 0; i < std::min(rows, cols); ++i) M(i, i) = scale;
        return M;
    }
    if (dense.rows() != rows || dense.cols() != cols)
        throw ContractViolation("MatrixSpec: dense matrix has wrong shape");
    return dense;
}

std::string NetworkSpec::name() const {
    switch (kind) {
        case Kind::Cycle:
            return "cycle_m" + std::to_string(m) + "_nps" + std::to_string(neighbors_per_side);
        case Kind::Complete:
            return "complete_m" + std::to_string(m);
        case Kind::Custom:
            return "custom_m" + std::to_string(custom.rows());
    }
    return "unknown";
}

LtiSystem build_system(const ExperimentConfig& cfg) {
    return LtiSystem(cfg.A.materialize(cfg.d, cfg.d), cfg.B.materialize(cfg.d, cfg.k),
                     cfg.W.materialize(cfg.d, cfg.d), cfg.sigma2, cfg.theta);
}

MixingMatrix build_network(const NetworkSpec& spec) {
    switch (spec.kind) {
        case NetworkSpec::Kind::Cycle:
            return MixingMatrix::build_cycle(spec.m, spec.neighbors_per_side, spec.self_weight);
        case NetworkSpec::Kind::Complete:
            return MixingMatrix::build_complete(spec.m);
        case NetworkSpec::Kind::Custom:
            return MixingMatrix::build_custom(spec.custom);
    }
    throw ContractViolation("build_network: unknown kind");
}

void validate_config(const ExperimentConfig& cfg) {
    std::ostringstream bad;
    if (cfg.d < 1 || cfg.k < 1) bad << "d and k must be positive; ";
    if (cfg.T < 3) bad << "T must be at least 3; ";
    if (cfg.delta <= 0.0 || cfg.delta >= 1.0) bad << "delta must lie in (0, 1); ";
    if (cfg.trials < 1) bad << "trials must be >= 1; ";
    if (cfg.C < 0.0) bad << "C must be nonnegative; ";
    if (cfg.kappa < 1.0) bad << "kappa must be >= 1; ";
    if (cfg.gamma <= 0.0 || cfg.gamma > 1.0) bad << "gamma must lie in (0, 1]; ";
    if (cfg.kappa0 < 1.0) bad << "kappa0 must be >= 1; ";
    if (cfg.gamma0 <= 0.0 || cfg.gamma0 > 1.0) bad << "gamma0 must lie in (0, 1]; ";
    if (cfg.export_stride < 1) bad << "export_stride must be >= 1; ";
    int m = cfg.network.kind == NetworkSpec::Kind::Custom
                ? static_cast<int>(cfg.network.custom.rows())
                : cfg.network.m;
    if (m < 1) bad << "network must have at least one agent; ";
    if (cfg.T0 && (*cfg.T0 < 0 || *cfg.T0 > cfg.T)) bad << "T0 override out of range; ";
    if (cfg.T1 && *cfg.T1 < 0) bad << "T1 override out of range; ";
    if (cfg.T0 && cfg.T1 && *cfg.T0 + *cfg.T1 + 2 >= cfg.T)
        bad << "need T > T0 + T1 + 2; ";
    if (cfg.eta && *cfg.eta <= 0.0) bad << "eta must be positive; ";
    if (cfg.nu && *cfg.nu <= 0.0) bad << "nu must be positive; ";
    if (cfg.dykstra.tol <= 0.0 || cfg.dykstra.max_iters < 1) bad << "bad dykstra options; ";
    std::string msg = bad.str();
    if (!msg.empty()) throw ContractViolation("invalid config: " + msg);
}

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed,
                    const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw ContractViolation("config: unknown key '" + it.key() + "' in " + where);
}

MatrixSpec matrix_spec_from(const json& j, const std::string& where) {
    if (j.is_number()) return MatrixSpec::scaled_identity(j.get<double>());
    if (!j.is_object()) throw ContractViolation("config: " + where + " must be number or object");
    reject_unknown(j, {"kind", "value"}, where);
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "scaled_identity")
        return MatrixSpec::scaled_identity(j.at("value").get<double>());
    if (kind == "dense") {
        auto rows = j.at("value").get<std::vector<std::vector<double>>>();
        if (rows.empty()) throw ContractViolation("config: empty dense matrix in " + where);
        MatrixXd M(rows.size(), rows[0].size());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (rows[r].size() != rows[0].size())
                throw ContractViolation("config: ragged dense matrix in " + where);
            for (std::size_t c = 0; c < rows[r].size(); ++c) M(r, c) = rows[r][c];
        }
        return MatrixSpec::from_dense(std::move(M));
    }
    throw ContractViolation("config: bad matrix kind '" + kind + "' in " + where);
}

json matrix_spec_to(const MatrixSpec& spec) {
    json j;
    if (spec.kind == MatrixSpec::Kind::ScaledIdentity) {
        j["kind"] = "scaled_identity";
        j["value"] = spec.scale;
    } else {
        j["kind"] = "dense";
        std::vector<std::vector<double>> rows(spec.dense.rows());
        for (Eigen::Index r = 0; r < spec.dense.rows(); ++r)
            for (Eigen::Index c = 0; c < spec.dense.cols(); ++c)
                rows[r].push_back(spec.dense(r, c));
        j["value"] = rows;
    }
    return j;
}

NetworkSpec network_spec_from(const json& j) {
    NetworkSpec spec;
    reject_unknown(j, {"kind", "m", "neighbors_per_side", "self_weight", "P"}, "network");
    std::string kind = j.at("kind").get<std::string>();
    if (kind == "cycle") {
        spec.kind = NetworkSpec::Kind::Cycle;
        spec.m = j.at("m").get<int>();
        spec.neighbors_per_side = j.value("neighbors_per_side", 1);
        spec.self_weight = j.value("self_weight", 0.6);
    } else if (kind == "complete") {
        spec.kind = NetworkSpec::Kind::Complete;
        spec.m = j.at("m").get<int>();
    } else if (kind == "custom") {
        spec.kind = NetworkSpec::Kind::Custom;
        auto rows = j.at("P").get<std::vector<std::vector<double>>>();
        MatrixXd P(rows.size(), rows.size());
        for (std::size_t r = 0; r < rows.size(); ++r) {
            if (rows[r].size() != rows.size())
                throw ContractViolation("config: custom P must be square");
            for (std::size_t c = 0; c < rows[r].size(); ++c) P(r, c) = rows[r][c];
        }
        spec.custom = std::move(P);
        spec.m = static_cast<int>(spec.custom.rows());
    } else {
        throw ContractViolation("config: bad network kind '" + kind + "'");
    }
    return spec;
}

json network_spec_to(const NetworkSpec& spec) {
    json j;
    switch (spec.kind) {
        case NetworkSpec::Kind::Cycle:
            j["kind"] = "cycle";
            j["m"] = spec.m;
            j["neighbors_per_side"] = spec.neighbors_per_side;
            j["self_weight"] = spec.self_weight;
            break;
        case NetworkSpec::Kind::Complete:
            j["kind"] = "complete";
            j["m"] = spec.m;
            break;
        case NetworkSpec::Kind::Custom: {
            j["kind"] = "custom";
            std::vector<std::vector<double>> rows(spec.custom.rows());
            for (Eigen::Index r = 0; r < spec.custom.rows(); ++r)
                for (Eigen::Index c = 0; c < spec.custom.cols(); ++c)
                    rows[r].push_back(spec.custom(r, c));
            j["P"] = rows;
            break;
        }
    }
    return j;
}

}  // namespace

ExperimentConfig config_from_json_text(const std::string& text) {
    json j = json::parse(text);
    ExperimentConfig cfg;
    reject_unknown(j,
                   {"plant", "stability", "network", "T", "T0", "T1", "eta", "nu", "C", "delta",
                    "trials", "seed", "charge_exploration", "known_dynamics", "random_extra_init",
                    "export_stride", "zeta", "dykstra", "debug_dumps", "debug_dir"},
                   "top level");

    if (j.contains("plant")) {
        const json& p = j["plant"];
        reject_unknown(p, {"d", "k", "A", "B", "W", "sigma2", "theta"}, "plant");
        cfg.d = p.value("d", cfg.d);
        cfg.k = p.value("k", cfg.k);
        if (p.contains("A")) cfg.A = matrix_spec_from(p["A"], "plant.A");
        if (p.contains("B")) cfg.B = matrix_spec_from(p["B"], "plant.B");
        if (p.contains("W")) cfg.W = matrix_spec_from(p["W"], "plant.W");
        cfg.sigma2 = p.value("sigma2", cfg.sigma2);
        cfg.theta = p.value("theta", cfg.theta);
    }
    if (j.contains("stability")) {
        const json& s = j["stability"];
        reject_unknown(s, {"kappa", "gamma", "kappa0", "gamma0", "K0"}, "stability");
        cfg.kappa = s.value("kappa", cfg.kappa);
        cfg.gamma = s.value("gamma", cfg.gamma);
        cfg.kappa0 = s.value("kappa0", cfg.kappa0);
        cfg.gamma0 = s.value("gamma0", cfg.gamma0);
        if (s.contains("K0") && !s["K0"].is_null())
            cfg.K0 = matrix_spec_from(s["K0"], "stability.K0");
    }
    if (j.contains("network")) cfg.network = network_spec_from(j["network"]);
    cfg.T = j.value("T", cfg.T);
    if (j.contains("T0") && !j["T0"].is_null()) cfg.T0 = j["T0"].get<int>();
    if (j.contains("T1") && !j["T1"].is_null()) cfg.T1 = j["T1"].get<int>();
    if (j.contains("eta") && !j["eta"].is_null()) cfg.eta = j["eta"].get<double>();
    if (j.contains("nu") && !j["nu"].is_null()) cfg.nu = j["nu"].get<double>();
    cfg.C = j.value("C", cfg.C);
    cfg.delta = j.value("delta", cfg.delta);
    cfg.trials = j.value("trials", cfg.trials);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.charge_exploration = j.value("charge_exploration", cfg.charge_exploration);
    cfg.known_dynamics = j.value("known_dynamics", cfg.known_dynamics);
    cfg.random_extra_init = j.value("random_extra_init", cfg.random_extra_init);
    cfg.export_stride = j.value("export_stride", cfg.export_stride);
    cfg.zeta = j.value("zeta", cfg.zeta);
    if (j.contains("dykstra")) {
        const json& dy = j["dykstra"];
        reject_unknown(dy, {"tol", "max_iters"}, "dykstra");
        cfg.dykstra.tol = dy.value("tol", cfg.dykstra.tol);
        cfg.dykstra.max_iters = dy.value("max_iters", cfg.dykstra.max_iters);
    }
    cfg.debug_dumps = j.value("debug_dumps", cfg.debug_dumps);
    cfg.debug_dir = j.value("debug_dir", cfg.debug_dir);

    validate_config(cfg);
    return cfg;
}

ExperimentConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ContractViolation("load_config_file: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return config_from_json_text(buf.str());
}

std::string config_to_json_text(const ExperimentConfig& cfg, int indent) {
    json j;
    j["plant"] = {{"d", cfg.d},       {"k", cfg.k},           {"A", matrix_spec_to(cfg.A)},
                  {"B", matrix_spec_to(cfg.B)}, {"W", matrix_spec_to(cfg.W)},
                  {"sigma2", cfg.sigma2}, {"theta", cfg.theta}};
    j["stability"] = {{"kappa", cfg.kappa},
                      {"gamma", cfg.gamma},
                      {"kappa0", cfg.kappa0},
                      {"gamma0", cfg.gamma0},
                      {"K0", cfg.K0 ? matrix_spec_to(*cfg.K0) : json(nullptr)}};
    j["network"] = network_spec_to(cfg.network);
    j["T"] = cfg.T;
    j["T0"] = cfg.T0 ? json(*cfg.T0) : json(nullptr);
    j["T1"] = cfg.T1 ? json(*cfg.T1) : json(nullptr);
    j["eta"] = cfg.eta ? json(*cfg.eta) : json(nullptr);
    j["nu"] = cfg.nu ? json(*cfg.nu) : json(nullptr);
    j["C"] = cfg.C;
    j["delta"] = cfg.delta;
    j["trials"] = cfg.trials;
    j["seed"] = cfg.seed;
    j["charge_exploration"] = cfg.charge_exploration;
    j["known_dynamics"] = cfg.known_dynamics;
    j["random_extra_init"] = cfg.random_extra_init;
    j["export_stride"] = cfg.export_stride;
    j["zeta"] = cfg.zeta;
    j["dykstra"] = {{"tol", cfg.dykstra.tol}, {"max_iters", cfg.dykstra.max_iters}};
    j["debug_dumps"] = cfg.debug_dumps;
    j["debug_dir"] = cfg.debug_dir;
    return j.dump(indent);
}

}  // namespace dolqr
