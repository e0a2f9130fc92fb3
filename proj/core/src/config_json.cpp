#include "radcom/config_json.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace radcom {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed.count(it.key()))
            throw ConfigError("unknown config key '" + where + it.key() + "'");
    }
}

template <typename T>
void get_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

double parse_maybe_inf(const json& v, const char* key) {
    if (v.is_string()) {
        const auto s = v.get<std::string>();
        if (s == "inf" || s == "+inf" || s == "infinity")
            return std::numeric_limits<double>::infinity();
        throw ConfigError(std::string("bad value for ") + key + ": '" + s + "'");
    }
    return v.get<double>();
}

} // namespace

SystemConfig load_config_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config JSON parse error: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");

    check_keys(j,
               {"n_tx", "n_rx", "n_users", "n_targets", "n_irs", "target_angles",
                "sinr_user_db", "sinr_radar_db", "cross_corr_limit", "noise_power_dbm",
                "target_rcs_power_dbm", "irs_x", "path_loss_ref_db", "alpha_bs_irs",
                "alpha_irs_user", "alpha_bs_user", "rician_factor_db",
                "antenna_spacing_ratio", "penalty", "sdr", "seed"},
               "");

    SystemConfig cfg;
    try {
        get_if(j, "n_tx", cfg.n_tx);
        get_if(j, "n_rx", cfg.n_rx);
        get_if(j, "n_users", cfg.n_users);
        get_if(j, "n_targets", cfg.n_targets);
        get_if(j, "n_irs", cfg.n_irs);
        get_if(j, "target_angles", cfg.target_angles);
        get_if(j, "sinr_user_db", cfg.sinr_user_db);
        get_if(j, "sinr_radar_db", cfg.sinr_radar_db);
        if (j.contains("cross_corr_limit"))
            cfg.cross_corr_limit = parse_maybe_inf(j.at("cross_corr_limit"), "cross_corr_limit");
        get_if(j, "noise_power_dbm", cfg.noise_power_dbm);
        get_if(j, "target_rcs_power_dbm", cfg.target_rcs_power_dbm);
        get_if(j, "irs_x", cfg.irs_x);
        get_if(j, "path_loss_ref_db", cfg.path_loss_ref_db);
        get_if(j, "alpha_bs_irs", cfg.alpha_bs_irs);
        get_if(j, "alpha_irs_user", cfg.alpha_irs_user);
        get_if(j, "alpha_bs_user", cfg.alpha_bs_user);
        get_if(j, "rician_factor_db", cfg.rician_factor_db);
        get_if(j, "antenna_spacing_ratio", cfg.antenna_spacing_ratio);
        get_if(j, "seed", cfg.seed);

        if (j.contains("penalty")) {
            const json& p = j.at("penalty");
            check_keys(p,
                       {"rho0", "step_c", "eps_inner", "eps_outer", "eps_bisect", "max_inner",
                        "max_outer"},
                       "penalty.");
            get_if(p, "rho0", cfg.penalty.rho0);
            get_if(p, "step_c", cfg.penalty.step_c);
            get_if(p, "eps_inner", cfg.penalty.eps_inner);
            get_if(p, "eps_outer", cfg.penalty.eps_outer);
            get_if(p, "eps_bisect", cfg.penalty.eps_bisect);
            get_if(p, "max_inner", cfg.penalty.max_inner);
            get_if(p, "max_outer", cfg.penalty.max_outer);
        }
        if (j.contains("sdr")) {
            const json& s = j.at("sdr");
            check_keys(s, {"eps_converge", "max_ao_iters", "rank_one_ratio_tol"}, "sdr.");
            get_if(s, "eps_converge", cfg.sdr.eps_converge);
            get_if(s, "max_ao_iters", cfg.sdr.max_ao_iters);
            get_if(s, "rank_one_ratio_tol", cfg.sdr.rank_one_ratio_tol);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config field error: ") + e.what());
    }

    cfg.finalize();
    return cfg;
}

SystemConfig load_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return load_config_json(ss.str());
}

std::string config_to_json(const SystemConfig& cfg) {
    json j;
    j["n_tx"] = cfg.n_tx;
    j["n_rx"] = cfg.n_rx;
    j["n_users"] = cfg.n_users;
    j["n_targets"] = cfg.n_targets;
    j["n_irs"] = cfg.n_irs;
    j["target_angles"] = cfg.target_angles;
    j["sinr_user_db"] = cfg.sinr_user_db;
    j["sinr_radar_db"] = cfg.sinr_radar_db;
    if (std::isinf(cfg.cross_corr_limit))
        j["cross_corr_limit"] = "inf";
    else
        j["cross_corr_limit"] = cfg.cross_corr_limit;
    j["noise_power_dbm"] = cfg.noise_power_dbm;
    j["target_rcs_power_dbm"] = cfg.target_rcs_power_dbm;
    j["irs_x"] = cfg.irs_x;
    j["path_loss_ref_db"] = cfg.path_loss_ref_db;
    j["alpha_bs_irs"] = cfg.alpha_bs_irs;
    j["alpha_irs_user"] = cfg.alpha_irs_user;
    j["alpha_bs_user"] = cfg.alpha_bs_user;
    j["rician_factor_db"] = cfg.rician_factor_db;
    j["antenna_spacing_ratio"] = cfg.antenna_spacing_ratio;
    j["penalty"] = {{"rho0", cfg.penalty.rho0},
                    {"step_c", cfg.penalty.step_c},
                    {"eps_inner", cfg.penalty.eps_inner},
                    {"eps_outer", cfg.penalty.eps_outer},
                    {"eps_bisect", cfg.penalty.eps_bisect},
                    {"max_inner", cfg.penalty.max_inner},
                    {"max_outer", cfg.penalty.max_outer}};
    j["sdr"] = {{"eps_converge", cfg.sdr.eps_converge},
                {"max_ao_iters", cfg.sdr.max_ao_iters},
                {"rank_one_ratio_tol", cfg.sdr.rank_one_ratio_tol}};
    j["seed"] = cfg.seed;
    return j.dump(2);
}

} // namespace radcom
