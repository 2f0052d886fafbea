#include "adoc/scenario.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "adoc/error.hpp"
#include "json.hpp"

namespace adoc {

using nlohmann::json;

namespace {

Vec2 read_point(const json& j) {
    if (!j.is_array() || j.size() != 2) throw Error(ErrorCode::invalid_scenario, "point must be [x, y]");
    return {j[0].get<double>(), j[1].get<double>()};
}

Polygon read_polygon(const json& j) {
    Polygon p;
    for (const auto& v : j) p.push_back(read_point(v));
    return p;
}

std::vector<Polygon> read_polygons(const json& j) {
    std::vector<Polygon> out;
    for (const auto& p : j) out.push_back(read_polygon(p));
    return out;
}

Gmm read_gmm(const json& j) {
    const auto& means = j.at("means");
    std::vector<Gaussian2> comps;
    for (std::size_t i = 0; i < means.size(); ++i) {
        const Vec2 mu = read_point(means[i]);
        Mat2 cov;
        if (j.contains("covs")) {
            const auto& c = j.at("covs").at(i);
            cov << c.at(0).at(0).get<double>(), c.at(0).at(1).get<double>(), c.at(1).at(0).get<double>(),
                c.at(1).at(1).get<double>();
        } else {
            cov = j.at("variances").at(i).get<double>() * Mat2::Identity();
        }
        comps.emplace_back(mu, cov);
    }
    std::vector<double> w;
    if (j.contains("weights")) {
        w = j.at("weights").get<std::vector<double>>();
    } else {
        w.assign(comps.size(), 1.0 / static_cast<double>(comps.size()));
    }
    return Gmm(std::move(comps), std::move(w));
}

json write_polygons(const std::vector<Polygon>& polys) {
    json out = json::array();
    for (const auto& p : polys) {
        json poly = json::array();
        for (const auto& v : p) poly.push_back({v.x(), v.y()});
        out.push_back(poly);
    }
    return out;
}

json write_gmm(const Gmm& m) {
    json means = json::array();
    json covs = json::array();
    for (const auto& g : m.components()) {
        means.push_back({g.mean().x(), g.mean().y()});
        covs.push_back({{g.cov()(0, 0), g.cov()(0, 1)}, {g.cov()(1, 0), g.cov()(1, 1)}});
    }
    return {{"weights", m.weights()}, {"means", means}, {"covs", covs}};
}

template <typename T>
void get_if(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

const char* to_string(PlannerKind kind) noexcept {
    switch (kind) {
        case PlannerKind::adoc: return "adoc";
        case PlannerKind::pdf_apf: return "pdf-apf";
        case PlannerKind::sapf: return "sapf";
        case PlannerKind::spp: return "spp";
    }
    return "?";
}

PlannerKind parse_planner(const std::string& name) {
    if (name == "adoc") return PlannerKind::adoc;
    if (name == "pdf-apf") return PlannerKind::pdf_apf;
    if (name == "sapf") return PlannerKind::sapf;
    if (name == "spp") return PlannerKind::spp;
    throw Error(ErrorCode::invalid_scenario, "unknown planner '" + name + "'");
}

void ScenarioConfig::validate() const {
    auto positive = [](double v, const char* what) {
        if (!(v > 0.0) || !std::isfinite(v)) throw Error(ErrorCode::invalid_scenario, std::string(what) + " must be positive");
    };
    positive(roi.lx, "roi x extent");
    positive(roi.ly, "roi y extent");
    positive(grid_spacing, "grid_spacing");
    positive(fov_radius, "fov_radius");
    positive(dt, "dt");
    positive(dbar, "dbar");
    positive(d_th, "d_th");
    positive(colloc_spacing, "colloc_spacing");
    positive(colloc_variance, "colloc_variance");
    positive(bandwidth, "bandwidth");
    positive(rho_obs, "rho_obs");
    positive(rho_rob, "rho_rob");
    positive(v_max, "v_max");
    positive(v_rob, "v_rob");
    positive(claim_radius, "claim_radius");
    positive(completion_mahalanobis, "completion_mahalanobis");
    if (robots < 1) throw Error(ErrorCode::invalid_scenario, "robots must be >= 1");
    if (max_steps < 1) throw Error(ErrorCode::invalid_scenario, "max_steps must be >= 1");
    if (persist_every < 1) throw Error(ErrorCode::invalid_scenario, "persist_every must be >= 1");
    if (!(omega_th >= 0.0)) throw Error(ErrorCode::invalid_scenario, "omega_th must be non-negative");
    if (!(lambda_obs >= 0.0)) throw Error(ErrorCode::invalid_scenario, "lambda_obs must be non-negative");
    if (!(completion_fraction > 0.0 && completion_fraction <= 1.0)) {
        throw Error(ErrorCode::invalid_scenario, "completion_fraction must be in (0, 1]");
    }
    if (d_th < colloc_spacing) throw Error(ErrorCode::invalid_scenario, "d_th below collocation spacing");
    // Ground truth polygons are checked by GroundTruthWorld.
    (void)GroundTruthWorld(roi, obstacles);
}

ScenarioConfig parse_scenario(const std::string& json_text) {
    ScenarioConfig cfg;
    try {
        const json j = json::parse(json_text);
        get_if(j, "name", cfg.name);
        if (j.contains("roi")) {
            const Vec2 r = read_point(j.at("roi"));
            cfg.roi = {r.x(), r.y()};
        }
        get_if(j, "grid_spacing", cfg.grid_spacing);
        if (j.contains("obstacles")) cfg.obstacles = read_polygons(j.at("obstacles"));
        if (j.contains("prior_obstacles")) cfg.prior_obstacles = read_polygons(j.at("prior_obstacles"));
        if (j.contains("initial")) cfg.initial = read_gmm(j.at("initial"));
        if (j.contains("target")) cfg.target = read_gmm(j.at("target"));
        get_if(j, "robots", cfg.robots);
        get_if(j, "fov_radius", cfg.fov_radius);
        get_if(j, "dt", cfg.dt);
        get_if(j, "dbar", cfg.dbar);
        get_if(j, "d_th", cfg.d_th);
        get_if(j, "colloc_spacing", cfg.colloc_spacing);
        get_if(j, "colloc_variance", cfg.colloc_variance);
        get_if(j, "gamma", cfg.gamma);
        get_if(j, "bandwidth", cfg.bandwidth);
        get_if(j, "rho_obs", cfg.rho_obs);
        get_if(j, "rho_rob", cfg.rho_rob);
        get_if(j, "omega_th", cfg.omega_th);
        get_if(j, "lambda_obs", cfg.lambda_obs);
        get_if(j, "v_max", cfg.v_max);
        get_if(j, "v_rob", cfg.v_rob);
        get_if(j, "attract_gain", cfg.attract_gain);
        get_if(j, "repulse_gain", cfg.repulse_gain);
        get_if(j, "claim_radius", cfg.claim_radius);
        get_if(j, "spp_penalty", cfg.spp_penalty);
        get_if(j, "completion_fraction", cfg.completion_fraction);
        get_if(j, "completion_mahalanobis", cfg.completion_mahalanobis);
        get_if(j, "max_steps", cfg.max_steps);
        get_if(j, "persist_every", cfg.persist_every);
        get_if(j, "seed", cfg.seed);
        if (j.contains("planner")) cfg.planner = parse_planner(j.at("planner").get<std::string>());
        if (j.contains("replan_mode")) {
            const auto m = j.at("replan_mode").get<std::string>();
            if (m == "triggered") {
                cfg.replan_mode = ReplanMode::triggered;
            } else if (m == "every-step") {
                cfg.replan_mode = ReplanMode::every_step;
            } else {
                throw Error(ErrorCode::invalid_scenario, "unknown replan_mode '" + m + "'");
            }
        }
    } catch (const json::exception& e) {
        throw Error(ErrorCode::invalid_scenario, e.what());
    } catch (const Error& e) {
        if (e.code() == ErrorCode::invalid_scenario) throw;
        throw Error(ErrorCode::invalid_scenario, e.what());
    }
    cfg.validate();
    return cfg;
}

ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::invalid_scenario, "cannot open scenario file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

std::string scenario_to_json(const ScenarioConfig& cfg, int indent) {
    json j;
    j["name"] = cfg.name;
    j["roi"] = {cfg.roi.lx, cfg.roi.ly};
    j["grid_spacing"] = cfg.grid_spacing;
    j["obstacles"] = write_polygons(cfg.obstacles);
    j["prior_obstacles"] = write_polygons(cfg.prior_obstacles);
    j["initial"] = write_gmm(cfg.initial);
    j["target"] = write_gmm(cfg.target);
    j["robots"] = cfg.robots;
    j["fov_radius"] = cfg.fov_radius;
    j["dt"] = cfg.dt;
    j["dbar"] = cfg.dbar;
    j["d_th"] = cfg.d_th;
    j["colloc_spacing"] = cfg.colloc_spacing;
    j["colloc_variance"] = cfg.colloc_variance;
    j["gamma"] = cfg.gamma;
    j["bandwidth"] = cfg.bandwidth;
    j["rho_obs"] = cfg.rho_obs;
    j["rho_rob"] = cfg.rho_rob;
    j["omega_th"] = cfg.omega_th;
    j["lambda_obs"] = cfg.lambda_obs;
    j["v_max"] = cfg.v_max;
    j["v_rob"] = cfg.v_rob;
    j["attract_gain"] = cfg.attract_gain;
    j["repulse_gain"] = cfg.repulse_gain;
    j["claim_radius"] = cfg.claim_radius;
    j["spp_penalty"] = cfg.spp_penalty;
    j["completion_fraction"] = cfg.completion_fraction;
    j["completion_mahalanobis"] = cfg.completion_mahalanobis;
    j["max_steps"] = cfg.max_steps;
    j["persist_every"] = cfg.persist_every;
    j["seed"] = cfg.seed;
    j["planner"] = to_string(cfg.planner);
    j["replan_mode"] = cfg.replan_mode == ReplanMode::triggered ? "triggered" : "every-step";
    return j.dump(indent);
}

}  // namespace adoc
