#include "adoc/run_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

#include "adoc/error.hpp"
#include "adoc/rng.hpp"
#include "json.hpp"

namespace adoc {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr double kPxPerKm = 40.0;

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return buf;
}

std::string step_name(const char* prefix, long step, const char* ext) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s_%06ld.%s", prefix, step, ext);
    return buf;
}

json gmm_json(const Gmm& m) {
    json comps = json::array();
    for (std::size_t i = 0; i < m.size(); ++i) {
        const auto& g = m.component(i);
        comps.push_back({{"w", m.weight(i)},
                         {"mean", {g.mean().x(), g.mean().y()}},
                         {"cov", {g.cov()(0, 0), g.cov()(0, 1), g.cov()(1, 1)}}});
    }
    return comps;
}

json sparse_json(const SparseEntries& e) {
    json out = json::array();
    for (const auto& [r, c, v] : e) out.push_back({r, c, v});
    return out;
}

void open_or_throw(std::ofstream& os, const fs::path& p) {
    os.open(p);
    if (!os) throw Error(ErrorCode::invalid_parameter, "cannot write " + p.string());
}

struct Ellipse {
    double cx, cy, rx, ry, angle_deg;
};

// 1-sigma ellipse of a 2x2 covariance.
Ellipse sigma_ellipse(double mx, double my, double a, double b, double c) {
    const Eigen::SelfAdjointEigenSolver<Mat2> es((Mat2() << a, b, b, c).finished());
    const Vec2 v = es.eigenvectors().col(1);
    return {mx, my, std::sqrt(std::max(0.0, es.eigenvalues()(1))), std::sqrt(std::max(0.0, es.eigenvalues()(0))),
            std::atan2(v.y(), v.x()) * 180.0 / std::numbers::pi};
}

std::vector<std::uint8_t> read_pgm(const fs::path& p, int& nx, int& ny) {
    std::ifstream in(p);
    std::string magic;
    int maxval = 0;
    in >> magic >> nx >> ny >> maxval;
    if (magic != "P2" || nx <= 0 || ny <= 0) throw Error(ErrorCode::invalid_parameter, "bad pgm " + p.string());
    std::vector<std::uint8_t> bin(static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny), 0);
    for (int row = 0; row < ny; ++row) {
        const int iy = ny - 1 - row;
        for (int ix = 0; ix < nx; ++ix) {
            int v = 0;
            in >> v;
            bin[static_cast<std::size_t>(ix) + static_cast<std::size_t>(nx) * static_cast<std::size_t>(iy)] =
                static_cast<std::uint8_t>(v != 0);
        }
    }
    return bin;
}

}  // namespace

int exit_code(const RunRecord& record) noexcept { return record.completed ? 0 : 2; }

void write_metrics_csv(std::ostream& os, const RunRecord& record) {
    os << "step,d_to_targ,new_cells,lp_solved,e_cum,pos_digest\n";
    for (const auto& r : record.steps) {
        char digest[20];
        std::snprintf(digest, sizeof digest, "%016llx", static_cast<unsigned long long>(r.digest));
        os << r.step << ',' << fmt(r.d_to_targ) << ',' << r.new_cells << ',' << (r.lp_solved ? 1 : 0) << ','
           << fmt(r.e_cum) << ',' << digest << '\n';
    }
}

std::string summary_json(const RunRecord& record) {
    json j;
    j["T_f"] = record.T_f;
    j["D_bar_0"] = record.D0;
    j["E_bar_T_f"] = record.E_Tf;
    j["completed"] = record.completed;
    j["status"] = record.status == RunStatus::completed ? "completed" : "hit_step_cap";
    j["planner"] = to_string(record.cfg.planner);
    j["seed"] = record.cfg.seed;
    j["robots"] = record.cfg.robots;
    j["lp_solves"] = std::count_if(record.steps.begin(), record.steps.end(), [](const StepRecord& s) { return s.lp_solved; });
    j["events"] = record.events;
    j["runtime_seconds"] = record.wall_seconds;
    j["rng"] = kRngIdentity;
    j["map"] = {{"nx", record.map_nx}, {"ny", record.map_ny}, {"spacing", record.cfg.grid_spacing}};
    j["persisted_maps"] = json::array();
    for (const auto& m : record.maps) j["persisted_maps"].push_back(m.step);
    j["config"] = json::parse(scenario_to_json(record.cfg));
    return j.dump(2);
}

void write_pgm(std::ostream& os, const std::vector<std::uint8_t>& binary, int nx, int ny) {
    os << "P2\n" << nx << ' ' << ny << "\n1\n";
    for (int iy = ny - 1; iy >= 0; --iy) {
        for (int ix = 0; ix < nx; ++ix) {
            if (ix) os << ' ';
            os << (binary[static_cast<std::size_t>(ix) + static_cast<std::size_t>(nx) * static_cast<std::size_t>(iy)] ? 1 : 0);
        }
        os << '\n';
    }
}

void write_run(const RunRecord& record, const fs::path& dir) {
    fs::create_directories(dir / "maps");
    std::ofstream os;
    open_or_throw(os, dir / "metrics.csv");
    write_metrics_csv(os, record);
    os.close();

    open_or_throw(os, dir / "summary.json");
    os << summary_json(record) << '\n';
    os.close();

    open_or_throw(os, dir / "trajectory.csv");
    os << "step,robot,x,y\n";
    const long tf = static_cast<long>(record.trajectory.size()) - 1;
    for (long k = 0; k <= tf; ++k) {
        if (k % record.cfg.persist_every != 0 && k != tf) continue;
        const auto& pos = record.trajectory[static_cast<std::size_t>(k)];
        for (std::size_t i = 0; i < pos.size(); ++i) {
            os << k << ',' << i << ',' << fmt(pos[i].x()) << ',' << fmt(pos[i].y()) << '\n';
        }
    }
    os.close();

    if (!record.plans.empty()) {
        open_or_throw(os, dir / "plans.jsonl");
        for (const auto& p : record.plans) {
            json j{{"step", p.step},
                   {"lp_solved", p.lp_solved},
                   {"replanned", p.replanned},
                   {"predicted_cost", std::isfinite(p.predicted_cost) ? json(p.predicted_cost) : json(nullptr)},
                   {"commanded", gmm_json(p.commanded)},
                   {"goal", gmm_json(p.goal)}};
            if (p.lp_solved) {
                j["goal_nodes"] = p.goal_nodes;
                j["pi"] = sparse_json(p.pi);
                j["pi_tilde"] = sparse_json(p.pi_tilde);
            }
            os << j.dump() << '\n';
        }
        os.close();
    }

    for (const auto& m : record.maps) {
        open_or_throw(os, dir / "maps" / step_name("map", m.step, "pgm"));
        write_pgm(os, m.binary, record.map_nx, record.map_ny);
        os.close();
    }
}

std::size_t render_run(const fs::path& dir, long every) {
    if (every < 1) throw Error(ErrorCode::invalid_parameter, "--every must be >= 1");
    std::ifstream sin(dir / "summary.json");
    if (!sin) throw Error(ErrorCode::invalid_parameter, "no summary.json in " + dir.string());
    const json summary = json::parse(sin);
    const double lx = summary["config"]["roi"][0].get<double>();
    const double ly = summary["config"]["roi"][1].get<double>();
    const double dx = summary["map"]["spacing"].get<double>();
    const double rho = 0.05;
    const long tf = summary["T_f"].get<long>();
    const auto& targ = summary["config"]["target"];

    std::map<long, std::vector<Vec2>> traj;
    {
        std::ifstream tin(dir / "trajectory.csv");
        std::string line;
        std::getline(tin, line);
        while (std::getline(tin, line)) {
            long k = 0;
            std::size_t i = 0;
            double x = 0.0, y = 0.0;
            if (std::sscanf(line.c_str(), "%ld,%zu,%lf,%lf", &k, &i, &x, &y) != 4) continue;
            traj[k].emplace_back(x, y);
        }
    }
    std::map<long, json> plans;
    {
        std::ifstream pin(dir / "plans.jsonl");
        std::string line;
        while (std::getline(pin, line)) {
            json j = json::parse(line);
            const long k = j["step"].get<long>();
            if (traj.count(k)) plans[k] = std::move(j["commanded"]);
        }
    }
    std::vector<long> map_steps;
    for (const auto& s : summary["persisted_maps"]) map_steps.push_back(s.get<long>());

    fs::create_directories(dir / "frames");
    std::size_t frames = 0;
    for (const auto& [k, pos] : traj) {
        if (k % every != 0 && k != tf) continue;
        long ms = map_steps.front();
        for (long s : map_steps) {
            if (s <= k) ms = s;
        }
        int nx = 0, ny = 0;
        const auto bin = read_pgm(dir / "maps" / step_name("map", ms, "pgm"), nx, ny);

        std::ofstream os(dir / "frames" / step_name("frame", k, "svg"));
        const double w = lx * kPxPerKm;
        const double h = ly * kPxPerKm;
        os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(w) << "\" height=\"" << fmt(h)
           << "\" viewBox=\"0 0 " << fmt(w) << ' ' << fmt(h) << "\">\n";
        os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
        os << "<g transform=\"translate(0," << fmt(h) << ") scale(" << kPxPerKm << "," << -kPxPerKm << ")\">\n";
        // obstacles, merged into horizontal runs
        for (int iy = 0; iy < ny; ++iy) {
            int ix = 0;
            while (ix < nx) {
                if (!bin[static_cast<std::size_t>(ix + nx * iy)]) {
                    ++ix;
                    continue;
                }
                const int start = ix;
                while (ix < nx && bin[static_cast<std::size_t>(ix + nx * iy)]) ++ix;
                os << "<rect x=\"" << fmt(start * dx) << "\" y=\"" << fmt(iy * dx) << "\" width=\""
                   << fmt((ix - start) * dx) << "\" height=\"" << fmt(dx) << "\" fill=\"#444\"/>\n";
            }
        }
        auto ellipse = [&os](const Ellipse& e, const char* style) {
            os << "<ellipse transform=\"translate(" << fmt(e.cx) << ',' << fmt(e.cy) << ") rotate("
               << fmt(e.angle_deg) << ")\" rx=\"" << fmt(e.rx) << "\" ry=\"" << fmt(e.ry) << "\" " << style
               << "/>\n";
        };
        for (std::size_t c = 0; c < targ["means"].size(); ++c) {
            const auto& m = targ["means"][c];
            const auto& cv = targ["covs"][c];
            ellipse(sigma_ellipse(m[0], m[1], cv[0][0], cv[0][1], cv[1][1]),
                    "fill=\"none\" stroke=\"green\" stroke-width=\"0.05\" stroke-dasharray=\"0.2,0.1\"");
        }
        if (auto it = plans.find(k); it != plans.end()) {
            for (const auto& c : it->second) {
                ellipse(sigma_ellipse(c["mean"][0], c["mean"][1], c["cov"][0], c["cov"][1], c["cov"][2]),
                        "fill=\"none\" stroke=\"blue\" stroke-width=\"0.04\"");
            }
        }
        for (const auto& p : pos) {
            os << "<circle cx=\"" << fmt(p.x()) << "\" cy=\"" << fmt(p.y()) << "\" r=\"" << fmt(rho)
               << "\" fill=\"red\"/>\n";
        }
        os << "</g>\n<text x=\"8\" y=\"20\" font-family=\"monospace\" font-size=\"14\">step " << k << "</text>\n";
        os << "</svg>\n";
        ++frames;
    }
    return frames;
}

}  // namespace adoc
