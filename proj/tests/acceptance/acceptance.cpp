// Acceptance checks 1-11. One PASS/FAIL line per criterion; exit status 1 if any fails.
//
//   adoc_acceptance --work <dir> [--only 1,2,...]

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "adoc/error.hpp"
#include "adoc/micro_control.hpp"
#include "adoc/planner.hpp"
#include "adoc/scenario.hpp"
#include "adoc/sim.hpp"
#include "adoc/transport.hpp"
#include "bfs_enumeration.hpp"
#include "grid_ot.hpp"
#include "layered_dp.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;
using namespace adoc;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

Gaussian2 iso(double x, double y, double v) { return Gaussian2::isotropic(Vec2(x, y), v); }

double rel_err(const Vec2& a, const Vec2& b) { return (a - b).norm() / std::max(1e-12, std::max(a.norm(), b.norm())); }

Eigen::VectorXd random_simplex(std::mt19937_64& g, int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = testutil::uniform(g, 0.05, 1.0);
    return v / v.sum();
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

int run_command(const std::string& cmd) {
    const int st = std::system(cmd.c_str());
    if (st == -1 || !WIFEXITED(st)) return -1;
    return WEXITSTATUS(st);
}

std::string scenario_path() { return std::string(ADOC_SCENARIO_DIR) + "/corridor.json"; }

// 1
Outcome gaussian_w2_vs_grid() {
    std::mt19937_64 g(101);
    const auto t0 = Clock::now();
    double worst = 0.0;
    int bad = 0;
    for (int t = 0; t < 200; ++t) {
        const Gaussian2 p = testutil::random_gaussian(g);
        const Gaussian2 q = testutil::random_gaussian(g);
        const double w = w2_gaussian(p, q);
        const double o = oracle::grid_w2(p, q).w2;
        const double r = std::abs(w - o) / std::max(w, 1e-12);
        worst = std::max(worst, r);
        bad += r > 0.03;
    }
    const double secs = seconds_since(t0);
    return {bad == 0 && secs < 120.0, fmt("200 pairs, worst rel err %.4f (limit 0.03), %d over, %.1fs (limit 120s)",
                                          worst, bad, secs)};
}

// 2
Outcome wg_axioms() {
    std::mt19937_64 g(102);
    const auto t0 = Clock::now();
    int asym = 0, nonzero = 0;
    double worst_tri = -kInf;
    for (int t = 0; t < 100; ++t) {
        const Gmm a = testutil::random_gmm(g);
        const Gmm b = testutil::random_gmm(g);
        const Gmm c = testutil::random_gmm(g);
        const double ab = wg_metric(a, b).first, ba = wg_metric(b, a).first;
        const double bc = wg_metric(b, c).first, ac = wg_metric(a, c).first;
        asym += ab != ba;
        nonzero += wg_metric(a, a).first != 0.0;
        worst_tri = std::max(worst_tri, ac - ab - bc);
    }
    const double secs = seconds_since(t0);
    return {asym == 0 && nonzero == 0 && worst_tri <= 1e-9 && secs < 60.0,
            fmt("100 triples, asymmetric %d, d(p,p)!=0 %d, max triangle violation %.3g (limit 1e-9), %.2fs", asym,
                nonzero, worst_tri, secs)};
}

// 3
Outcome geodesic_linearity() {
    std::mt19937_64 g(103);
    double worst = 0.0;
    for (int t = 0; t < 50; ++t) {
        const Gmm p = testutil::random_gmm(g);
        const Gmm q = testutil::random_gmm(g);
        const double d = wg_metric(p, q).first;
        for (double eps : {0.25, 0.5, 0.75}) {
            const Gmm s = gmm_geodesic(p, q, eps);
            worst = std::max(worst, std::abs(wg_metric(s, p).first - eps * d));
        }
    }
    return {worst <= 1e-6, fmt("50 pairs x 3 eps, max |d(s,p) - eps d(p,q)| = %.3g (limit 1e-6)", worst)};
}

// 4
Outcome transport_vs_enumeration() {
    std::mt19937_64 g(104);
    double worst_gap = 0.0, worst_res = 0.0;
    for (int t = 0; t < 100; ++t) {
        const int m = 1 + static_cast<int>(g() % 4);
        const int n = 1 + static_cast<int>(g() % 4);
        Eigen::MatrixXd c(m, n);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) c(i, j) = testutil::uniform(g, 0.0, 10.0);
        const Eigen::VectorXd a = random_simplex(g, m);
        const Eigen::VectorXd b = random_simplex(g, n);
        const TransportPlan sol = solve_transport(c, a, b);
        const oracle::EnumerationResult o = oracle::enumerate_bases(c, a, b);
        worst_gap = std::max(worst_gap, std::abs(sol.cost - o.best_cost));
        worst_res = std::max(worst_res, (sol.matrix.rowwise().sum() - a).cwiseAbs().maxCoeff());
        worst_res = std::max(worst_res, (sol.matrix.colwise().sum().transpose() - b).cwiseAbs().maxCoeff());
        worst_res = std::max(worst_res, std::max(0.0, -sol.matrix.minCoeff()));
    }
    // Summation order differs between the two, so "exact" means agreement to rounding.
    return {worst_gap <= 1e-12 && worst_res <= 1e-9,
            fmt("100 instances, max |simplex - enumeration| = %.3g (limit 1e-12), max marginal residual %.3g "
                "(limit 1e-9)",
                worst_gap, worst_res)};
}

// 5
Outcome lp_upper_bounds_dp() {
    std::mt19937_64 g(105);
    int solved = 0, skipped = 0;
    double worst = kInf;
    const int horizon = 4;
    while (solved < 20) {
        // A horizon of N_c + 1 covers every simple route through the collocation nodes.
        const int nc = 1 + static_cast<int>(g() % (horizon - 1));
        std::vector<Gaussian2> comps;
        for (int k = 0; k < nc; ++k) comps.push_back(iso(testutil::uniform(g, 0, 3), testutil::uniform(g, 0, 3), 0.1));
        const CollocationSet colloc(comps, 0.5);
        const Gaussian2 tg = iso(testutil::uniform(g, 0, 3), testutil::uniform(g, 0, 3), 0.1);
        std::vector<double> pen;
        for (int k = 0; k < nc; ++k) pen.push_back(testutil::uniform(g, 0, 1));
        pen.push_back(0.0);
        const double lambda = testutil::uniform(g, 0.5, 20.0);
        const double d_th = testutil::uniform(g, 1.5, 4.0);
        const int ncur = 1 + static_cast<int>(g() % 3);
        std::vector<Gaussian2> cur_c;
        std::vector<double> cur_w;
        for (int k = 0; k < ncur; ++k) {
            cur_c.push_back(iso(testutil::uniform(g, 0, 3), testutil::uniform(g, 0, 3), testutil::uniform(g, 0.05, 0.3)));
            cur_w.push_back(testutil::uniform(g, 0.1, 1.0));
        }
        double s = 0.0;
        for (double w : cur_w) s += w;
        for (double& w : cur_w) w /= s;
        const Gmm cur(cur_c, cur_w);
        const PlannerGraph pg = build_graph(colloc, Gmm(tg), pen, d_th, lambda);
        double lp;
        try {
            lp = solve_control_lp(cur, Gmm(tg), colloc, pg, shortest_costs_to_targets(pg), 0.0).predicted_cost;
        } catch (const PlanInfeasible&) {
            ++skipped;
            continue;
        }
        const double dp = oracle::layered_dp(cur, tg, comps, pen, lambda, d_th, horizon);
        worst = std::min(worst, lp - dp);
        ++solved;
    }
    return {worst >= -1e-9, fmt("20 instances (N_c <= 3, horizon 4, %d infeasible skipped), min LP - DP = %.3g "
                                "(limit -1e-9)",
                                skipped, worst)};
}

// 6
Outcome predicted_cost_monotone() {
    const Roi roi{10, 6};
    const CollocationSet colloc = CollocationSet::uniform(roi, 1.0, 0.1 * Mat2::Identity());
    const Gmm target(iso(8.5, 3.5, 0.1));
    const PlannerConfig cfg{4.0, 0.05, kDefaultOmegaTh, 50.0, ReplanMode::triggered};
    const AdocPlanner planner(colloc, target, cfg);
    const AdocPlanner judge(colloc, target, cfg);

    auto reveal = [](ObstacleMap& m, double cx) {
        for (std::size_t c = 0; c < m.cell_count(); ++c)
            if ((m.center(c) - Vec2(cx, 0.7)).norm() <= 0.5) m.set_logit(c, 10.0);
    };
    const std::map<long, double> script{{10, 3.0}, {50, 5.0}, {90, 7.0}};
    ObstacleMap map(roi, 0.1);
    ObstacleMap final_map(roi, 0.1);
    for (const auto& [k, x] : script) reveal(final_map, x);

    PlanState s(Gmm(iso(1.5, 3.5, 0.1)));
    std::vector<double> costs;
    int reveal_solves = 0;
    for (long k = 1; k <= 2000 && !s.terminal; ++k) {
        if (auto it = script.find(k); it != script.end()) reveal(map, it->second);
        const Gmm before = s.current_pdf;
        s = plan_step(s, map, planner);
        if (!s.lp_solved) continue;
        reveal_solves += script.count(k) > 0;
        costs.push_back(judge.solve(before, final_map).predicted_cost);
    }
    double worst = -kInf;
    for (std::size_t i = 1; i < costs.size(); ++i) worst = std::max(worst, costs[i] - costs[i - 1]);
    const bool ok = s.terminal && reveal_solves == 3 && costs.size() >= 4 && worst <= 1e-9;
    return {ok, fmt("%zu re-solves (%d at reveals), cost %.4f -> %.4f, max increase %.3g (limit 1e-9), terminal %s",
                    costs.size(), reveal_solves, costs.empty() ? 0.0 : costs.front(),
                    costs.empty() ? 0.0 : costs.back(), worst, s.terminal ? "yes" : "no")};
}

// 7
Outcome gradient_checks() {
    std::mt19937_64 g(107);
    double worst_attr = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const Gmm cmd = testutil::random_gmm(g, 4, 4.0);
        const int n = 1 + static_cast<int>(g() % 10);
        std::vector<Vec2> pos;
        for (int k = 0; k < n; ++k) pos.emplace_back(testutil::uniform(g, 0, 4), testutil::uniform(g, 0, 4));
        const double gamma = testutil::uniform(g, 0.1, 1.0);
        const double bw = testutil::uniform(g, 0.1, 0.6);
        const auto grad = attractive_gradient(pos, cmd, gamma, bw);
        const double h = 1e-5;
        for (int k = 0; k < n; ++k) {
            Vec2 fd;
            for (int d = 0; d < 2; ++d) {
                auto p = pos, m = pos;
                p[k][d] += h;
                m[k][d] -= h;
                fd[d] = n * (attractive_potential(p, cmd, gamma, bw) - attractive_potential(m, cmd, gamma, bw)) / (2 * h);
            }
            worst_attr = std::max(worst_attr, rel_err(grad[k], fd));
        }
    }

    double worst_rep = 0.0;
    int active = 0;
    const double rho_obs = 0.3, rho_rob = 0.1;
    for (int trial = 0; trial < 100; ++trial) {
        ObstacleMap m(Roi{4, 4}, 0.1);
        const int cells = 1 + static_cast<int>(g() % 6);
        for (int c = 0; c < cells; ++c) m.set_logit(m.index(15 + g() % 10, 15 + g() % 10), 10.0);
        std::vector<Vec2> pos;
        while (pos.size() < 8) {
            const Vec2 x(testutil::uniform(g, 1.3, 2.7), testutil::uniform(g, 1.3, 2.7));
            bool ok = true;
            // keep clear of the magnitude cap and of cells the robot would sit on
            for (const auto& y : pos) ok = ok && (x - y).norm() > 0.02;
            Vec2 o;
            if (m.nearest_occupied(x, 0.03, o)) ok = false;
            if (ok) pos.push_back(x);
        }
        const auto grad = repulsive_gradient(pos, m, rho_obs, rho_rob);
        const double h = 1e-7;
        for (std::size_t k = 0; k < pos.size(); ++k) {
            Vec2 fd;
            for (int d = 0; d < 2; ++d) {
                auto p = pos, q = pos;
                p[k][d] += h;
                q[k][d] -= h;
                fd[d] = (repulsive_potential(p, k, m, rho_obs, rho_rob) - repulsive_potential(q, k, m, rho_obs, rho_rob)) /
                        (2 * h);
            }
            active += grad[k].norm() > 0.0;
            worst_rep = std::max(worst_rep, rel_err(grad[k], fd));
        }
    }
    return {worst_attr <= 1e-4 && worst_rep <= 1e-4 && active > 0,
            fmt("attractive worst rel err %.3g, repulsive worst rel err %.3g over %d active robots (limit 1e-4)",
                worst_attr, worst_rep, active)};
}

// 8
Outcome metric_formulas() {
    int bad = 0;
    const Trajectory one{{Vec2(0, 0)}, {Vec2(1, 0)}, {Vec2(2, 0)}};
    bad += distance_to_go(one, 0) != 2.0;
    bad += distance_to_go(one, 1) != 1.0;
    bad += distance_to_go(one, 2) != 0.0;
    const Trajectory two{{Vec2(0, 0), Vec2(5, 5)}, {Vec2(0, 0), Vec2(5, 6)}, {Vec2(0, 0), Vec2(5, 8)}};
    bad += distance_to_go(two, 0) != 1.5;
    bad += kEta != (1000.0 / 3600.0) * (1000.0 / 3600.0);
    const Trajectory step{{Vec2(0, 0)}, {Vec2(0.05, 0)}};
    // speed 5 km/s over dt = 0.01: eta / 2 * 25
    const double e = energy_per_kg(step, 0.01, 1);
    bad += std::abs(e - kEta / 2.0 * 25.0) > 4 * std::numeric_limits<double>::epsilon() * e;
    bad += energy_per_kg(step, 0.01, 0) != 0.0;
    const Trajectory still{{Vec2(1, 1), Vec2(2, 2)}, {Vec2(1, 1), Vec2(2, 2)}};
    bad += energy_per_kg(still, 0.01, 1) != 0.0;
    return {bad == 0, fmt("10 hand examples, %d mismatches; E(1) = %.10f", bad, e)};
}

struct CompareRow {
    std::string planner;
    std::string seed;
    long T_f = 0;
    bool completed = false;
    double D0 = 0.0;
    double E = 0.0;
};

// 9
Outcome table_ordering(const fs::path& work) {
    const fs::path out = work / "compare";
    fs::remove_all(out);
    const auto t0 = Clock::now();
    const std::string cmd = std::string("\"") + ADOC_CLI_PATH + "\" compare --scenario \"" + scenario_path() +
                            "\" --planners adoc,pdf-apf,sapf,spp --seeds 1,2,3 --out \"" + out.string() + "\"";
    const int code = run_command(cmd);
    const double secs = seconds_since(t0);
    std::ifstream in(out / "compare.csv");
    if (!in) return {false, fmt("compare produced no table (exit %d)", code)};
    std::string line;
    std::getline(in, line);
    std::vector<CompareRow> rows;
    while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string f[7];
        for (auto& x : f) std::getline(ss, x, ',');
        rows.push_back({f[0], f[1], std::stol(f[2]), f[3] == "1", std::stod(f[4]), std::stod(f[5])});
    }
    const long cap = load_scenario(scenario_path()).max_steps;

    std::map<std::string, std::map<std::string, CompareRow>> by;
    for (const auto& r : rows) by[r.planner][r.seed] = r;
    const std::vector<std::string> seeds{"1", "2", "3"};
    const std::vector<std::string> baselines{"pdf-apf", "sapf", "spp"};
    for (const auto& p : {"adoc", "pdf-apf", "sapf", "spp"})
        for (const auto& s : seeds)
            if (!by[p].count(s)) return {false, fmt("missing row %s seed %s", p, s.c_str())};

    bool a_ok = true;
    for (const auto& s : seeds) {
        const auto& ad = by["adoc"][s];
        const auto& sp = by["spp"][s];
        a_ok = a_ok && ad.completed && ad.T_f < cap && sp.completed && sp.T_f < cap;
        for (const auto& slow : {"pdf-apf", "sapf"}) {
            const auto& r = by[slow][s];
            a_ok = a_ok && (!r.completed || (r.T_f > ad.T_f && r.T_f > sp.T_f));
        }
    }
    bool b_ok = true;
    std::string worst;
    for (const auto& s : seeds) {
        const auto& ad = by["adoc"][s];
        for (const auto& b : baselines) {
            const auto& r = by[b][s];
            if (!(ad.E < r.E && ad.D0 < r.D0)) {
                b_ok = false;
                if (worst.empty())
                    worst = fmt(" (seed %s: adoc E %.1f D %.2f vs %s E %.1f D %.2f)", s.c_str(), ad.E, ad.D0,
                                b.c_str(), r.E, r.D0);
            }
        }
    }
    auto mean = [&](const std::string& p, bool energy) {
        double m = 0.0;
        for (const auto& s : seeds) m += energy ? by[p][s].E : by[p][s].D0;
        return m / 3.0;
    };
    std::string means;
    for (const auto& p : {"adoc", "pdf-apf", "sapf", "spp"}) {
        double tf = 0.0;
        int done = 0;
        for (const auto& s : seeds) {
            tf += by[p][s].T_f;
            done += by[p][s].completed;
        }
        means += fmt(" %s[T_f %.0f, done %d/3, E %.1f, D %.2f]", p, tf / 3.0, done, mean(p, true), mean(p, false));
    }
    const bool t_ok = secs <= 600.0;
    return {a_ok && b_ok && t_ok, fmt("(a) %s, (b) %s%s, %.0fs (limit 600s);", a_ok ? "ok" : "FAILED",
                                      b_ok ? "ok" : "FAILED", worst.c_str(), secs) +
                                      means};
}

// 10
Outcome determinism(const fs::path& work) {
    std::string csv[2];
    int codes[2];
    for (int r = 0; r < 2; ++r) {
        const fs::path out = work / ("determinism_" + std::to_string(r));
        fs::remove_all(out);
        const std::string cmd = std::string("\"") + ADOC_CLI_PATH + "\" run --scenario \"" + scenario_path() +
                                "\" --planner adoc --seed 7 --out \"" + out.string() + "\" > /dev/null";
        codes[r] = run_command(cmd);
        csv[r] = read_file(out / "metrics.csv");
    }
    const bool ok = !csv[0].empty() && csv[0] == csv[1];
    return {ok, fmt("two runs seed 7: exit %d/%d, metrics.csv %zu bytes, identical %s", codes[0], codes[1],
                    csv[0].size(), csv[0] == csv[1] ? "yes" : "no")};
}

// 11
Outcome adaptive_rerouting() {
    ScenarioConfig cfg = load_scenario(scenario_path());
    cfg.planner = PlannerKind::adoc;
    cfg.seed = 1;
    Simulation sim(cfg);
    auto in_plug = [](const Vec2& p) { return p.x() > 8.0 && p.x() < 13.0 && p.y() > 6.0 && p.y() < 10.0; };
    long discovered = -1;
    int checked = 0, inside = 0;
    double worst_inner = 0.0;
    double best_d = sim.distance_to_target();
    while (sim.step_index() < cfg.max_steps && !sim.completed()) {
        const ObstacleMap before = sim.map();
        const StepRecord row = sim.advance();
        if (discovered >= 0 && row.lp_solved) {
            for (const auto& c : sim.plan_state()->goal_pdf.components()) {
                const double v = gaussian_map_inner(c, before);
                worst_inner = std::max(worst_inner, v);
                inside += v >= 0.5;
                ++checked;
            }
        }
        if (discovered < 0) {
            for (std::size_t c = 0; c < before.cell_count(); ++c)
                if (!before.occupied(c) && sim.map().occupied(c) && in_plug(before.center(c))) {
                    discovered = row.step;
                    break;
                }
        }
        best_d = std::min(best_d, sim.distance_to_target());
    }
    const double final_d = sim.distance_to_target();
    const bool ok = discovered >= 0 && checked > 0 && inside == 0 && final_d <= cfg.dbar && sim.completed();
    return {ok, fmt("plug found at step %ld, %d goal components checked after, %d with inner >= 0.5 (max %.3f), "
                    "final d %.4f (dbar %.2f) at step %ld, completed %s",
                    discovered, checked, inside, worst_inner, final_d, cfg.dbar, sim.step_index(),
                    sim.completed() ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance checks"};
    std::string work = "acceptance_work";
    std::vector<int> only;
    app.add_option("--work", work, "scratch directory for CLI runs");
    app.add_option("--only", only, "criteria to run")->delimiter(',');
    CLI11_PARSE(app, argc, argv);
    fs::create_directories(work);

    const std::vector<std::pair<std::string, std::function<Outcome()>>> checks{
        {"gaussian W2 vs grid OT", gaussian_w2_vs_grid},
        {"WG metric axioms", wg_axioms},
        {"geodesic linearity", geodesic_linearity},
        {"transport simplex vs enumeration", transport_vs_enumeration},
        {"control LP bounds exact DP", lp_upper_bounds_dp},
        {"predicted cost non-increasing", predicted_cost_monotone},
        {"gradient finite differences", gradient_checks},
        {"metric hand examples", metric_formulas},
        {"planner comparison ordering", [&] { return table_ordering(work); }},
        {"determinism", [&] { return determinism(work); }},
        {"adaptive rerouting", adaptive_rerouting},
    };
    int failed = 0;
    for (std::size_t i = 0; i < checks.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!only.empty() && std::find(only.begin(), only.end(), id) == only.end()) continue;
        Outcome o;
        const auto t0 = Clock::now();
        try {
            o = checks[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("[%s] %2d %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", id, checks[i].first.c_str(),
                    o.detail.c_str(), seconds_since(t0));
        std::fflush(stdout);
    }
    std::printf("%d failed\n", failed);
    return failed == 0 ? 0 : 1;
}
