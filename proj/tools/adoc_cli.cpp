// adoc: run, compare and render swarm simulations.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "adoc/error.hpp"
#include "adoc/run_io.hpp"
#include "adoc/scenario.hpp"
#include "adoc/sim.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitInfeasible = 3;

std::vector<std::string> split(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

bool infeasible(const adoc::Error& e) {
    return e.code() == adoc::ErrorCode::invalid_scenario ||
           e.code() == adoc::ErrorCode::infeasible_initial_distribution;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Adaptive distributed optimal control of robot swarms"};
    app.require_subcommand(1);

    std::string scenario, planner = "adoc", out, planners = "adoc,pdf-apf,sapf,spp", seeds = "1,2,3", run_dir,
                                      format = "svg";
    std::uint64_t seed = 1;
    long every = 10;

    auto* run = app.add_subcommand("run", "simulate one planner on one seed");
    run->add_option("--scenario", scenario, "scenario JSON file")->required();
    run->add_option("--planner", planner, "adoc | pdf-apf | sapf | spp");
    run->add_option("--seed", seed, "run seed");
    run->add_option("--out", out, "output directory")->required();

    auto* compare = app.add_subcommand("compare", "simulate several planners over several seeds");
    compare->add_option("--scenario", scenario, "scenario JSON file")->required();
    compare->add_option("--planners", planners, "comma separated planner names");
    compare->add_option("--seeds", seeds, "comma separated seeds");
    compare->add_option("--out", out, "output directory")->required();

    auto* render = app.add_subcommand("render", "write SVG frames for a finished run");
    render->add_option("--run", run_dir, "run directory")->required();
    render->add_option("--every", every, "frame stride in steps");
    render->add_option("--format", format, "output format (svg)")->check(CLI::IsMember({"svg"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) {
            adoc::ScenarioConfig cfg = adoc::load_scenario(scenario);
            cfg.planner = adoc::parse_planner(planner);
            cfg.seed = seed;
            const adoc::RunRecord rec = adoc::run_sim(cfg);
            adoc::write_run(rec, out);
            std::printf("%s seed=%llu T_f=%ld completed=%s D0=%.4f E=%.4f (%.1fs)\n", adoc::to_string(cfg.planner),
                        static_cast<unsigned long long>(seed), rec.T_f, rec.completed ? "yes" : "no", rec.D0, rec.E_Tf,
                        rec.wall_seconds);
            return adoc::exit_code(rec);
        }
        if (compare->parsed()) {
            const adoc::ScenarioConfig base = adoc::load_scenario(scenario);
            fs::create_directories(out);
            std::ofstream table(fs::path(out) / "compare.csv");
            table << "planner,seed,T_f,completed,D_bar_0,E_bar_T_f,runtime_s\n";
            bool all_completed = true;
            for (const auto& name : split(planners)) {
                for (const auto& s : split(seeds)) {
                    adoc::ScenarioConfig cfg = base;
                    cfg.planner = adoc::parse_planner(name);
                    cfg.seed = std::stoull(s);
                    const adoc::RunRecord rec = adoc::run_sim(cfg);
                    adoc::write_run(rec, fs::path(out) / name / ("seed_" + s));
                    table << name << ',' << s << ',' << rec.T_f << ',' << (rec.completed ? 1 : 0) << ',' << rec.D0
                          << ',' << rec.E_Tf << ',' << rec.wall_seconds << '\n';
                    std::printf("%-8s seed=%-4s T_f=%-5ld completed=%-3s D0=%9.4f E=%10.4f (%.1fs)\n", name.c_str(),
                                s.c_str(), rec.T_f, rec.completed ? "yes" : "no", rec.D0, rec.E_Tf, rec.wall_seconds);
                    std::fflush(stdout);
                    all_completed = all_completed && rec.completed;
                }
            }
            return all_completed ? 0 : 2;
        }
        if (render->parsed()) {
            const std::size_t n = adoc::render_run(run_dir, every);
            std::printf("wrote %zu frames to %s\n", n, (fs::path(run_dir) / "frames").c_str());
            return 0;
        }
    } catch (const adoc::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return infeasible(e) ? kExitInfeasible : 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
