// Experiment runner: `leafgibbs run --config path [--set key=value]... [--workers N]`
// and `leafgibbs list`.
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "experiments.hpp"

namespace fs = std::filesystem;
using namespace leafgibbs;
using namespace leafgibbs::cli;

namespace {

enum Exit { ok = 0, config_error = 2, convergence_error = 3, domain_excursion = 4 };

int run(const std::string& config_path, const std::vector<std::string>& sets, int workers_flag) {
    json cfg = load_config(config_path);
    for (const auto& s : sets) apply_override(cfg, s);
    Params P(cfg);
    const auto name = P.require<std::string>("experiment");
    if (!cfg.contains("seed") || !cfg["seed"].is_number_integer() || cfg["seed"].get<long long>() < 0)
        throw ConfigError("config key seed is required and must be a non-negative integer");
    const auto seed = P.get<std::uint64_t>("seed", 0);
    const auto output = P.get<std::string>("output", "runs/" + name);
    Context ctx{seed, workers_flag >= 0 ? workers_flag : P.get<int>("workers", 1)};
    P.mark_used("workers");
    if (ctx.workers < 0) throw ConfigError("workers must be >= 0");
    const auto& exp = find_experiment(name);

    const auto t0 = std::chrono::steady_clock::now();
    Outcome out = exp.run(P, ctx);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    fs::create_directories(output);
    json params = P.resolved();
    params.erase("workers");
    out.diagnostics["runtime_seconds"] = seconds;
    out.diagnostics["workers"] = resolve_workers(ctx.workers);
    out.diagnostics["flags"] = out.flags;
    const json report{{"experiment", name},
                      {"params", params},
                      {"seed", seed},
                      {"statistics", out.statistics},
                      {"diagnostics", out.diagnostics}};
    std::ofstream(fs::path(output) / "report.json") << report.dump(2) << '\n';
    std::ofstream(fs::path(output) / "data.csv") << out.csv;

    std::cout << name << ": " << out.summary;
    if (out.flags.empty()) {
        std::cout << " [ok]\n";
        return ok;
    }
    std::cout << " [flagged:";
    for (const auto& f : out.flags) std::cout << ' ' << f << ';';
    std::cout << "]\n";
    return convergence_error;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Foliated geodesic flow experiments"};
    app.require_subcommand(1);
    auto* run_cmd = app.add_subcommand("run", "run one experiment from a config file");
    std::string config;
    std::vector<std::string> sets;
    int workers = -1;
    run_cmd->add_option("--config", config, "YAML config")->required();
    run_cmd->add_option("--set", sets, "override a config key, key=value (dotted keys for tables)");
    run_cmd->add_option("--workers", workers, "worker threads, 0 for all cores");
    auto* list_cmd = app.add_subcommand("list", "list experiments");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : config_error;
    }
    if (list_cmd->parsed()) {
        for (const auto& e : experiments()) std::cout << e.name << "  " << e.description << '\n';
        return ok;
    }
    try {
        return run(config, sets, workers);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    } catch (const DomainError& e) {
        std::cerr << "domain excursion: " << e.what() << '\n';
        return domain_excursion;
    } catch (const ExcursionError& e) {
        std::cerr << "domain excursion: " << e.what() << '\n';
        return domain_excursion;
    } catch (const Error& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return convergence_error;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return config_error;
    }
}
