#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "sdeweak/experiment.hpp"

namespace {

sdeweak::ExperimentConfig load_config(const std::string& name_or_path) {
    if (sdeweak::is_preset(name_or_path)) return sdeweak::preset_config(name_or_path);
    return sdeweak::parse_config_file(name_or_path);
}

void print_plan(const sdeweak::ExperimentConfig& cfg) {
    std::cout << "plan:\n"
              << "  model      " << cfg.model << "\n  schemes    ";
    for (const auto& s : cfg.schemes) std::cout << s << ' ';
    std::cout << "\n  phis       ";
    for (const auto& p : cfg.phis) std::cout << p << ' ';
    std::cout << "\n  h ladder   ";
    for (double h : cfg.h_ladder) std::cout << h << ' ';
    std::cout << "\n  M          " << cfg.M << "\n  reference  bem, h_ref=" << cfg.h_ref
              << ", M_ref=" << cfg.M_ref << "\n  seed       " << cfg.seed
              << "\n  threads    " << (cfg.threads == 0 ? std::string("hardware")
                                                        : std::to_string(cfg.threads))
              << "\n  outputs    " << cfg.output_dir << "/weak_errors.csv, "
              << cfg.output_dir << "/convergence.json, " << cfg.output_dir
              << "/plotdata/<scheme>_<phi>.dat\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"weak-error benchmarking harness for tamed/implicit SDE schemes"};
    app.require_subcommand(1);

    std::string config_arg;
    bool dry_run = false;
    std::uint32_t seed = 0;
    bool seed_set = false;
    int threads = -1;
    std::string output_dir;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("config", config_arg, "preset name or config file path")->required();
        cmd->add_flag("--dry-run", dry_run, "validate and print the plan, do not simulate");
        cmd->add_option("--seed", seed, "master seed override (default 100)")
            ->each([&](const std::string&) { seed_set = true; });
        cmd->add_option("--threads", threads, "worker threads (default: hardware)");
        cmd->add_option("--output-dir", output_dir, "output directory override");
    };

    CLI::App* run_cmd = app.add_subcommand("run", "run reference + scheme ladder");
    add_common(run_cmd);
    CLI::App* explode_cmd =
        app.add_subcommand("explode", "run the explosion probe (quintic model)");
    add_common(explode_cmd);
    CLI::App* list_models_cmd = app.add_subcommand("list-models", "list model ids");
    CLI::App* list_schemes_cmd = app.add_subcommand("list-schemes", "list scheme ids");

    CLI11_PARSE(app, argc, argv);

    try {
        if (list_models_cmd->parsed()) {
            for (const auto& id : sdeweak::model_ids()) std::cout << id << '\n';
            return 0;
        }
        if (list_schemes_cmd->parsed()) {
            for (const auto& id : sdeweak::scheme_ids()) std::cout << id << '\n';
            return 0;
        }

        sdeweak::ExperimentConfig cfg = load_config(config_arg);
        if (seed_set) cfg.seed = seed;
        if (threads >= 0) cfg.threads = threads;
        if (!output_dir.empty()) cfg.output_dir = output_dir;

        if (run_cmd->parsed()) {
            sdeweak::validate_config(cfg);
            if (dry_run) {
                print_plan(cfg);
                return 0;
            }
            return sdeweak::run_experiment(cfg);
        }

        // explode
        if (dry_run) {
            std::cout << "plan: explosion probe, model=quintic, scheme=" << cfg.probe_scheme
                      << ", x0=" << cfg.probe_x0 << ", h=" << cfg.probe_h
                      << ", M=" << cfg.probe_M << ", seed=" << cfg.seed << '\n';
            return 0;
        }
        const sdeweak::ExplosionReport rep = sdeweak::run_explosion_probe(cfg);
        std::cout << "scheme " << rep.scheme_id << ", x0=" << rep.x0 << ", h=" << rep.h
                  << ", M=" << rep.n_trajectories << "\n"
                  << "exploded " << rep.n_exploded << " (" << rep.explosion_fraction * 100.0
                  << "%)\n";
        if (rep.scheme_id == "bem")
            std::cout << "max newton iterations " << rep.max_newton_iterations << '\n';
        return 0;
    } catch (const sdeweak::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const sdeweak::IoError& e) {
        std::cerr << "io error: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
