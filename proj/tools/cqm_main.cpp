#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cqm/harness.hpp"

namespace {

int cmd_run(const std::string& config_path, long long seed_override, const std::vector<std::string>& ablations,
            const std::string& out_dir, const std::string& resume_path, int stop_after) {
    cqm::RunConfig cfg = cqm::load_config_file(config_path);
    if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    for (const std::string& flag : ablations) {
        if (flag == "no_curriculum") cfg.no_curriculum = true;
        else if (flag == "no_graph") cfg.no_graph = true;
        else if (flag == "no_planning") cfg.no_planning = true;
        else if (flag == "no_goal_convergence") cfg.no_goal_convergence = true;
        else if (flag == "landmarks_from_buffer") cfg.landmarks_from_buffer = true;
        else {
            std::cerr << "unknown ablation flag: " << flag << "\n";
            return 2;
        }
    }
    if (cfg.out_dir.empty()) cfg.out_dir = "runs/seed" + std::to_string(cfg.seed);

    std::unique_ptr<cqm::Trainer> trainer;
    if (!resume_path.empty()) {
        trainer = cqm::Trainer::load_checkpoint(resume_path, cfg);
    } else {
        trainer = std::make_unique<cqm::Trainer>(cfg);
    }
    trainer->run(stop_after);
    trainer->write_outputs();

    const cqm::RunSummary s = trainer->summary();
    std::printf("episodes=%d success_rate=%.3f mean_dist=%.3f first_success=%d out=%s\n", trainer->episode(),
                s.final_success_rate, s.final_mean_dist, s.episodes_to_first_success, cfg.out_dir.c_str());
    return 0;
}

int cmd_eval(const std::string& checkpoint_path, int episodes) {
    auto trainer = cqm::Trainer::load_checkpoint(checkpoint_path);
    const cqm::EvalResult r = trainer->evaluate(episodes, /*salt=*/0x5EED);
    std::printf("episodes=%d success_rate=%.4f mean_final_dist=%.4f\n", r.episodes, r.success_rate,
                r.mean_final_dist);
    return 0;
}

int cmd_export_graph(const std::string& checkpoint_path, const std::string& out_path) {
    auto trainer = cqm::Trainer::load_checkpoint(checkpoint_path);
    const std::string text = trainer->graph_edge_list();
    if (out_path.empty() || out_path == "-") {
        std::cout << text;
    } else {
        std::ofstream out(out_path);
        if (!out) {
            std::cerr << "cannot write " << out_path << "\n";
            return 1;
        }
        out << text;
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Curriculum RL over a quantized world model"};
    app.require_subcommand(1);

    std::string config_path, out_dir, resume_path, checkpoint_path, export_path;
    long long seed_override = -1;
    std::vector<std::string> ablations;
    int stop_after = -1;
    int eval_episodes = 100;

    CLI::App* run = app.add_subcommand("run", "train from a config file");
    run->add_option("--config", config_path, "config file")->required();
    run->add_option("--seed", seed_override, "seed override");
    run->add_option("--ablation", ablations,
                    "ablation flags: no_curriculum no_graph no_planning no_goal_convergence landmarks_from_buffer");
    run->add_option("--out", out_dir, "output directory override");
    run->add_option("--resume", resume_path, "checkpoint to resume from");
    run->add_option("--stop-after", stop_after, "halt after this many episodes (run state is checkpointed)");

    CLI::App* eval = app.add_subcommand("eval", "greedy evaluation of a checkpoint");
    eval->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
    eval->add_option("--episodes", eval_episodes, "number of evaluation episodes");

    CLI::App* exp = app.add_subcommand("export-graph", "write the landmark graph as edge-list text");
    exp->add_option("--checkpoint", checkpoint_path, "checkpoint file")->required();
    exp->add_option("--out", export_path, "output path (default stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, seed_override, ablations, out_dir, resume_path, stop_after);
        if (eval->parsed()) return cmd_eval(checkpoint_path, eval_episodes);
        if (exp->parsed()) return cmd_export_graph(checkpoint_path, export_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
