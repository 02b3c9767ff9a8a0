// Command-line entry point: runs pipeline stages, emits figure tables and
// writes synthetic inputs.
//
//   taskspace all --config configs/mini.conf --out out
//   taskspace econ --config configs/mini.conf --out out
//   taskspace --stage econ --config configs/mini.conf --out out
//   taskspace --figure fig4b --out out
//   taskspace synth --out data/mini --questions 1000 --seed 1
//
// Exit codes: 0 success, 1 invalid configuration or failure, 2 missing
// upstream stage.

#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "taskspace/pipeline.hpp"

namespace ts = taskspace;

int main(int argc, char** argv) {
    CLI::App app{"Mine a question-tag-answer corpus into a task space and run its analyses"};
    std::string command, config_path, out = "out", stage, figure, input;
    std::optional<std::uint64_t> seed;
    std::size_t questions = 1000;
    std::vector<std::string> sets;

    std::vector<std::string> commands = ts::stage_names();
    commands.push_back("all");
    commands.push_back("synth");
    app.add_option("command", command, "Stage name, 'all' or 'synth'")->check(CLI::IsMember(commands));
    app.add_option("--config", config_path, "Key-value configuration file");
    app.add_option("--seed", seed, "Master seed (overrides the config)");
    app.add_option("--out", out, "Output root (for synth: the directory to write inputs to)");
    app.add_option("--stage", stage, "Stage to run")->check(CLI::IsMember(ts::stage_names()));
    app.add_option("--figure", figure, "Emit the table behind a figure (" + [] {
        std::string s;
        for (const auto& f : ts::figure_ids()) s += (s.empty() ? "" : ", ") + f;
        return s;
    }() + ")");
    app.add_option("--input", input, "Input directory (overrides the config)");
    app.add_option("--set", sets, "Override a config value, key=value");
    app.add_option("--questions", questions, "Number of questions for synth")->check(CLI::PositiveNumber);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (command == "synth") {
            ts::write_synthetic_inputs(out, questions, seed.value_or(1), std::cerr);
            return 0;
        }
        if (!command.empty() && !stage.empty() && command != stage)
            throw ts::ConfigError("conflicting stage '" + command + "' and --stage '" + stage + "'");
        if (command.empty()) command = stage;
        if (command.empty() && figure.empty())
            throw ts::ConfigError("nothing to do: give a stage, 'all', 'synth' or --figure");

        if (!command.empty()) {
            ts::PipelineConfig config = config_path.empty() ? ts::PipelineConfig() : ts::PipelineConfig::load(config_path);
            if (seed) config.set("seed", std::to_string(*seed));
            if (!input.empty()) config.set_input(input);
            for (const auto& kv : sets) {
                const auto eq = kv.find('=');
                if (eq == std::string::npos) throw ts::ConfigError("--set expects key=value, got '" + kv + "'");
                config.set(ts::trim(kv.substr(0, eq)), ts::trim(kv.substr(eq + 1)));
            }
            config.validate();
            if (command == "all") ts::run_all(config, out, std::cerr);
            else ts::run_stage(command, config, out, std::cerr);
        }
        if (!figure.empty()) std::cout << ts::emit_figure(figure, out).string() << "\n";
        return 0;
    } catch (const ts::MissingStageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
