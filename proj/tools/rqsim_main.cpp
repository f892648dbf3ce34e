// Command-line front end: dataset generation, dataset statistics, attack
// simulation, the closed-form model, and model-vs-simulation comparison.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "rqsim/adversary.hpp"
#include "rqsim/analytic.hpp"
#include "rqsim/harness.hpp"
#include "rqsim/patterns.hpp"

namespace {

using namespace rqsim;

// --synthetic-spec accepts inline JSON or a path to a JSON file.
SynthSpec parse_synth_spec(const std::string& arg) {
    if (!arg.empty() && arg.front() == '{') {
        return synth_spec_from_json(arg);
    }
    std::ifstream in(arg);
    if (!in) {
        throw std::runtime_error("cannot open synthetic spec file: " + arg);
    }
    std::stringstream buf;
    buf << in.rdbuf();
    return synth_spec_from_json(buf.str());
}

VariableN parse_variable_n(const std::string& arg) {
    const auto colon = arg.find(':');
    if (colon == std::string::npos) {
        throw std::runtime_error("--variable-n expects min:max");
    }
    VariableN v;
    v.min = std::stoull(arg.substr(0, colon));
    v.max = std::stoull(arg.substr(colon + 1));
    return v;
}

std::vector<std::optional<std::size_t>> parse_dummy_sizes(const std::vector<std::string>& args) {
    std::vector<std::optional<std::size_t>> out;
    for (const std::string& a : args) {
        if (a == "full") {
            out.emplace_back(std::nullopt);
        } else {
            out.emplace_back(std::stoull(a));
        }
    }
    if (out.empty()) out.emplace_back(std::nullopt);
    return out;
}

struct CommonDbOptions {
    std::string db_path;
    std::string synth_arg;
};

void add_db_options(CLI::App* cmd, CommonDbOptions& opts) {
    auto* db = cmd->add_option("--db", opts.db_path, "pattern database file (.jsonl or .csv)");
    auto* spec = cmd->add_option("--synthetic-spec", opts.synth_arg,
                                 "synthetic database spec (inline JSON or file path)");
    db->excludes(spec);
}

void apply_db_options(const CommonDbOptions& opts, ExperimentConfig& cfg) {
    cfg.db_path = opts.db_path;
    if (!opts.synth_arg.empty()) cfg.synth = parse_synth_spec(opts.synth_arg);
}

int cmd_gen_dataset(const CommonDbOptions& db_opts, std::uint64_t seed,
                    const std::string& out_path) {
    if (db_opts.synth_arg.empty()) {
        throw std::runtime_error("gen-dataset requires --synthetic-spec");
    }
    const SynthSpec spec = parse_synth_spec(db_opts.synth_arg);
    Rng rng(derive_seed(seed, {hash_tag("dataset")}));
    const PatternDatabase db = gen_synthetic_db(spec, rng);
    if (out_path.empty() || out_path == "-") {
        save_pattern_db(std::cout, db, DbFormat::jsonl);
    } else {
        save_pattern_db_file(out_path, db);
        std::cerr << "wrote " << db.size() << " patterns (" << db.all_names().size()
                  << " unique names) to " << out_path << "\n";
    }
    return 0;
}

int cmd_stats(const CommonDbOptions& db_opts, std::uint64_t seed, const std::string& out_path) {
    ExperimentConfig cfg;
    apply_db_options(db_opts, cfg);
    cfg.master_seed = seed;
    if (cfg.db_path.empty() && !cfg.synth) {
        throw std::runtime_error("stats requires --db or --synthetic-spec");
    }
    const PatternDatabase db = resolve_database(cfg);
    const std::string json = to_json(db_stats(db));
    if (out_path.empty() || out_path == "-") {
        std::cout << json << "\n";
    } else {
        std::ofstream out(out_path);
        if (!out) throw std::runtime_error("cannot write " + out_path);
        out << json << "\n";
    }
    return 0;
}

int cmd_simulate(const ExperimentConfig& cfg) {
    const ExperimentReport report = run_experiment(cfg);
    for (const CellResult& cell : report.cells) {
        std::cout << "N=" << cell.block_size << " S="
                  << (cell.dummy_db_size ? std::to_string(*cell.dummy_db_size) : "full")
                  << " scenario=" << to_string(cell.scenario)
                  << " visits=" << cell.trials.size()
                  << " 1-identifiable=" << cell.kdist.fraction_1_identifiable * 100.0 << "%"
                  << " le5=" << cell.kdist.fraction_le_5 * 100.0 << "%"
                  << " median(k)=" << cell.kdist.median_k << " max(k)=" << cell.kdist.max_k
                  << " mean(k)=" << cell.kdist.mean_k;
        if (cell.generation_failures) {
            std::cout << " generation_failures=" << cell.generation_failures;
        }
        std::cout << "\n";
    }
    if (!cfg.out_dir.empty()) {
        std::cerr << "report written to " << cfg.out_dir << "\n";
    }
    return 0;
}

int cmd_analyze(const ExperimentConfig& cfg, const std::string& out_dir) {
    const PatternDatabase db = resolve_database(cfg);
    nlohmann::ordered_json results = nlohmann::ordered_json::array();
    std::vector<std::pair<std::size_t, ModelOutput>> outputs;
    for (std::size_t n : cfg.block_sizes) {
        const std::size_t q = cfg.dummy_db_sizes.front()
                                  ? *cfg.dummy_db_sizes.front()
                                  : db.all_names().size();
        const AmbiguityModel model(ModelInput::from_database(db, n, q));
        ModelOutput out = model.expected_mean();
        nlohmann::ordered_json entry;
        entry["block_size"] = n;
        entry["dummy_db_size"] = q;
        entry["expected_mean"] = out.expected_mean;
        results.push_back(entry);
        outputs.emplace_back(n, std::move(out));
    }
    const nlohmann::ordered_json doc{{"results", results}};
    std::cout << doc.dump(2) << "\n";
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        std::ofstream json_out(out_dir + "/model.json");
        if (!json_out) throw std::runtime_error("cannot write model.json");
        json_out << doc.dump(2) << "\n";
        std::ofstream csv(out_dir + "/expected_by_length.csv");
        if (!csv) throw std::runtime_error("cannot write expected_by_length.csv");
        csv << "block_size,pattern_length,expected_detected\n";
        char buf[64];
        for (const auto& [n, out] : outputs) {
            for (const auto& [m, e] : out.expected_by_length) {
                std::snprintf(buf, sizeof(buf), "%.9f", e);
                csv << n << ',' << m << ',' << buf << '\n';
            }
        }
        std::cerr << "model written to " << out_dir << "\n";
    }
    return 0;
}

int cmd_compare(const ExperimentConfig& cfg) {
    const std::vector<CompareRow> rows = compare_analytic(cfg);
    std::cout << "block_size analytic_f empirical_mean_k std_error z_score trials\n";
    for (const CompareRow& row : rows) {
        std::cout << row.block_size << ' ' << row.analytic_f << ' ' << row.empirical_mean << ' '
                  << row.std_error << ' ' << row.z_score << ' ' << row.trials << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"range-query obfuscation simulator and intersection-attack analyzer"};
    app.require_subcommand(1);

    CommonDbOptions db_opts;
    std::vector<std::string> dummy_size_args;
    std::vector<std::string> scenario_args;
    std::string strategy_arg = "random_set";
    std::string variable_n_arg;
    std::string out_path;
    ExperimentConfig cfg;

    auto* gen = app.add_subcommand("gen-dataset", "generate a synthetic pattern database");
    gen->add_option("--synthetic-spec", db_opts.synth_arg,
                    "synthetic database spec (inline JSON or file path)")
        ->required();
    gen->add_option("--seed", cfg.master_seed, "master seed");
    gen->add_option("--out", out_path, "output file (.jsonl or .csv); default stdout");

    auto* stats = app.add_subcommand("stats", "dataset statistics as JSON");
    add_db_options(stats, db_opts);
    stats->add_option("--seed", cfg.master_seed, "master seed (synthetic databases)");
    stats->add_option("--out", out_path, "output file; default stdout");

    auto add_experiment_options = [&](CLI::App* cmd, bool full) {
        add_db_options(cmd, db_opts);
        cmd->add_option("--block-size", cfg.block_sizes, "block size N (repeatable)")
            ->required();
        cmd->add_option("--seed", cfg.master_seed, "master seed");
        cmd->add_option("--trials", cfg.trials_per_pattern, "trials per pattern");
        cmd->add_option("--sample", [&cfg](const std::vector<std::string>& vals) {
                cfg.sample = std::stoull(vals.front());
                return true;
            }, "simulate only this many patterns (seeded draw)");
        cmd->add_option("--out", cfg.out_dir, "output directory");
        if (full) {
            cmd->add_option("--dummy-db-size", dummy_size_args,
                            "dummy database size, number or 'full' (repeatable)");
            cmd->add_option("--scenario", scenario_args,
                            "adversary scenario: 1bd, 1bd_improved, abd (repeatable)");
            cmd->add_option("--strategy", strategy_arg, "random_set or pattern_based");
            cmd->add_flag("--dedupe", cfg.dedupe_across_blocks,
                          "simulate the stub-resolver cache across blocks");
            cmd->add_option("--variable-n", variable_n_arg, "per-block N range, min:max");
            cmd->add_option("--padding-multiple", [&cfg](const std::vector<std::string>& vals) {
                    cfg.padding_multiple = std::stoull(vals.front());
                    return true;
                }, "pad pattern length up to a multiple (pattern_based)");
            cmd->add_option("--format", cfg.format, "per-cell table format: csv or json");
        }
    };

    auto* simulate = app.add_subcommand("simulate", "run the attack simulation grid");
    add_experiment_options(simulate, true);

    auto* analyze = app.add_subcommand("analyze", "closed-form expected detected patterns");
    add_db_options(analyze, db_opts);
    analyze->add_option("--block-size", cfg.block_sizes, "block size N (repeatable)")
        ->required();
    analyze->add_option("--dummy-db-size", dummy_size_args,
                        "model dummy database size, number or 'full'");
    analyze->add_option("--seed", cfg.master_seed, "master seed (synthetic databases)");
    analyze->add_option("--out", cfg.out_dir, "output directory");

    auto* compare = app.add_subcommand("compare", "analytic model vs Monte-Carlo simulation");
    add_experiment_options(compare, false);

    CLI11_PARSE(app, argc, argv);

    try {
        if (gen->parsed()) {
            return cmd_gen_dataset(db_opts, cfg.master_seed, out_path);
        }
        if (stats->parsed()) {
            return cmd_stats(db_opts, cfg.master_seed, out_path);
        }
        apply_db_options(db_opts, cfg);
        cfg.dummy_db_sizes = parse_dummy_sizes(dummy_size_args);
        if (!variable_n_arg.empty()) cfg.variable_n = parse_variable_n(variable_n_arg);
        cfg.strategy = strategy_from_string(strategy_arg);
        if (scenario_args.empty()) scenario_args = {"1bd"};
        cfg.scenarios.clear();
        for (const std::string& s : scenario_args) {
            cfg.scenarios.push_back(scenario_from_string(s));
        }
        if (simulate->parsed()) return cmd_simulate(cfg);
        if (analyze->parsed()) {
            const std::string out_dir = cfg.out_dir;
            cfg.out_dir.clear();
            return cmd_analyze(cfg, out_dir);
        }
        if (compare->parsed()) return cmd_compare(cfg);
        throw std::runtime_error("no subcommand selected");
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
