#include "rqsim/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

#include "rqsim/parallel.hpp"

namespace rqsim {

namespace {

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::string dummy_size_label(const std::optional<std::size_t>& s) {
    return s ? std::to_string(*s) : "full";
}

}  // namespace

void validate(const ExperimentConfig& cfg) {
    if (cfg.db_path.empty() == !cfg.synth.has_value()) {
        throw std::invalid_argument("exactly one of db_path / synthetic spec must be set");
    }
    if (cfg.synth) validate(*cfg.synth);
    if (cfg.block_sizes.empty()) throw std::invalid_argument("no block sizes configured");
    for (std::size_t n : cfg.block_sizes) {
        if (n < 1) throw std::invalid_argument("block sizes must be >= 1");
    }
    if (cfg.scenarios.empty()) throw std::invalid_argument("no scenarios configured");
    if (cfg.dummy_db_sizes.empty()) {
        throw std::invalid_argument("no dummy database sizes configured");
    }
    if (cfg.trials_per_pattern < 1) {
        throw std::invalid_argument("trials_per_pattern must be >= 1");
    }
    if (cfg.sample && *cfg.sample < 1) {
        throw std::invalid_argument("sample must be >= 1");
    }
    if (cfg.format != "csv" && cfg.format != "json") {
        throw std::invalid_argument("format must be csv or json");
    }
    // strategy/padding/variable-N consistency, reported before any simulation
    ClientConfig probe;
    probe.block_size = cfg.block_sizes.front();
    probe.strategy = cfg.strategy;
    probe.variable_n = cfg.variable_n;
    probe.padding_multiple = cfg.padding_multiple;
    probe.dedupe_across_blocks = cfg.dedupe_across_blocks;
    validate(probe);
}

PatternDatabase resolve_database(const ExperimentConfig& cfg) {
    if (!cfg.db_path.empty()) {
        return load_pattern_db_file(cfg.db_path);
    }
    Rng rng(derive_seed(cfg.master_seed, {hash_tag("dataset")}));
    return gen_synthetic_db(*cfg.synth, rng);
}

KDistribution make_k_distribution(const std::map<std::size_t, std::size_t>& counts) {
    KDistribution d;
    d.counts = counts;
    for (const auto& [k, c] : counts) {
        if (k == 0) throw std::invalid_argument("k distribution holds a zero k");
        d.total += c;
    }
    if (d.total == 0) return d;
    std::size_t le5 = 0;
    std::size_t ones = 0;
    double sum = 0.0;
    for (const auto& [k, c] : counts) {
        if (k == 1) ones = c;
        if (k <= 5) le5 += c;
        sum += static_cast<double>(k) * static_cast<double>(c);
        d.max_k = std::max(d.max_k, k);
    }
    d.fraction_1_identifiable = static_cast<double>(ones) / static_cast<double>(d.total);
    d.fraction_le_5 = static_cast<double>(le5) / static_cast<double>(d.total);
    d.mean_k = sum / static_cast<double>(d.total);
    const std::size_t target = (d.total + 1) / 2;  // lower median
    std::size_t cum = 0;
    for (const auto& [k, c] : counts) {
        cum += c;
        if (cum >= target) {
            d.median_k = k;
            break;
        }
    }
    return d;
}

std::vector<LengthByKRow> length_composition(std::span<const TrialRecord> trials) {
    std::map<std::size_t, std::vector<std::size_t>> lengths_by_k;
    for (const TrialRecord& t : trials) {
        if (t.generation_failed || t.k == 0) continue;
        lengths_by_k[t.k].push_back(t.pattern_length);
    }
    std::vector<LengthByKRow> rows;
    rows.reserve(lengths_by_k.size());
    for (const auto& [k, lengths] : lengths_by_k) {
        LengthByKRow row;
        row.k = k;
        row.n_k = lengths.size();
        double sum = 0.0;
        for (std::size_t l : lengths) sum += static_cast<double>(l);
        row.mean_length = sum / static_cast<double>(lengths.size());
        double sq = 0.0;
        for (std::size_t l : lengths) {
            const double d = static_cast<double>(l) - row.mean_length;
            sq += d * d;
        }
        row.sd_length = std::sqrt(sq / static_cast<double>(lengths.size()));
        rows.push_back(row);
    }
    return rows;
}

double mean_detected_patterns(const CellResult& cell) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const TrialRecord& t : cell.trials) {
        if (t.generation_failed) continue;
        sum += static_cast<double>(t.k);
        ++n;
    }
    if (n == 0) throw std::invalid_argument("cell has no completed trials");
    return sum / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

namespace {

struct CellSpec {
    std::size_t index = 0;
    std::size_t block_size = 0;
    std::optional<std::size_t> dummy_db_size;
    Scenario scenario = Scenario::one_bd;
};

TrialRecord run_trial(const PatternDatabase& db, const DummyDatabase& dummies,
                      const ExperimentConfig& cfg, const CellSpec& cell,
                      std::size_t improved_slack, PatternId pattern_id, std::size_t trial) {
    TrialRecord record;
    record.pattern_id = pattern_id;
    record.trial = trial;
    record.pattern_length = db.pattern(pattern_id).length();

    ClientConfig ccfg;
    ccfg.block_size = cell.block_size;
    ccfg.strategy = cfg.strategy;
    ccfg.variable_n = cfg.variable_n;
    ccfg.padding_multiple = cfg.padding_multiple;
    ccfg.dedupe_across_blocks = cfg.dedupe_across_blocks;

    Rng rng(derive_seed(cfg.master_seed, {cell.index, pattern_id, trial}));
    Trace trace;
    if (cfg.strategy == Strategy::random_set) {
        trace = generate_trace_random(db.pattern(pattern_id), pattern_id, ccfg, dummies, rng);
    } else {
        try {
            trace = generate_trace_pattern_based(db, pattern_id, ccfg, rng);
        } catch (const std::runtime_error&) {
            record.generation_failed = true;
            return record;
        }
    }

    AttackResult result;
    switch (cell.scenario) {
        case Scenario::one_bd:
            result = attack_1bd(view_1bd(trace), db);
            break;
        case Scenario::one_bd_improved:
            result = attack_1bd_improved(view_1bd(trace), db, cell.block_size, improved_slack);
            break;
        case Scenario::abd:
            result = attack_abd(view_abd(trace), db);
            break;
    }
    record.k = result.k();
    return record;
}

std::vector<PatternId> select_patterns(const PatternDatabase& db, const ExperimentConfig& cfg) {
    std::vector<PatternId> ids(db.size());
    std::iota(ids.begin(), ids.end(), 0);
    if (!cfg.sample || *cfg.sample >= ids.size()) return ids;
    Rng rng(derive_seed(cfg.master_seed, {hash_tag("sample")}));
    for (std::size_t i = 0; i < *cfg.sample; ++i) {
        const std::size_t j = i + rng.uniform_index(ids.size() - i);
        std::swap(ids[i], ids[j]);
    }
    ids.resize(*cfg.sample);
    std::sort(ids.begin(), ids.end());
    return ids;
}

void write_kdist_csv(const std::string& path, const KDistribution& d) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << "k,count,fraction,cumulative_fraction\n";
    std::size_t cum = 0;
    for (const auto& [k, c] : d.counts) {
        cum += c;
        out << k << ',' << c << ','
            << format_double(static_cast<double>(c) / static_cast<double>(d.total)) << ','
            << format_double(static_cast<double>(cum) / static_cast<double>(d.total)) << '\n';
    }
}

void write_kdist_json(const std::string& path, const KDistribution& d) {
    nlohmann::ordered_json j;
    nlohmann::ordered_json counts = nlohmann::ordered_json::object();
    for (const auto& [k, c] : d.counts) counts[std::to_string(k)] = c;
    j["counts"] = counts;
    j["total"] = d.total;
    j["fraction_1_identifiable"] = d.fraction_1_identifiable;
    j["fraction_le_5"] = d.fraction_le_5;
    j["median_k"] = d.median_k;
    j["max_k"] = d.max_k;
    j["mean_k"] = d.mean_k;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump(2) << '\n';
}

nlohmann::ordered_json config_json(const ExperimentConfig& cfg) {
    nlohmann::ordered_json j;
    if (!cfg.db_path.empty()) {
        j["db_path"] = cfg.db_path;
    } else {
        j["synthetic"] = nlohmann::ordered_json::parse(to_json(*cfg.synth));
    }
    j["block_sizes"] = cfg.block_sizes;
    nlohmann::ordered_json sizes = nlohmann::ordered_json::array();
    for (const auto& s : cfg.dummy_db_sizes) {
        if (s) {
            sizes.push_back(*s);
        } else {
            sizes.push_back("full");
        }
    }
    j["dummy_db_sizes"] = sizes;
    nlohmann::ordered_json scenarios = nlohmann::ordered_json::array();
    for (Scenario s : cfg.scenarios) scenarios.push_back(to_string(s));
    j["scenarios"] = scenarios;
    j["strategy"] = to_string(cfg.strategy);
    j["dedupe_across_blocks"] = cfg.dedupe_across_blocks;
    if (cfg.variable_n) {
        j["variable_n"] = {{"min", cfg.variable_n->min}, {"max", cfg.variable_n->max}};
    }
    if (cfg.padding_multiple) j["padding_multiple"] = *cfg.padding_multiple;
    j["trials_per_pattern"] = cfg.trials_per_pattern;
    j["master_seed"] = cfg.master_seed;
    if (cfg.sample) j["sample"] = *cfg.sample;
    j["format"] = cfg.format;
    return j;
}

nlohmann::ordered_json summary_row(const ExperimentConfig& cfg, const CellResult& cell) {
    nlohmann::ordered_json row;
    row["block_size"] = cell.block_size;
    row["dummy_db_size"] = dummy_size_label(cell.dummy_db_size);
    row["dummy_db_actual"] = cell.dummy_db_actual;
    row["scenario"] = to_string(cell.scenario);
    row["strategy"] = to_string(cfg.strategy);
    row["dedupe_across_blocks"] = cfg.dedupe_across_blocks;
    row["visits"] = cell.trials.size();
    row["out_of_model"] = cell.out_of_model;
    row["generation_failures"] = cell.generation_failures;
    row["fraction_1_identifiable"] = cell.kdist.fraction_1_identifiable;
    row["fraction_le_5"] = cell.kdist.fraction_le_5;
    row["median_k"] = cell.kdist.median_k;
    row["max_k"] = cell.kdist.max_k;
    row["mean_k"] = cell.kdist.mean_k;
    return row;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
    validate(cfg);
    const PatternDatabase db = resolve_database(cfg);
    if (db.empty()) throw std::invalid_argument("pattern database is empty");
    const std::vector<PatternId> ids = select_patterns(db, cfg);

    // one dummy database per configured size, shared across cells
    std::map<std::string, DummyDatabase> dummy_cache;
    for (const auto& s : cfg.dummy_db_sizes) {
        const std::string label = dummy_size_label(s);
        if (dummy_cache.count(label)) continue;
        if (s) {
            Rng rng(derive_seed(cfg.master_seed, {hash_tag("dummydb"), *s}));
            dummy_cache.emplace(label, build_dummy_db(db, *s, rng));
        } else {
            dummy_cache.emplace(label, DummyDatabase(db.all_names()));
        }
    }
    if (cfg.strategy == Strategy::random_set) {
        const std::size_t max_n = cfg.variable_n
            ? cfg.variable_n->max
            : *std::max_element(cfg.block_sizes.begin(), cfg.block_sizes.end());
        for (const auto& [label, dummies] : dummy_cache) {
            if (dummies.size() < max_n) {
                throw std::invalid_argument("dummy database " + label +
                                            " is smaller than the largest block size");
            }
        }
    }

    ExperimentReport report;
    std::size_t cell_index = 0;
    for (std::size_t n : cfg.block_sizes) {
        for (const auto& s : cfg.dummy_db_sizes) {
            for (Scenario scenario : cfg.scenarios) {
                CellSpec spec{cell_index++, n, s, scenario};
                const DummyDatabase& dummies = dummy_cache.at(dummy_size_label(s));

                // keep the deduped length window sound for the longest patterns
                const std::size_t slack =
                    cfg.dedupe_across_blocks
                        ? conservative_slack(db.max_length(), n, dummies.size())
                        : 1;

                CellResult cell;
                cell.block_size = n;
                cell.dummy_db_size = s;
                cell.dummy_db_actual = dummies.size();
                cell.scenario = scenario;
                cell.trials.resize(ids.size() * cfg.trials_per_pattern);
                parallel_for(ids.size(), [&](std::size_t p) {
                    for (std::size_t t = 0; t < cfg.trials_per_pattern; ++t) {
                        cell.trials[p * cfg.trials_per_pattern + t] =
                            run_trial(db, dummies, cfg, spec, slack, ids[p], t);
                    }
                });

                std::map<std::size_t, std::size_t> counts;
                for (const TrialRecord& t : cell.trials) {
                    if (t.generation_failed) {
                        ++cell.generation_failures;
                    } else if (t.k == 0) {
                        ++cell.out_of_model;
                    } else {
                        ++counts[t.k];
                    }
                }
                cell.kdist = make_k_distribution(counts);
                cell.length_by_k = length_composition(cell.trials);
                report.cells.push_back(std::move(cell));
            }
        }
    }

    if (!cfg.out_dir.empty()) {
        namespace fs = std::filesystem;
        fs::create_directories(cfg.out_dir);
        {
            std::ofstream out(cfg.out_dir + "/config.json");
            if (!out) throw std::runtime_error("cannot write config.json");
            out << config_json(cfg).dump(2) << '\n';
        }
        std::ofstream lbk(cfg.out_dir + "/length_by_k.csv");
        if (!lbk) throw std::runtime_error("cannot write length_by_k.csv");
        lbk << "block_size,dummy_db_size,scenario,k,n_k,mean_length,sd_length\n";
        nlohmann::ordered_json summary = nlohmann::ordered_json::array();
        for (const CellResult& cell : report.cells) {
            const std::string base = cfg.out_dir + "/kdist_" + std::to_string(cell.block_size) +
                                     "_" + dummy_size_label(cell.dummy_db_size) + "_" +
                                     to_string(cell.scenario);
            if (cfg.format == "csv") {
                write_kdist_csv(base + ".csv", cell.kdist);
            } else {
                write_kdist_json(base + ".json", cell.kdist);
            }
            for (const LengthByKRow& row : cell.length_by_k) {
                lbk << cell.block_size << ',' << dummy_size_label(cell.dummy_db_size) << ','
                    << to_string(cell.scenario) << ',' << row.k << ',' << row.n_k << ','
                    << format_double(row.mean_length) << ',' << format_double(row.sd_length)
                    << '\n';
            }
            summary.push_back(summary_row(cfg, cell));
        }
        std::ofstream out(cfg.out_dir + "/summary.json");
        if (!out) throw std::runtime_error("cannot write summary.json");
        out << nlohmann::ordered_json{{"cells", summary}}.dump(2) << '\n';
    }
    return report;
}

std::vector<CompareRow> compare_analytic(const ExperimentConfig& cfg) {
    validate(cfg);
    if (cfg.strategy != Strategy::random_set || cfg.dedupe_across_blocks || cfg.variable_n) {
        throw std::invalid_argument(
            "compare_analytic runs 1BD / random_set / fixed N / no dedupe by definition");
    }
    const PatternDatabase db = resolve_database(cfg);
    if (db.empty()) throw std::invalid_argument("pattern database is empty");
    const std::vector<PatternId> ids = select_patterns(db, cfg);
    const DummyDatabase dummies(db.all_names());

    std::vector<CompareRow> rows;
    for (std::size_t cell_index = 0; cell_index < cfg.block_sizes.size(); ++cell_index) {
        const std::size_t n = cfg.block_sizes[cell_index];
        const AmbiguityModel model(ModelInput::from_database(db, n));
        CompareRow row;
        row.block_size = n;
        row.analytic_f = model.expected_mean().expected_mean;

        CellSpec spec{cell_index, n, std::nullopt, Scenario::one_bd};
        std::vector<TrialRecord> trials(ids.size() * cfg.trials_per_pattern);
        parallel_for(ids.size(), [&](std::size_t p) {
            for (std::size_t t = 0; t < cfg.trials_per_pattern; ++t) {
                trials[p * cfg.trials_per_pattern + t] =
                    run_trial(db, dummies, cfg, spec, 1, ids[p], t);
            }
        });
        double sum = 0.0;
        for (const TrialRecord& t : trials) sum += static_cast<double>(t.k);
        row.trials = trials.size();
        row.empirical_mean = sum / static_cast<double>(row.trials);
        double sq = 0.0;
        for (const TrialRecord& t : trials) {
            const double d = static_cast<double>(t.k) - row.empirical_mean;
            sq += d * d;
        }
        const double sd = std::sqrt(sq / static_cast<double>(row.trials));
        row.std_error = sd / std::sqrt(static_cast<double>(row.trials));
        const double diff = row.empirical_mean - row.analytic_f;
        row.z_score = (diff == 0.0) ? 0.0 : diff / row.std_error;
        rows.push_back(row);
    }

    if (!cfg.out_dir.empty()) {
        namespace fs = std::filesystem;
        fs::create_directories(cfg.out_dir);
        std::ofstream out(cfg.out_dir + "/compare.csv");
        if (!out) throw std::runtime_error("cannot write compare.csv");
        out << "block_size,analytic_f,empirical_mean_k,std_error,z_score,trials\n";
        for (const CompareRow& row : rows) {
            out << row.block_size << ',' << format_double(row.analytic_f) << ','
                << format_double(row.empirical_mean) << ',' << format_double(row.std_error)
                << ',' << format_double(row.z_score) << ',' << row.trials << '\n';
        }
    }
    return rows;
}

}  // namespace rqsim
