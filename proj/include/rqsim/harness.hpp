#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rqsim/adversary.hpp"
#include "rqsim/analytic.hpp"
#include "rqsim/client.hpp"
#include "rqsim/patterns.hpp"

namespace rqsim {

// One experiment: the cross product of block sizes, dummy database sizes and
// scenarios over one pattern database, with per-trial RNG streams derived
// from (master_seed, cell index, pattern id, trial index). Identical configs
// produce byte-identical report directories.
struct ExperimentConfig {
    std::string db_path;            // exactly one of db_path / synth
    std::optional<SynthSpec> synth;
    std::vector<std::size_t> block_sizes;
    std::vector<std::optional<std::size_t>> dummy_db_sizes{std::nullopt};  // nullopt = full
    std::vector<Scenario> scenarios;
    Strategy strategy = Strategy::random_set;
    bool dedupe_across_blocks = false;
    std::optional<VariableN> variable_n;
    std::optional<std::size_t> padding_multiple;
    std::size_t trials_per_pattern = 1;
    std::uint64_t master_seed = 0;
    std::optional<std::size_t> sample;  // simulate only this many patterns
    std::string out_dir;                // empty: keep results in memory only
    std::string format = "csv";         // csv | json per-cell tables
};

void validate(const ExperimentConfig& cfg);  // throws std::invalid_argument

struct KDistribution {
    std::map<std::size_t, std::size_t> counts;  // k -> trials with that k (k >= 1)
    std::size_t total = 0;
    double fraction_1_identifiable = 0.0;
    double fraction_le_5 = 0.0;
    double mean_k = 0.0;
    std::size_t median_k = 0;  // lower median
    std::size_t max_k = 0;
};

KDistribution make_k_distribution(const std::map<std::size_t, std::size_t>& counts);

struct LengthByKRow {
    std::size_t k = 0;
    std::size_t n_k = 0;
    double mean_length = 0.0;
    double sd_length = 0.0;  // population SD
};

struct TrialRecord {
    PatternId pattern_id = 0;
    std::size_t trial = 0;
    std::size_t pattern_length = 0;
    std::size_t k = 0;
    bool generation_failed = false;  // pattern-based dummies unavailable
};

struct CellResult {
    std::size_t block_size = 0;
    std::optional<std::size_t> dummy_db_size;  // nullopt = full
    std::size_t dummy_db_actual = 0;
    Scenario scenario = Scenario::one_bd;
    std::vector<TrialRecord> trials;  // pattern-major, trial-minor order
    KDistribution kdist;              // over trials with k >= 1
    std::vector<LengthByKRow> length_by_k;
    std::size_t out_of_model = 0;         // trials with k == 0
    std::size_t generation_failures = 0;  // trials that produced no trace
};

struct ExperimentReport {
    std::vector<CellResult> cells;
};

ExperimentReport run_experiment(const ExperimentConfig& cfg);

// Empirical mean k over a cell's trials: the Monte-Carlo counterpart of the
// analytic F(N). Generation failures are excluded.
double mean_detected_patterns(const CellResult& cell);

// Trials grouped by k: how long the patterns behind each identifiability
// level are.
std::vector<LengthByKRow> length_composition(std::span<const TrialRecord> trials);

struct CompareRow {
    std::size_t block_size = 0;
    double analytic_f = 0.0;
    double empirical_mean = 0.0;
    double std_error = 0.0;
    double z_score = 0.0;
    std::size_t trials = 0;
};

// Analytic F(N) next to the simulated mean k (1BD, no dedupe, full dummy
// database) for every configured block size.
std::vector<CompareRow> compare_analytic(const ExperimentConfig& cfg);

// The database an experiment config refers to (loads the file or generates
// the synthetic database with the seed stream derived from master_seed).
PatternDatabase resolve_database(const ExperimentConfig& cfg);

}  // namespace rqsim
