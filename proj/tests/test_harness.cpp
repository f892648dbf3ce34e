#include "doctest.h"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "rqsim/harness.hpp"

using namespace rqsim;
namespace fs = std::filesystem;

namespace {

SynthSpec disjoint_spec(std::size_t count, double mean, double sd, std::size_t max_len) {
    SynthSpec spec;
    spec.pattern_count = count;
    spec.mean_length = mean;
    spec.sd_length = sd;
    spec.max_length = max_len;
    spec.overlap_rate = 0.0;
    return spec;
}

ExperimentConfig base_config() {
    ExperimentConfig cfg;
    cfg.synth = disjoint_spec(50, 3.0, 2.0, 12);
    cfg.block_sizes = {2};
    cfg.scenarios = {Scenario::one_bd};
    cfg.master_seed = 424242;
    return cfg;
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name)
        : path(fs::temp_directory_path() / ("rqsim_test_" + name)) {
        fs::remove_all(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("experiment config validation") {
    ExperimentConfig cfg = base_config();
    CHECK_NOTHROW(validate(cfg));

    SUBCASE("needs exactly one database source") {
        cfg.db_path = "also-a-file.jsonl";
        CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
        cfg.db_path.clear();
        cfg.synth.reset();
        CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
    }
    SUBCASE("needs block sizes and scenarios") {
        cfg.block_sizes.clear();
        CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
        cfg = base_config();
        cfg.scenarios.clear();
        CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
    }
    SUBCASE("rejects inconsistent client settings up front") {
        cfg.padding_multiple = 2;  // padding without pattern_based
        CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
        cfg = base_config();
        cfg.trials_per_pattern = 0;
        CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
        cfg = base_config();
        cfg.format = "xml";
        CHECK_THROWS_AS(validate(cfg), std::invalid_argument);
    }
    SUBCASE("oversized block sizes are rejected before simulating") {
        cfg.block_sizes = {100000};
        CHECK_THROWS_AS((void)run_experiment(cfg), std::invalid_argument);
    }
}

TEST_CASE("k distribution derivations") {
    const KDistribution d = make_k_distribution({{1, 4}, {2, 3}, {3, 2}, {7, 1}});
    CHECK(d.total == 10);
    CHECK(d.fraction_1_identifiable == doctest::Approx(0.4));
    CHECK(d.fraction_le_5 == doctest::Approx(0.9));
    CHECK(d.median_k == 2);  // lower median of 1111222337
    CHECK(d.max_k == 7);
    CHECK(d.mean_k == doctest::Approx((4 + 6 + 6 + 7) / 10.0));

    CHECK(make_k_distribution({{1, 1}, {2, 1}}).median_k == 1);  // lower of {1,2}
    CHECK(make_k_distribution({{1, 1}, {2, 2}}).median_k == 2);
    CHECK(make_k_distribution({}).total == 0);
}

TEST_CASE("length composition groups trials by k") {
    std::vector<TrialRecord> trials;
    for (std::size_t i = 0; i < 6; ++i) {
        TrialRecord t;
        t.pattern_id = static_cast<PatternId>(i);
        t.pattern_length = 5;
        t.k = (i < 4) ? 1 : 2;
        trials.push_back(t);
    }
    trials.push_back(TrialRecord{.pattern_id = 9, .trial = 0, .pattern_length = 11, .k = 2});
    const auto rows = length_composition(trials);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].k == 1);
    CHECK(rows[0].n_k == 4);
    CHECK(rows[0].mean_length == doctest::Approx(5.0));
    CHECK(rows[0].sd_length == doctest::Approx(0.0));
    CHECK(rows[1].k == 2);
    CHECK(rows[1].n_k == 3);
    CHECK(rows[1].mean_length == doctest::Approx(7.0));
}

TEST_CASE("no obfuscation means every pattern is unambiguous") {
    ExperimentConfig cfg = base_config();
    cfg.block_sizes = {1};
    const ExperimentReport report = run_experiment(cfg);
    REQUIRE(report.cells.size() == 1);
    const CellResult& cell = report.cells[0];
    CHECK(cell.kdist.fraction_1_identifiable == doctest::Approx(1.0));
    CHECK(cell.kdist.median_k == 1);
    CHECK(cell.kdist.max_k == 1);
    CHECK(mean_detected_patterns(cell) == doctest::Approx(1.0));
    CHECK(cell.out_of_model == 0);
    CHECK(cell.generation_failures == 0);
}

TEST_CASE("pattern-based strategy pins k to the block size") {
    ExperimentConfig cfg;
    cfg.synth = disjoint_spec(30, 4.0, 0.0, 10);  // thirty length-4 patterns
    cfg.block_sizes = {3};
    cfg.scenarios = {Scenario::one_bd, Scenario::abd};
    cfg.strategy = Strategy::pattern_based;
    cfg.master_seed = 7;
    const ExperimentReport report = run_experiment(cfg);
    REQUIRE(report.cells.size() == 2);
    for (const CellResult& cell : report.cells) {
        CHECK(cell.kdist.fraction_1_identifiable == doctest::Approx(0.0));
        CHECK(cell.kdist.median_k == 3);
        CHECK(cell.kdist.max_k == 3);
        CHECK(cell.kdist.counts.at(3) == 30);
    }
}

TEST_CASE("impossible dummy constructions are reported, not fatal") {
    // one length-5 and one length-2 pattern: neither can find dummies
    ExperimentConfig cfg;
    cfg.db_path = "";
    std::vector<Pattern> patterns;
    patterns.push_back(make_pattern("a.com", {"a1.com", "a2.com", "a3.com", "a4.com"}));
    patterns.push_back(make_pattern("b.com", {"b1.com"}));
    const fs::path db_path = fs::temp_directory_path() / "rqsim_test_failures.jsonl";
    {
        std::ofstream out(db_path);
        save_pattern_db(out, PatternDatabase(patterns), DbFormat::jsonl);
    }
    cfg.db_path = db_path.string();
    cfg.block_sizes = {2};
    cfg.scenarios = {Scenario::one_bd};
    cfg.strategy = Strategy::pattern_based;
    const ExperimentReport report = run_experiment(cfg);
    CHECK(report.cells[0].generation_failures == 2);
    CHECK(report.cells[0].kdist.total == 0);
    fs::remove(db_path);
}

TEST_CASE("experiment reports are reproducible byte for byte") {
    TempDir dir_a("repro_a");
    TempDir dir_b("repro_b");
    ExperimentConfig cfg = base_config();
    cfg.synth = disjoint_spec(40, 3.0, 2.0, 10);
    cfg.block_sizes = {2, 3};
    cfg.scenarios = {Scenario::one_bd, Scenario::abd};
    cfg.dummy_db_sizes = {std::nullopt, std::optional<std::size_t>{20}};
    cfg.trials_per_pattern = 2;

    cfg.out_dir = dir_a.path.string();
    (void)run_experiment(cfg);
    cfg.out_dir = dir_b.path.string();
    (void)run_experiment(cfg);

    std::vector<fs::path> files_a;
    for (const auto& entry : fs::recursive_directory_iterator(dir_a.path)) {
        if (entry.is_regular_file()) files_a.push_back(entry.path());
    }
    REQUIRE(!files_a.empty());
    // config.json differs by out_dir? it must not: out_dir is not part of the
    // serialized config, so every file should match
    for (const fs::path& a : files_a) {
        const fs::path b = dir_b.path / fs::relative(a, dir_a.path);
        REQUIRE_MESSAGE(fs::exists(b), b.string());
        CHECK_MESSAGE(slurp(a) == slurp(b), a.string());
    }
}

TEST_CASE("report files are emitted with the documented layout") {
    TempDir dir("layout");
    ExperimentConfig cfg = base_config();
    cfg.block_sizes = {2};
    cfg.dummy_db_sizes = {std::nullopt};
    cfg.scenarios = {Scenario::one_bd, Scenario::one_bd_improved};
    cfg.out_dir = dir.path.string();
    (void)run_experiment(cfg);

    CHECK(fs::exists(dir.path / "config.json"));
    CHECK(fs::exists(dir.path / "summary.json"));
    CHECK(fs::exists(dir.path / "length_by_k.csv"));
    CHECK(fs::exists(dir.path / "kdist_2_full_1bd.csv"));
    CHECK(fs::exists(dir.path / "kdist_2_full_1bd_improved.csv"));

    // cumulative distribution ends at one
    std::ifstream in(dir.path / "kdist_2_full_1bd.csv");
    std::string line, last;
    std::getline(in, line);
    CHECK(line == "k,count,fraction,cumulative_fraction");
    while (std::getline(in, line)) {
        if (!line.empty()) last = line;
    }
    CHECK(last.substr(last.rfind(',') + 1) == "1.000000");
}

TEST_CASE("sampling simulates only the requested number of patterns") {
    ExperimentConfig cfg = base_config();
    cfg.synth = disjoint_spec(60, 2.0, 1.0, 8);
    cfg.sample = 10;
    cfg.trials_per_pattern = 3;
    const ExperimentReport report = run_experiment(cfg);
    CHECK(report.cells[0].trials.size() == 30);
}

TEST_CASE("analytic comparison") {
    SUBCASE("no dummies: model and simulation agree exactly") {
        ExperimentConfig cfg = base_config();
        cfg.block_sizes = {1};
        const auto rows = compare_analytic(cfg);
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].analytic_f == doctest::Approx(1.0));
        CHECK(rows[0].empirical_mean == doctest::Approx(1.0));
        CHECK(rows[0].z_score == doctest::Approx(0.0));
    }
    SUBCASE("disjoint database lands near the closed form") {
        ExperimentConfig cfg;
        cfg.synth = disjoint_spec(250, 4.0, 2.0, 12);
        cfg.block_sizes = {5};
        cfg.scenarios = {Scenario::one_bd};
        cfg.trials_per_pattern = 4;
        cfg.master_seed = 99;
        const auto rows = compare_analytic(cfg);
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].trials == 1000);
        CHECK_MESSAGE(std::abs(rows[0].z_score) <= 4.0, rows[0].z_score);
    }
    SUBCASE("configs that break the model assumptions are rejected") {
        ExperimentConfig cfg = base_config();
        cfg.dedupe_across_blocks = true;
        CHECK_THROWS_AS((void)compare_analytic(cfg), std::invalid_argument);
    }
    SUBCASE("heavy name sharing pushes the simulation above the model") {
        // the model treats every needed name as a separate draw; a name shared
        // across many patterns completes all of them at once
        ExperimentConfig cfg;
        SynthSpec spec;
        spec.pattern_count = 300;
        spec.mean_length = 4.0;
        spec.sd_length = 2.0;
        spec.max_length = 12;
        spec.overlap_rate = 0.9;
        cfg.synth = spec;
        cfg.block_sizes = {8};
        cfg.scenarios = {Scenario::one_bd};
        cfg.trials_per_pattern = 20;
        cfg.master_seed = 37;
        const auto rows = compare_analytic(cfg);
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].empirical_mean > rows[0].analytic_f);
        CHECK(rows[0].z_score > 3.0);
    }
}

TEST_CASE("the length filter sharpens the first-block attack") {
    ExperimentConfig cfg;
    cfg.synth = disjoint_spec(800, 13.02, 14.28, 315);
    cfg.block_sizes = {50};
    cfg.scenarios = {Scenario::one_bd, Scenario::one_bd_improved};
    cfg.master_seed = 20240229;
    const ExperimentReport report = run_experiment(cfg);
    REQUIRE(report.cells.size() == 2);
    const CellResult& plain = report.cells[0];
    const CellResult& improved = report.cells[1];
    CHECK(improved.kdist.fraction_1_identifiable > plain.kdist.fraction_1_identifiable);
}

TEST_CASE("larger blocks never shrink the mean detected-pattern count") {
    ExperimentConfig cfg;
    cfg.synth = disjoint_spec(400, 6.0, 4.0, 30);
    cfg.block_sizes = {5, 10, 20};
    cfg.scenarios = {Scenario::one_bd};
    cfg.trials_per_pattern = 4;
    cfg.master_seed = 6;
    const ExperimentReport report = run_experiment(cfg);
    REQUIRE(report.cells.size() == 3);
    double previous = 0.0;
    for (const CellResult& cell : report.cells) {
        const double mean = mean_detected_patterns(cell);
        CHECK(mean >= previous);
        previous = mean;
    }
}
