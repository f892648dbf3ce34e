#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <unordered_set>
#include <vector>

#include "rqsim/patterns.hpp"
#include "rqsim/rng.hpp"

namespace rqsim {

enum class Strategy { random_set, pattern_based };

const char* to_string(Strategy s);
Strategy strategy_from_string(const std::string& s);

struct VariableN {
    std::size_t min = 1;
    std::size_t max = 1;
};

struct ClientConfig {
    std::size_t block_size = 1;  // N
    Strategy strategy = Strategy::random_set;
    std::optional<VariableN> variable_n;          // per-block N drawn from [min, max]
    std::optional<std::size_t> padding_multiple;  // pattern_based only, > 1
    bool dedupe_across_blocks = false;            // stub-resolver cache absorbs repeats
};

void validate(const ClientConfig& cfg);  // throws std::invalid_argument

// One range query: the block's real query plus the dummies drawn to hide it.
// `desired` is ground truth and never reaches the adversary views.
struct QueryBlock {
    std::vector<std::string> queries;  // distinct; desired first, then dummies in draw order
    std::string desired;
};

struct Trace {
    std::vector<QueryBlock> blocks;
    PatternId true_pattern_id = 0;
    bool dedupe_across_blocks = false;
};

// What a first-block-distinguishable observer sees: the first block's names,
// the union of every later query, and the raw count T of queries observed
// after the first block. `deduped` records whether cache absorption applied
// when the trace was generated (the length estimator behaves differently).
struct AdversaryView1BD {
    std::unordered_set<std::string> first_block;
    std::unordered_set<std::string> rest_union;
    std::size_t rest_query_count = 0;  // T
    bool deduped = false;
};

// All-blocks-distinguishable observer: the per-block query sets, in order.
struct AdversaryViewABD {
    std::vector<std::unordered_set<std::string>> blocks;
};

// One block per pattern element, primary first; each block holds the desired
// name plus N-1 dummies drawn uniformly without replacement from the dummy
// database minus that name. Draws are independent across blocks.
Trace generate_trace_random(const Pattern& pattern, PatternId pattern_id,
                            const ClientConfig& cfg, const DummyDatabase& dummies,
                            Rng& rng);

// Dummies are whole same-length patterns drawn from the database instead of
// independent names; block i holds the i-th element of the true pattern and
// of every dummy pattern. Missing same-length dummies are built by
// concatenating two shorter patterns whose lengths sum to the target. With
// padding_multiple x, the true pattern is first padded with random database
// names up to the next multiple of x.
Trace generate_trace_pattern_based(const PatternDatabase& db, PatternId true_pattern_id,
                                   const ClientConfig& cfg, Rng& rng);

AdversaryView1BD view_1bd(const Trace& trace);
AdversaryViewABD view_abd(const Trace& trace);

// JSONL: {"blocks": [[...], ...], "dedupe_across_blocks": b,
//         "truth": {"pattern_id": id, "desired": [...]}}
std::string trace_to_json(const Trace& trace);
Trace trace_from_json(const std::string& line);
void save_traces(std::ostream& out, const std::vector<Trace>& traces);
std::vector<Trace> load_traces(std::istream& in);

}  // namespace rqsim
