#pragma once

#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

#include "rqsim/client.hpp"
#include "rqsim/patterns.hpp"

namespace rqsim {

enum class Scenario { one_bd, one_bd_improved, abd };

const char* to_string(Scenario s);
Scenario scenario_from_string(const std::string& s);

// The set of database patterns consistent with an observed trace. Its
// cardinality is the trace's k-identifiability.
struct AttackResult {
    Scenario scenario = Scenario::one_bd;
    std::vector<PatternId> matches;  // sorted ascending

    std::size_t k() const { return matches.size(); }
    bool contains(PatternId id) const;
};

std::size_t k_identifiability(const AttackResult& result);

std::string to_json(const AttackResult& result, const PatternDatabase& db);

// Matches every pattern whose primary is in the first block and whose
// secondaries are all contained in the union of the later blocks. Length-1
// patterns match on the primary alone.
AttackResult attack_1bd(const AdversaryView1BD& view, const PatternDatabase& db);

// Candidate range of the hidden pattern's length, inferred from the number of
// queries observed after the first block. Without cache absorption the count
// determines the length exactly; otherwise the range is
// [ceil(T/N)+1, ceil(T/N)+1+slack].
struct LengthEstimate {
    std::size_t min_len = 1;
    std::size_t max_len = 1;

    bool contains(std::size_t length) const { return min_len <= length && length <= max_len; }
};

LengthEstimate estimate_length(const AdversaryView1BD& view, std::size_t block_size,
                               std::size_t slack = 1);

// attack_1bd with matches outside the estimated length range dropped.
AttackResult attack_1bd_improved(const AdversaryView1BD& view, const PatternDatabase& db,
                                 std::size_t block_size, std::size_t slack = 1);

// Slack that keeps the deduped length estimate sound with overwhelming
// probability for patterns up to max_pattern_length: cache absorption removes
// roughly Poisson-many dummy queries, and the estimate shifts by one per
// block_size absorptions. Capped at max_pattern_length, which makes the
// window unconditionally sound.
std::size_t conservative_slack(std::size_t max_pattern_length, std::size_t block_size,
                               std::size_t dummy_db_size);

// Matches every pattern with the observed number of blocks whose primary is
// in the first block and whose elements are dispersed plausibly: each block
// holds at least one element, each element occurs in some block, and the
// pattern can be assembled by taking one element per block (primary from the
// first block, secondaries matched one-to-one to the later blocks).
AttackResult attack_abd(const AdversaryViewABD& view, const PatternDatabase& db);

namespace detail {
// Full plausibility check; `use_prefilters` toggles the cheap rejection tests
// that the assembly check subsumes (exposed so tests can assert equivalence).
bool abd_plausible(const Pattern& pattern,
                   const std::vector<std::unordered_set<std::string>>& blocks,
                   bool use_prefilters);
}  // namespace detail

}  // namespace rqsim
