#include "rqsim/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "json.hpp"

namespace rqsim {

const char* to_string(Scenario s) {
    switch (s) {
        case Scenario::one_bd: return "1bd";
        case Scenario::one_bd_improved: return "1bd_improved";
        case Scenario::abd: return "abd";
    }
    return "?";
}

Scenario scenario_from_string(const std::string& s) {
    if (s == "1bd") return Scenario::one_bd;
    if (s == "1bd_improved") return Scenario::one_bd_improved;
    if (s == "abd") return Scenario::abd;
    throw std::invalid_argument("unknown scenario: " + s);
}

bool AttackResult::contains(PatternId id) const {
    return std::binary_search(matches.begin(), matches.end(), id);
}

std::size_t k_identifiability(const AttackResult& result) { return result.k(); }

std::string to_json(const AttackResult& result, const PatternDatabase& db) {
    nlohmann::ordered_json j;
    j["scenario"] = to_string(result.scenario);
    j["k"] = result.k();
    nlohmann::ordered_json primaries = nlohmann::ordered_json::array();
    for (PatternId id : result.matches) primaries.push_back(db.pattern(id).primary);
    j["matches"] = primaries;
    return j.dump();
}

// ---------------------------------------------------------------------------
// 1BD
// ---------------------------------------------------------------------------

namespace {

bool secondaries_contained(const Pattern& pattern,
                           const std::unordered_set<std::string>& names) {
    for (const std::string& s : pattern.secondaries) {
        if (!names.count(s)) return false;
    }
    return true;
}

}  // namespace

AttackResult attack_1bd(const AdversaryView1BD& view, const PatternDatabase& db) {
    if (view.first_block.empty()) {
        throw std::invalid_argument("first block is empty");
    }
    AttackResult result;
    result.scenario = Scenario::one_bd;
    for (const std::string& name : view.first_block) {
        for (PatternId id : db.find_by_primary(name)) {
            if (secondaries_contained(db.pattern(id), view.rest_union)) {
                result.matches.push_back(id);
            }
        }
    }
    std::sort(result.matches.begin(), result.matches.end());
    return result;
}

LengthEstimate estimate_length(const AdversaryView1BD& view, std::size_t block_size,
                               std::size_t slack) {
    if (block_size < 1) {
        throw std::invalid_argument("block size must be >= 1");
    }
    const std::size_t t = view.rest_query_count;
    if (!view.deduped && t % block_size == 0) {
        // every later block contributed exactly block_size queries
        const std::size_t len = t / block_size + 1;
        return LengthEstimate{len, len};
    }
    const std::size_t min_len = (t + block_size - 1) / block_size + 1;
    return LengthEstimate{min_len, min_len + slack};
}

AttackResult attack_1bd_improved(const AdversaryView1BD& view, const PatternDatabase& db,
                                 std::size_t block_size, std::size_t slack) {
    const LengthEstimate estimate = estimate_length(view, block_size, slack);
    AttackResult result = attack_1bd(view, db);
    result.scenario = Scenario::one_bd_improved;
    std::erase_if(result.matches, [&](PatternId id) {
        return !estimate.contains(db.pattern(id).length());
    });
    return result;
}

std::size_t conservative_slack(std::size_t max_pattern_length, std::size_t block_size,
                               std::size_t dummy_db_size) {
    if (block_size < 1 || dummy_db_size < 1) {
        throw std::invalid_argument("block size and dummy database size must be >= 1");
    }
    const double l = static_cast<double>(max_pattern_length);
    const double n = static_cast<double>(block_size);
    // Expected absorptions are bounded by (N-1)*N*L*(L-1)/(2*|Q|); add six
    // standard deviations of the Poisson bound, then convert to whole
    // length-steps of N absorptions each.
    const double mu = (n - 1.0) * n * l * (l - 1.0) / (2.0 * static_cast<double>(dummy_db_size));
    const double bound = mu + 6.0 * std::sqrt(mu) + 1.0;
    const auto slack = static_cast<std::size_t>(std::ceil(bound / n));
    return std::min(slack, max_pattern_length);
}

// ---------------------------------------------------------------------------
// ABD
// ---------------------------------------------------------------------------

namespace detail {

namespace {

// Augmenting-path bipartite matching between the pattern's secondaries and
// blocks 1..B-1, edge = "element occurs in the block". Sizes are bounded by
// the longest pattern, so the O(V*E) algorithm is plenty.
class AssignmentCheck {
public:
    AssignmentCheck(const std::vector<std::string>& secondaries,
                    const std::vector<std::unordered_set<std::string>>& blocks)
        : adjacency_(secondaries.size()), matched_elem_(blocks.size() - 1, kUnmatched) {
        for (std::size_t e = 0; e < secondaries.size(); ++e) {
            for (std::size_t b = 1; b < blocks.size(); ++b) {
                if (blocks[b].count(secondaries[e])) {
                    adjacency_[e].push_back(b - 1);
                }
            }
        }
    }

    bool complete() {
        for (std::size_t e = 0; e < adjacency_.size(); ++e) {
            visited_.assign(matched_elem_.size(), false);
            if (!augment(e)) return false;
        }
        return true;
    }

private:
    static constexpr std::size_t kUnmatched = static_cast<std::size_t>(-1);

    bool augment(std::size_t elem) {
        for (std::size_t block : adjacency_[elem]) {
            if (visited_[block]) continue;
            visited_[block] = true;
            if (matched_elem_[block] == kUnmatched || augment(matched_elem_[block])) {
                matched_elem_[block] = elem;
                return true;
            }
        }
        return false;
    }

    std::vector<std::vector<std::size_t>> adjacency_;
    std::vector<std::size_t> matched_elem_;
    std::vector<bool> visited_;
};

}  // namespace

bool abd_plausible(const Pattern& pattern,
                   const std::vector<std::unordered_set<std::string>>& blocks,
                   bool use_prefilters) {
    if (blocks.empty() || pattern.length() != blocks.size()) return false;
    if (!blocks[0].count(pattern.primary)) return false;

    if (use_prefilters) {
        // (a) every block holds at least one pattern element
        for (const auto& block : blocks) {
            bool hit = false;
            if (block.count(pattern.primary)) {
                hit = true;
            } else {
                for (const std::string& s : pattern.secondaries) {
                    if (block.count(s)) {
                        hit = true;
                        break;
                    }
                }
            }
            if (!hit) return false;
        }
        // (b) every pattern element occurs in some block
        for (const std::string& s : pattern.secondaries) {
            bool found = false;
            for (const auto& block : blocks) {
                if (block.count(s)) {
                    found = true;
                    break;
                }
            }
            if (!found) return false;
        }
    }

    // (c) one element per block: primary takes the first block, the
    // secondaries must match one-to-one onto the remaining blocks
    return AssignmentCheck(pattern.secondaries, blocks).complete();
}

}  // namespace detail

AttackResult attack_abd(const AdversaryViewABD& view, const PatternDatabase& db) {
    for (const auto& block : view.blocks) {
        if (block.empty()) {
            throw std::invalid_argument("observed blocks must be non-empty");
        }
    }
    if (view.blocks.empty()) {
        throw std::invalid_argument("no blocks observed");
    }
    AttackResult result;
    result.scenario = Scenario::abd;
    for (const std::string& name : view.blocks[0]) {
        for (PatternId id : db.find_by_primary(name)) {
            const Pattern& q = db.pattern(id);
            if (q.length() != view.blocks.size()) continue;
            if (detail::abd_plausible(q, view.blocks, /*use_prefilters=*/true)) {
                result.matches.push_back(id);
            }
        }
    }
    std::sort(result.matches.begin(), result.matches.end());
    return result;
}

}  // namespace rqsim
