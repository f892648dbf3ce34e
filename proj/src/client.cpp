#include "rqsim/client.hpp"

#include <algorithm>
#include <istream>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "json.hpp"

namespace rqsim {

const char* to_string(Strategy s) {
    return s == Strategy::random_set ? "random_set" : "pattern_based";
}

Strategy strategy_from_string(const std::string& s) {
    if (s == "random_set") return Strategy::random_set;
    if (s == "pattern_based") return Strategy::pattern_based;
    throw std::invalid_argument("unknown strategy: " + s);
}

void validate(const ClientConfig& cfg) {
    if (cfg.block_size < 1) {
        throw std::invalid_argument("block size must be >= 1");
    }
    if (cfg.variable_n) {
        if (cfg.variable_n->min < 1 || cfg.variable_n->min > cfg.variable_n->max) {
            throw std::invalid_argument("variable N range requires 1 <= min <= max");
        }
        if (cfg.strategy == Strategy::pattern_based) {
            throw std::invalid_argument("variable N applies to the random-set strategy only");
        }
    }
    if (cfg.padding_multiple) {
        if (cfg.strategy != Strategy::pattern_based) {
            throw std::invalid_argument("padding requires the pattern-based strategy");
        }
        if (*cfg.padding_multiple <= 1) {
            throw std::invalid_argument("padding multiple must be > 1");
        }
    }
}

namespace {

// k distinct indices into `names`, skipping `excluded`, uniform without
// replacement. Rejection sampling for small k, partial Fisher-Yates over the
// full candidate list when k is a large fraction of it.
std::vector<std::size_t> draw_indices(const std::vector<std::string>& names,
                                      const std::string& excluded, std::size_t k, Rng& rng) {
    std::vector<std::size_t> out;
    out.reserve(k);
    if (k == 0) return out;
    if (2 * k >= names.size()) {
        std::vector<std::size_t> candidates;
        candidates.reserve(names.size());
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (names[i] != excluded) candidates.push_back(i);
        }
        if (k > candidates.size()) {
            throw std::runtime_error("dummy database too small for block size");
        }
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t j = i + rng.uniform_index(candidates.size() - i);
            std::swap(candidates[i], candidates[j]);
            out.push_back(candidates[i]);
        }
        return out;
    }
    std::unordered_set<std::size_t> picked;
    picked.reserve(k);
    while (out.size() < k) {
        const std::size_t idx = rng.uniform_index(names.size());
        if (names[idx] == excluded) continue;
        if (picked.insert(idx).second) out.push_back(idx);
    }
    return out;
}

std::size_t block_size_for(const ClientConfig& cfg, Rng& rng) {
    if (cfg.variable_n) {
        return static_cast<std::size_t>(
            rng.uniform_range(cfg.variable_n->min, cfg.variable_n->max));
    }
    return cfg.block_size;
}

}  // namespace

Trace generate_trace_random(const Pattern& pattern, PatternId pattern_id,
                            const ClientConfig& cfg, const DummyDatabase& dummies,
                            Rng& rng) {
    validate(cfg);
    if (cfg.strategy != Strategy::random_set) {
        throw std::invalid_argument("generate_trace_random requires the random_set strategy");
    }
    Trace trace;
    trace.true_pattern_id = pattern_id;
    trace.dedupe_across_blocks = cfg.dedupe_across_blocks;
    const std::vector<std::string> elements = pattern.elements();
    trace.blocks.reserve(elements.size());
    for (const std::string& desired : elements) {
        const std::size_t n = block_size_for(cfg, rng);
        const std::size_t available = dummies.size() - (dummies.contains(desired) ? 1 : 0);
        if (n - 1 > available) {
            throw std::runtime_error("dummy database too small for block size " +
                                     std::to_string(n));
        }
        QueryBlock block;
        block.desired = desired;
        block.queries.reserve(n);
        block.queries.push_back(desired);
        for (std::size_t idx : draw_indices(dummies.names(), desired, n - 1, rng)) {
            block.queries.push_back(dummies.names()[idx]);
        }
        trace.blocks.push_back(std::move(block));
    }
    return trace;
}

namespace {

// Uniform draw of `want` distinct ids from `ids`, in place (partial shuffle).
std::vector<PatternId> draw_ids(std::vector<PatternId> ids, std::size_t want, Rng& rng) {
    for (std::size_t i = 0; i < want; ++i) {
        const std::size_t j = i + rng.uniform_index(ids.size() - i);
        std::swap(ids[i], ids[j]);
    }
    ids.resize(want);
    return ids;
}

// Dummy pattern built from two shorter patterns whose lengths sum to the
// target. Pairs are ordered, the two halves must be distinct patterns, and
// pairs are drawn uniformly without replacement across the whole pair space.
class ConcatPairSampler {
public:
    ConcatPairSampler(const PatternDatabase& db, PatternId excluded, std::size_t target_length) {
        for (std::size_t a = 1; a < target_length; ++a) {
            const std::size_t b = target_length - a;
            std::vector<PatternId> bucket_a = filtered(db, a, excluded);
            std::vector<PatternId> bucket_b = filtered(db, b, excluded);
            if (bucket_a.empty() || bucket_b.empty()) continue;
            const std::size_t count = (a == b)
                ? bucket_a.size() * (bucket_a.size() - 1)
                : bucket_a.size() * bucket_b.size();
            if (count == 0) continue;
            buckets_.push_back(Bucket{std::move(bucket_a), std::move(bucket_b), a == b, count});
            total_ += count;
        }
    }

    std::size_t total() const { return total_; }

    std::pair<PatternId, PatternId> draw(Rng& rng) {
        for (;;) {
            const std::size_t code = rng.uniform_index(total_);
            if (!used_.insert(code).second) continue;
            return decode(code);
        }
    }

private:
    struct Bucket {
        std::vector<PatternId> first;
        std::vector<PatternId> second;
        bool diagonal;
        std::size_t count;
    };

    static std::vector<PatternId> filtered(const PatternDatabase& db, std::size_t length,
                                           PatternId excluded) {
        std::vector<PatternId> out;
        for (PatternId id : db.find_by_length(length)) {
            if (id != excluded) out.push_back(id);
        }
        return out;
    }

    std::pair<PatternId, PatternId> decode(std::size_t code) const {
        for (const Bucket& bucket : buckets_) {
            if (code >= bucket.count) {
                code -= bucket.count;
                continue;
            }
            if (bucket.diagonal) {
                const std::size_t n = bucket.first.size();
                const std::size_t i = code / (n - 1);
                std::size_t j = code % (n - 1);
                if (j >= i) ++j;
                return {bucket.first[i], bucket.second[j]};
            }
            return {bucket.first[code / bucket.second.size()],
                    bucket.second[code % bucket.second.size()]};
        }
        throw std::logic_error("pair code out of range");
    }

    std::vector<Bucket> buckets_;
    std::unordered_set<std::size_t> used_;
    std::size_t total_ = 0;
};

}  // namespace

Trace generate_trace_pattern_based(const PatternDatabase& db, PatternId true_pattern_id,
                                   const ClientConfig& cfg, Rng& rng) {
    validate(cfg);
    if (cfg.strategy != Strategy::pattern_based) {
        throw std::invalid_argument(
            "generate_trace_pattern_based requires the pattern_based strategy");
    }
    const Pattern& pattern = db.pattern(true_pattern_id);
    std::vector<std::string> elements = pattern.elements();

    if (cfg.padding_multiple) {
        const std::size_t x = *cfg.padding_multiple;
        const std::size_t padded = ((elements.size() + x - 1) / x) * x;
        const std::size_t extra = padded - elements.size();
        const std::vector<std::string>& names = db.all_names();
        if (extra > names.size() - elements.size()) {
            throw std::runtime_error("not enough database names for padding");
        }
        std::unordered_set<std::string> taken(elements.begin(), elements.end());
        while (elements.size() < padded) {
            const std::string& candidate = names[rng.uniform_index(names.size())];
            if (taken.insert(candidate).second) elements.push_back(candidate);
        }
    }
    const std::size_t target_length = elements.size();
    const std::size_t need = cfg.block_size - 1;

    std::vector<PatternId> exact;
    for (PatternId id : db.find_by_length(target_length)) {
        if (id != true_pattern_id) exact.push_back(id);
    }

    std::vector<std::vector<std::string>> dummy_elements;
    dummy_elements.reserve(need);
    if (exact.size() >= need) {
        for (PatternId id : draw_ids(std::move(exact), need, rng)) {
            dummy_elements.push_back(db.pattern(id).elements());
        }
    } else {
        ConcatPairSampler pairs(db, true_pattern_id, target_length);
        if (exact.size() + pairs.total() < need) {
            throw std::runtime_error("insufficient dummy patterns of length " +
                                     std::to_string(target_length));
        }
        for (PatternId id : exact) {
            dummy_elements.push_back(db.pattern(id).elements());
        }
        while (dummy_elements.size() < need) {
            const auto [first, second] = pairs.draw(rng);
            std::vector<std::string> combined = db.pattern(first).elements();
            const std::vector<std::string> tail = db.pattern(second).elements();
            combined.insert(combined.end(), tail.begin(), tail.end());
            dummy_elements.push_back(std::move(combined));
        }
    }

    Trace trace;
    trace.true_pattern_id = true_pattern_id;
    trace.dedupe_across_blocks = cfg.dedupe_across_blocks;
    trace.blocks.reserve(target_length);
    for (std::size_t i = 0; i < target_length; ++i) {
        QueryBlock block;
        block.desired = elements[i];
        std::unordered_set<std::string> in_block;
        block.queries.push_back(elements[i]);
        in_block.insert(elements[i]);
        for (const auto& dummy : dummy_elements) {
            if (in_block.insert(dummy[i]).second) block.queries.push_back(dummy[i]);
        }
        trace.blocks.push_back(std::move(block));
    }
    return trace;
}

// ---------------------------------------------------------------------------
// Adversary views
// ---------------------------------------------------------------------------

// Cache absorption rule shared by both views: in a dedupe trace a dummy query
// whose name already appeared in an earlier block is answered by the stub
// resolver's cache and never observed. Desired queries are always observed
// (caching of desired names is out of model).
namespace {

template <typename PerBlock>
void walk_observed(const Trace& trace, PerBlock&& per_block) {
    std::unordered_set<std::string> seen;
    for (std::size_t b = 0; b < trace.blocks.size(); ++b) {
        const QueryBlock& block = trace.blocks[b];
        for (const std::string& name : block.queries) {
            const bool observed =
                !trace.dedupe_across_blocks || name == block.desired || !seen.count(name);
            if (observed) per_block(b, name);
        }
        for (const std::string& name : block.queries) seen.insert(name);
    }
}

}  // namespace

AdversaryView1BD view_1bd(const Trace& trace) {
    if (trace.blocks.empty()) {
        throw std::invalid_argument("trace has no blocks");
    }
    AdversaryView1BD view;
    view.deduped = trace.dedupe_across_blocks;
    walk_observed(trace, [&view](std::size_t b, const std::string& name) {
        if (b == 0) {
            view.first_block.insert(name);
        } else {
            ++view.rest_query_count;
            view.rest_union.insert(name);
        }
    });
    return view;
}

AdversaryViewABD view_abd(const Trace& trace) {
    if (trace.blocks.empty()) {
        throw std::invalid_argument("trace has no blocks");
    }
    AdversaryViewABD view;
    view.blocks.resize(trace.blocks.size());
    walk_observed(trace, [&view](std::size_t b, const std::string& name) {
        view.blocks[b].insert(name);
    });
    return view;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

std::string trace_to_json(const Trace& trace) {
    nlohmann::ordered_json j;
    nlohmann::ordered_json blocks = nlohmann::ordered_json::array();
    nlohmann::ordered_json desired = nlohmann::ordered_json::array();
    for (const QueryBlock& block : trace.blocks) {
        blocks.push_back(block.queries);
        desired.push_back(block.desired);
    }
    j["blocks"] = blocks;
    j["dedupe_across_blocks"] = trace.dedupe_across_blocks;
    j["truth"] = {{"pattern_id", trace.true_pattern_id}, {"desired", desired}};
    return j.dump();
}

Trace trace_from_json(const std::string& line) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("invalid trace JSON: ") + e.what());
    }
    Trace trace;
    trace.dedupe_across_blocks = j.value("dedupe_across_blocks", false);
    trace.true_pattern_id = j.at("truth").at("pattern_id").get<PatternId>();
    const auto& blocks = j.at("blocks");
    const auto& desired = j.at("truth").at("desired");
    if (blocks.size() != desired.size()) {
        throw ParseError("trace truth does not match block count");
    }
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        QueryBlock block;
        block.desired = desired[i].get<std::string>();
        block.queries = blocks[i].get<std::vector<std::string>>();
        if (std::find(block.queries.begin(), block.queries.end(), block.desired) ==
            block.queries.end()) {
            throw ParseError("desired name missing from its block");
        }
        trace.blocks.push_back(std::move(block));
    }
    return trace;
}

void save_traces(std::ostream& out, const std::vector<Trace>& traces) {
    for (const Trace& t : traces) out << trace_to_json(t) << '\n';
}

std::vector<Trace> load_traces(std::istream& in) {
    std::vector<Trace> traces;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        traces.push_back(trace_from_json(line));
    }
    return traces;
}

}  // namespace rqsim
