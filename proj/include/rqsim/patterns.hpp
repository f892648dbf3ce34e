#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "rqsim/rng.hpp"

namespace rqsim {

// Thrown by the database loaders; the message names the offending line.
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Lowercases, strips a single trailing dot. Throws std::invalid_argument if
// the result is empty or the input contains whitespace.
std::string normalize_name(std::string_view raw);

// One website's query pattern: the site's own (primary) domain name plus the
// secondary names queried for embedded content. Secondaries keep their input
// order; the pattern length counts the primary.
struct Pattern {
    std::string primary;
    std::vector<std::string> secondaries;

    std::size_t length() const { return 1 + secondaries.size(); }
    bool contains(const std::string& name) const;
    // Primary first, then secondaries in stored order.
    std::vector<std::string> elements() const;
};

// Normalizes all names, drops duplicate secondaries (first occurrence wins)
// and drops the primary from the secondary list.
Pattern make_pattern(std::string_view primary, const std::vector<std::string>& secondaries);

using PatternId = std::uint32_t;

// Immutable collection of patterns with lookup indexes by primary name and by
// pattern length. Primary names need not be unique across patterns; lookup by
// primary returns every match. Safe for concurrent reads once built.
class PatternDatabase {
public:
    PatternDatabase() = default;
    explicit PatternDatabase(std::vector<Pattern> patterns);

    std::size_t size() const { return patterns_.size(); }
    bool empty() const { return patterns_.empty(); }
    const Pattern& pattern(PatternId id) const { return patterns_.at(id); }
    const std::vector<Pattern>& patterns() const { return patterns_; }

    std::span<const PatternId> find_by_primary(const std::string& name) const;
    std::span<const PatternId> find_by_length(std::size_t length) const;

    // Every distinct name in the database, in first-seen order.
    const std::vector<std::string>& all_names() const { return all_names_; }
    bool contains_name(const std::string& name) const { return name_set_.count(name) != 0; }
    std::size_t max_length() const { return max_length_; }
    std::map<std::size_t, std::size_t> length_histogram() const;

private:
    std::vector<Pattern> patterns_;
    std::unordered_map<std::string, std::vector<PatternId>> by_primary_;
    std::unordered_map<std::size_t, std::vector<PatternId>> by_length_;
    std::vector<std::string> all_names_;
    std::unordered_set<std::string> name_set_;
    std::size_t max_length_ = 0;
};

enum class DbFormat { jsonl, csv };

// JSONL: one {"primary": ..., "secondaries": [...]} object per line.
// CSV:   header line, then primary,sec1;sec2;... rows.
PatternDatabase load_pattern_db(std::istream& in, DbFormat format);
PatternDatabase load_pattern_db_file(const std::string& path);  // format from extension
void save_pattern_db(std::ostream& out, const PatternDatabase& db, DbFormat format);
void save_pattern_db_file(const std::string& path, const PatternDatabase& db);

struct DatasetStats {
    std::size_t pattern_count = 0;
    std::size_t unique_name_count = 0;
    double mean_length = 0.0;
    double sd_length = 0.0;  // population SD
    std::size_t max_length = 0;
    std::map<std::size_t, std::size_t> length_histogram;
};

DatasetStats db_stats(const PatternDatabase& db);
std::string to_json(const DatasetStats& stats);

// The client side's pool of valid domain names used for dummy draws.
class DummyDatabase {
public:
    DummyDatabase() = default;
    explicit DummyDatabase(std::vector<std::string> names);

    std::size_t size() const { return names_.size(); }
    const std::vector<std::string>& names() const { return names_; }
    bool contains(const std::string& name) const { return set_.count(name) != 0; }

private:
    std::vector<std::string> names_;
    std::unordered_set<std::string> set_;
};

// Draws whole patterns uniformly without replacement, adding their names to
// the result until exactly `size` unique names are collected; the last
// pattern is truncated name-by-name in stored order if needed.
DummyDatabase build_dummy_db(const PatternDatabase& db, std::size_t size, Rng& rng);
void save_dummy_db(std::ostream& out, const DummyDatabase& dummies);

// Synthetic database generation. Lengths are drawn from a log-normal fitted
// to (mean_length, sd_length), rounded and clamped to [1, max_length]; with
// sd_length == 0 every pattern has length round(mean_length). overlap_rate is
// the probability that a secondary name is re-drawn from names generated for
// earlier patterns instead of being fresh, which models names shared across
// sites; with overlap_rate == 0 all patterns are pairwise disjoint.
struct SynthSpec {
    std::size_t pattern_count = 0;
    double mean_length = 1.0;
    double sd_length = 0.0;
    std::size_t max_length = 315;
    double overlap_rate = 0.0;
};

void validate(const SynthSpec& spec);  // throws std::invalid_argument
PatternDatabase gen_synthetic_db(const SynthSpec& spec, Rng& rng);

SynthSpec synth_spec_from_json(const std::string& text);
std::string to_json(const SynthSpec& spec);

}  // namespace rqsim
