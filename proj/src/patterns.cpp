#include "rqsim/patterns.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "json.hpp"

namespace rqsim {

std::string normalize_name(std::string_view raw) {
    std::string out;
    out.reserve(raw.size());
    for (unsigned char c : raw) {
        if (std::isspace(c)) {
            throw std::invalid_argument("domain name contains whitespace: '" + std::string(raw) + "'");
        }
        out.push_back(static_cast<char>(std::tolower(c)));
    }
    if (!out.empty() && out.back() == '.') out.pop_back();
    if (out.empty()) {
        throw std::invalid_argument("empty domain name");
    }
    return out;
}

bool Pattern::contains(const std::string& name) const {
    if (name == primary) return true;
    return std::find(secondaries.begin(), secondaries.end(), name) != secondaries.end();
}

std::vector<std::string> Pattern::elements() const {
    std::vector<std::string> out;
    out.reserve(length());
    out.push_back(primary);
    out.insert(out.end(), secondaries.begin(), secondaries.end());
    return out;
}

Pattern make_pattern(std::string_view primary, const std::vector<std::string>& secondaries) {
    Pattern p;
    p.primary = normalize_name(primary);
    p.secondaries.reserve(secondaries.size());
    std::unordered_set<std::string> seen;
    seen.insert(p.primary);
    for (const auto& raw : secondaries) {
        std::string name = normalize_name(raw);
        if (seen.insert(name).second) {
            p.secondaries.push_back(std::move(name));
        }
    }
    return p;
}

PatternDatabase::PatternDatabase(std::vector<Pattern> patterns)
    : patterns_(std::move(patterns)) {
    for (PatternId id = 0; id < patterns_.size(); ++id) {
        const Pattern& p = patterns_[id];
        by_primary_[p.primary].push_back(id);
        by_length_[p.length()].push_back(id);
        max_length_ = std::max(max_length_, p.length());
        if (name_set_.insert(p.primary).second) all_names_.push_back(p.primary);
        for (const auto& s : p.secondaries) {
            if (name_set_.insert(s).second) all_names_.push_back(s);
        }
    }
}

std::span<const PatternId> PatternDatabase::find_by_primary(const std::string& name) const {
    auto it = by_primary_.find(name);
    if (it == by_primary_.end()) return {};
    return it->second;
}

std::span<const PatternId> PatternDatabase::find_by_length(std::size_t length) const {
    auto it = by_length_.find(length);
    if (it == by_length_.end()) return {};
    return it->second;
}

std::map<std::size_t, std::size_t> PatternDatabase::length_histogram() const {
    std::map<std::size_t, std::size_t> hist;
    for (const auto& [len, ids] : by_length_) hist[len] = ids.size();
    return hist;
}

// ---------------------------------------------------------------------------
// Loading and saving
// ---------------------------------------------------------------------------

namespace {

bool blank_line(const std::string& line) {
    return std::all_of(line.begin(), line.end(),
                       [](unsigned char c) { return std::isspace(c); });
}

Pattern parse_jsonl_line(const std::string& line, std::size_t lineno) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("line " + std::to_string(lineno) + ": invalid JSON: " + e.what());
    }
    if (!j.is_object() || !j.contains("primary") || !j["primary"].is_string()) {
        throw ParseError("line " + std::to_string(lineno) + ": expected object with string field 'primary'");
    }
    std::vector<std::string> secondaries;
    if (j.contains("secondaries")) {
        if (!j["secondaries"].is_array()) {
            throw ParseError("line " + std::to_string(lineno) + ": 'secondaries' must be an array");
        }
        for (const auto& s : j["secondaries"]) {
            if (!s.is_string()) {
                throw ParseError("line " + std::to_string(lineno) + ": secondary names must be strings");
            }
            secondaries.push_back(s.get<std::string>());
        }
    }
    try {
        return make_pattern(j["primary"].get<std::string>(), secondaries);
    } catch (const std::invalid_argument& e) {
        throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
    }
}

Pattern parse_csv_line(const std::string& line, std::size_t lineno) {
    const auto comma = line.find(',');
    std::string primary = (comma == std::string::npos) ? line : line.substr(0, comma);
    std::vector<std::string> secondaries;
    if (comma != std::string::npos) {
        const std::string rest = line.substr(comma + 1);
        std::size_t start = 0;
        while (start <= rest.size()) {
            const auto semi = rest.find(';', start);
            const std::string field =
                rest.substr(start, semi == std::string::npos ? std::string::npos : semi - start);
            if (!field.empty()) secondaries.push_back(field);
            if (semi == std::string::npos) break;
            start = semi + 1;
        }
        if (rest.find(',') != std::string::npos) {
            throw ParseError("line " + std::to_string(lineno) + ": unexpected extra comma");
        }
    }
    try {
        return make_pattern(primary, secondaries);
    } catch (const std::invalid_argument& e) {
        throw ParseError("line " + std::to_string(lineno) + ": " + e.what());
    }
}

}  // namespace

PatternDatabase load_pattern_db(std::istream& in, DbFormat format) {
    std::vector<Pattern> patterns;
    std::string line;
    std::size_t lineno = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (blank_line(line)) continue;
        if (format == DbFormat::csv && !header_seen) {
            header_seen = true;  // header content is not interpreted
            continue;
        }
        patterns.push_back(format == DbFormat::jsonl ? parse_jsonl_line(line, lineno)
                                                     : parse_csv_line(line, lineno));
    }
    if (patterns.empty()) {
        throw ParseError("empty database");
    }
    return PatternDatabase(std::move(patterns));
}

PatternDatabase load_pattern_db_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open database file: " + path);
    }
    const bool csv = path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
    return load_pattern_db(in, csv ? DbFormat::csv : DbFormat::jsonl);
}

void save_pattern_db(std::ostream& out, const PatternDatabase& db, DbFormat format) {
    if (format == DbFormat::csv) {
        out << "primary,secondaries\n";
        for (const Pattern& p : db.patterns()) {
            out << p.primary << ',';
            for (std::size_t i = 0; i < p.secondaries.size(); ++i) {
                if (i) out << ';';
                out << p.secondaries[i];
            }
            out << '\n';
        }
        return;
    }
    for (const Pattern& p : db.patterns()) {
        nlohmann::ordered_json j;
        j["primary"] = p.primary;
        j["secondaries"] = p.secondaries;
        out << j.dump() << '\n';
    }
}

void save_pattern_db_file(const std::string& path, const PatternDatabase& db) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot open output file: " + path);
    }
    const bool csv = path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0;
    save_pattern_db(out, db, csv ? DbFormat::csv : DbFormat::jsonl);
}

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

DatasetStats db_stats(const PatternDatabase& db) {
    if (db.empty()) {
        throw std::invalid_argument("db_stats: empty database");
    }
    DatasetStats s;
    s.pattern_count = db.size();
    s.unique_name_count = db.all_names().size();
    s.length_histogram = db.length_histogram();
    s.max_length = db.max_length();
    double sum = 0.0;
    for (const Pattern& p : db.patterns()) sum += static_cast<double>(p.length());
    s.mean_length = sum / static_cast<double>(db.size());
    double sq = 0.0;
    for (const Pattern& p : db.patterns()) {
        const double d = static_cast<double>(p.length()) - s.mean_length;
        sq += d * d;
    }
    s.sd_length = std::sqrt(sq / static_cast<double>(db.size()));
    return s;
}

std::string to_json(const DatasetStats& stats) {
    nlohmann::ordered_json j;
    j["pattern_count"] = stats.pattern_count;
    j["unique_name_count"] = stats.unique_name_count;
    j["mean_length"] = stats.mean_length;
    j["sd_length"] = stats.sd_length;
    j["max_length"] = stats.max_length;
    nlohmann::ordered_json hist = nlohmann::ordered_json::object();
    for (const auto& [len, count] : stats.length_histogram) {
        hist[std::to_string(len)] = count;
    }
    j["length_histogram"] = hist;
    return j.dump();
}

// ---------------------------------------------------------------------------
// Dummy database
// ---------------------------------------------------------------------------

DummyDatabase::DummyDatabase(std::vector<std::string> names) : names_(std::move(names)) {
    set_.reserve(names_.size());
    for (const auto& n : names_) set_.insert(n);
    if (set_.size() != names_.size()) {
        throw std::invalid_argument("dummy database names must be unique");
    }
}

DummyDatabase build_dummy_db(const PatternDatabase& db, std::size_t size, Rng& rng) {
    if (size < 1 || size > db.all_names().size()) {
        throw std::invalid_argument("dummy database size must be in [1, " +
                                    std::to_string(db.all_names().size()) + "], got " +
                                    std::to_string(size));
    }
    std::vector<PatternId> order(db.size());
    std::iota(order.begin(), order.end(), 0);

    std::vector<std::string> names;
    names.reserve(size);
    std::unordered_set<std::string> seen;
    seen.reserve(size);

    for (std::size_t i = 0; i < order.size() && names.size() < size; ++i) {
        const std::size_t j = i + rng.uniform_index(order.size() - i);
        std::swap(order[i], order[j]);
        const Pattern& p = db.pattern(order[i]);
        for (const std::string& name : p.elements()) {
            if (seen.insert(name).second) {
                names.push_back(name);
                if (names.size() == size) break;
            }
        }
    }
    return DummyDatabase(std::move(names));
}

void save_dummy_db(std::ostream& out, const DummyDatabase& dummies) {
    for (const auto& name : dummies.names()) out << name << '\n';
}

// ---------------------------------------------------------------------------
// Synthetic generation
// ---------------------------------------------------------------------------

void validate(const SynthSpec& spec) {
    if (spec.pattern_count < 1) throw std::invalid_argument("pattern_count must be >= 1");
    if (!(spec.mean_length >= 1.0)) throw std::invalid_argument("mean_length must be >= 1");
    if (!(spec.sd_length >= 0.0)) throw std::invalid_argument("sd_length must be >= 0");
    if (spec.max_length < 1) throw std::invalid_argument("max_length must be >= 1");
    if (!(spec.overlap_rate >= 0.0 && spec.overlap_rate <= 1.0)) {
        throw std::invalid_argument("overlap_rate must be in [0, 1]");
    }
}

namespace {

std::size_t draw_length(const SynthSpec& spec, Rng& rng) {
    if (spec.sd_length == 0.0) {
        const auto len = static_cast<std::size_t>(std::llround(spec.mean_length));
        return std::clamp<std::size_t>(len, 1, spec.max_length);
    }
    // Log-normal parameters from the target first two moments.
    const double ratio = spec.sd_length / spec.mean_length;
    const double sigma2 = std::log1p(ratio * ratio);
    const double mu = std::log(spec.mean_length) - 0.5 * sigma2;
    const double x = rng.lognormal(mu, std::sqrt(sigma2));
    const double capped = std::min(x, static_cast<double>(spec.max_length));
    const auto len = static_cast<std::size_t>(std::llround(capped));
    return std::clamp<std::size_t>(len, 1, spec.max_length);
}

std::string fresh_name(std::size_t counter) {
    return "d" + std::to_string(counter) + ".example";
}

}  // namespace

PatternDatabase gen_synthetic_db(const SynthSpec& spec, Rng& rng) {
    validate(spec);
    std::vector<Pattern> patterns;
    patterns.reserve(spec.pattern_count);
    std::vector<std::string> pool;  // names of completed patterns
    std::size_t counter = 0;

    for (std::size_t i = 0; i < spec.pattern_count; ++i) {
        const std::size_t len = draw_length(spec, rng);
        Pattern p;
        p.primary = fresh_name(counter++);
        std::unordered_set<std::string> in_pattern{p.primary};
        p.secondaries.reserve(len - 1);
        for (std::size_t s = 1; s < len; ++s) {
            std::string name;
            if (spec.overlap_rate > 0.0 && !pool.empty() && rng.bernoulli(spec.overlap_rate)) {
                // re-draw a shared name; fall back to a fresh one if the
                // pattern keeps colliding with itself
                for (int attempt = 0; attempt < 16; ++attempt) {
                    const std::string& candidate = pool[rng.uniform_index(pool.size())];
                    if (!in_pattern.count(candidate)) {
                        name = candidate;
                        break;
                    }
                }
            }
            if (name.empty()) name = fresh_name(counter++);
            in_pattern.insert(name);
            p.secondaries.push_back(std::move(name));
        }
        pool.push_back(p.primary);
        pool.insert(pool.end(), p.secondaries.begin(), p.secondaries.end());
        patterns.push_back(std::move(p));
    }
    return PatternDatabase(std::move(patterns));
}

SynthSpec synth_spec_from_json(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("invalid synthetic spec JSON: ") + e.what());
    }
    SynthSpec spec;
    spec.pattern_count = j.value("pattern_count", std::size_t{0});
    spec.mean_length = j.value("mean_length", 1.0);
    spec.sd_length = j.value("sd_length", 0.0);
    spec.max_length = j.value("max_length", std::size_t{315});
    spec.overlap_rate = j.value("overlap_rate", 0.0);
    validate(spec);
    return spec;
}

std::string to_json(const SynthSpec& spec) {
    nlohmann::ordered_json j;
    j["pattern_count"] = spec.pattern_count;
    j["mean_length"] = spec.mean_length;
    j["sd_length"] = spec.sd_length;
    j["max_length"] = spec.max_length;
    j["overlap_rate"] = spec.overlap_rate;
    return j.dump();
}

}  // namespace rqsim
