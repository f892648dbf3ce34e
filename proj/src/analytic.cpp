#include "rqsim/analytic.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace rqsim {

namespace {
constexpr double kLogZero = -std::numeric_limits<double>::infinity();
}

LogFactorialTable::LogFactorialTable(std::size_t max_n) : table_(max_n + 1) {
    for (std::size_t i = 0; i <= max_n; ++i) {
        table_[i] = std::lgamma(static_cast<double>(i) + 1.0);
    }
}

double LogFactorialTable::log_factorial(std::size_t n) const {
    if (n >= table_.size()) {
        throw std::invalid_argument("log_factorial argument exceeds table size");
    }
    return table_[n];
}

double LogFactorialTable::log_binomial(std::size_t n, std::size_t k) const {
    if (k > n) return kLogZero;
    return log_factorial(n) - log_factorial(k) - log_factorial(n - k);
}

double log_hypergeometric(std::uint64_t k, std::uint64_t population, std::uint64_t marked,
                          std::uint64_t draws, const LogFactorialTable& lf) {
    if (marked > population) {
        throw std::invalid_argument("marked count exceeds population");
    }
    if (draws > population) {
        throw std::invalid_argument("draw count exceeds population");
    }
    if (k > draws || k > marked || draws - k > population - marked) {
        return kLogZero;
    }
    return lf.log_binomial(marked, k) + lf.log_binomial(population - marked, draws - k) -
           lf.log_binomial(population, draws);
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

ModelInput ModelInput::from_database(const PatternDatabase& db, std::size_t block_size) {
    return from_database(db, block_size, db.all_names().size());
}

ModelInput ModelInput::from_database(const PatternDatabase& db, std::size_t block_size,
                                     std::size_t dummy_db_size) {
    ModelInput in;
    in.dummy_db_size = dummy_db_size;
    in.block_size = block_size;
    in.length_histogram = db.length_histogram();
    in.pattern_count = db.size();
    in.max_length = db.max_length();
    in.validate();
    return in;
}

void ModelInput::validate() const {
    if (block_size < 1) throw std::invalid_argument("block size must be >= 1");
    if (dummy_db_size < 1) throw std::invalid_argument("dummy database size must be >= 1");
    if (block_size - 1 > dummy_db_size) {
        throw std::invalid_argument("block size exceeds the dummy database");
    }
    std::size_t total = 0;
    for (const auto& [len, count] : length_histogram) {
        if (len < 1) throw std::invalid_argument("histogram holds a zero length");
        if (len > max_length) throw std::invalid_argument("histogram length exceeds max_length");
        if (count > dummy_db_size) {
            throw std::invalid_argument("more patterns of one length than dummy names");
        }
        total += count;
    }
    if (total != pattern_count) {
        throw std::invalid_argument("histogram does not sum to the pattern count");
    }
}

AmbiguityModel::AmbiguityModel(ModelInput input)
    : input_(std::move(input)), lf_(input_.dummy_db_size + 1) {
    input_.validate();
    count_by_length_.assign(input_.max_length + 1, 0);
    for (const auto& [len, count] : input_.length_histogram) {
        count_by_length_[len] = count;
    }
}

double AmbiguityModel::log_p_first_block(std::size_t n, std::size_t k) const {
    if (n < 1 || n > input_.max_length) {
        throw std::invalid_argument("pattern length out of range");
    }
    if (k + 1 > input_.block_size) {
        throw std::invalid_argument("cannot draw more pattern beginnings than dummies");
    }
    return log_hypergeometric(k, input_.dummy_db_size, count_by_length_[n],
                              input_.block_size - 1, lf_);
}

double AmbiguityModel::log_q_completion(std::size_t n, std::size_t k, std::size_t M) const {
    if (n < 1 || M < n) {
        throw std::invalid_argument("completion requires 1 <= n <= M");
    }
    const std::size_t q = input_.dummy_db_size;
    const std::size_t required = (n - 1) * k;
    const std::size_t rest_draws = (M - 1) * (input_.block_size - 1);
    if (required > q) {
        throw std::invalid_argument("more required names than the dummy database holds");
    }
    if (rest_draws > q) {
        throw std::invalid_argument("more dummy draws than the dummy database holds");
    }
    if (required > rest_draws) return kLogZero;
    return lf_.log_binomial(q - required, rest_draws - required) -
           lf_.log_binomial(q, rest_draws);
}

double AmbiguityModel::expected_detected(std::size_t M) const {
    if (M < 1 || M > input_.max_length) {
        throw std::invalid_argument("pattern length out of range");
    }
    double expected = 0.0;
    for (std::size_t n = 1; n <= M; ++n) {
        if (count_by_length_[n] == 0) continue;
        const std::size_t k_cap = std::min<std::size_t>(input_.block_size - 1,
                                                        count_by_length_[n]);
        for (std::size_t k = 1; k <= k_cap; ++k) {
            const double log_p = log_p_first_block(n, k);
            if (log_p == kLogZero) continue;
            const double log_q = log_q_completion(n, k, M);
            if (log_q == kLogZero) continue;
            expected += std::exp(log_p + log_q) * static_cast<double>(k);
        }
    }
    return 1.0 + expected;
}

ModelOutput AmbiguityModel::expected_mean() const {
    if (input_.pattern_count == 0) {
        throw std::invalid_argument("expected_mean requires a non-empty pattern database");
    }
    ModelOutput out;
    double weighted = 0.0;
    for (std::size_t m = 1; m <= input_.max_length; ++m) {
        const double e = expected_detected(m);
        out.expected_by_length[m] = e;
        weighted += e * static_cast<double>(count_by_length_[m]);
    }
    out.expected_mean = weighted / static_cast<double>(input_.pattern_count);
    return out;
}

}  // namespace rqsim
