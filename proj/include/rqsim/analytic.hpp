#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <vector>

#include "rqsim/patterns.hpp"

namespace rqsim {

// Precomputed log-factorials so binomial coefficients over populations in the
// hundreds of thousands can be combined in log space; direct evaluation of
// C(200000, 99) overflows every fixed-width type.
class LogFactorialTable {
public:
    explicit LogFactorialTable(std::size_t max_n);

    std::size_t max_n() const { return table_.size() - 1; }
    double log_factorial(std::size_t n) const;
    // log C(n, k); -inf when k > n.
    double log_binomial(std::size_t n, std::size_t k) const;

private:
    std::vector<double> table_;
};

// log of the hypergeometric pmf: probability of k marked elements when
// drawing `draws` out of `population` of which `marked` are marked. Returns
// -inf for impossible k; throws when draws > population or marked > population.
double log_hypergeometric(std::uint64_t k, std::uint64_t population, std::uint64_t marked,
                          std::uint64_t draws, const LogFactorialTable& lf);

// Database-side quantities the closed-form model needs: the dummy database
// size |Q|, the block size N, and the pattern-count histogram by length.
struct ModelInput {
    std::size_t dummy_db_size = 0;  // |Q|
    std::size_t block_size = 1;     // N
    std::map<std::size_t, std::size_t> length_histogram;
    std::size_t pattern_count = 0;  // |P|
    std::size_t max_length = 0;     // L

    static ModelInput from_database(const PatternDatabase& db, std::size_t block_size);
    static ModelInput from_database(const PatternDatabase& db, std::size_t block_size,
                                    std::size_t dummy_db_size);
    void validate() const;  // throws std::invalid_argument
};

struct ModelOutput {
    double expected_mean = 1.0;                         // F(N)
    std::map<std::size_t, double> expected_by_length;   // M -> E(M)
};

// Closed-form model of ambiguous attack results: the expected number of
// foreign patterns a client draws completely by accident while obfuscating a
// pattern of a given length. Overlaps between patterns are deliberately
// disregarded, so simulations on overlapping databases run slightly above
// the model.
class AmbiguityModel {
public:
    explicit AmbiguityModel(ModelInput input);

    const ModelInput& input() const { return input_; }

    // log probability of drawing exactly k primaries of length-n patterns
    // among the N-1 dummies of the first block.
    double log_p_first_block(std::size_t n, std::size_t k) const;

    // log probability that the (n-1)*k names completing those k patterns all
    // occur among the (M-1)*(N-1) dummies drawn after the first block, where
    // M is the obfuscated pattern's length.
    double log_q_completion(std::size_t n, std::size_t k, std::size_t M) const;

    // E(M): 1 (the pattern actually visited) plus the expected number of
    // accidentally completed foreign patterns.
    double expected_detected(std::size_t M) const;

    // F(N): E(M) averaged over the database's length histogram.
    ModelOutput expected_mean() const;

private:
    ModelInput input_;
    LogFactorialTable lf_;
    std::vector<std::size_t> count_by_length_;  // dense, index 0..L
};

}  // namespace rqsim
