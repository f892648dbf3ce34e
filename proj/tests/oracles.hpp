// Test-only brute-force oracles. Everything here recomputes probabilities by
// direct enumeration of the draw space and stays independent of the
// implementations it checks.
#pragma once

#include <cstdint>
#include <functional>
#include <vector>

namespace oracles {

// Calls fn for every size-k subset of {0..n-1}.
inline void for_each_combination(std::size_t n, std::size_t k,
                                 const std::function<void(const std::vector<std::size_t>&)>& fn) {
    if (k > n) return;
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = i;
    if (k == 0) {
        fn(idx);
        return;
    }
    for (;;) {
        fn(idx);
        // advance to the next combination
        std::size_t i = k;
        while (i > 0) {
            --i;
            if (idx[i] != i + n - k) break;
            if (i == 0) return;
        }
        if (idx[i] == i + n - k) return;
        ++idx[i];
        for (std::size_t j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
}

inline std::uint64_t binomial_u64(std::uint64_t n, std::uint64_t k) {
    if (k > n) return 0;
    if (k > n - k) k = n - k;
    std::uint64_t result = 1;
    for (std::uint64_t i = 1; i <= k; ++i) {
        result = result * (n - i + 1) / i;  // exact at every step
    }
    return result;
}

// Exact hypergeometric pmf as a ratio of 64-bit binomials (populations <= 30).
inline double hypergeometric_exact(std::uint64_t k, std::uint64_t population,
                                   std::uint64_t marked, std::uint64_t draws) {
    if (k > draws || k > marked || draws - k > population - marked) return 0.0;
    const std::uint64_t numerator =
        binomial_u64(marked, k) * binomial_u64(population - marked, draws - k);
    return static_cast<double>(numerator) /
           static_cast<double>(binomial_u64(population, draws));
}

// Hypergeometric pmf by enumerating every draw (small populations only).
inline double hypergeometric_enumerated(std::size_t k, std::size_t population,
                                        std::size_t marked, std::size_t draws) {
    std::size_t hits = 0;
    std::size_t total = 0;
    for_each_combination(population, draws, [&](const std::vector<std::size_t>& combo) {
        ++total;
        std::size_t in_marked = 0;
        for (std::size_t idx : combo) {
            if (idx < marked) ++in_marked;
        }
        if (in_marked == k) ++hits;
    });
    if (total == 0) return k == 0 ? 1.0 : 0.0;
    return static_cast<double>(hits) / static_cast<double>(total);
}

// A pattern for the detection oracle: element 0 is the primary.
using OraclePattern = std::vector<std::size_t>;

// Expected number of detected patterns for an obfuscated pattern of length M,
// by enumerating every (first block draw, later draw) pair of the modeled
// process: N-1 dummies for the first block and (M-1)*(N-1) dummies for the
// rest, both from a universe of q_size names. Per length n, the count of
// length-n pattern beginnings in the first block is credited only when every
// begun length-n pattern completes in the rest draw; lengths beyond M are
// never credited (the modeled adversary scans candidate lengths only up to
// the obfuscated pattern's length). Patterns must be pairwise disjoint.
inline double expected_detected_enumerated(std::size_t q_size,
                                           const std::vector<OraclePattern>& patterns,
                                           std::size_t block_size, std::size_t m) {
    const std::size_t first_draws = block_size - 1;
    const std::size_t rest_draws = (m - 1) * (block_size - 1);
    double total_contribution = 0.0;
    std::size_t outcome_count = 0;

    std::size_t max_len = 1;
    for (const auto& p : patterns) max_len = std::max(max_len, p.size());
    max_len = std::min(max_len, m);

    for_each_combination(q_size, first_draws, [&](const std::vector<std::size_t>& first) {
        std::vector<bool> in_first(q_size, false);
        for (std::size_t idx : first) in_first[idx] = true;

        for_each_combination(q_size, rest_draws, [&](const std::vector<std::size_t>& rest) {
            std::vector<bool> in_rest(q_size, false);
            for (std::size_t idx : rest) in_rest[idx] = true;
            ++outcome_count;

            for (std::size_t n = 1; n <= max_len; ++n) {
                std::size_t begun = 0;
                bool all_complete = true;
                for (const auto& p : patterns) {
                    if (p.size() != n || !in_first[p[0]]) continue;
                    ++begun;
                    for (std::size_t i = 1; i < p.size(); ++i) {
                        if (!in_rest[p[i]]) all_complete = false;
                    }
                }
                if (begun > 0 && all_complete) {
                    total_contribution += static_cast<double>(begun);
                }
            }
        });
    });
    return 1.0 + total_contribution / static_cast<double>(outcome_count);
}

}  // namespace oracles
