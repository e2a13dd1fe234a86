#pragma once

#include <span>

namespace bnf {

/// Order statistics of a cluster-index tuple that control the decay of
/// multilinear forms: the largest, second largest and third largest entry
/// (mu, with mu = 1 for pairs) and S = sum_l [n_l - sum_{j != l} n_j]_+ + mu.
struct TupleWeights {
    long max = 0;
    long max2 = 0;
    long mu = 1;
    long S = 1;
};

/// Throws InvalidParameter for tuples shorter than two.
TupleWeights mu_S(std::span<const int> clusters);

}  // namespace bnf
