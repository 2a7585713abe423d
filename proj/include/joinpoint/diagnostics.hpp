#pragma once

#include <vector>

namespace joinpoint {

// Potential scale reduction computed on half-split chains. Returns 1.0 for
// constant input. Chains are truncated to the shortest length.
double split_rhat(const std::vector<std::vector<double>>& chains);

// Multi-chain effective sample size: pooled autocorrelations combined with
// the between-chain variance, summed over Geyer's initial monotone positive
// pair sequence.
double effective_sample_size(const std::vector<std::vector<double>>& chains);

}  // namespace joinpoint
