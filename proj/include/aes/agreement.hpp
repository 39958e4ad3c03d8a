#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace aes {

/// Paired ordinal ratings over a fixed scale of n_levels possible values.
/// n_levels is the declared rubric range (6 for 0-5 traits, 3 for
/// Relevance, 33 for the total), never the observed range.
struct RatingPair {
    std::vector<int> predicted;
    std::vector<int> gold;
    int n_levels = 2;

    /// Throws std::invalid_argument on length mismatch, empty vectors,
    /// n_levels < 2, or out-of-range values.
    void validate() const;
};

/// Quadratic Weighted Kappa: 1 - sum(w*O)/sum(w*E) with
/// w(i,j) = (i-j)^2/(N-1)^2, O the normalized joint frequency matrix and
/// E the outer product of the marginals. Degenerate case sum(w*E) == 0
/// (both vectors constant): 1.0 when sum(w*O) == 0, else -1.0.
double qwk(const RatingPair& pair);

/// Independent oracle via the literal pairwise form:
/// 1 - mean_k (p_k - g_k)^2 / mean_{k,l} (p_k - g_l)^2.
/// Algebraically identical to qwk; shares no code with it.
double qwk_oracle(const RatingPair& pair);

struct BootstrapCi {
    double low = 0.0;
    double high = 0.0;
    int degenerate_resamples = 0;
};

/// The resampled kappa values themselves; a pure function of
/// (pair, iters, seed).
std::vector<double> bootstrap_samples(const RatingPair& pair, int iters, std::uint64_t seed,
                                      int* degenerate_count = nullptr);

/// Percentile bootstrap: paired resampling with replacement, empirical
/// (alpha/2, 1-alpha/2) percentiles with linear interpolation.
BootstrapCi bootstrap_ci(const RatingPair& pair, int iters, std::uint64_t seed, double alpha);

/// Per-group agreement summary (one trait or the total).
struct AgreementResult {
    std::string label;
    double qwk_value = 0.0;
    double ci_low = 0.0;
    double ci_high = 0.0;
    int n_essays = 0;
    int bootstrap_iters = 0;
    std::uint64_t seed = 0;
    int degenerate_resamples = 0;
};

}  // namespace aes
