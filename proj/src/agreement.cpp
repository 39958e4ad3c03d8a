#include "aes/agreement.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Core>

#include "aes/rng.hpp"

namespace aes {

void RatingPair::validate() const {
    if (predicted.size() != gold.size()) {
        throw std::invalid_argument("rating pair: length mismatch (" +
                                    std::to_string(predicted.size()) + " vs " +
                                    std::to_string(gold.size()) + ")");
    }
    if (predicted.empty()) throw std::invalid_argument("rating pair: empty vectors");
    if (n_levels < 2) throw std::invalid_argument("rating pair: n_levels must be >= 2");
    for (const auto* v : {&predicted, &gold}) {
        for (int value : *v) {
            if (value < 0 || value >= n_levels) {
                throw std::invalid_argument("rating pair: value " + std::to_string(value) +
                                            " outside [0, " + std::to_string(n_levels - 1) + "]");
            }
        }
    }
}

double qwk(const RatingPair& pair) {
    pair.validate();
    const int levels = pair.n_levels;
    const auto n = static_cast<double>(pair.predicted.size());

    Eigen::ArrayXXd observed = Eigen::ArrayXXd::Zero(levels, levels);
    Eigen::ArrayXd margin_pred = Eigen::ArrayXd::Zero(levels);
    Eigen::ArrayXd margin_gold = Eigen::ArrayXd::Zero(levels);
    for (std::size_t k = 0; k < pair.predicted.size(); ++k) {
        observed(pair.predicted[k], pair.gold[k]) += 1.0;
        margin_pred(pair.predicted[k]) += 1.0;
        margin_gold(pair.gold[k]) += 1.0;
    }
    observed /= n;
    margin_pred /= n;
    margin_gold /= n;

    Eigen::ArrayXXd expected =
        (margin_pred.matrix() * margin_gold.matrix().transpose()).array();

    const double denom = static_cast<double>(levels - 1) * static_cast<double>(levels - 1);
    Eigen::ArrayXXd weights(levels, levels);
    for (int i = 0; i < levels; ++i) {
        for (int j = 0; j < levels; ++j) {
            weights(i, j) = static_cast<double>((i - j) * (i - j)) / denom;
        }
    }

    const double weighted_observed = (weights * observed).sum();
    const double weighted_expected = (weights * expected).sum();
    if (weighted_expected == 0.0) {
        // Both vectors constant. Identical constants give perfect agreement;
        // the mismatch branch is unreachable for equal-length vectors but
        // keeps the function total.
        return weighted_observed == 0.0 ? 1.0 : -1.0;
    }
    return 1.0 - weighted_observed / weighted_expected;
}

double qwk_oracle(const RatingPair& pair) {
    pair.validate();
    const std::size_t n = pair.predicted.size();

    double diag = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double d = pair.predicted[k] - pair.gold[k];
        diag += d * d;
    }
    diag /= static_cast<double>(n);

    double cross = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t l = 0; l < n; ++l) {
            const double d = pair.predicted[k] - pair.gold[l];
            cross += d * d;
        }
    }
    cross /= static_cast<double>(n) * static_cast<double>(n);

    if (cross == 0.0) return diag == 0.0 ? 1.0 : -1.0;
    return 1.0 - diag / cross;
}

std::vector<double> bootstrap_samples(const RatingPair& pair, int iters, std::uint64_t seed,
                                      int* degenerate_count) {
    pair.validate();
    if (iters < 1) throw std::invalid_argument("bootstrap: iters must be >= 1");

    const std::size_t n = pair.predicted.size();
    CounterRng rng(seed);
    int degenerate = 0;

    std::vector<double> samples;
    samples.reserve(static_cast<std::size_t>(iters));
    RatingPair resample;
    resample.n_levels = pair.n_levels;
    resample.predicted.resize(n);
    resample.gold.resize(n);
    for (int it = 0; it < iters; ++it) {
        bool pred_constant = true;
        bool gold_constant = true;
        for (std::size_t k = 0; k < n; ++k) {
            const auto idx = static_cast<std::size_t>(rng.bounded(n));
            resample.predicted[k] = pair.predicted[idx];
            resample.gold[k] = pair.gold[idx];
            pred_constant = pred_constant && resample.predicted[k] == resample.predicted[0];
            gold_constant = gold_constant && resample.gold[k] == resample.gold[0];
        }
        if (pred_constant && gold_constant) ++degenerate;
        samples.push_back(qwk(resample));
    }
    if (degenerate_count) *degenerate_count = degenerate;
    return samples;
}

namespace {

// Empirical percentile with linear interpolation between order statistics
// (h = (n-1)p), the convention numpy calls "linear".
double percentile(const std::vector<double>& sorted, double p) {
    const auto n = sorted.size();
    if (n == 1) return sorted[0];
    const double h = static_cast<double>(n - 1) * p;
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= n) return sorted[n - 1];
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

}  // namespace

BootstrapCi bootstrap_ci(const RatingPair& pair, int iters, std::uint64_t seed, double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw std::invalid_argument("bootstrap: alpha must be in (0, 1)");
    }
    BootstrapCi ci;
    auto samples = bootstrap_samples(pair, iters, seed, &ci.degenerate_resamples);
    std::sort(samples.begin(), samples.end());
    ci.low = percentile(samples, alpha / 2.0);
    ci.high = percentile(samples, 1.0 - alpha / 2.0);
    return ci;
}

}  // namespace aes
