#include "evalq/common.hpp"

#include <atomic>
#include <cmath>
#include <thread>
#include <vector>

namespace evalq {

NumericPolicy& numeric_policy() {
    static NumericPolicy policy;
    return policy;
}

std::vector<double> chunked_samples(std::size_t samples, int workers, const Rng& base,
                                    const std::function<double(Rng&)>& one_sample) {
    constexpr std::size_t kChunk = 256;
    std::vector<double> out(samples);
    const std::size_t chunks = (samples + kChunk - 1) / kChunk;
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (;;) {
            std::size_t c = next.fetch_add(1);
            if (c >= chunks) return;
            Rng rng = base.child(c);
            std::size_t lo = c * kChunk, hi = std::min(samples, lo + kChunk);
            for (std::size_t i = lo; i < hi; ++i) out[i] = one_sample(rng);
        }
    };
    if (workers <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
    return out;
}

double jackknife_stderr(const std::vector<double>& values) {
    const std::size_t m = values.size();
    if (m < 2) return 0.0;
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean = sum / double(m);
    double ss = 0.0;
    for (double v : values) {
        // leave-one-out mean
        double loo = (sum - v) / double(m - 1);
        ss += (loo - mean) * (loo - mean);
    }
    return std::sqrt(ss * double(m - 1) / double(m));
}

MonteCarloEstimate mean_estimate(const std::vector<double>& values) {
    MonteCarloEstimate e;
    e.samples = values.size();
    if (values.empty()) return e;
    double sum = 0.0;
    for (double v : values) sum += v;
    e.value = sum / double(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - e.value) * (v - e.value);
        e.stderr_ = std::sqrt(ss / double(values.size() - 1) / double(values.size()));
    }
    return e;
}

MonteCarloEstimate variance_estimate(const std::vector<double>& values) {
    MonteCarloEstimate e;
    const std::size_t m = values.size();
    e.samples = m;
    if (m < 2) return e;
    double sum = 0.0, sq = 0.0;
    for (double v : values) {
        sum += v;
        sq += v * v;
    }
    const double mean = sum / double(m);
    e.value = (sq - double(m) * mean * mean) / double(m - 1);
    if (m < 3) return e;

    // jackknife the variance estimator itself: se^2 = (m-1)/m sum (loo_i - loo_bar)^2
    std::vector<double> loo(m);
    double loo_sum = 0;
    for (std::size_t i = 0; i < m; ++i) {
        double s = sum - values[i];
        double q = sq - values[i] * values[i];
        double mu = s / double(m - 1);
        loo[i] = (q - double(m - 1) * mu * mu) / double(m - 2);
        loo_sum += loo[i];
    }
    double loo_bar = loo_sum / double(m);
    double ss = 0;
    for (double v : loo) ss += (v - loo_bar) * (v - loo_bar);
    e.stderr_ = std::sqrt(ss * double(m - 1) / double(m));
    return e;
}

} // namespace evalq
