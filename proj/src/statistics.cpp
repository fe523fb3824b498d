#include "loopgibbs/statistics.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <stdexcept>
#include <thread>

namespace loopgibbs {

EstimateWithError batch_means(std::span<const std::vector<double>> series, std::size_t batches_per_series)
{
    if (batches_per_series < 2) throw std::invalid_argument("batch means needs at least two batches");
    EstimateWithError est;
    double mean = 0.0, m2 = 0.0;
    std::size_t n = 0;
    std::vector<double> batch;
    for (const auto& s : series) {
        for (double v : s) {
            ++n;
            const double d = v - mean;
            mean += d / static_cast<double>(n);
            m2 += d * (v - mean);
        }
        const std::size_t len = s.size() / batches_per_series;
        if (len == 0) continue;
        for (std::size_t b = 0; b < batches_per_series; ++b) {
            double acc = 0.0;
            for (std::size_t i = b * len; i < (b + 1) * len; ++i) acc += s[i];
            batch.push_back(acc / static_cast<double>(len));
        }
    }
    est.value = mean;
    est.samples = n;
    if (batch.size() < 2 || n < 2) {
        est.std_error = std::numeric_limits<double>::infinity();
        est.ess = 0.0;
        est.flags.push_back("too few samples for batch means");
        return est;
    }
    double bmean = 0.0;
    for (double b : batch) bmean += b;
    bmean /= static_cast<double>(batch.size());
    double bvar = 0.0;
    for (double b : batch) bvar += (b - bmean) * (b - bmean);
    bvar /= static_cast<double>(batch.size() - 1);
    est.std_error = std::sqrt(bvar / static_cast<double>(batch.size()));
    const double var = m2 / static_cast<double>(n - 1);
    if (est.std_error > 0.0)
        est.ess = std::min(static_cast<double>(n), var / (est.std_error * est.std_error));
    else
        est.ess = static_cast<double>(n);
    return est;
}

EstimateWithError batch_means(const std::vector<double>& series, std::size_t batches)
{
    return batch_means(std::span<const std::vector<double>>(&series, 1), batches);
}

EstimateWithError iid_mean(std::span<const double> values)
{
    EstimateWithError est;
    double mean = 0.0, m2 = 0.0;
    std::size_t n = 0;
    for (double v : values) {
        ++n;
        const double d = v - mean;
        mean += d / static_cast<double>(n);
        m2 += d * (v - mean);
    }
    est.value = mean;
    est.samples = n;
    est.ess = static_cast<double>(n);
    est.std_error = n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n))
                          : std::numeric_limits<double>::infinity();
    return est;
}

double combined_stderr(double sa, double sb) { return std::sqrt(sa * sa + sb * sb); }

double z_score(double a, double sa, double b, double sb)
{
    const double s = combined_stderr(sa, sb);
    if (s == 0.0) return a == b ? 0.0 : std::copysign(std::numeric_limits<double>::infinity(), a - b);
    return (a - b) / s;
}

std::size_t default_workers()
{
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : hc;
}

void parallel_for(std::size_t count, std::size_t workers, const std::function<void(std::size_t)>& fn)
{
    if (workers == 0) workers = default_workers();
    workers = std::min(workers, count);
    if (workers <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    {
        std::vector<std::jthread> pool;
        for (std::size_t w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (std::size_t i = next++; i < count; i = next++) {
                    try {
                        fn(i);
                    } catch (...) {
                        std::lock_guard lock(error_mutex);
                        if (!error) error = std::current_exception();
                    }
                }
            });
        }
    }
    if (error) std::rethrow_exception(error);
}

}  // namespace loopgibbs
