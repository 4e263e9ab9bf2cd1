#include "plemc/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "plemc/rng.hpp"

namespace plemc {

LinewidthSampleSet collect_samples(const BatchFitSummary& batch) {
    LinewidthSampleSet set;
    set.source_scans = batch.n_scans;
    for (const auto& r : batch.results) {
        if (r.accepted && r.converged) {
            set.fwhms.push_back(r.fwhm);
            set.stderrs.push_back(r.stderr_fwhm);
        }
    }
    set.n_rejected = batch.n_scans - set.fwhms.size();
    return set;
}

double median_value(std::vector<double> samples) {
    if (samples.empty()) throw std::invalid_argument("median: empty sample set");
    const std::size_t n = samples.size();
    const std::size_t mid = n / 2;
    std::nth_element(samples.begin(), samples.begin() + mid, samples.end());
    double m = samples[mid];
    if (n % 2 == 0) {
        const double lower = *std::max_element(samples.begin(), samples.begin() + mid);
        m = 0.5 * (m + lower);
    }
    return m;
}

MedianEstimate median_estimate(const LinewidthSampleSet& set, const BootstrapOptions& opt) {
    set.validate();
    if (set.fwhms.empty()) throw std::invalid_argument("median_estimate: empty sample set");
    if (opt.resamples < 2) throw std::invalid_argument("median_estimate: need >= 2 resamples");
    if (!(opt.level > 0 && opt.level < 1))
        throw std::invalid_argument("median_estimate: level must be in (0, 1)");

    MedianEstimate out;
    out.value = median_value(set.fwhms);

    const std::size_t n = set.fwhms.size();
    std::vector<double> medians(opt.resamples);
    std::vector<double> draw(n);
    for (std::size_t b = 0; b < opt.resamples; ++b) {
        Rng rng = Rng::for_stream(opt.seed, b); // per-resample stream: order-free
        for (std::size_t i = 0; i < n; ++i) draw[i] = set.fwhms[rng.uniform_below(n)];
        medians[b] = median_value(draw);
    }
    std::sort(medians.begin(), medians.end());

    // percentile method, nearest-rank
    const double alpha = 0.5 * (1.0 - opt.level);
    auto rank = [&](double q) {
        const auto i = static_cast<std::size_t>(q * static_cast<double>(opt.resamples));
        return medians[std::min(i, opt.resamples - 1)];
    };
    out.ci_lo = rank(alpha);
    out.ci_hi = rank(1.0 - alpha);
    return out;
}

IvwEstimate ivw_estimate(const LinewidthSampleSet& set) {
    set.validate();
    if (set.fwhms.empty()) throw std::invalid_argument("ivw_estimate: empty sample set");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < set.fwhms.size(); ++i) {
        if (!(set.stderrs[i] > 0))
            throw std::invalid_argument(
                "ivw_estimate: zero standard error; pre-filter unresolved fits");
        const double w = 1.0 / (set.stderrs[i] * set.stderrs[i]);
        num += w * set.fwhms[i];
        den += w;
    }
    return {num / den, 1.0 / std::sqrt(den)};
}

double lognormal_median(const LinewidthSampleSet& set) {
    set.validate();
    if (set.fwhms.size() < 10)
        throw std::invalid_argument("lognormal_median: need at least 10 samples");
    double mean_log = 0.0;
    for (double f : set.fwhms) mean_log += std::log(f);
    mean_log /= static_cast<double>(set.fwhms.size());
    return std::exp(mean_log);
}

LinewidthHistogram build_linewidth_histogram(const LinewidthSampleSet& set,
                                             const BinningScheme& scheme) {
    set.validate();
    LinewidthHistogram h = build_histogram(set.fwhms, scheme);
    h.source_scans = set.source_scans;
    return h;
}

} // namespace plemc
