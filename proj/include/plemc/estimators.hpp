#pragma once

#include <cstdint>
#include <vector>

#include "plemc/fitting.hpp"
#include "plemc/histogram.hpp"

namespace plemc {

/// Fitted linewidths from the accepted, converged scans of one batch,
/// with aligned standard errors and the batch bookkeeping estimators need.
struct LinewidthSampleSet {
    std::vector<double> fwhms;   // MHz
    std::vector<double> stderrs; // MHz, aligned with fwhms; 0 = unresolved
    std::size_t source_scans = 0; // scans before filtering
    std::size_t n_rejected = 0;   // filter rejections plus failed fits

    void validate() const {
        if (fwhms.size() != stderrs.size())
            throw std::invalid_argument("sample set: fwhms and stderrs must align");
        for (double f : fwhms)
            if (!(f > 0)) throw std::invalid_argument("sample set: fwhms must be positive");
        for (double s : stderrs)
            if (!(s >= 0)) throw std::invalid_argument("sample set: stderrs must be >= 0");
    }
};

/// Collect the accepted + converged fits of a batch.
LinewidthSampleSet collect_samples(const BatchFitSummary& batch);

struct BootstrapOptions {
    std::size_t resamples = 2000;
    double level = 0.99;
    std::uint64_t seed = 0;
};

struct MedianEstimate {
    double value = 0.0; // MHz
    double ci_lo = 0.0;
    double ci_hi = 0.0;
};

struct IvwEstimate {
    double value = 0.0;  // MHz
    double stderr_ = 0.0; // MHz, 1/sqrt(sum of weights)
};

/// Sample median (mean of the middle two for even length) with a seeded
/// percentile-bootstrap confidence interval.
MedianEstimate median_estimate(const LinewidthSampleSet& set, const BootstrapOptions& opt = {});

/// Plain median without the bootstrap, for tight loops.
double median_value(std::vector<double> samples);

/// Inverse-variance weighted mean, weights 1/stderr^2. Zero standard errors
/// are an error here; callers pre-filter unresolved fits.
IvwEstimate ivw_estimate(const LinewidthSampleSet& set);

/// Median of a lognormal maximum-likelihood fit: exp(mean of log samples).
/// Needs at least 10 samples.
double lognormal_median(const LinewidthSampleSet& set);

/// Occurrences of the sample linewidths over a binning scheme.
LinewidthHistogram build_linewidth_histogram(const LinewidthSampleSet& set,
                                             const BinningScheme& scheme);

} // namespace plemc
