#include "plemc/histogram.hpp"

#include <cmath>

#include "plemc/errors.hpp"

namespace plemc {

LinewidthHistogram build_histogram(const std::vector<double>& fwhms, const BinningScheme& scheme) {
    scheme.validate();
    LinewidthHistogram h;
    h.scheme = scheme;
    h.counts.assign(scheme.bin_count(), 0.0);
    h.n_samples = fwhms.size();
    for (double f : fwhms) {
        const std::size_t i = scheme.bin_index(f);
        if (i >= h.counts.size())
            h.overflow += 1.0;
        else
            h.counts[i] += 1.0;
    }
    return h;
}

MergedHistograms merge_bins(const std::vector<double>& observed,
                            const std::vector<double>& expected, const BinningScheme& scheme) {
    scheme.validate();
    if (observed.size() != expected.size())
        throw std::invalid_argument("merge_bins: observed and expected must share the binning");
    if (observed.size() != scheme.bin_count() + 1)
        throw std::invalid_argument("merge_bins: histograms must use the with_overflow layout");

    double total_expected_above = 0.0;
    for (std::size_t i = 1; i < expected.size(); ++i) total_expected_above += expected[i];
    double total_expected = total_expected_above + expected[0];
    if (total_expected < scheme.min_expected)
        throw BinningError("merge_bins: total expected occurrences below the merge threshold");

    MergedHistograms out;

    // Merge above-cutoff bins from the high end inward; groups that end up
    // short are folded into their right-hand neighbor. Only the sub-cutoff
    // bin may remain below threshold (it is never merged), flagged below.
    std::vector<double> obs_groups, exp_groups; // built right to left
    double o_acc = 0.0, e_acc = 0.0;
    for (std::size_t i = observed.size(); i-- > 1;) {
        o_acc += observed[i];
        e_acc += expected[i];
        if (e_acc >= scheme.min_expected) {
            obs_groups.push_back(o_acc);
            exp_groups.push_back(e_acc);
            o_acc = 0.0;
            e_acc = 0.0;
        }
    }
    if (e_acc > 0.0 || o_acc > 0.0) {
        if (!exp_groups.empty()) {
            obs_groups.back() += o_acc;
            exp_groups.back() += e_acc;
        } else {
            obs_groups.push_back(o_acc);
            exp_groups.push_back(e_acc);
            out.residual_low_bin = true;
        }
    }

    out.observed.push_back(observed[0]);
    out.expected.push_back(expected[0]);
    if (expected[0] < scheme.min_expected) out.residual_low_bin = true;
    for (std::size_t i = obs_groups.size(); i-- > 0;) {
        out.observed.push_back(obs_groups[i]);
        out.expected.push_back(exp_groups[i]);
    }
    return out;
}

} // namespace plemc
