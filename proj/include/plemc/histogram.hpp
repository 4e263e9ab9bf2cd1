#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace plemc {

/// Linewidth histogram layout: one collective bin for every fit at or below
/// `narrow_cutoff` (simulations reproduce the pile of unphysically narrow
/// fits only qualitatively, so they are compared in bulk), uniform
/// `base_bin_width` bins up to `hi`, and an open overflow bin beyond.
/// `min_expected` is the merge threshold applied before a chi-square compare.
struct BinningScheme {
    double narrow_cutoff = 15.0; // MHz
    double base_bin_width = 5.0; // MHz
    double hi = 150.0;           // MHz
    double min_expected = 5.0;   // counts

    std::size_t bin_count() const {
        return 1 + static_cast<std::size_t>(std::llround((hi - narrow_cutoff) / base_bin_width));
    }

    /// Index for a linewidth sample: 0 for [0, cutoff), then uniform bins
    /// [cutoff + k w, cutoff + (k+1) w); bin_count() means overflow.
    std::size_t bin_index(double fwhm_mhz) const {
        if (fwhm_mhz < narrow_cutoff) return 0;
        if (fwhm_mhz >= hi) return bin_count();
        return 1 + static_cast<std::size_t>((fwhm_mhz - narrow_cutoff) / base_bin_width);
    }

    void validate() const {
        if (!(narrow_cutoff > 0)) throw std::invalid_argument("binning: narrow_cutoff must be > 0");
        if (!(base_bin_width > 0))
            throw std::invalid_argument("binning: base_bin_width must be > 0");
        if (!(hi > narrow_cutoff)) throw std::invalid_argument("binning: hi must exceed cutoff");
        if (!(min_expected >= 1)) throw std::invalid_argument("binning: min_expected must be >= 1");
    }

    bool operator==(const BinningScheme&) const = default;
};

/// Occurrence counts per linewidth bin. `counts[0]` is the sub-cutoff bin and
/// the overflow tail is kept separate so totals stay conserved.
struct LinewidthHistogram {
    BinningScheme scheme{};
    std::vector<double> counts;   // length scheme.bin_count()
    double overflow = 0.0;
    std::size_t n_samples = 0;    // fits that entered the histogram
    std::size_t source_scans = 0; // scans behind them, pre-filter

    double total() const {
        double t = overflow;
        for (double c : counts) t += c;
        return t;
    }

    /// Bins plus overflow as one vector, the layout chi-square compares use.
    std::vector<double> with_overflow() const {
        std::vector<double> v = counts;
        v.push_back(overflow);
        return v;
    }
};

LinewidthHistogram build_histogram(const std::vector<double>& fwhms, const BinningScheme& scheme);

struct MergedHistograms {
    std::vector<double> observed;
    std::vector<double> expected;
    bool residual_low_bin = false; // leftover group below min_expected, flagged
};

/// Merge adjacent bins from the high-linewidth end inward until every
/// expected entry reaches min_expected. Entries are the with_overflow()
/// layout; the sub-cutoff bin (index 0) is never merged away. Totals are
/// conserved on both histograms.
MergedHistograms merge_bins(const std::vector<double>& observed,
                            const std::vector<double>& expected, const BinningScheme& scheme);

} // namespace plemc
