#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace plemc {

/// Frequency axis of a binned PLE sweep. Frequencies are in MHz relative to
/// the nominal resonance (window midpoint 0 by convention); ingestion shifts
/// absolute laser frequencies before anything else sees them.
struct FrequencyWindow {
    double lo = -75.0;
    double hi = 75.0;
    double bin_width = 2.0;

    std::size_t bin_count() const {
        return static_cast<std::size_t>(std::llround((hi - lo) / bin_width));
    }

    double bin_center(std::size_t i) const { return lo + (static_cast<double>(i) + 0.5) * bin_width; }

    double midpoint() const { return 0.5 * (lo + hi); }
    double span() const { return hi - lo; }

    /// Bin index for a frequency in [lo, hi]; the upper edge maps into the
    /// last bin so that quantile-sampled endpoints stay in range.
    std::size_t bin_index(double f_mhz) const {
        if (f_mhz < lo || f_mhz > hi)
            throw std::domain_error("frequency " + std::to_string(f_mhz) + " MHz outside window");
        auto idx = static_cast<std::size_t>((f_mhz - lo) / bin_width);
        const std::size_t n = bin_count();
        return idx >= n ? n - 1 : idx;
    }

    void validate() const {
        if (!(hi > lo)) throw std::invalid_argument("window: hi must exceed lo");
        if (!(bin_width > 0)) throw std::invalid_argument("window: bin_width must be positive");
        // Bin count is the nearest integer to span/width; a 2.2 MHz step over
        // 150 MHz (68.18 bins) is legal and truncates the last partial bin.
        if (bin_count() == 0) throw std::invalid_argument("window: zero bins");
    }

    bool operator==(const FrequencyWindow&) const = default;
};

} // namespace plemc
