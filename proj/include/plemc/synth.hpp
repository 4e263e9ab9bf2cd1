#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "plemc/rng.hpp"
#include "plemc/window.hpp"

namespace plemc {

/// Generative model of one PLE acquisition setting. `true_fwhm` is the full
/// width of the emission line; the Cauchy sampler receives half of it.
struct ScanModel {
    double true_fwhm = 20.0;   // MHz
    double mean_photons = 25.0; // signal counts per scan in the window
    double photon_sigma = 6.0;  // std dev of the signal count draw
    double noise_mean = 2.0;    // Poisson background counts per scan in the window
    FrequencyWindow window{};
    std::uint64_t seed = 0;

    double cauchy_gamma() const { return 0.5 * true_fwhm; }

    void validate() const {
        window.validate();
        if (!(true_fwhm > 0)) throw std::invalid_argument("model: true_fwhm must be > 0");
        if (!(mean_photons >= 0)) throw std::invalid_argument("model: mean_photons must be >= 0");
        if (!(photon_sigma >= 0)) throw std::invalid_argument("model: photon_sigma must be >= 0");
        if (!(noise_mean >= 0)) throw std::invalid_argument("model: noise_mean must be >= 0");
    }
};

enum class ScanProvenance { synthetic, ingested };

/// One binned PLE sweep.
struct Scan {
    FrequencyWindow window{};
    std::vector<std::uint32_t> counts;
    ScanProvenance provenance = ScanProvenance::synthetic;
    std::uint64_t index = 0;

    std::uint64_t total_counts() const {
        std::uint64_t t = 0;
        for (auto c : counts) t += c;
        return t;
    }
    std::uint32_t max_bin_count() const {
        std::uint32_t m = 0;
        for (auto c : counts) m = std::max(m, c);
        return m;
    }
    std::size_t nonzero_bins() const {
        std::size_t n = 0;
        for (auto c : counts) n += (c != 0);
        return n;
    }
};

/// Scan plus the latent draws that produced it, for conservation checks.
struct InstrumentedScan {
    Scan scan;
    std::uint64_t signal_count = 0;
    std::uint64_t noise_count = 0;
};

/// Signal photon number: N(mean, sigma) clamped at zero, rounded to nearest.
/// Consumes two uniforms when sigma > 0, none otherwise.
std::uint64_t draw_photon_count(double mean, double sigma, Rng& rng);

/// One synthetic scan. Draw order is pinned: signal count, signal positions
/// (truncated-Cauchy quantile per photon), noise count (Poisson), noise
/// positions (uniform bins).
Scan synth_scan(const ScanModel& model, Rng& rng);
InstrumentedScan synth_scan_instrumented(const ScanModel& model, Rng& rng);

/// Scan at a given index with its own derived RNG stream; building block for
/// order-independent parallel batches.
Scan synth_scan_at(const ScanModel& model, std::uint64_t scan_index);

/// k scans on streams derived from (model.seed, index); identical output
/// regardless of execution order.
std::vector<Scan> synth_batch(const ScanModel& model, std::size_t k);

} // namespace plemc
