#include "plemc/synth.hpp"

#include <algorithm>
#include <cmath>

#include "plemc/lineshape.hpp"

namespace plemc {

std::uint64_t draw_photon_count(double mean, double sigma, Rng& rng) {
    if (!(mean >= 0) || !(sigma >= 0))
        throw std::invalid_argument("draw_photon_count: mean and sigma must be >= 0");
    if (sigma == 0.0) return static_cast<std::uint64_t>(std::llround(mean));
    const double n = rng.normal(mean, sigma);
    return static_cast<std::uint64_t>(std::llround(std::max(n, 0.0)));
}

InstrumentedScan synth_scan_instrumented(const ScanModel& model, Rng& rng) {
    model.validate();
    const std::size_t nbins = model.window.bin_count();

    InstrumentedScan out;
    out.scan.window = model.window;
    out.scan.counts.assign(nbins, 0);
    out.scan.provenance = ScanProvenance::synthetic;

    out.signal_count = draw_photon_count(model.mean_photons, model.photon_sigma, rng);
    const double gamma = model.cauchy_gamma();
    for (std::uint64_t i = 0; i < out.signal_count; ++i) {
        const double f = truncated_cauchy_quantile(rng.uniform01(), gamma, model.window);
        ++out.scan.counts[model.window.bin_index(f)];
    }

    out.noise_count = rng.poisson(model.noise_mean);
    for (std::uint64_t i = 0; i < out.noise_count; ++i)
        ++out.scan.counts[rng.uniform_below(nbins)];

    return out;
}

Scan synth_scan(const ScanModel& model, Rng& rng) {
    return synth_scan_instrumented(model, rng).scan;
}

Scan synth_scan_at(const ScanModel& model, std::uint64_t scan_index) {
    Rng rng = Rng::for_stream(model.seed, scan_index);
    Scan s = synth_scan(model, rng);
    s.index = scan_index;
    return s;
}

std::vector<Scan> synth_batch(const ScanModel& model, std::size_t k) {
    if (k < 1) throw std::invalid_argument("synth_batch: k must be >= 1");
    std::vector<Scan> scans(k);
    for (std::size_t i = 0; i < k; ++i) scans[i] = synth_scan_at(model, i);
    return scans;
}

} // namespace plemc
