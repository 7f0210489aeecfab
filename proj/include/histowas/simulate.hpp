#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "histowas/geometry.hpp"
#include "histowas/ppstats.hpp"

namespace histowas {

/// Axis-aligned rectangle anchored at the origin.
struct Rect {
    double width = 0.0;
    double height = 0.0;

    double area() const { return width * height; }
};

/// Complete-spatial-randomness study setup: one large base pattern, many
/// sub-windows sampled from it.
struct CsrConfig {
    double lambda = 1e-3;             // points per um^2
    Rect base_window{5000.0, 5000.0};
    Rect sub_window{1000.0, 1000.0};
    std::size_t n_samples = 299;
    std::uint64_t seed = 1;
};

/// Which corrections the validation applies per function family.
struct ValidationCorrections {
    EdgeCorrection second_order = EdgeCorrection::RipleyIsotropic;  // K/L/g
    EdgeCorrection spacing = EdgeCorrection::KaplanMeier;           // G/F
};

/// Pointwise percentile band across simulation runs plus the CSR-theoretical
/// reference curve.
struct Envelope {
    FunctionId function_id = FunctionId::L;
    std::vector<double> radii;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<double> theoretical;
    double level = 0.95;
};

/// Homogeneous Poisson pattern on [0,w] x [0,h]; count ~ Poisson(lambda wh),
/// positions i.i.d. uniform. Deterministic given seed.
PointPattern generate_csr(double lambda, const Rect& window, std::uint64_t seed);

/// Sub-patterns cropped at uniformly random offsets such that the sub-window
/// lies fully inside the base window. Point coordinates are shifted to the
/// sub-window's local frame. offset_salt selects the offset stream: a second
/// call with a different salt yields fresh sub-samples of the same base
/// pattern (held-out draws from the same protocol).
std::vector<PointPattern> sample_sub_patterns(const CsrConfig& config, std::uint64_t offset_salt = 0);

/// Per-sample curves for L, g, G and F on a common grid. Samples with fewer
/// than 2 points are skipped and listed in skipped_samples. Work is spread
/// across worker threads; per-sample RNG streams derive from the seed, so
/// the result is independent of scheduling.
struct ValidationCurves {
    std::map<FunctionId, std::vector<CurveEstimate>> curves;
    std::vector<std::size_t> skipped_samples;
};
ValidationCurves compute_validation_curves(const std::vector<PointPattern>& samples, const Rect& sub_window,
                                           const DistanceGrid& grid, const ValidationCorrections& corrections,
                                           std::uint64_t seed);

/// Pointwise empirical percentile envelope (interpolated quantiles at
/// (1 +- level)/2) with the theoretical curve for the given intensity.
Envelope build_envelope(FunctionId id, const std::vector<CurveEstimate>& curves, const DistanceGrid& grid,
                        double lambda, double level = 0.95);

/// Fraction of (sample, radius) values lying inside [lower, upper],
/// bounds inclusive; NaN values are ignored.
double envelope_coverage(const Envelope& envelope, const std::vector<CurveEstimate>& curves);

/// Radii where the band has collapsed to a single value (upper == lower).
/// CDF estimators saturate at exactly 1 beyond the largest observed
/// distance, so the band there is a point mass, not a 95% interval.
std::size_t degenerate_radius_count(const Envelope& envelope);

/// Coverage restricted to radii with a positive-width band; this is the
/// calibration statistic (a zero-width band has no 95% content to check).
double envelope_coverage_informative(const Envelope& envelope,
                                     const std::vector<CurveEstimate>& curves);

/// The full protocol: base pattern, sub-samples, curves, envelopes, and
/// self-coverage per function.
struct ValidationReport {
    DistanceGrid grid;
    std::map<FunctionId, std::vector<CurveEstimate>> curves;
    std::map<FunctionId, Envelope> envelopes;
    std::map<FunctionId, double> coverage;
    std::size_t n_samples_used = 0;
    std::size_t n_samples_skipped = 0;
};
ValidationReport run_validation(const CsrConfig& config, const DistanceGrid& grid,
                                const ValidationCorrections& corrections);

}  // namespace histowas
