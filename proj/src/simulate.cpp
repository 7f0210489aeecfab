#include "histowas/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "histowas/errors.hpp"
#include "histowas/parallel.hpp"
#include "histowas/random.hpp"

namespace histowas {

namespace {

// Interpolated empirical quantile (linear between order statistics).
double quantile(std::vector<double> sorted, double p) {
    const std::size_t n = sorted.size();
    if (n == 0) throw Error("quantile of empty sample");
    if (n == 1) return sorted[0];
    const double h = p * static_cast<double>(n - 1);
    const std::size_t lo = static_cast<std::size_t>(h);
    if (lo + 1 >= n) return sorted[n - 1];
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

void check_config(const CsrConfig& config) {
    if (!(config.lambda > 0.0)) throw ConfigError("csr: lambda must be positive");
    if (!(config.base_window.area() > 0.0)) throw ConfigError("csr: base window is empty");
    if (!(config.sub_window.area() > 0.0)) throw ConfigError("csr: sub window is empty");
    if (config.sub_window.width > config.base_window.width ||
        config.sub_window.height > config.base_window.height) {
        throw ConfigError("csr: sub window does not fit inside the base window");
    }
    if (config.n_samples < 1) throw ConfigError("csr: n_samples must be >= 1");
}

}  // namespace

PointPattern generate_csr(double lambda, const Rect& window, std::uint64_t seed) {
    if (!(lambda > 0.0)) throw std::invalid_argument("generate_csr: lambda must be positive");
    if (!(window.area() > 0.0)) throw std::invalid_argument("generate_csr: window must have positive area");
    Rng rng(seed);
    const std::uint64_t count = rng.poisson(lambda * window.area());
    PointPattern pattern;
    pattern.slide_id = "csr";
    pattern.object_type = "simulated";
    pattern.points.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        const double x = rng.uniform(0.0, window.width);
        const double y = rng.uniform(0.0, window.height);
        pattern.points.push_back({x, y});
    }
    return pattern;
}

std::vector<PointPattern> sample_sub_patterns(const CsrConfig& config, std::uint64_t offset_salt) {
    check_config(config);
    const PointPattern base = generate_csr(config.lambda, config.base_window, config.seed);

    Rng offsets(derive_seed(config.seed, 0x0ff5e75 + offset_salt));
    std::vector<PointPattern> samples;
    samples.reserve(config.n_samples);
    for (std::size_t s = 0; s < config.n_samples; ++s) {
        const double ox = offsets.uniform(0.0, config.base_window.width - config.sub_window.width);
        const double oy = offsets.uniform(0.0, config.base_window.height - config.sub_window.height);
        PointPattern sub;
        sub.slide_id = "csr-sub-" + std::to_string(s);
        sub.object_type = base.object_type;
        for (const auto& p : base.points) {
            if (p.x >= ox && p.x <= ox + config.sub_window.width && p.y >= oy &&
                p.y <= oy + config.sub_window.height) {
                sub.points.push_back({p.x - ox, p.y - oy});
            }
        }
        samples.push_back(std::move(sub));
    }
    return samples;
}

ValidationCurves compute_validation_curves(const std::vector<PointPattern>& samples, const Rect& sub_window,
                                           const DistanceGrid& grid, const ValidationCorrections& corrections,
                                           std::uint64_t seed) {
    const ObservationWindow window = rectangle_window(0.0, 0.0, sub_window.width, sub_window.height);

    struct SampleResult {
        CurveEstimate l, pcf, g, f;
        bool skipped = true;
    };
    std::vector<SampleResult> results(samples.size());

    parallel_for(samples.size(), [&](std::size_t s) {
        const PointPattern& sub = samples[s];
        if (sub.size() < 2) return;
        SampleResult& r = results[s];
        const double lambda_hat = static_cast<double>(sub.size()) / window.total_area;
        const SecondOrderCurves so = second_order_curves(sub, window, grid, corrections.second_order,
                                                          stoyan_bandwidth(lambda_hat));
        r.l = l_function(so.k);
        r.pcf = so.pcf;
        r.g = nearest_neighbor_cdf(sub, window, grid, corrections.spacing);
        const std::size_t quadrats = default_quadrat_count(sub.size());
        r.f = empty_space_cdf(sub, window, grid, corrections.spacing, quadrats,
                              derive_seed(seed, 0xf00d + s));
        r.skipped = false;
    });

    ValidationCurves out;
    auto& by_function = out.curves;
    by_function[FunctionId::L] = {};
    by_function[FunctionId::Pcf] = {};
    by_function[FunctionId::G] = {};
    by_function[FunctionId::F] = {};
    for (std::size_t s = 0; s < results.size(); ++s) {
        if (results[s].skipped) {
            out.skipped_samples.push_back(s);
            continue;
        }
        by_function[FunctionId::L].push_back(std::move(results[s].l));
        by_function[FunctionId::Pcf].push_back(std::move(results[s].pcf));
        by_function[FunctionId::G].push_back(std::move(results[s].g));
        by_function[FunctionId::F].push_back(std::move(results[s].f));
    }
    return out;
}

Envelope build_envelope(FunctionId id, const std::vector<CurveEstimate>& curves, const DistanceGrid& grid,
                        double lambda, double level) {
    if (curves.empty()) throw Error("build_envelope: no curves");
    if (!(level > 0.0 && level < 1.0)) throw std::invalid_argument("build_envelope: level in (0,1)");

    Envelope env;
    env.function_id = id;
    env.radii = grid.radii;
    env.level = level;
    env.lower.resize(grid.size());
    env.upper.resize(grid.size());
    env.theoretical.resize(grid.size());
    const double tail = (1.0 - level) / 2.0;

    std::vector<double> column;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        column.clear();
        for (const auto& curve : curves) {
            const double v = curve.values[g];
            if (!std::isnan(v)) column.push_back(v);
        }
        if (column.empty()) throw Error("build_envelope: all values undefined at a radius");
        std::sort(column.begin(), column.end());
        env.lower[g] = quantile(column, tail);
        env.upper[g] = quantile(column, 1.0 - tail);
        env.theoretical[g] = theoretical_value(id, lambda, grid.radii[g]);
    }
    return env;
}

namespace {

double coverage_impl(const Envelope& envelope, const std::vector<CurveEstimate>& curves,
                     bool informative_only) {
    std::size_t total = 0, inside = 0;
    for (const auto& curve : curves) {
        for (std::size_t g = 0; g < envelope.radii.size(); ++g) {
            if (informative_only && envelope.upper[g] == envelope.lower[g]) continue;
            const double v = curve.values[g];
            if (std::isnan(v)) continue;
            ++total;
            if (v >= envelope.lower[g] && v <= envelope.upper[g]) ++inside;
        }
    }
    if (total == 0) return 0.0;
    return static_cast<double>(inside) / static_cast<double>(total);
}

}  // namespace

double envelope_coverage(const Envelope& envelope, const std::vector<CurveEstimate>& curves) {
    return coverage_impl(envelope, curves, false);
}

std::size_t degenerate_radius_count(const Envelope& envelope) {
    std::size_t count = 0;
    for (std::size_t g = 0; g < envelope.radii.size(); ++g) {
        if (envelope.upper[g] == envelope.lower[g]) ++count;
    }
    return count;
}

double envelope_coverage_informative(const Envelope& envelope,
                                     const std::vector<CurveEstimate>& curves) {
    return coverage_impl(envelope, curves, true);
}

ValidationReport run_validation(const CsrConfig& config, const DistanceGrid& grid,
                                const ValidationCorrections& corrections) {
    check_config(config);
    const std::vector<PointPattern> samples = sample_sub_patterns(config);
    ValidationCurves curves = compute_validation_curves(samples, config.sub_window, grid, corrections,
                                                        config.seed);

    ValidationReport report;
    report.grid = grid;
    report.n_samples_skipped = curves.skipped_samples.size();
    report.n_samples_used = config.n_samples - report.n_samples_skipped;
    for (auto& [id, per_sample] : curves.curves) {
        if (per_sample.empty()) throw Error("run_validation: every sample was skipped");
        report.envelopes[id] = build_envelope(id, per_sample, grid, config.lambda);
        report.coverage[id] = envelope_coverage(report.envelopes[id], per_sample);
        report.curves[id] = std::move(per_sample);
    }
    return report;
}

}  // namespace histowas
