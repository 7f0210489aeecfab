#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "histowas/assoc.hpp"
#include "histowas/errors.hpp"
#include "histowas/features.hpp"
#include "histowas/geometry.hpp"
#include "histowas/io.hpp"
#include "histowas/parallel.hpp"
#include "histowas/plots.hpp"
#include "histowas/ppstats.hpp"
#include "histowas/random.hpp"
#include "histowas/simulate.hpp"

namespace {

using namespace histowas;

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct ExtractArgs {
    std::string centroids;
    std::string object_type;
    double eps = 500.0;
    std::size_t min_samples = 10;
    std::string radii;
    bool auto_grid = false;
    std::string correction = "both";
    double g_bandwidth = 0.0;
    std::size_t quadrats = 0;
    std::uint64_t seed = 1;
    std::string out;
};

struct SimulateArgs {
    double lambda = 1e-3;
    std::string base = "5000x5000";
    std::string sub = "1000x1000";
    std::size_t n_samples = 299;
    std::uint64_t seed = 1;
    std::string out;
    std::string svg;
};

struct AssociateArgs {
    std::string features;
    std::string features_meta;
    std::vector<std::string> extra_features;
    std::string phenotype;
    std::string aggregate = "mean";
    double alpha = 0.05;
    double fdr_q = 0.05;
    std::size_t min_subjects = 3;
    std::string out;
    std::string plot_prefix;
};

struct PlotArgs {
    std::string results;
    std::string data;
    double alpha = 0.05;
    std::size_t top_below = 25;
    std::string out;
};

Rect parse_rect(const std::string& spec, const char* what) {
    const auto x = spec.find('x');
    if (x == std::string::npos || x == 0 || x + 1 >= spec.size()) {
        throw ConfigError(std::string(what) + ": expected WIDTHxHEIGHT, got '" + spec + "'");
    }
    char* end = nullptr;
    const double w = std::strtod(spec.c_str(), &end);
    if (end != spec.c_str() + x) throw ConfigError(std::string(what) + ": bad width in '" + spec + "'");
    const double h = std::strtod(spec.c_str() + x + 1, &end);
    if (end != spec.c_str() + spec.size() || !(w > 0.0) || !(h > 0.0)) {
        throw ConfigError(std::string(what) + ": bad height in '" + spec + "'");
    }
    return Rect{w, h};
}

DistanceGrid parse_radii(const std::string& list) {
    std::vector<double> radii;
    std::string::size_type start = 0;
    while (start <= list.size()) {
        const auto pos = list.find(',', start);
        const std::string tok = list.substr(start, pos == std::string::npos ? pos : pos - start);
        if (tok.empty()) throw ConfigError("--radii: empty entry");
        char* end = nullptr;
        const double r = std::strtod(tok.c_str(), &end);
        if (end != tok.c_str() + tok.size()) throw ConfigError("--radii: cannot parse '" + tok + "'");
        radii.push_back(r);
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    try {
        return make_distance_grid(std::move(radii));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("--radii: ") + e.what());
    }
}

void apply_correction_choice(const std::string& choice, FeatureConfig& config) {
    if (choice == "both") {
        config.second_order_correction = EdgeCorrection::RipleyIsotropic;
        config.spacing_correction = EdgeCorrection::KaplanMeier;
    } else if (choice == "none") {
        config.second_order_correction = EdgeCorrection::None;
        config.spacing_correction = EdgeCorrection::None;
    } else if (choice == "isotropic") {
        config.second_order_correction = EdgeCorrection::RipleyIsotropic;
        config.spacing_correction = EdgeCorrection::None;
    } else if (choice == "km") {
        config.second_order_correction = EdgeCorrection::None;
        config.spacing_correction = EdgeCorrection::KaplanMeier;
    } else {
        throw ConfigError("--correction: unknown value '" + choice + "'");
    }
}

std::string default_meta_path(const std::string& data_path) {
    const std::string candidate = data_path + ".meta.csv";
    return std::filesystem::exists(candidate) ? candidate : std::string{};
}

int run_extract(const ExtractArgs& args) {
    const CentroidReadResult table = read_centroids(args.centroids);
    for (const auto& w : table.warnings) std::cerr << "warning: " << w << "\n";

    std::string object_type = args.object_type;
    if (object_type.empty()) {
        std::vector<std::string> types;
        for (const auto& p : table.patterns) {
            if (std::find(types.begin(), types.end(), p.object_type) == types.end()) {
                types.push_back(p.object_type);
            }
        }
        if (types.size() != 1) {
            std::string msg = "--object-type required; file contains:";
            for (const auto& t : types) msg += " " + t;
            throw ConfigError(msg);
        }
        object_type = types[0];
    }

    std::vector<const PointPattern*> slides;
    for (const auto& p : table.patterns) {
        if (p.object_type == object_type) slides.push_back(&p);
    }
    if (slides.empty()) throw ConfigError("no centroids with object type '" + object_type + "'");

    FeatureConfig config;
    apply_correction_choice(args.correction, config);
    if (!args.radii.empty()) config.grid = parse_radii(args.radii);
    config.g_bandwidth = args.g_bandwidth;
    config.n_quadrats = args.quadrats;
    config.seed = args.seed;

    struct SlideRow {
        std::vector<double> values;
        std::vector<std::string> diagnostics;
    };
    std::vector<SlideRow> rows(slides.size());
    const std::size_t n_features = config.dictionary.size();

    parallel_for(slides.size(), [&](std::size_t s) {
        SlideRow& row = rows[s];
        row.values.assign(n_features, std::numeric_limits<double>::quiet_NaN());
        try {
            const ObservationWindow window = estimate_window(*slides[s], args.eps, args.min_samples);
            if (window.hulls_overlap) row.diagnostics.push_back("hulls overlap; total area double-counts");
            FeatureConfig slide_config = config;
            slide_config.seed = derive_seed(args.seed, s);
            FeatureVector fv = extract_spatial_features(*slides[s], window, slide_config);
            row.values = std::move(fv.values);
            row.diagnostics.insert(row.diagnostics.end(), fv.diagnostics.begin(), fv.diagnostics.end());
        } catch (const NoWindowError& e) {
            row.diagnostics.push_back(e.what());
        } catch (const InsufficientPointsError& e) {
            row.diagnostics.push_back(e.what());
        }
    });

    FeatureMatrix matrix;
    std::vector<std::string> sources;
    for (const auto& d : config.dictionary) {
        matrix.feature_names.push_back(d.name);
        matrix.feature_categories.push_back(category_name(d.category));
        sources.push_back(source_name(d.source));
    }
    for (std::size_t s = 0; s < slides.size(); ++s) {
        matrix.observation_ids.push_back(slides[s]->slide_id);
        matrix.subject_ids.push_back(slides[s]->slide_id);
        matrix.values.insert(matrix.values.end(), rows[s].values.begin(), rows[s].values.end());
        for (const auto& d : rows[s].diagnostics) {
            std::cerr << "slide " << slides[s]->slide_id << ": " << d << "\n";
        }
    }
    write_feature_matrix(matrix, args.out, args.out + ".meta.csv", sources);
    std::cerr << "extracted " << matrix.cols() << " features for " << matrix.rows() << " slide(s)\n";
    return kExitOk;
}

int run_simulate(const SimulateArgs& args) {
    CsrConfig config;
    config.lambda = args.lambda;
    config.base_window = parse_rect(args.base, "--base");
    config.sub_window = parse_rect(args.sub, "--sub");
    config.n_samples = args.n_samples;
    config.seed = args.seed;
    if (!(config.lambda > 0.0)) throw ConfigError("--lambda must be positive");
    if (config.sub_window.width > config.base_window.width ||
        config.sub_window.height > config.base_window.height) {
        throw ConfigError("--sub must fit inside --base");
    }

    const DistanceGrid grid = default_distance_grid(config.sub_window.area());
    const ValidationReport report = run_validation(config, grid, ValidationCorrections{});

    const nlohmann::json data = emit_envelope_data(report);
    write_plot_data(data, args.out);

    std::printf("samples used: %zu, skipped: %zu\n", report.n_samples_used, report.n_samples_skipped);
    const FunctionId order[] = {FunctionId::L, FunctionId::Pcf, FunctionId::G, FunctionId::F};
    for (FunctionId id : order) {
        std::printf("coverage %-2s: %.4f\n", function_name(id).c_str(), report.coverage.at(id));
    }
    if (!args.svg.empty()) write_svg(render_envelope_svg(data), args.svg);
    return kExitOk;
}

int run_associate(const AssociateArgs& args) {
    if (!(args.fdr_q > 0.0 && args.fdr_q < 1.0)) throw ConfigError("--fdr-q must be in (0,1)");
    if (!(args.alpha > 0.0 && args.alpha < 1.0)) throw ConfigError("--alpha must be in (0,1)");

    const std::string meta =
        args.features_meta.empty() ? default_meta_path(args.features) : args.features_meta;
    FeatureMatrix matrix = read_feature_matrix(args.features, meta, "ObjectLevel");
    for (const auto& extra_path : args.extra_features) {
        const FeatureMatrix extra =
            read_feature_matrix(extra_path, default_meta_path(extra_path), "ObjectLevel");
        matrix = merge_feature_matrices(matrix, extra);
    }

    const PhenotypeVector phenotype = read_phenotype(args.phenotype);

    StudyConfig config;
    config.alpha = args.alpha;
    config.fdr_q = args.fdr_q;
    config.min_subjects = args.min_subjects;
    if (args.aggregate == "mean") {
        config.aggregation = Aggregation::Mean;
    } else if (args.aggregate == "median") {
        config.aggregation = Aggregation::Median;
    } else {
        throw ConfigError("--aggregate must be mean or median");
    }

    const StudyResult study = run_study(matrix, phenotype, config);
    write_results(study.results, args.out);
    for (const auto& s : study.skipped) {
        std::cerr << "skipped feature " << s.feature << ": " << s.reason << "\n";
    }
    std::printf("n_tests=%zu bonferroni=%s bh_critical_p=%s n_subjects=%zu\n", study.n_tests,
                format_real(study.bonferroni).c_str(), format_real(study.bh_critical_p).c_str(),
                study.n_subjects);

    if (!args.plot_prefix.empty()) {
        write_plot_data(emit_manhattan_data(study.results, args.alpha, study.n_tests),
                        args.plot_prefix + ".manhattan.json");
        write_plot_data(emit_effect_size_data(study.results), args.plot_prefix + ".effect_size.json");
    }
    return kExitOk;
}

nlohmann::json manhattan_data_from_args(const PlotArgs& args) {
    if (!args.data.empty()) return read_plot_data(args.data);
    if (args.results.empty()) throw ConfigError("plot manhattan: requires --results or --data");
    const std::vector<AssociationResult> results = read_results(args.results);
    return emit_manhattan_data(results, args.alpha, results.size(), args.top_below);
}

nlohmann::json effect_data_from_args(const PlotArgs& args) {
    if (!args.data.empty()) return read_plot_data(args.data);
    if (args.results.empty()) throw ConfigError("plot effect-size: requires --results or --data");
    return emit_effect_size_data(read_results(args.results));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"HistoWAS: spatial point-pattern features and mass-univariate association studies"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from a TOML/INI file (sections per subcommand)");
    app.footer("Environment: HISTOWAS_THREADS sets the worker count for parallel stages.");

    ExtractArgs ex;
    CLI::App* extract = app.add_subcommand("extract", "Compute spatial features per slide");
    extract->add_option("--centroids", ex.centroids, "Centroid CSV (slide_id,object_type,x_um,y_um)")
        ->required();
    extract->add_option("--object-type", ex.object_type, "Object type to analyze");
    extract->add_option("--eps", ex.eps, "DBSCAN neighborhood radius in um")->capture_default_str();
    extract->add_option("--min-samples", ex.min_samples, "DBSCAN core-point threshold")
        ->capture_default_str();
    auto* radii_opt = extract->add_option("--radii", ex.radii, "Comma-separated curve radii in um");
    extract->add_flag("--auto-grid", ex.auto_grid, "Derive radii from the window area (default)")
        ->excludes(radii_opt);
    extract->add_option("--correction", ex.correction, "Edge correction: none, isotropic, km, both")
        ->check(CLI::IsMember({"none", "isotropic", "km", "both"}))
        ->capture_default_str();
    extract->add_option("--g-bandwidth", ex.g_bandwidth, "Pair-correlation kernel bandwidth in um (0 = auto)")
        ->capture_default_str();
    extract->add_option("--quadrats", ex.quadrats, "F-function quadrat count (0 = max(n,1000))")
        ->capture_default_str();
    extract->add_option("--seed", ex.seed, "Seed for quadrat sampling")->capture_default_str();
    extract->add_option("--out", ex.out, "Output feature matrix CSV")->required();

    SimulateArgs sim;
    CLI::App* simulate = app.add_subcommand("simulate", "CSR validation envelopes");
    simulate->add_option("--lambda", sim.lambda, "Point intensity per um^2")->capture_default_str();
    simulate->add_option("--base", sim.base, "Base window WxH in um")->capture_default_str();
    simulate->add_option("--sub", sim.sub, "Sub-window WxH in um")->capture_default_str();
    simulate->add_option("--n-samples", sim.n_samples, "Number of sub-samples")->capture_default_str();
    simulate->add_option("--seed", sim.seed, "Master seed")->capture_default_str();
    simulate->add_option("--out", sim.out, "Output envelope plot-data JSON")->required();
    simulate->add_option("--svg", sim.svg, "Optional four-panel SVG path");

    AssociateArgs as;
    CLI::App* associate = app.add_subcommand("associate", "Mass-univariate association study");
    associate->add_option("--features", as.features, "Feature matrix CSV")->required();
    associate->add_option("--features-meta", as.features_meta,
                          "Feature metadata CSV (default: <features>.meta.csv when present)");
    associate->add_option("--extra-features", as.extra_features,
                          "Additional feature matrix CSV (repeatable)");
    associate->add_option("--phenotype", as.phenotype, "Phenotype CSV (subject_id,phenotype)")
        ->required();
    associate->add_option("--aggregate", as.aggregate, "Observation-to-subject aggregation")
        ->check(CLI::IsMember({"mean", "median"}))
        ->capture_default_str();
    associate->add_option("--alpha", as.alpha, "Significance level")->capture_default_str();
    associate->add_option("--fdr-q", as.fdr_q, "Benjamini-Hochberg Q")->capture_default_str();
    associate->add_option("--min-subjects", as.min_subjects, "Minimum subjects required")
        ->capture_default_str();
    associate->add_option("--out", as.out, "Output results TSV")->required();
    associate->add_option("--plot-data", as.plot_prefix,
                          "Also write <prefix>.manhattan.json and <prefix>.effect_size.json");

    PlotArgs pl;
    CLI::App* plot = app.add_subcommand("plot", "Render SVG figures from results or plot data");
    plot->require_subcommand(1);
    CLI::App* manhattan = plot->add_subcommand("manhattan", "Significance overview plot");
    CLI::App* effect = plot->add_subcommand("effect-size", "Beta with 95% CI per significant feature");
    CLI::App* envelope = plot->add_subcommand("envelope", "CSR validation panels");
    for (CLI::App* sub : {manhattan, effect}) {
        sub->add_option("--results", pl.results, "Results TSV from `associate`");
        sub->add_option("--data", pl.data, "Plot-data JSON");
        sub->add_option("--out", pl.out, "Output SVG path")->required();
    }
    manhattan->add_option("--alpha", pl.alpha, "Significance level")->capture_default_str();
    manhattan->add_option("--top-below", pl.top_below, "Non-significant features to include")
        ->capture_default_str();
    envelope->add_option("--data", pl.data, "Envelope plot-data JSON")->required();
    envelope->add_option("--out", pl.out, "Output SVG path")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (*extract) return run_extract(ex);
        if (*simulate) return run_simulate(sim);
        if (*associate) return run_associate(as);
        if (*plot) {
            if (*manhattan) {
                write_svg(render_manhattan_svg(manhattan_data_from_args(pl)), pl.out);
            } else if (*effect) {
                write_svg(render_effect_size_svg(effect_data_from_args(pl)), pl.out);
            } else if (*envelope) {
                write_svg(render_envelope_svg(read_plot_data(pl.data)), pl.out);
            }
            return kExitOk;
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitRuntime;
    }
    return kExitOk;
}
