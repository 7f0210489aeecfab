#include "histowas/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "histowas/errors.hpp"

namespace histowas {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::ifstream open_input(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "' for reading");
    return in;
}

std::ofstream open_output(const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    return out;
}

std::vector<std::string> split(const std::string& line, char delim) {
    std::vector<std::string> fields;
    std::string::size_type start = 0;
    while (true) {
        const auto pos = line.find(delim, start);
        if (pos == std::string::npos) {
            fields.push_back(line.substr(start));
            break;
        }
        fields.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    if (!fields.empty() && !fields.back().empty() && fields.back().back() == '\r') {
        fields.back().pop_back();
    }
    return fields;
}

double parse_finite(const std::string& cell, const std::string& path, std::size_t line_no,
                    const char* what) {
    if (cell.empty()) {
        throw IoError(path + ":" + std::to_string(line_no) + ": empty " + what +
                      " cell (use NA for missing values)");
    }
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (end != cell.c_str() + cell.size() || !std::isfinite(v)) {
        throw IoError(path + ":" + std::to_string(line_no) + ": cannot parse " + what + " value '" +
                      cell + "'");
    }
    return v;
}

double parse_cell(const std::string& cell, const std::string& path, std::size_t line_no,
                  const char* what) {
    if (cell == "NA") return kNaN;
    return parse_finite(cell, path, line_no, what);
}

void check_field(const std::string& value, const char* what, char delim) {
    if (value.find(delim) != std::string::npos || value.find('\n') != std::string::npos) {
        throw IoError(std::string(what) + " '" + value + "' contains a delimiter character");
    }
}

void expect_columns(const std::vector<std::string>& fields, std::size_t expected,
                    const std::string& path, std::size_t line_no) {
    if (fields.size() != expected) {
        throw IoError(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(expected) +
                      " fields, found " + std::to_string(fields.size()));
    }
}

bool parse_bool(const std::string& cell, const std::string& path, std::size_t line_no) {
    if (cell == "true") return true;
    if (cell == "false") return false;
    throw IoError(path + ":" + std::to_string(line_no) + ": expected true/false, found '" + cell + "'");
}

}  // namespace

std::string format_real(double v) {
    if (std::isnan(v)) return "NA";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

CentroidReadResult read_centroids(const std::string& path) {
    std::ifstream in = open_input(path);
    std::string line;
    if (!std::getline(in, line)) throw IoError(path + ": empty file, header required");

    const std::vector<std::string> header = split(line, ',');
    long slide_col = -1, type_col = -1, x_col = -1, y_col = -1;
    CentroidReadResult out;
    for (std::size_t c = 0; c < header.size(); ++c) {
        if (header[c] == "slide_id") slide_col = static_cast<long>(c);
        else if (header[c] == "object_type") type_col = static_cast<long>(c);
        else if (header[c] == "x_um") x_col = static_cast<long>(c);
        else if (header[c] == "y_um") y_col = static_cast<long>(c);
        else out.warnings.push_back("ignoring unknown column '" + header[c] + "'");
    }
    if (slide_col < 0 || type_col < 0 || x_col < 0 || y_col < 0) {
        throw IoError(path + ": header must contain slide_id, object_type, x_um, y_um");
    }

    std::map<std::pair<std::string, std::string>, std::size_t> group_index;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> fields = split(line, ',');
        expect_columns(fields, header.size(), path, line_no);
        const std::string& slide = fields[static_cast<std::size_t>(slide_col)];
        const std::string& type = fields[static_cast<std::size_t>(type_col)];
        if (slide.empty()) throw IoError(path + ":" + std::to_string(line_no) + ": empty slide_id");
        const double x = parse_finite(fields[static_cast<std::size_t>(x_col)], path, line_no, "x_um");
        const double y = parse_finite(fields[static_cast<std::size_t>(y_col)], path, line_no, "y_um");

        const auto key = std::make_pair(slide, type);
        auto it = group_index.find(key);
        if (it == group_index.end()) {
            it = group_index.emplace(key, out.patterns.size()).first;
            PointPattern pattern;
            pattern.slide_id = slide;
            pattern.object_type = type;
            out.patterns.push_back(std::move(pattern));
        }
        out.patterns[it->second].points.push_back({x, y});
    }
    return out;
}

void write_feature_matrix(const FeatureMatrix& matrix, const std::string& data_path,
                          const std::string& meta_path, const std::vector<std::string>& sources) {
    if (!sources.empty() && sources.size() != matrix.cols()) {
        throw IoError("write_feature_matrix: sources do not parallel the feature columns");
    }
    std::ofstream out = open_output(data_path);
    out << "observation_id,subject_id";
    for (const auto& name : matrix.feature_names) {
        check_field(name, "feature name", ',');
        out << ',' << name;
    }
    out << '\n';
    for (std::size_t r = 0; r < matrix.rows(); ++r) {
        check_field(matrix.observation_ids[r], "observation_id", ',');
        check_field(matrix.subject_ids[r], "subject_id", ',');
        out << matrix.observation_ids[r] << ',' << matrix.subject_ids[r];
        for (std::size_t c = 0; c < matrix.cols(); ++c) out << ',' << format_real(matrix.at(r, c));
        out << '\n';
    }
    if (!out) throw IoError("failed writing '" + data_path + "'");

    if (meta_path.empty()) return;
    std::ofstream meta = open_output(meta_path);
    meta << "feature,category,source\n";
    for (std::size_t c = 0; c < matrix.cols(); ++c) {
        const std::string& cat = c < matrix.feature_categories.size() ? matrix.feature_categories[c] : "";
        meta << matrix.feature_names[c] << ',' << cat << ','
             << (sources.empty() ? "" : sources[c]) << '\n';
    }
    if (!meta) throw IoError("failed writing '" + meta_path + "'");
}

FeatureMatrix read_feature_matrix(const std::string& data_path, const std::string& meta_path,
                                  const std::string& default_category) {
    std::ifstream in = open_input(data_path);
    std::string line;
    if (!std::getline(in, line)) throw IoError(data_path + ": empty file, header required");
    const std::vector<std::string> header = split(line, ',');
    if (header.size() < 3 || header[0] != "observation_id" || header[1] != "subject_id") {
        throw IoError(data_path + ": header must start with observation_id,subject_id and have at "
                      "least one feature column");
    }

    FeatureMatrix matrix;
    matrix.feature_names.assign(header.begin() + 2, header.end());
    {
        std::set<std::string> unique(matrix.feature_names.begin(), matrix.feature_names.end());
        if (unique.size() != matrix.feature_names.size()) {
            throw IoError(data_path + ": duplicate feature column names");
        }
    }

    std::set<std::string> seen_obs;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> fields = split(line, ',');
        expect_columns(fields, header.size(), data_path, line_no);
        if (!seen_obs.insert(fields[0]).second) {
            throw IoError(data_path + ":" + std::to_string(line_no) + ": duplicate observation_id '" +
                          fields[0] + "'");
        }
        matrix.observation_ids.push_back(fields[0]);
        matrix.subject_ids.push_back(fields[1]);
        for (std::size_t c = 2; c < fields.size(); ++c) {
            matrix.values.push_back(parse_cell(fields[c], data_path, line_no, "feature"));
        }
    }

    matrix.feature_categories.assign(matrix.cols(), default_category);
    if (!meta_path.empty()) {
        std::ifstream meta = open_input(meta_path);
        if (!std::getline(meta, line)) throw IoError(meta_path + ": empty file, header required");
        const std::vector<std::string> mheader = split(line, ',');
        if (mheader.size() < 2 || mheader[0] != "feature" || mheader[1] != "category") {
            throw IoError(meta_path + ": header must start with feature,category");
        }
        std::map<std::string, std::string> categories;
        std::size_t meta_line = 1;
        while (std::getline(meta, line)) {
            ++meta_line;
            if (line.empty() || line == "\r") continue;
            const std::vector<std::string> fields = split(line, ',');
            expect_columns(fields, mheader.size(), meta_path, meta_line);
            categories[fields[0]] = fields[1];
        }
        for (std::size_t c = 0; c < matrix.cols(); ++c) {
            const auto it = categories.find(matrix.feature_names[c]);
            if (it != categories.end()) matrix.feature_categories[c] = it->second;
        }
    }
    return matrix;
}

void write_phenotype(const PhenotypeVector& phenotype, const std::string& path) {
    std::ofstream out = open_output(path);
    out << "subject_id,phenotype\n";
    for (std::size_t i = 0; i < phenotype.subject_ids.size(); ++i) {
        check_field(phenotype.subject_ids[i], "subject_id", ',');
        out << phenotype.subject_ids[i] << ',' << format_real(phenotype.values[i]) << '\n';
    }
    if (!out) throw IoError("failed writing '" + path + "'");
}

PhenotypeVector read_phenotype(const std::string& path) {
    std::ifstream in = open_input(path);
    std::string line;
    if (!std::getline(in, line)) throw IoError(path + ": empty file, header required");
    const std::vector<std::string> header = split(line, ',');
    if (header.size() != 2 || header[0] != "subject_id" || header[1] != "phenotype") {
        throw IoError(path + ": header must be subject_id,phenotype");
    }

    PhenotypeVector out;
    std::set<std::string> seen;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> fields = split(line, ',');
        expect_columns(fields, 2, path, line_no);
        if (!seen.insert(fields[0]).second) {
            throw IoError(path + ":" + std::to_string(line_no) + ": duplicate subject_id '" +
                          fields[0] + "'");
        }
        out.subject_ids.push_back(fields[0]);
        out.values.push_back(parse_finite(fields[1], path, line_no, "phenotype"));
    }
    return out;
}

namespace {
const char* kResultsHeader =
    "feature\tcategory\tbeta\tse\tci_low\tci_high\tp\tneg_log10_p\tsig_bonferroni\tsig_fdr\tn_used";
}

void write_results(const std::vector<AssociationResult>& results, const std::string& path) {
    std::ofstream out = open_output(path);
    out << kResultsHeader << '\n';
    for (const auto& r : results) {
        check_field(r.feature, "feature name", '\t');
        check_field(r.category, "category", '\t');
        out << r.feature << '\t' << r.category << '\t' << format_real(r.beta) << '\t'
            << format_real(r.se) << '\t' << format_real(r.ci_low) << '\t' << format_real(r.ci_high)
            << '\t' << format_real(r.p) << '\t' << format_real(r.neg_log10_p) << '\t'
            << (r.sig_bonferroni ? "true" : "false") << '\t' << (r.sig_fdr ? "true" : "false") << '\t'
            << r.n_used << '\n';
    }
    if (!out) throw IoError("failed writing '" + path + "'");
}

std::vector<AssociationResult> read_results(const std::string& path) {
    std::ifstream in = open_input(path);
    std::string line;
    if (!std::getline(in, line)) throw IoError(path + ": empty file, header required");
    if (!split(line, '\t').empty() && split(line, '\t') != split(kResultsHeader, '\t')) {
        throw IoError(path + ": unexpected results header");
    }

    std::vector<AssociationResult> results;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> fields = split(line, '\t');
        expect_columns(fields, 11, path, line_no);
        AssociationResult r;
        r.feature = fields[0];
        r.category = fields[1];
        r.beta = parse_finite(fields[2], path, line_no, "beta");
        r.se = parse_finite(fields[3], path, line_no, "se");
        r.ci_low = parse_finite(fields[4], path, line_no, "ci_low");
        r.ci_high = parse_finite(fields[5], path, line_no, "ci_high");
        r.p = parse_finite(fields[6], path, line_no, "p");
        r.neg_log10_p = parse_finite(fields[7], path, line_no, "neg_log10_p");
        r.sig_bonferroni = parse_bool(fields[8], path, line_no);
        r.sig_fdr = parse_bool(fields[9], path, line_no);
        r.n_used = static_cast<std::size_t>(parse_finite(fields[10], path, line_no, "n_used"));
        results.push_back(std::move(r));
    }
    return results;
}

namespace {

void sort_by_significance(std::vector<AssociationResult>& results) {
    std::sort(results.begin(), results.end(), [](const AssociationResult& a, const AssociationResult& b) {
        if (a.p != b.p) return a.p < b.p;
        return a.feature < b.feature;
    });
}

}  // namespace

nlohmann::json emit_manhattan_data(std::vector<AssociationResult> results, double alpha,
                                   std::size_t n_tests, std::size_t top_below) {
    if (results.empty()) throw Error("emit_manhattan_data: no results");
    sort_by_significance(results);
    const double threshold = bonferroni_threshold(alpha, n_tests);

    std::size_t n_sig = 0;
    while (n_sig < results.size() && results[n_sig].p < threshold) ++n_sig;
    const std::size_t keep = std::min(results.size(), n_sig + top_below);

    nlohmann::json points = nlohmann::json::array();
    for (std::size_t i = 0; i < keep; ++i) {
        points.push_back({{"feature", results[i].feature},
                          {"category", results[i].category},
                          {"rank", i + 1},
                          {"p", results[i].p},
                          {"neg_log10_p", results[i].neg_log10_p},
                          {"significant", i < n_sig}});
    }
    return nlohmann::json{{"kind", "manhattan"},
                          {"schema_version", 1},
                          {"alpha", alpha},
                          {"n_tests", n_tests},
                          {"n_significant", n_sig},
                          {"threshold", {{"p", threshold}, {"neg_log10_p", -std::log10(threshold)}}},
                          {"points", points}};
}

nlohmann::json emit_effect_size_data(std::vector<AssociationResult> results) {
    sort_by_significance(results);
    nlohmann::json points = nlohmann::json::array();
    for (const auto& r : results) {
        if (!r.sig_bonferroni) continue;
        points.push_back({{"feature", r.feature},
                          {"category", r.category},
                          {"beta", r.beta},
                          {"ci_low", r.ci_low},
                          {"ci_high", r.ci_high},
                          {"p", r.p}});
    }
    return nlohmann::json{{"kind", "effect_size"},
                          {"schema_version", 1},
                          {"n_significant", points.size()},
                          {"points", points}};
}

nlohmann::json emit_envelope_data(const ValidationReport& report) {
    const FunctionId order[] = {FunctionId::L, FunctionId::Pcf, FunctionId::G, FunctionId::F};
    nlohmann::json functions = nlohmann::json::array();
    for (FunctionId id : order) {
        const auto env_it = report.envelopes.find(id);
        if (env_it == report.envelopes.end()) continue;
        const Envelope& env = env_it->second;
        nlohmann::json samples = nlohmann::json::array();
        const auto curves_it = report.curves.find(id);
        if (curves_it != report.curves.end()) {
            for (const auto& curve : curves_it->second) samples.push_back(curve.values);
        }
        functions.push_back({{"function", function_name(id)},
                             {"level", env.level},
                             {"coverage", report.coverage.at(id)},
                             {"radii", env.radii},
                             {"lower", env.lower},
                             {"upper", env.upper},
                             {"theoretical", env.theoretical},
                             {"samples", samples}});
    }
    return nlohmann::json{{"kind", "envelope_panel"},
                          {"schema_version", 1},
                          {"n_samples_used", report.n_samples_used},
                          {"n_samples_skipped", report.n_samples_skipped},
                          {"functions", functions}};
}

void write_plot_data(const nlohmann::json& data, const std::string& path) {
    std::ofstream out = open_output(path);
    out << data.dump(2) << '\n';
    if (!out) throw IoError("failed writing '" + path + "'");
}

nlohmann::json read_plot_data(const std::string& path) {
    std::ifstream in = open_input(path);
    nlohmann::json data;
    try {
        in >> data;
    } catch (const nlohmann::json::exception& e) {
        throw IoError(path + ": " + e.what());
    }
    return data;
}

}  // namespace histowas
