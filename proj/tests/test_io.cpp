#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "histowas/errors.hpp"
#include "histowas/io.hpp"

using namespace histowas;
namespace fs = std::filesystem;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

fs::path temp_dir() {
    const fs::path dir = fs::current_path() / "tmp_io_tests";
    fs::create_directories(dir);
    return dir;
}

std::string write_file(const std::string& name, const std::string& content) {
    const fs::path p = temp_dir() / name;
    std::ofstream out(p, std::ios::binary);
    out << content;
    return p.string();
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<AssociationResult> synthetic_results(std::size_t total, std::size_t significant) {
    std::vector<AssociationResult> results;
    const double threshold = 0.05 / static_cast<double>(total);
    for (std::size_t i = 0; i < total; ++i) {
        AssociationResult r;
        r.feature = "feat" + std::to_string(i);
        r.category = i % 2 == 0 ? "Spacing" : "ObjectLevel";
        r.beta = 0.01 * static_cast<double>(i) - 0.3;
        r.se = 0.05;
        r.ci_low = r.beta - 0.1;
        r.ci_high = r.beta + 0.1;
        r.p = i < significant ? threshold * 1e-3 * static_cast<double>(i + 1)
                              : 0.06 + 0.9 * static_cast<double>(i) / static_cast<double>(total);
        if (r.p > 1.0) r.p = 1.0;
        r.neg_log10_p = -std::log10(r.p);
        r.sig_bonferroni = r.p < threshold;
        r.sig_fdr = r.sig_bonferroni;
        r.n_used = 100;
        results.push_back(std::move(r));
    }
    return results;
}

}  // namespace

TEST_CASE("read_centroids groups by slide and type") {
    const auto path = write_file("c1.csv",
                                 "slide_id,object_type,x_um,y_um\n"
                                 "s1,tubule,10.5,20.25\n"
                                 "s1,tubule,11,21\n");
    const auto result = read_centroids(path);
    REQUIRE(result.patterns.size() == 1);
    CHECK(result.patterns[0].slide_id == "s1");
    CHECK(result.patterns[0].points.size() == 2);
    CHECK(result.patterns[0].points[0].x == doctest::Approx(10.5));

    const auto interleaved = write_file("c2.csv",
                                        "slide_id,object_type,x_um,y_um\n"
                                        "s1,tubule,1,1\n"
                                        "s2,tubule,2,2\n"
                                        "s1,tubule,3,3\n"
                                        "s2,glom,4,4\n");
    const auto multi = read_centroids(interleaved);
    REQUIRE(multi.patterns.size() == 3);  // (s1,tubule), (s2,tubule), (s2,glom)
    CHECK(multi.patterns[0].points.size() == 2);
    CHECK(multi.patterns[1].points.size() == 1);
    CHECK(multi.patterns[2].object_type == "glom");
}

TEST_CASE("read_centroids errors carry line numbers; unknown columns warn") {
    const auto bad = write_file("c3.csv",
                                "slide_id,object_type,x_um,y_um\n"
                                "s1,tubule,1,1\n"
                                "s1,tubule,oops,2\n");
    try {
        read_centroids(bad);
        FAIL("expected parse error");
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find(":3") != std::string::npos);
        CHECK(std::string(e.what()).find("oops") != std::string::npos);
    }

    const auto extra = write_file("c4.csv",
                                  "slide_id,object_type,x_um,y_um,confidence\n"
                                  "s1,tubule,1,1,0.9\n");
    const auto result = read_centroids(extra);
    REQUIRE(result.warnings.size() == 1);
    CHECK(result.warnings[0].find("confidence") != std::string::npos);

    const auto no_header = write_file("c5.csv", "a,b\n");
    CHECK_THROWS_AS(read_centroids(no_header), IoError);

    CHECK_THROWS_AS(read_centroids((temp_dir() / "missing.csv").string()), IoError);
}

TEST_CASE("feature matrix round-trips values, NA cells, and categories") {
    FeatureMatrix m;
    m.observation_ids = {"o1", "o2", "o3"};
    m.subject_ids = {"sA", "sA", "sB"};
    m.feature_names = {"L.auc", "g.max", "ANN", "GlobalDensity"};
    m.feature_categories = {"Correlation", "Correlation", "Density", "Density"};
    m.values = {0.1, -2.5e-7, 3.0, 4.0,
                1.0 / 3.0, kNaN, 5.5, 6.25,
                7.0, 8.0, 9.0, 1e-17};

    const auto data = (temp_dir() / "fm.csv").string();
    const auto meta = (temp_dir() / "fm.meta.csv").string();
    write_feature_matrix(m, data, meta, {"L", "g", "ANN", "density"});
    const auto back = read_feature_matrix(data, meta);

    CHECK(back.observation_ids == m.observation_ids);
    CHECK(back.subject_ids == m.subject_ids);
    CHECK(back.feature_names == m.feature_names);
    CHECK(back.feature_categories == m.feature_categories);
    REQUIRE(back.values.size() == m.values.size());
    for (std::size_t i = 0; i < m.values.size(); ++i) {
        if (std::isnan(m.values[i])) {
            CHECK(std::isnan(back.values[i]));
        } else {
            CHECK(back.values[i] == m.values[i]);  // bit-equal round trip
        }
    }
}

TEST_CASE("feature matrix read errors") {
    const auto dup = write_file("fm_dup.csv",
                                "observation_id,subject_id,f\n"
                                "o1,s1,1\n"
                                "o1,s1,2\n");
    CHECK_THROWS_AS(read_feature_matrix(dup, ""), IoError);

    const auto empty_cell = write_file("fm_empty.csv",
                                       "observation_id,subject_id,f\n"
                                       "o1,s1,\n");
    CHECK_THROWS_AS(read_feature_matrix(empty_cell, ""), IoError);

    const auto dup_col = write_file("fm_dupcol.csv",
                                    "observation_id,subject_id,f,f\n"
                                    "o1,s1,1,2\n");
    CHECK_THROWS_AS(read_feature_matrix(dup_col, ""), IoError);

    // Missing meta defaults categories.
    const auto plain = write_file("fm_plain.csv",
                                  "observation_id,subject_id,f\n"
                                  "o1,s1,1\n");
    const auto m = read_feature_matrix(plain, "", "ObjectLevel");
    CHECK(m.feature_categories == std::vector<std::string>{"ObjectLevel"});
}

TEST_CASE("phenotype round-trip and duplicate detection") {
    PhenotypeVector p;
    p.subject_ids = {"sA", "sB"};
    p.values = {12.5, 1.0 / 7.0};
    const auto path = (temp_dir() / "pheno.csv").string();
    write_phenotype(p, path);
    const auto back = read_phenotype(path);
    CHECK(back.subject_ids == p.subject_ids);
    CHECK(back.values[1] == p.values[1]);

    const auto dup = write_file("pheno_dup.csv",
                                "subject_id,phenotype\n"
                                "sA,1\n"
                                "sA,2\n");
    CHECK_THROWS_AS(read_phenotype(dup), IoError);
}

TEST_CASE("results file round-trips bit-exactly") {
    auto results = synthetic_results(5, 2);
    results[0].p = 4.90196e-4;
    results[0].neg_log10_p = -std::log10(results[0].p);
    const auto path = (temp_dir() / "results.tsv").string();
    write_results(results, path);
    const auto back = read_results(path);
    REQUIRE(back.size() == results.size());
    for (std::size_t i = 0; i < results.size(); ++i) {
        CHECK(back[i].feature == results[i].feature);
        CHECK(back[i].beta == results[i].beta);
        CHECK(back[i].se == results[i].se);
        CHECK(back[i].ci_low == results[i].ci_low);
        CHECK(back[i].ci_high == results[i].ci_high);
        CHECK(back[i].p == results[i].p);
        CHECK(back[i].neg_log10_p == results[i].neg_log10_p);
        CHECK(back[i].sig_bonferroni == results[i].sig_bonferroni);
        CHECK(back[i].sig_fdr == results[i].sig_fdr);
        CHECK(back[i].n_used == results[i].n_used);
    }
}

TEST_CASE("manhattan plot data applies the top-25 rule") {
    const auto results = synthetic_results(102, 6);
    const auto data = emit_manhattan_data(results, 0.05, 102);
    CHECK(data.at("kind") == "manhattan");
    CHECK(data.at("points").size() == 31);  // 6 significant + top 25 below
    CHECK(data.at("n_significant") == 6);
    CHECK(data.count("threshold") == 1);
    CHECK(data.at("threshold").at("p").get<double>() == doctest::Approx(0.05 / 102));

    // Sorted ascending by p; ranks are 1-based and contiguous.
    double last = 0.0;
    std::size_t rank = 1;
    for (const auto& pt : data.at("points")) {
        CHECK(pt.at("p").get<double>() >= last);
        last = pt.at("p").get<double>();
        CHECK(pt.at("rank").get<std::size_t>() == rank++);
    }

    const auto few = emit_manhattan_data(synthetic_results(10, 0), 0.05, 10);
    CHECK(few.at("points").size() == 10);  // clamp when fewer than 25 remain
    CHECK(few.at("n_significant") == 0);
}

TEST_CASE("effect-size plot data keeps only significant features") {
    const auto results = synthetic_results(40, 3);
    const auto data = emit_effect_size_data(results);
    CHECK(data.at("kind") == "effect_size");
    REQUIRE(data.at("points").size() == 3);
    for (const auto& pt : data.at("points")) {
        CHECK(pt.at("ci_low").get<double>() <= pt.at("beta").get<double>());
        CHECK(pt.at("beta").get<double>() <= pt.at("ci_high").get<double>());
    }
}

TEST_CASE("plot data files round-trip") {
    const auto data = emit_manhattan_data(synthetic_results(20, 2), 0.05, 20);
    const auto path = (temp_dir() / "mh.json").string();
    write_plot_data(data, path);
    const auto back = read_plot_data(path);
    CHECK(back == data);
    // Identical content on rewrite.
    const auto path2 = (temp_dir() / "mh2.json").string();
    write_plot_data(data, path2);
    CHECK(slurp(path) == slurp(path2));
}

TEST_CASE("format_real survives the round trip on awkward values") {
    for (double v : {4.90196e-4, 1.0 / 3.0, 1e-300, 123456.789, -0.0, 2.2250738585072014e-308}) {
        const std::string s = format_real(v);
        CHECK(std::strtod(s.c_str(), nullptr) == v);
    }
    CHECK(format_real(kNaN) == "NA");
}
