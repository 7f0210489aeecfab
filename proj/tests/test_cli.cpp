#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "histowas/io.hpp"

using namespace histowas;
namespace fs = std::filesystem;

namespace {

const std::string kCli = HISTOWAS_CLI_PATH;
const std::string kFixtures = HISTOWAS_FIXTURE_DIR;

fs::path work_dir() {
    const fs::path dir = fs::current_path() / "tmp_cli_tests";
    fs::create_directories(dir);
    return dir;
}

int run(const std::string& args, const std::string& env = "") {
    const std::string cmd = env + (env.empty() ? "" : " ") + kCli + " " + args + " 2>> " +
                            (work_dir() / "stderr.log").string() + " >> " +
                            (work_dir() / "stdout.log").string();
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::size_t count_substr(const std::string& haystack, const std::string& needle) {
    std::size_t count = 0, pos = 0;
    while ((pos = haystack.find(needle, pos)) != std::string::npos) {
        ++count;
        pos += needle.size();
    }
    return count;
}

std::string centroids() { return kFixtures + std::string("/centroids_small.csv"); }

}  // namespace

TEST_CASE("extract writes 30 spatial features for each of the 3 slides") {
    const auto out = (work_dir() / "features.csv").string();
    const int code = run("extract --centroids " + centroids() +
                         " --object-type tubule --seed 7 --out " + out);
    REQUIRE(code == 0);
    const auto m = read_feature_matrix(out, out + ".meta.csv");
    CHECK(m.rows() == 3);
    CHECK(m.cols() == 30);
    CHECK(m.observation_ids == std::vector<std::string>{"S1", "S2", "S3"});
    // All three slides have windows and enough points: no missing cells.
    for (double v : m.values) CHECK_FALSE(std::isnan(v));
    // Categories arrive through the companion metadata.
    CHECK(count_substr(slurp(out + ".meta.csv"), "Correlation") == 10);
    CHECK(count_substr(slurp(out + ".meta.csv"), "Spacing") == 18);
}

TEST_CASE("extract honors an explicit radius grid") {
    const auto out = (work_dir() / "features_radii.csv").string();
    const int code = run("extract --centroids " + centroids() +
                         " --object-type tubule --radii 25,50,75 --seed 7 --out " + out);
    REQUIRE(code == 0);
    const auto m = read_feature_matrix(out, "");
    // dist_at_* features can only take the three requested radii. J values
    // may be missing on a coarse grid (F saturates), which is legitimate.
    std::size_t checked = 0;
    for (std::size_t c = 0; c < m.cols(); ++c) {
        if (m.feature_names[c].find("dist_at") == std::string::npos) continue;
        for (std::size_t r = 0; r < m.rows(); ++r) {
            const double v = m.at(r, c);
            if (std::isnan(v)) {
                CHECK(m.feature_names[c].rfind("J.", 0) == 0);
                continue;
            }
            CHECK((v == 25.0 || v == 50.0 || v == 75.0));
            ++checked;
        }
    }
    CHECK(checked >= 24);  // L, g, G, F dist_at features for all three slides
}

TEST_CASE("extract requires --object-type when several types exist") {
    const auto out = (work_dir() / "f_ambiguous.csv").string();
    CHECK(run("extract --centroids " + centroids() + " --out " + out) == 2);
}

TEST_CASE("usage errors exit with code 2") {
    CHECK(run("extract --no-such-flag") == 2);
    CHECK(run("definitely-not-a-subcommand") == 2);
    CHECK(run("simulate --sub 2000x2000 --base 1000x1000 --out " +
              (work_dir() / "x.json").string()) == 2);
    CHECK(run("associate --features a.csv --phenotype b.csv --fdr-q 0 --out c.tsv") == 2);
}

TEST_CASE("missing input files exit with code 1") {
    CHECK(run("extract --centroids /nonexistent.csv --out " + (work_dir() / "y.csv").string()) == 1);
}

TEST_CASE("simulate emits envelope data and is seed-stable") {
    const auto out1 = (work_dir() / "env1.json").string();
    const auto out2 = (work_dir() / "env2.json").string();
    const std::string flags =
        " --lambda 0.002 --base 1500x1500 --sub 400x400 --n-samples 20 --seed 5 --out ";
    REQUIRE(run("simulate" + flags + out1) == 0);
    REQUIRE(run("simulate" + flags + out2) == 0);
    CHECK(slurp(out1) == slurp(out2));

    const auto data = read_plot_data(out1);
    CHECK(data.at("kind") == "envelope_panel");
    REQUIRE(data.at("functions").size() == 4);
    for (const auto& fn : data.at("functions")) {
        CHECK(fn.at("radii").size() == 64);
        CHECK(fn.at("samples").size() == 20);
    }

    const auto svg = (work_dir() / "env.svg").string();
    REQUIRE(run("plot envelope --data " + out1 + " --out " + svg) == 0);
    CHECK(slurp(svg).find("polygon class=\"band\"") != std::string::npos);
}

TEST_CASE("extract-associate-plot pipeline runs end to end deterministically") {
    // Phenotype keyed by slide IDs (extract assigns subject_id = slide_id).
    const auto pheno = (work_dir() / "pheno.csv").string();
    {
        std::ofstream out(pheno, std::ios::binary);
        out << "subject_id,phenotype\nS1,10.5\nS2,22.0\nS3,31.5\n";
    }

    auto run_pipeline = [&](const std::string& tag, const std::string& env) {
        const auto features = (work_dir() / ("pipe_features_" + tag + ".csv")).string();
        const auto results = (work_dir() / ("pipe_results_" + tag + ".tsv")).string();
        const auto manhattan = (work_dir() / ("pipe_mh_" + tag + ".svg")).string();
        const auto effect = (work_dir() / ("pipe_es_" + tag + ".svg")).string();
        REQUIRE(run("extract --centroids " + centroids() +
                        " --object-type tubule --seed 7 --out " + features,
                    env) == 0);
        REQUIRE(run("associate --features " + features + " --phenotype " + pheno +
                        " --min-subjects 3 --out " + results,
                    env) == 0);
        REQUIRE(run("plot manhattan --results " + results + " --out " + manhattan, env) == 0);
        REQUIRE(run("plot effect-size --results " + results + " --out " + effect, env) == 0);
        return slurp(features) + "\x01" + slurp(results) + "\x01" + slurp(manhattan) + "\x01" +
               slurp(effect);
    };

    const auto once = run_pipeline("a", "");
    const auto again = run_pipeline("b", "");
    CHECK(once == again);
    const auto threaded = run_pipeline("c", "HISTOWAS_THREADS=4");
    CHECK(once == threaded);
    const auto single = run_pipeline("d", "HISTOWAS_THREADS=1");
    CHECK(once == single);
}

TEST_CASE("associate rejects mismatched subject IDs with a listing") {
    const auto features = (work_dir() / "features.csv").string();
    if (!fs::exists(features)) {
        REQUIRE(run("extract --centroids " + centroids() +
                    " --object-type tubule --seed 7 --out " + features) == 0);
    }
    const auto pheno = (work_dir() / "pheno_bad.csv").string();
    {
        std::ofstream out(pheno, std::ios::binary);
        out << "subject_id,phenotype\nS1,1\nS2,2\nGHOST,3\n";
    }
    const auto log = work_dir() / "stderr.log";
    fs::remove(log);
    const int code = run("associate --features " + features + " --phenotype " + pheno +
                         " --min-subjects 3 --out " + (work_dir() / "r_bad.tsv").string());
    CHECK(code == 1);
    const std::string err = slurp(log);
    CHECK(err.find("GHOST") != std::string::npos);
    CHECK(err.find("S3") != std::string::npos);
}

TEST_CASE("plot manhattan draws the documented point count and threshold line") {
    // Results fixture: 102 features, 6 below the Bonferroni threshold.
    std::vector<AssociationResult> results;
    const double thr = 0.05 / 102.0;
    for (int i = 0; i < 102; ++i) {
        AssociationResult r;
        r.feature = "f" + std::to_string(i);
        r.category = i % 3 == 0 ? "Correlation" : "ObjectLevel";
        r.beta = 0.2;
        r.se = 0.05;
        r.ci_low = 0.1;
        r.ci_high = 0.3;
        r.p = i < 6 ? thr * 0.01 * (i + 1) : 0.06 + 0.009 * i;
        r.neg_log10_p = -std::log10(r.p);
        r.sig_bonferroni = r.p < thr;
        r.sig_fdr = r.sig_bonferroni;
        r.n_used = 50;
        results.push_back(r);
    }
    const auto tsv = (work_dir() / "fixture_results.tsv").string();
    write_results(results, tsv);

    const auto svg1 = (work_dir() / "mh1.svg").string();
    const auto svg2 = (work_dir() / "mh2.svg").string();
    REQUIRE(run("plot manhattan --results " + tsv + " --out " + svg1) == 0);
    REQUIRE(run("plot manhattan --results " + tsv + " --out " + svg2) == 0);

    const std::string svg = slurp(svg1);
    CHECK(count_substr(svg, "<circle class=\"pt\"") == 31);
    CHECK(count_substr(svg, "class=\"threshold\"") == 1);
    CHECK(svg == slurp(svg2));  // byte-identical reruns

    const auto es = (work_dir() / "es.svg").string();
    REQUIRE(run("plot effect-size --results " + tsv + " --out " + es) == 0);
    CHECK(count_substr(slurp(es), "<circle class=\"beta\"") == 6);
}

TEST_CASE("a slide without a window becomes an NA row, run still succeeds") {
    const auto path = (work_dir() / "with_degenerate.csv").string();
    {
        std::ofstream out(path, std::ios::binary);
        out << "slide_id,object_type,x_um,y_um\n";
        // Slide A: a healthy 16-point blob. Slide B: three collinear points,
        // whose only cluster hull is degenerate.
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) {
                out << "A,tubule," << 100 + i * 30 << "," << 100 + j * 30 << "\n";
            }
        }
        out << "B,tubule,0,0\nB,tubule,100,0\nB,tubule,200,0\n";
    }
    const auto out_csv = (work_dir() / "with_degenerate_features.csv").string();
    const auto log = work_dir() / "stderr.log";
    fs::remove(log);
    const int code = run("extract --centroids " + path +
                         " --object-type tubule --eps 150 --min-samples 3 --seed 2 --out " + out_csv);
    CHECK(code == 0);
    const auto m = read_feature_matrix(out_csv, "");
    REQUIRE(m.rows() == 2);
    for (std::size_t c = 0; c < m.cols(); ++c) {
        CHECK_FALSE(std::isnan(m.at(0, c)));  // slide A extracted
        CHECK(std::isnan(m.at(1, c)));        // slide B all missing
    }
    CHECK(slurp(log).find("slide B") != std::string::npos);
}

TEST_CASE("a config file can stand in for flags") {
    const auto cfg = (work_dir() / "extract.toml").string();
    const auto out_csv = (work_dir() / "from_config.csv").string();
    {
        std::ofstream out(cfg, std::ios::binary);
        out << "[extract]\n"
            << "centroids = \"" << centroids() << "\"\n"
            << "object-type = \"tubule\"\n"
            << "seed = 7\n"
            << "out = \"" << out_csv << "\"\n";
    }
    REQUIRE(run("--config " + cfg + " extract") == 0);
    // Identical to the flag-driven run with the same seed.
    const auto direct = (work_dir() / "features.csv").string();
    if (!fs::exists(direct)) {
        REQUIRE(run("extract --centroids " + centroids() +
                    " --object-type tubule --seed 7 --out " + direct) == 0);
    }
    CHECK(slurp(out_csv) == slurp(direct));
}

TEST_CASE("effect-size plot with nothing significant is a notice, exit 0") {
    std::vector<AssociationResult> results;
    for (int i = 0; i < 5; ++i) {
        AssociationResult r;
        r.feature = "f" + std::to_string(i);
        r.category = "Spacing";
        r.p = 0.5;
        r.neg_log10_p = -std::log10(0.5);
        r.n_used = 10;
        results.push_back(r);
    }
    const auto tsv = (work_dir() / "null_results.tsv").string();
    write_results(results, tsv);
    const auto svg = (work_dir() / "es_empty.svg").string();
    REQUIRE(run("plot effect-size --results " + tsv + " --out " + svg) == 0);
    CHECK(slurp(svg).find("no features passed") != std::string::npos);
}
