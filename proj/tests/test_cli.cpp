#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "fixtures.hpp"
#include "sparseseg/annot.hpp"
#include "sparseseg/core.hpp"

namespace fs = std::filesystem;
using namespace sparseseg;

namespace {

int run_cli(const std::string& args) {
    const std::string cmd = std::string(SPARSESEG_CLI_PATH) + " " + args + " 2>>cli_stderr.log";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write(const fs::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << text;
}

// A small scene plus a run config wired for quick training.
fs::path make_workspace() {
    static const fs::path dir = [] {
        const fs::path root = testing::scratch_dir("cli_ws");
        write(root / "scene.json", R"({
          "width": 160, "height": 160, "pixel_size": 1.0, "seed": 7,
          "annotated_fraction": 0.5,
          "background": {"level": 128, "noise": 5},
          "classes": {
            "waterhole": {"count": 5, "area_log_mean": 4.8, "area_log_sigma": 0.3, "fill": 40, "rim": 170, "noise": 2},
            "omuti": {"count": 5, "area_log_mean": 5.7, "area_log_sigma": 0.3, "fill": 95, "rim": 108, "noise": 2},
            "bigtree": {"count": 25, "area_log_mean": 4.2, "area_log_sigma": 0.4, "fill": 205, "rim": 235, "noise": 2}
          }
        })");
        REQUIRE(run_cli("synth --config " + (root / "scene.json").string() + " --out " +
                        (root / "scene").string()) == 0);
        write(root / "run.json", R"({
          "paths": {
            "raster": ")" + (root / "scene/img.pgm").string() + R"(",
            "annotations": ")" + (root / "scene/sparse.geojson").string() + R"(",
            "truth": ")" + (root / "scene/full.geojson").string() + R"("
          },
          "seed": 7,
          "split": {"train_fraction": 0.7, "block_size": 40},
          "model": {"patch_size": 9, "learning_rate": 0.05, "max_epochs": 12},
          "pseudo": {"confidence_threshold": 0.8, "rounds": 1},
          "eval": {"overlap_threshold": 0.05, "eval_filter_eth": [1.0, 0.5]}
        })");
        return root;
    }();
    return dir;
}

}  // namespace

TEST_CASE("synth then stats smoke test") {
    const fs::path ws = make_workspace();
    CHECK(fs::exists(ws / "scene/img.pgm"));
    CHECK(fs::exists(ws / "scene/img.pgm.geo.json"));
    CHECK(fs::exists(ws / "scene/full.geojson"));

    REQUIRE(run_cli("stats --labels " + (ws / "scene/sparse.geojson").string() + " --raster " +
                    (ws / "scene/img.pgm").string() + " --out " + (ws / "stats.csv").string()) ==
            0);
    const std::string csv = slurp(ws / "stats.csv");
    CHECK(csv.rfind("class,pixels,pixel_pct,polygons,polygon_pct,sum_area_m2,mean_area_m2", 0) ==
          0);
    CHECK(csv.find("waterhole,") != std::string::npos);
    CHECK(csv.find("total,") != std::string::npos);
}

TEST_CASE("train, predict, polygonize, filter, eval chain") {
    const fs::path ws = make_workspace();
    REQUIRE(run_cli("train --config " + (ws / "run.json").string() + " --out " +
                    (ws / "train").string()) == 0);
    CHECK(fs::exists(ws / "train/params.json"));
    CHECK(fs::exists(ws / "train/train_report.jsonl"));

    REQUIRE(run_cli("predict --raster " + (ws / "scene/img.pgm").string() + " --params " +
                    (ws / "train/params.json").string() + " --out " +
                    (ws / "pred.pgm").string()) == 0);
    CHECK(fs::exists(ws / "pred.pgm"));

    REQUIRE(run_cli("polygonize --labels " + (ws / "pred.pgm").string() + " --out " +
                    (ws / "pred.geojson").string()) == 0);
    const AnnotationSet polys = load_annotations((ws / "pred.geojson").string());
    CHECK(polys.size() > 0);
    CHECK(polys.entries[0].area_m2.has_value());

    REQUIRE(run_cli("filter --pred " + (ws / "pred.geojson").string() + " --annotations " +
                    (ws / "scene/sparse.geojson").string() + " --eth 1.0 --out " +
                    (ws / "filtered").string()) == 0);
    CHECK(fs::exists(ws / "filtered/kept.geojson"));
    CHECK(fs::exists(ws / "filtered/discarded.geojson"));
    CHECK(slurp(ws / "filtered/filter_report.json").find("n_input") != std::string::npos);

    REQUIRE(run_cli("eval --pred " + (ws / "pred.pgm").string() + " --truth " +
                    (ws / "scene/full.geojson").string() + " --split " +
                    (ws / "train/split.json").string() + " --level both --eth 1.0 --out " +
                    (ws / "eval").string()) == 0);
    CHECK(fs::exists(ws / "eval/pixel_metrics.csv"));
    CHECK(fs::exists(ws / "eval/polygon_metrics.csv"));
    const std::string metrics = slurp(ws / "eval/polygon_metrics.csv");
    CHECK(metrics.find("polygon,raw,macro") != std::string::npos);
}

TEST_CASE("pseudo-train emits round reports") {
    const fs::path ws = make_workspace();
    REQUIRE(run_cli("pseudo-train --config " + (ws / "run.json").string() + " --out " +
                    (ws / "pseudo").string()) == 0);
    CHECK(fs::exists(ws / "pseudo/params.json"));
    CHECK(fs::exists(ws / "pseudo/pseudo.geojson"));
    const std::string rounds = slurp(ws / "pseudo/rounds.json");
    CHECK(rounds.find("\"round\":1") != std::string::npos);
    CHECK(rounds.find("lambda_u") != std::string::npos);
}

TEST_CASE("ablate writes the strategy-by-filter table") {
    const fs::path ws = make_workspace();
    REQUIRE(run_cli("ablate --config " + (ws / "run.json").string() + " --out " +
                    (ws / "ablate").string()) == 0);
    const std::string table = slurp(ws / "ablate/ablation.csv");
    CHECK(table.rfind("strategy,raw,eth_1.000000,eth_0.500000\n", 0) == 0);
    CHECK(table.find("baseline,") != std::string::npos);
    CHECK(table.find("class_weighting,") != std::string::npos);
    CHECK(table.find("pseudo_labeling,") != std::string::npos);
    CHECK(table.find("postprocessed_pseudo_labeling,") != std::string::npos);
    CHECK(fs::exists(ws / "ablate/metrics.csv"));
    CHECK(fs::exists(ws / "ablate/metrics.json"));
}

TEST_CASE("compare reproduces the published directions") {
    const fs::path ws = make_workspace();
    save_stats_csv(testing::published_stats(testing::published_1943()),
                   (ws / "stats1943.csv").string());
    save_stats_csv(testing::published_stats(testing::published_1972()),
                   (ws / "stats1972.csv").string());
    REQUIRE(run_cli("compare --t1 " + (ws / "stats1943.csv").string() + " --t2 " +
                    (ws / "stats1972.csv").string() + " --out " + (ws / "change").string()) == 0);
    const std::string csv = slurp(ws / "change/change.csv");
    CHECK(csv.find("waterhole,103,273,143.77,175.27") != std::string::npos);
    CHECK(csv.find("increase") != std::string::npos);
    CHECK(csv.find("decrease") != std::string::npos);
}

TEST_CASE("identical runs produce byte-identical outputs") {
    const fs::path ws = make_workspace();
    REQUIRE(run_cli("train --config " + (ws / "run.json").string() + " --out " +
                    (ws / "det_a").string()) == 0);
    REQUIRE(run_cli("train --config " + (ws / "run.json").string() + " --out " +
                    (ws / "det_b").string()) == 0);
    CHECK(slurp(ws / "det_a/params.json") == slurp(ws / "det_b/params.json"));
    CHECK(slurp(ws / "det_a/split.json") == slurp(ws / "det_b/split.json"));
}

TEST_CASE("validation failures exit with code 1, runtime failures with 2") {
    const fs::path ws = make_workspace();
    CHECK(run_cli("stats --labels missing.geojson --raster also_missing.pgm") == 1);
    CHECK(run_cli("synth --config no_such_config.json --out " + (ws / "x").string()) == 1);

    // Malformed raster payload trips a runtime error during processing.
    write(ws / "broken.pgm", "P5\n4 4\n255\nxx");
    write(ws / "broken.pgm.geo.json", R"({"origin_x":0,"origin_y":0,"pixel_size":1})");
    CHECK(run_cli("predict --raster " + (ws / "broken.pgm").string() + " --params " +
                  (ws / "train/params.json").string() + " --out " + (ws / "y.pgm").string()) ==
          2);

    const std::string log = slurp("cli_stderr.log");
    CHECK(log.find("MissingFile") != std::string::npos);
}
