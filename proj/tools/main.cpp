#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sparseseg/annot.hpp"
#include "sparseseg/change.hpp"
#include "sparseseg/core.hpp"
#include "sparseseg/eval.hpp"
#include "sparseseg/filter.hpp"
#include "sparseseg/model.hpp"
#include "sparseseg/polyops.hpp"
#include "sparseseg/pseudo.hpp"
#include "sparseseg/synth.hpp"
#include "sparseseg/weights.hpp"

namespace fs = std::filesystem;
using namespace sparseseg;

namespace {

enum class LogLevel : int { Error = 0, Info = 1, Debug = 2 };

LogLevel log_level() {
    static const LogLevel level = [] {
        const char* env = std::getenv("SPARSESEG_LOG");
        if (env == nullptr) return LogLevel::Error;
        const std::string v(env);
        if (v == "debug") return LogLevel::Debug;
        if (v == "info") return LogLevel::Info;
        return LogLevel::Error;
    }();
    return level;
}

void log_info(const std::string& msg) {
    if (log_level() >= LogLevel::Info) {
        std::fprintf(stderr, "[info] %s\n", msg.c_str());
    }
}

void log_debug(const std::string& msg) {
    if (log_level() >= LogLevel::Debug) {
        std::fprintf(stderr, "[debug] %s\n", msg.c_str());
    }
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("IoFailure", "cannot open " + path + " for writing");
    }
    out << text;
}

// Everything a run needs, parsed from the --config JSON. Sub-seeds are
// derived from the single top-level seed with fixed offsets per stage.
struct RunConfig {
    std::string raster_path;
    std::string annotations_path;  // sparse expert labels
    std::string truth_path;        // full ground truth (synthetic runs)
    std::string out_dir;

    double train_fraction = 0.7;
    int block_size = 256;
    std::uint64_t seed = 0;

    SegmenterConfig model;
    PseudoLabelConfig pseudo;
    std::optional<double> weight_cap;

    double overlap_threshold = 0.05;
    std::vector<double> eval_eth = {1.0, 0.5};
    ScoringMode scoring = ScoringMode::ExcludeUnknown;

    std::uint64_t split_seed() const { return seed + 1; }
    std::uint64_t model_seed() const { return seed + 2; }
};

RunConfig load_run_config(const std::string& path, std::optional<std::uint64_t> seed_override) {
    std::ifstream in(path);
    if (!in) {
        throw Error("MissingFile", "cannot open " + path);
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error("MalformedConfig", std::string(e.what()) + " in " + path);
    }

    RunConfig cfg;
    try {
        const auto& paths = j.at("paths");
        cfg.raster_path = paths.at("raster").get<std::string>();
        cfg.annotations_path = paths.at("annotations").get<std::string>();
        cfg.truth_path = paths.value("truth", "");
        cfg.out_dir = paths.value("out_dir", "out");

        cfg.seed = j.value("seed", 0ULL);
        if (j.contains("split")) {
            cfg.train_fraction = j["split"].value("train_fraction", cfg.train_fraction);
            cfg.block_size = j["split"].value("block_size", cfg.block_size);
        }
        if (j.contains("model")) {
            const auto& m = j["model"];
            cfg.model.patch_size = m.value("patch_size", cfg.model.patch_size);
            cfg.model.learning_rate = m.value("learning_rate", cfg.model.learning_rate);
            cfg.model.batch_size = m.value("batch_size", cfg.model.batch_size);
            cfg.model.max_epochs = m.value("max_epochs", cfg.model.max_epochs);
            cfg.model.include_unknown_as_class =
                m.value("include_unknown_as_class", cfg.model.include_unknown_as_class);
        }
        if (j.contains("weights") && j["weights"].contains("cap")) {
            cfg.weight_cap = j["weights"]["cap"].get<double>();
        }
        if (j.contains("pseudo")) {
            const auto& p = j["pseudo"];
            cfg.pseudo.confidence_threshold =
                p.value("confidence_threshold", cfg.pseudo.confidence_threshold);
            cfg.pseudo.apply_pvalue_filter =
                p.value("apply_pvalue_filter", cfg.pseudo.apply_pvalue_filter);
            cfg.pseudo.e_th = p.value("e_th", cfg.pseudo.e_th);
            cfg.pseudo.rounds = p.value("rounds", cfg.pseudo.rounds);
            cfg.pseudo.exclude_overlapping_expert =
                p.value("exclude_overlapping_expert", cfg.pseudo.exclude_overlapping_expert);
        }
        if (j.contains("eval")) {
            const auto& e = j["eval"];
            cfg.overlap_threshold = e.value("overlap_threshold", cfg.overlap_threshold);
            if (e.contains("eval_filter_eth")) {
                cfg.eval_eth.clear();
                for (const auto& v : e["eval_filter_eth"]) {
                    cfg.eval_eth.push_back(v.get<double>());
                }
            }
            const std::string scoring = e.value("scoring", "exclude-unknown");
            if (scoring == "unknown-as-fp") {
                cfg.scoring = ScoringMode::UnknownAsFp;
            } else if (scoring != "exclude-unknown") {
                throw Error("MalformedConfig", "unknown scoring mode '" + scoring + "'");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error("MalformedConfig", std::string(e.what()) + " in " + path);
    }
    if (seed_override) {
        cfg.seed = *seed_override;
    }
    cfg.model.seed = cfg.model_seed();
    cfg.model.validate();
    cfg.pseudo.validate();
    return cfg;
}

void require_file(const std::string& path, const std::string& what) {
    if (!fs::exists(path)) {
        throw Error("MissingFile", what + " not found at " + path);
    }
}

ScoringMode scoring_from_flag(const std::string& flag) {
    if (flag == "unknown-as-fp") return ScoringMode::UnknownAsFp;
    if (flag == "exclude-unknown") return ScoringMode::ExcludeUnknown;
    throw Error("InvalidFlag", "unknown scoring mode '" + flag + "'");
}

PerClassAreas expert_areas(const AnnotationSet& set) {
    PerClassAreas areas;
    for (const Annotation& a : set.entries) {
        areas.for_class(a.cls).push_back(polygon_area(a.polygon));
    }
    return areas;
}

// Shared state of one orchestrated run, assembled once per invocation.
struct RunState {
    GrayRaster raster;
    AnnotationSet sparse;
    AnnotationSet truth;  // full truth when provided, else the sparse set
    SplitSpec split;
    RegionMask train_region;
    RegionMask test_region;
    LabelGrid train_mask;  // sparse labels restricted to train tiles
    LabelGrid truth_grid;
    PerClassAreas train_areas;  // reference areas = train-side expert polygons
};

RunState prepare_run(const RunConfig& cfg) {
    require_file(cfg.raster_path, "raster");
    require_file(cfg.annotations_path, "annotations");
    if (!cfg.truth_path.empty()) {
        require_file(cfg.truth_path, "truth annotations");
    }

    RunState st;
    st.raster = load_raster(cfg.raster_path);
    st.sparse = load_annotations(cfg.annotations_path);
    st.truth = cfg.truth_path.empty() ? st.sparse : load_annotations(cfg.truth_path);

    st.split = spatial_split(st.raster.width, st.raster.height, cfg.train_fraction,
                             cfg.block_size, cfg.split_seed());
    st.train_region = st.split.region_mask(SplitSide::Train, st.raster.width, st.raster.height);
    st.test_region = st.split.region_mask(SplitSide::Test, st.raster.width, st.raster.height);

    const LabelGrid sparse_grid =
        rasterize(st.sparse, st.raster.geo, st.raster.width, st.raster.height);
    st.train_mask = apply_region(sparse_grid, st.train_region);
    st.truth_grid = rasterize(st.truth, st.raster.geo, st.raster.width, st.raster.height);

    const auto [train_annot, test_annot] = split_annotations(
        st.sparse, st.split, st.raster.geo, st.raster.width, st.raster.height);
    st.train_areas = expert_areas(train_annot);
    return st;
}

std::vector<Component> test_components(const LabelGrid& grid, const RegionMask& region) {
    return connected_components(apply_region(grid, region));
}

struct StrategyRun {
    std::string name;
    SegmenterParams params;
    TrainReport report;
    std::vector<Component> pred;  // test-region components
    AnnotationSet pseudo;
};

StrategyRun run_strategy(const RunConfig& cfg, const RunState& st, const std::string& name,
                         bool class_weighting, bool pseudo_round, bool pseudo_filter) {
    log_info("strategy " + name);
    StrategyRun run;
    run.name = name;

    const SegmenterConfig& model_cfg = cfg.model;
    const ClassWeights w =
        class_weighting
            ? class_weights(count_labels(st.train_mask, &st.train_region), cfg.weight_cap)
            : ClassWeights::uniform();
    std::tie(run.params, run.report) =
        train(st.raster, st.train_mask, w, model_cfg, &st.train_region);

    if (pseudo_round) {
        PseudoLabelConfig pcfg = cfg.pseudo;
        pcfg.apply_pvalue_filter = pseudo_filter;
        for (int round = 1; round <= pcfg.rounds; ++round) {
            run.pseudo = generate_pseudo_labels(run.params, st.raster, st.train_mask,
                                                st.train_areas, pcfg, &st.train_region);
            if (class_weighting) {
                std::tie(run.params, run.report) =
                    retrain_with_pseudo(st.raster, st.train_mask, run.pseudo,
                                        WeightPolicy::RecomputeWeights, model_cfg,
                                        &st.train_region);
            } else {
                // Independent-mode pseudo row: keep uniform weights.
                const LabelGrid merged = merge_pseudo_mask(st.train_mask, run.pseudo);
                std::tie(run.params, run.report) = train(
                    st.raster, merged, ClassWeights::uniform(), model_cfg, &st.train_region);
            }
        }
    }

    log_debug(name + " final loss " + std::to_string(run.report.final_loss) + " after " +
              std::to_string(run.report.epochs_run) + " epochs");
    const LabelGrid pred = argmax_labels(predict(run.params, st.raster));
    run.pred = test_components(pred, st.test_region);
    return run;
}

std::vector<StrategyRow> evaluate_run(const RunConfig& cfg, const RunState& st,
                                      const StrategyRun& run,
                                      const std::vector<Component>& truth_comps) {
    StrategyArtifacts artifacts;
    artifacts.strategy = run.name;
    artifacts.pred = run.pred;
    artifacts.truth = truth_comps;
    artifacts.annotated_areas = st.train_areas;
    artifacts.overlap_threshold = cfg.overlap_threshold;

    std::vector<StrategyRow> rows;
    rows.push_back(evaluate_strategy(artifacts, std::nullopt));
    for (double eth : cfg.eval_eth) {
        rows.push_back(evaluate_strategy(artifacts, eth));
    }
    return rows;
}

int cmd_synth(const std::string& config_path, const std::string& out_dir) {
    const SceneSpec spec = scene_spec_from_json_file(config_path);
    const Scene scene = generate_scene(spec);
    fs::create_directories(out_dir);
    save_raster(scene.raster, (fs::path(out_dir) / "img.pgm").string());
    save_annotations(scene.full_truth, (fs::path(out_dir) / "full.geojson").string());
    save_annotations(scene.sparse_labels, (fs::path(out_dir) / "sparse.geojson").string());
    save_scene_spec(spec, (fs::path(out_dir) / "scene.json").string());
    log_info("scene written to " + out_dir);
    return 0;
}

int cmd_stats(const std::string& labels_path, const std::string& raster_path,
              const std::string& out_path) {
    require_file(labels_path, "annotations");
    require_file(raster_path, "raster");
    const GrayRaster raster = load_raster(raster_path);
    const AnnotationSet set = load_annotations(labels_path);
    const LabelGrid grid = rasterize(set, raster.geo, raster.width, raster.height);
    const ClassStats stats = compute_stats(grid, set);
    const std::string csv = stats_to_csv(stats);
    if (out_path.empty()) {
        std::fputs(csv.c_str(), stdout);
    } else {
        write_file(out_path, csv);
    }
    return 0;
}

int cmd_split(const RunConfig& cfg, const std::string& out_dir) {
    const RunState st = prepare_run(cfg);
    fs::create_directories(out_dir);
    save_split(st.split, (fs::path(out_dir) / "split.json").string());
    const LabelGrid sparse_grid =
        rasterize(st.sparse, st.raster.geo, st.raster.width, st.raster.height);
    const auto [train_grid, test_grid] = mask_split(sparse_grid, st.split);
    save_label_grid(train_grid, (fs::path(out_dir) / "train_mask.pgm").string());
    save_label_grid(test_grid, (fs::path(out_dir) / "test_mask.pgm").string());
    const auto [train_annot, test_annot] = split_annotations(
        st.sparse, st.split, st.raster.geo, st.raster.width, st.raster.height);
    save_annotations(train_annot, (fs::path(out_dir) / "train.geojson").string());
    save_annotations(test_annot, (fs::path(out_dir) / "test.geojson").string());
    return 0;
}

int cmd_train(const RunConfig& cfg, const std::string& out_dir, bool uniform) {
    const RunState st = prepare_run(cfg);
    fs::create_directories(out_dir);
    const ClassWeights w =
        uniform ? ClassWeights::uniform()
                : class_weights(count_labels(st.train_mask, &st.train_region), cfg.weight_cap);
    const auto [params, report] =
        train(st.raster, st.train_mask, w, cfg.model, &st.train_region);
    save_params(params, (fs::path(out_dir) / "params.json").string());
    save_train_report(report, (fs::path(out_dir) / "train_report.jsonl").string());
    save_split(st.split, (fs::path(out_dir) / "split.json").string());
    return 0;
}

int cmd_predict(const std::string& raster_path, const std::string& params_path,
                const std::string& out_path, int threads) {
    require_file(raster_path, "raster");
    require_file(params_path, "params");
    const GrayRaster raster = load_raster(raster_path);
    const SegmenterParams params = load_params(params_path);
    const LabelGrid pred = argmax_labels(predict(params, raster, threads));
    save_label_grid(pred, out_path);
    return 0;
}

int cmd_polygonize(const std::string& labels_path, const std::string& out_path,
                   int connectivity) {
    require_file(labels_path, "label grid");
    const LabelGrid grid = load_label_grid(labels_path);
    const Connectivity conn = connectivity == 4 ? Connectivity::Four : Connectivity::Eight;
    AnnotationSet out;
    for (const Component& comp : connected_components(grid, conn)) {
        auto [polygon, area] = component_to_polygon(comp, grid.geo, conn);
        Annotation a;
        a.cls = comp.cls;
        a.polygon = std::move(polygon);
        a.source = AnnotationSource::Pseudo;
        a.area_m2 = area;
        out.entries.push_back(std::move(a));
    }
    save_annotations(out, out_path);
    return 0;
}

int cmd_filter(const std::string& pred_path, const std::string& annotations_path, double e_th,
               const std::string& out_dir) {
    require_file(pred_path, "predicted polygons");
    require_file(annotations_path, "annotations");
    const AnnotationSet pred = load_annotations(pred_path);
    const PerClassAreas areas = expert_areas(load_annotations(annotations_path));

    std::vector<PValueRecord> records;
    std::vector<std::size_t> owner;
    std::vector<bool> keep(pred.entries.size(), false);
    for (std::size_t i = 0; i < pred.entries.size(); ++i) {
        const Annotation& a = pred.entries[i];
        const double area = a.area_m2 ? *a.area_m2 : polygon_area(a.polygon);
        const auto& ref = areas.for_class(a.cls);
        if (ref.empty()) {
            keep[i] = true;  // no reference distribution to rank against
            continue;
        }
        records.push_back({a.cls, area, empirical_pvalue(area, ref)});
        owner.push_back(i);
    }
    FilterOutcome outcome;
    if (!records.empty()) {
        outcome = filter_by_threshold(records, e_th);
        for (std::size_t k : outcome.kept_indices) {
            keep[owner[k]] = true;
        }
    }

    AnnotationSet kept, discarded;
    std::size_t next_record = 0;
    for (std::size_t i = 0; i < pred.entries.size(); ++i) {
        Annotation a = pred.entries[i];
        if (next_record < owner.size() && owner[next_record] == i) {
            a.pvalue = records[next_record].pvalue;
            ++next_record;
        }
        (keep[i] ? kept : discarded).entries.push_back(std::move(a));
    }

    fs::create_directories(out_dir);
    save_annotations(kept, (fs::path(out_dir) / "kept.geojson").string());
    save_annotations(discarded, (fs::path(out_dir) / "discarded.geojson").string());
    write_file((fs::path(out_dir) / "filter_report.json").string(),
               filter_report_json(outcome.report));
    return 0;
}

int cmd_pseudo_train(const RunConfig& cfg, const std::string& out_dir) {
    const RunState st = prepare_run(cfg);
    fs::create_directories(out_dir);
    const RecursiveTrainResult result =
        run_recursive_training(st.raster, st.train_mask, st.train_areas, cfg.pseudo, cfg.model,
                               WeightPolicy::RecomputeWeights, &st.train_region);
    save_params(result.params, (fs::path(out_dir) / "params.json").string());
    save_train_report(result.report, (fs::path(out_dir) / "train_report.jsonl").string());
    save_annotations(result.last_pseudo, (fs::path(out_dir) / "pseudo.geojson").string());
    write_file((fs::path(out_dir) / "rounds.json").string(), rounds_to_json(result.rounds));
    save_split(st.split, (fs::path(out_dir) / "split.json").string());
    return 0;
}

int cmd_eval(const std::string& pred_path, const std::string& truth_path,
             const std::string& split_path, const std::string& level, double overlap,
             const std::string& scoring_flag, const std::vector<double>& eth,
             const std::string& out_dir) {
    require_file(pred_path, "prediction grid");
    require_file(truth_path, "truth annotations");
    const LabelGrid pred = load_label_grid(pred_path);
    const AnnotationSet truth_set = load_annotations(truth_path);
    const LabelGrid truth = rasterize(truth_set, pred.geo, pred.width, pred.height);

    std::optional<RegionMask> region;
    if (!split_path.empty()) {
        require_file(split_path, "split spec");
        const SplitSpec split = load_split(split_path);
        region = split.region_mask(SplitSide::Test, pred.width, pred.height);
    }
    const RegionMask* region_ptr = region ? &*region : nullptr;

    fs::create_directories(out_dir);
    nlohmann::json summary;
    if (level == "pixel" || level == "both") {
        const ClassMetrics m =
            pixel_metrics(pred, truth, region_ptr, scoring_from_flag(scoring_flag));
        StrategyRow row;
        row.strategy = "pixel";
        row.detail = m;
        row.precision = m.macro_precision;
        row.recall = m.macro_recall;
        row.f1 = m.macro_f1;
        write_file((fs::path(out_dir) / "pixel_metrics.csv").string(), metrics_to_csv({row}));
        summary["pixel_macro_f1"] = m.macro_f1;
    }
    if (level == "polygon" || level == "both") {
        const LabelGrid pred_scope = region ? apply_region(pred, *region) : pred;
        const LabelGrid truth_scope = region ? apply_region(truth, *region) : truth;
        StrategyArtifacts artifacts;
        artifacts.strategy = "polygon";
        artifacts.pred = connected_components(pred_scope);
        artifacts.truth = connected_components(truth_scope);
        artifacts.annotated_areas = expert_areas(truth_set);
        artifacts.overlap_threshold = overlap;
        std::vector<StrategyRow> rows;
        rows.push_back(evaluate_strategy(artifacts, std::nullopt));
        for (double e : eth) {
            rows.push_back(evaluate_strategy(artifacts, e));
        }
        write_file((fs::path(out_dir) / "polygon_metrics.csv").string(), metrics_to_csv(rows));
        write_file((fs::path(out_dir) / "polygon_metrics.json").string(), metrics_to_json(rows));
        summary["polygon_macro_f1_raw"] = rows.front().f1;
    }
    write_file((fs::path(out_dir) / "summary.json").string(), summary.dump() + "\n");
    std::fputs((summary.dump() + "\n").c_str(), stdout);
    return 0;
}

int cmd_ablate(RunConfig cfg, const std::string& out_dir, bool independent,
               const std::vector<double>& eth_override) {
    if (!eth_override.empty()) {
        cfg.eval_eth = eth_override;
    }
    const RunState st = prepare_run(cfg);
    fs::create_directories(out_dir);
    const std::vector<Component> truth_comps = test_components(st.truth_grid, st.test_region);

    struct Plan {
        std::string name;
        bool weighting;
        bool pseudo;
        bool filter;
    };
    // Cumulative rows by default; --independent runs each mechanism alone.
    const std::vector<Plan> plans =
        independent
            ? std::vector<Plan>{{"baseline", false, false, false},
                                {"class_weighting", true, false, false},
                                {"pseudo_labeling", false, true, false},
                                {"postprocessed_pseudo_labeling", false, true, true}}
            : std::vector<Plan>{{"baseline", false, false, false},
                                {"class_weighting", true, false, false},
                                {"pseudo_labeling", true, true, false},
                                {"postprocessed_pseudo_labeling", true, true, true}};

    std::vector<StrategyRow> all_rows;
    for (const Plan& plan : plans) {
        const StrategyRun run =
            run_strategy(cfg, st, plan.name, plan.weighting, plan.pseudo, plan.filter);
        save_params(run.params, (fs::path(out_dir) / ("params_" + plan.name + ".json")).string());
        if (plan.pseudo) {
            save_annotations(run.pseudo,
                             (fs::path(out_dir) / ("pseudo_" + plan.name + ".geojson")).string());
        }
        for (StrategyRow& row : evaluate_run(cfg, st, run, truth_comps)) {
            all_rows.push_back(std::move(row));
        }
    }

    write_file((fs::path(out_dir) / "ablation.csv").string(), ablation_csv(all_rows));
    write_file((fs::path(out_dir) / "metrics.csv").string(), metrics_to_csv(all_rows));
    write_file((fs::path(out_dir) / "metrics.json").string(), metrics_to_json(all_rows));
    save_split(st.split, (fs::path(out_dir) / "split.json").string());
    return 0;
}

int cmd_compare(const std::string& t1_path, const std::string& t2_path,
                const std::string& out_dir) {
    require_file(t1_path, "first stats csv");
    require_file(t2_path, "second stats csv");
    const ClassStats t1 = load_stats_csv(t1_path);
    const ClassStats t2 = load_stats_csv(t2_path);
    const ChangeReport report = compare_epochs(t1, t2);
    const std::string csv = change_to_csv(report);
    if (out_dir.empty()) {
        std::fputs(csv.c_str(), stdout);
    } else {
        fs::create_directories(out_dir);
        write_file((fs::path(out_dir) / "change.csv").string(), csv);
        write_file((fs::path(out_dir) / "change.json").string(), change_to_json(report));
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"sparse-label segmentation workflow for gray-scale aerial rasters"};
    app.require_subcommand(1);

    std::string config_path, out_dir, labels_path, raster_path, params_path, pred_path;
    std::string truth_path, split_path, annotations_path, t1_path, t2_path;
    std::string level = "both", scoring = "exclude-unknown";
    std::vector<double> eth_list;
    double e_th = 1.0, overlap = 0.05;
    int threads = 1, connectivity = 8;
    bool uniform = false, independent = false;
    std::optional<std::uint64_t> seed_override;
    std::uint64_t seed_value = 0;

    auto* synth = app.add_subcommand("synth", "generate a synthetic scene");
    synth->add_option("--config", config_path, "scene spec JSON")->required();
    synth->add_option("--out", out_dir, "output directory")->required();

    auto* stats = app.add_subcommand("stats", "class statistics of an annotation set");
    stats->add_option("--labels", labels_path, "annotations GeoJSON")->required();
    stats->add_option("--raster", raster_path, "raster the annotations cover")->required();
    stats->add_option("--out", out_dir, "output CSV (stdout when omitted)");

    auto* split = app.add_subcommand("split", "spatial train/test split");
    split->add_option("--config", config_path, "run config JSON")->required();
    split->add_option("--out", out_dir, "output directory")->required();

    auto* train_cmd = app.add_subcommand("train", "train the segmenter");
    train_cmd->add_option("--config", config_path, "run config JSON")->required();
    train_cmd->add_option("--out", out_dir, "output directory")->required();
    train_cmd->add_flag("--uniform-weights", uniform, "skip class weighting");

    auto* predict_cmd = app.add_subcommand("predict", "per-pixel class prediction");
    predict_cmd->add_option("--raster", raster_path, "input raster")->required();
    predict_cmd->add_option("--params", params_path, "trained params JSON")->required();
    predict_cmd->add_option("--out", pred_path, "output label grid (P5)")->required();
    predict_cmd->add_option("--threads", threads, "prediction worker threads");

    auto* polygonize = app.add_subcommand("polygonize", "label grid to polygons");
    polygonize->add_option("--labels", labels_path, "label grid (P5)")->required();
    polygonize->add_option("--out", pred_path, "output GeoJSON")->required();
    polygonize->add_option("--connectivity", connectivity, "4 or 8")
        ->check(CLI::IsMember({4, 8}));

    auto* filter_cmd = app.add_subcommand("filter", "p-value filter predicted polygons");
    filter_cmd->add_option("--pred", pred_path, "predicted polygons GeoJSON")->required();
    filter_cmd->add_option("--annotations", annotations_path, "expert annotations GeoJSON")
        ->required();
    filter_cmd->add_option("--eth", e_th, "band half-width in std-dev units");
    filter_cmd->add_option("--out", out_dir, "output directory")->required();

    auto* pseudo_train = app.add_subcommand("pseudo-train", "recursive pseudo-label training");
    pseudo_train->add_option("--config", config_path, "run config JSON")->required();
    pseudo_train->add_option("--out", out_dir, "output directory")->required();

    auto* eval_cmd = app.add_subcommand("eval", "pixel and polygon metrics");
    eval_cmd->add_option("--pred", pred_path, "prediction label grid (P5)")->required();
    eval_cmd->add_option("--truth", truth_path, "truth annotations GeoJSON")->required();
    eval_cmd->add_option("--split", split_path, "split JSON (evaluate test tiles)");
    eval_cmd->add_option("--level", level, "pixel | polygon | both")
        ->check(CLI::IsMember({"pixel", "polygon", "both"}));
    eval_cmd->add_option("--overlap", overlap, "polygon overlap threshold");
    eval_cmd->add_option("--scoring", scoring, "exclude-unknown | unknown-as-fp")
        ->check(CLI::IsMember({"exclude-unknown", "unknown-as-fp"}));
    eval_cmd->add_option("--eth", eth_list, "eval-time filter thresholds");
    eval_cmd->add_option("--out", out_dir, "output directory")->required();

    auto* ablate = app.add_subcommand("ablate", "run the strategy-by-filter table");
    ablate->add_option("--config", config_path, "run config JSON")->required();
    ablate->add_option("--out", out_dir, "output directory")->required();
    ablate->add_flag("--independent", independent, "run each mechanism alone");
    ablate->add_option("--eth", eth_list, "eval-time filter thresholds");

    auto* compare = app.add_subcommand("compare", "cross-epoch change report");
    compare->add_option("--t1", t1_path, "first epoch stats CSV")->required();
    compare->add_option("--t2", t2_path, "second epoch stats CSV")->required();
    compare->add_option("--out", out_dir, "output directory (stdout when omitted)");

    auto* seed_opt = app.add_option("--seed", seed_value, "override the config seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 1;
    }
    if (seed_opt->count() > 0) {
        seed_override = seed_value;
    }

    try {
        if (synth->parsed()) return cmd_synth(config_path, out_dir);
        if (stats->parsed()) return cmd_stats(labels_path, raster_path, out_dir);
        if (split->parsed()) return cmd_split(load_run_config(config_path, seed_override), out_dir);
        if (train_cmd->parsed())
            return cmd_train(load_run_config(config_path, seed_override), out_dir, uniform);
        if (predict_cmd->parsed())
            return cmd_predict(raster_path, params_path, pred_path, threads);
        if (polygonize->parsed()) return cmd_polygonize(labels_path, pred_path, connectivity);
        if (filter_cmd->parsed()) return cmd_filter(pred_path, annotations_path, e_th, out_dir);
        if (pseudo_train->parsed())
            return cmd_pseudo_train(load_run_config(config_path, seed_override), out_dir);
        if (eval_cmd->parsed())
            return cmd_eval(pred_path, truth_path, split_path, level, overlap, scoring, eth_list,
                            out_dir);
        if (ablate->parsed())
            return cmd_ablate(load_run_config(config_path, seed_override), out_dir, independent,
                              eth_list);
        if (compare->parsed()) return cmd_compare(t1_path, t2_path, out_dir);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        const std::string& name = e.name();
        const bool validation = name == "MissingFile" || name == "MalformedConfig" ||
                                name == "MalformedSceneSpec" || name == "InvalidFlag" ||
                                name == "InvalidConfig" || name == "InvalidSceneSpec";
        return validation ? 1 : 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
