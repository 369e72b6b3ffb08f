#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fixtures.hpp"
#include "sparseseg/annot.hpp"
#include "sparseseg/eval.hpp"
#include "sparseseg/polyops.hpp"
#include "sparseseg/pseudo.hpp"
#include "sparseseg/synth.hpp"

using namespace sparseseg;

namespace {

SceneSpec pseudo_scene(std::uint64_t seed, double annotated_fraction) {
    SceneSpec spec;
    spec.width = 256;
    spec.height = 256;
    spec.seed = seed;
    spec.annotated_fraction = annotated_fraction;
    spec.background_noise = 5.0;
    spec.waterhole = {8, 4.8, 0.35, 40.0, 170.0, 2.0};
    spec.omuti = {8, 5.9, 0.3, 95.0, 108.0, 2.0};
    spec.bigtree = {50, 4.2, 0.4, 205.0, 235.0, 2.0};
    return spec;
}

struct Prepared {
    Scene scene;
    LabelGrid sparse_mask;
    PerClassAreas areas;
    SegmenterParams params;
    SegmenterConfig cfg;
};

Prepared prepare(std::uint64_t seed, double fraction, int epochs) {
    Prepared p;
    p.scene = generate_scene(pseudo_scene(seed, fraction));
    p.sparse_mask = rasterize(p.scene.sparse_labels, p.scene.raster.geo, p.scene.raster.width,
                              p.scene.raster.height);
    for (const Annotation& a : p.scene.sparse_labels.entries) {
        p.areas.for_class(a.cls).push_back(polygon_area(a.polygon));
    }
    p.cfg.patch_size = 9;
    p.cfg.learning_rate = 0.05;
    p.cfg.max_epochs = epochs;
    p.cfg.seed = seed;
    const ClassWeights w = class_weights(count_labels(p.sparse_mask));
    auto [params, report] = train(p.scene.raster, p.sparse_mask, w, p.cfg);
    p.params = std::move(params);
    return p;
}

}  // namespace

TEST_CASE("merge keeps expert labels over conflicting pseudo polygons") {
    LabelGrid expert;
    expert.width = 4;
    expert.height = 4;
    expert.labels.assign(16, ClassId::Unknown);
    expert.at(1, 1) = ClassId::Waterhole;

    AnnotationSet pseudo;
    Annotation a;
    a.cls = ClassId::Omuti;
    a.source = AnnotationSource::Pseudo;
    a.polygon.exterior = {{-0.5, 0.5}, {2.5, 0.5}, {2.5, -2.5}, {-0.5, -2.5}};
    pseudo.entries.push_back(a);

    const LabelGrid merged = merge_pseudo_mask(expert, pseudo);
    CHECK(merged.at(1, 1) == ClassId::Waterhole);  // expert wins
    CHECK(merged.at(0, 0) == ClassId::Omuti);
    CHECK(merged.at(2, 2) == ClassId::Omuti);
    CHECK(merged.at(3, 3) == ClassId::Unknown);

    AnnotationSet not_pseudo;
    a.source = AnnotationSource::Expert;
    not_pseudo.entries.push_back(a);
    CHECK_THROWS_WITH_AS(merge_pseudo_mask(expert, not_pseudo),
                         doctest::Contains("InvalidSource"), Error);
}

TEST_CASE("an empty pseudo set reduces retraining to plain training") {
    const Prepared p = prepare(31, 0.6, 3);
    const ClassWeights w = class_weights(count_labels(p.sparse_mask));
    const auto [direct, direct_report] = train(p.scene.raster, p.sparse_mask, w, p.cfg);
    const auto [merged, merged_report] = retrain_with_pseudo(
        p.scene.raster, p.sparse_mask, AnnotationSet{}, WeightPolicy::RecomputeWeights, p.cfg);
    CHECK(direct.weights == merged.weights);
    CHECK(direct.bias == merged.bias);
}

TEST_CASE("a uniform model recruits nothing at high confidence") {
    const Prepared p = prepare(33, 0.6, 2);
    SegmenterParams uniform;
    uniform.feature_dim = feature_dim(p.cfg.patch_size);
    uniform.weights.assign(static_cast<std::size_t>(uniform.feature_dim) * kNumClasses, 0.0);
    uniform.config = p.cfg;

    PseudoLabelConfig cfg;
    cfg.confidence_threshold = 1.0;
    cfg.apply_pvalue_filter = false;
    const AnnotationSet pseudo =
        generate_pseudo_labels(uniform, p.scene.raster, p.sparse_mask, p.areas, cfg);
    CHECK(pseudo.empty());
}

TEST_CASE("pseudo labels avoid expert ground when the exclusion flag is on") {
    const Prepared p = prepare(35, 0.5, 8);

    PseudoLabelConfig cfg;
    cfg.confidence_threshold = 0.6;
    cfg.apply_pvalue_filter = false;
    cfg.exclude_overlapping_expert = true;
    const AnnotationSet pseudo =
        generate_pseudo_labels(p.params, p.scene.raster, p.sparse_mask, p.areas, cfg);
    CHECK_FALSE(pseudo.empty());
    const LabelGrid pseudo_grid =
        rasterize(pseudo, p.scene.raster.geo, p.scene.raster.width, p.scene.raster.height);
    for (std::size_t i = 0; i < pseudo_grid.labels.size(); ++i) {
        if (p.sparse_mask.labels[i] != ClassId::Unknown) {
            CHECK(pseudo_grid.labels[i] == ClassId::Unknown);
        }
    }
    for (const Annotation& a : pseudo.entries) {
        CHECK(a.source == AnnotationSource::Pseudo);
        CHECK(a.area_m2.has_value());
    }
}

TEST_CASE("recruitment shrinks as the confidence bar rises") {
    const Prepared p = prepare(37, 0.5, 8);
    PseudoLabelConfig cfg;
    cfg.apply_pvalue_filter = false;
    std::size_t previous = SIZE_MAX;
    for (double conf : {0.5, 0.8, 0.95, 0.999}) {
        cfg.confidence_threshold = conf;
        const AnnotationSet pseudo =
            generate_pseudo_labels(p.params, p.scene.raster, p.sparse_mask, p.areas, cfg);
        CHECK(pseudo.size() <= previous);
        previous = pseudo.size();
    }
}

TEST_CASE("half-annotated scenes recruit most of the missing objects") {
    const Prepared p = prepare(39, 0.5, 80);

    PseudoLabelConfig cfg;  // defaults: confidence 0.9, no p-value filter
    const AnnotationSet pseudo =
        generate_pseudo_labels(p.params, p.scene.raster, p.sparse_mask, p.areas, cfg);

    // Ground truth for the unannotated objects: full truth minus sparse.
    const LabelGrid full = rasterize(p.scene.full_truth, p.scene.raster.geo,
                                     p.scene.raster.width, p.scene.raster.height);
    LabelGrid missing = full;
    for (std::size_t i = 0; i < missing.labels.size(); ++i) {
        if (p.sparse_mask.labels[i] != ClassId::Unknown) {
            missing.labels[i] = ClassId::Unknown;
        }
    }
    const auto missing_comps = connected_components(missing);
    const LabelGrid pseudo_grid =
        rasterize(pseudo, p.scene.raster.geo, p.scene.raster.width, p.scene.raster.height);
    const auto pseudo_comps = connected_components(pseudo_grid);

    std::size_t recruited = 0;
    for (const Component& truth_comp : missing_comps) {
        for (const Component& got : pseudo_comps) {
            if (got.cls == truth_comp.cls && overlap_fraction(truth_comp, got) >= 0.3) {
                ++recruited;
                break;
            }
        }
    }
    CHECK(missing_comps.size() > 0);
    CHECK(static_cast<double>(recruited) >=
          0.6 * static_cast<double>(missing_comps.size()));
}

TEST_CASE("recursive training runs the requested number of rounds") {
    const Prepared p = prepare(41, 0.5, 6);
    PseudoLabelConfig cfg;
    cfg.confidence_threshold = 0.7;
    cfg.rounds = 2;
    const RecursiveTrainResult result =
        run_recursive_training(p.scene.raster, p.sparse_mask, p.areas, cfg, p.cfg,
                               WeightPolicy::RecomputeWeights);
    REQUIRE(result.rounds.size() == 2);
    CHECK(result.rounds[0].round == 1);
    CHECK(result.rounds[1].round == 2);
    CHECK(std::isfinite(result.report.final_loss));

    const std::string json = rounds_to_json(result.rounds);
    CHECK(json.find("\"round\":1") != std::string::npos);
    CHECK(json.find("lambda_u") != std::string::npos);
}

TEST_CASE("weight policies differ when pseudo labels arrive") {
    const Prepared p = prepare(43, 0.5, 8);
    PseudoLabelConfig cfg;
    cfg.confidence_threshold = 0.6;
    cfg.apply_pvalue_filter = false;
    const AnnotationSet pseudo =
        generate_pseudo_labels(p.params, p.scene.raster, p.sparse_mask, p.areas, cfg);
    REQUIRE_FALSE(pseudo.empty());

    const auto [rw_params, rw_report] = retrain_with_pseudo(
        p.scene.raster, p.sparse_mask, pseudo, WeightPolicy::RecomputeWeights, p.cfg);
    const auto [ko_params, ko_report] = retrain_with_pseudo(
        p.scene.raster, p.sparse_mask, pseudo, WeightPolicy::KeepOriginal, p.cfg);
    const ClassWeights original = class_weights(count_labels(p.sparse_mask));
    CHECK(ko_report.weights.lambda_u == doctest::Approx(original.lambda_u));
    CHECK(rw_report.weights.lambda_u > original.lambda_u);  // more labeled ground now
}
