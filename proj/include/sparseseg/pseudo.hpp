#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "sparseseg/annot.hpp"
#include "sparseseg/core.hpp"
#include "sparseseg/filter.hpp"
#include "sparseseg/model.hpp"

namespace sparseseg {

// Defaults mirror the plain pseudo-labeling strategy; the post-processed
// variant turns apply_pvalue_filter on.
struct PseudoLabelConfig {
    double confidence_threshold = 0.9;  // mean class probability over the component
    bool apply_pvalue_filter = false;
    double e_th = 1.0;
    int rounds = 1;
    bool exclude_overlapping_expert = true;

    void validate() const;
};

enum class WeightPolicy : std::uint8_t { RecomputeWeights, KeepOriginal };

// Predicts on the training region and recruits confident components from
// fully unannotated ground as Pseudo annotations. area_m2 carries the
// pixel-count area and pvalue the rank score when the filter ran.
AnnotationSet generate_pseudo_labels(const SegmenterParams& params, const GrayRaster& raster,
                                     const LabelGrid& train_mask,
                                     const PerClassAreas& annot_areas,
                                     const PseudoLabelConfig& cfg,
                                     const RegionMask* train_region = nullptr);

// Merged mask: pseudo polygons painted only where the expert mask is
// Unknown, so expert labels are never overwritten.
LabelGrid merge_pseudo_mask(const LabelGrid& expert_mask, const AnnotationSet& pseudo);

// Trains from scratch on the merged mask. KeepOriginal derives weights from
// the expert mask alone; RecomputeWeights from the merged mask.
std::pair<SegmenterParams, TrainReport> retrain_with_pseudo(const GrayRaster& raster,
                                                            const LabelGrid& expert_mask,
                                                            const AnnotationSet& pseudo,
                                                            WeightPolicy policy,
                                                            const SegmenterConfig& cfg,
                                                            const RegionMask* region = nullptr);

struct PseudoRound {
    int round = 0;
    std::array<std::int64_t, 3> n_pseudo_per_class = {0, 0, 0};  // waterhole, omuti, bigtree
    ClassWeights weights;
    double final_loss = 0.0;
};

struct RecursiveTrainResult {
    SegmenterParams params;
    TrainReport report;
    std::vector<PseudoRound> rounds;
    AnnotationSet last_pseudo;
};

// Initial weighted training plus cfg.rounds pseudo-label passes; round k
// recruits from the round k-1 model only.
RecursiveTrainResult run_recursive_training(const GrayRaster& raster,
                                            const LabelGrid& expert_mask,
                                            const PerClassAreas& annot_areas,
                                            const PseudoLabelConfig& pseudo_cfg,
                                            const SegmenterConfig& seg_cfg, WeightPolicy policy,
                                            const RegionMask* region = nullptr);

std::string rounds_to_json(const std::vector<PseudoRound>& rounds);

}  // namespace sparseseg
