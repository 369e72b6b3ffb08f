#include "sparseseg/pseudo.hpp"

#include <algorithm>

#include <json.hpp>

#include "sparseseg/polyops.hpp"

namespace sparseseg {

void PseudoLabelConfig::validate() const {
    if (!(confidence_threshold > 0.0 && confidence_threshold <= 1.0)) {
        throw Error("InvalidConfig", "confidence_threshold must be in (0,1]");
    }
    if (rounds < 1) {
        throw Error("InvalidConfig", "rounds must be >= 1");
    }
    if (apply_pvalue_filter && !(e_th > 0.0)) {
        throw Error("InvalidConfig", "e_th must be > 0");
    }
}

AnnotationSet generate_pseudo_labels(const SegmenterParams& params, const GrayRaster& raster,
                                     const LabelGrid& train_mask,
                                     const PerClassAreas& annot_areas,
                                     const PseudoLabelConfig& cfg,
                                     const RegionMask* train_region) {
    cfg.validate();
    const ProbabilityGrid probs = predict(params, raster);
    LabelGrid pred = argmax_labels(probs);
    if (train_region != nullptr) {
        pred = apply_region(pred, *train_region);
    }

    const std::vector<Component> components = connected_components(pred);

    struct Candidate {
        Component component;
        double confidence;
    };
    std::vector<Candidate> candidates;
    for (const Component& comp : components) {
        if (cfg.exclude_overlapping_expert) {
            bool touches_expert = false;
            for (std::int64_t pix : comp.pixels) {
                if (train_mask.labels[static_cast<std::size_t>(pix)] != ClassId::Unknown) {
                    touches_expert = true;
                    break;
                }
            }
            if (touches_expert) {
                continue;
            }
        }
        double conf = 0.0;
        const auto cls = static_cast<std::size_t>(comp.cls);
        for (std::int64_t pix : comp.pixels) {
            conf += probs.probs[static_cast<std::size_t>(pix)][cls];
        }
        conf /= static_cast<double>(comp.pixels.size());
        if (conf >= cfg.confidence_threshold) {
            candidates.push_back({comp, conf});
        }
    }

    std::vector<PValueRecord> records;
    std::vector<std::size_t> keep;
    if (cfg.apply_pvalue_filter && !candidates.empty()) {
        std::vector<std::size_t> record_owner;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            const Component& comp = candidates[i].component;
            const auto& ref = annot_areas.for_class(comp.cls);
            if (ref.empty()) {
                keep.push_back(i);  // no reference distribution to rank against
                continue;
            }
            records.push_back({comp.cls, comp.area_m2, empirical_pvalue(comp.area_m2, ref)});
            record_owner.push_back(i);
        }
        if (!records.empty()) {
            const FilterOutcome outcome = filter_by_threshold(records, cfg.e_th);
            for (std::size_t k : outcome.kept_indices) {
                keep.push_back(record_owner[k]);
            }
            std::sort(keep.begin(), keep.end());
        }
    } else {
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            keep.push_back(i);
        }
    }

    AnnotationSet pseudo;
    for (std::size_t i : keep) {
        const Component& comp = candidates[i].component;
        auto [polygon, area] = component_to_polygon(comp, pred.geo);
        Annotation a;
        a.cls = comp.cls;
        a.polygon = std::move(polygon);
        a.source = AnnotationSource::Pseudo;
        a.area_m2 = area;
        const auto& ref = annot_areas.for_class(comp.cls);
        if (!ref.empty()) {
            a.pvalue = empirical_pvalue(area, ref);
        }
        pseudo.entries.push_back(std::move(a));
    }
    return pseudo;
}

LabelGrid merge_pseudo_mask(const LabelGrid& expert_mask, const AnnotationSet& pseudo) {
    for (const Annotation& a : pseudo.entries) {
        if (a.source != AnnotationSource::Pseudo) {
            throw Error("InvalidSource", "merge expects only pseudo annotations");
        }
    }
    LabelGrid merged = expert_mask;
    const LabelGrid pseudo_grid =
        rasterize(pseudo, expert_mask.geo, expert_mask.width, expert_mask.height);
    for (std::size_t i = 0; i < merged.labels.size(); ++i) {
        if (merged.labels[i] == ClassId::Unknown) {
            merged.labels[i] = pseudo_grid.labels[i];
        }
    }
    return merged;
}

std::pair<SegmenterParams, TrainReport> retrain_with_pseudo(const GrayRaster& raster,
                                                            const LabelGrid& expert_mask,
                                                            const AnnotationSet& pseudo,
                                                            WeightPolicy policy,
                                                            const SegmenterConfig& cfg,
                                                            const RegionMask* region) {
    const LabelGrid merged = merge_pseudo_mask(expert_mask, pseudo);
    const LabelGrid& weight_source =
        policy == WeightPolicy::RecomputeWeights ? merged : expert_mask;
    const ClassWeights w = class_weights(count_labels(weight_source, region));
    return train(raster, merged, w, cfg, region);
}

RecursiveTrainResult run_recursive_training(const GrayRaster& raster,
                                            const LabelGrid& expert_mask,
                                            const PerClassAreas& annot_areas,
                                            const PseudoLabelConfig& pseudo_cfg,
                                            const SegmenterConfig& seg_cfg, WeightPolicy policy,
                                            const RegionMask* region) {
    pseudo_cfg.validate();

    RecursiveTrainResult result;
    const ClassWeights w0 = class_weights(count_labels(expert_mask, region));
    std::tie(result.params, result.report) = train(raster, expert_mask, w0, seg_cfg, region);

    for (int round = 1; round <= pseudo_cfg.rounds; ++round) {
        result.last_pseudo = generate_pseudo_labels(result.params, raster, expert_mask,
                                                    annot_areas, pseudo_cfg, region);
        std::tie(result.params, result.report) = retrain_with_pseudo(
            raster, expert_mask, result.last_pseudo, policy, seg_cfg, region);

        PseudoRound record;
        record.round = round;
        for (const Annotation& a : result.last_pseudo.entries) {
            ++record.n_pseudo_per_class[static_cast<std::size_t>(a.cls) - 1];
        }
        record.weights = result.report.weights;
        record.final_loss = result.report.final_loss;
        result.rounds.push_back(record);
    }
    return result;
}

std::string rounds_to_json(const std::vector<PseudoRound>& rounds) {
    nlohmann::json arr = nlohmann::json::array();
    for (const PseudoRound& r : rounds) {
        nlohmann::json j;
        j["round"] = r.round;
        j["n_pseudo_per_class"] = {{"waterhole", r.n_pseudo_per_class[0]},
                                   {"omuti", r.n_pseudo_per_class[1]},
                                   {"bigtree", r.n_pseudo_per_class[2]}};
        j["weights"] = {{"lambda_u", r.weights.lambda_u},
                        {"lambda_w", r.weights.lambda_w},
                        {"lambda_o", r.weights.lambda_o},
                        {"lambda_b", r.weights.lambda_b}};
        j["final_loss"] = r.final_loss;
        arr.push_back(std::move(j));
    }
    return arr.dump() + "\n";
}

}  // namespace sparseseg
