#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sparseseg/core.hpp"
#include "sparseseg/filter.hpp"
#include "sparseseg/polyops.hpp"

namespace sparseseg {

// How pixels whose truth label is Unknown enter pixel-level scoring.
// ExcludeUnknown drops them entirely; UnknownAsFp keeps predictions on them
// as false positives (the pessimistic precision reading).
enum class ScoringMode : std::uint8_t { ExcludeUnknown, UnknownAsFp };

struct MetricCounts {
    std::int64_t tp = 0;
    std::int64_t tn = 0;
    std::int64_t fp = 0;
    std::int64_t fn = 0;
};

struct ClassScore {
    MetricCounts counts;
    std::optional<double> accuracy;  // absent at polygon level
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

struct ClassMetrics {
    ClassScore waterhole;
    ClassScore omuti;
    ClassScore bigtree;
    std::optional<double> macro_accuracy;
    double macro_precision = 0.0;
    double macro_recall = 0.0;
    double macro_f1 = 0.0;

    const ClassScore& row(ClassId c) const;
    ClassScore& row(ClassId c);
};

// One-vs-rest pixel counts per annotated class over the selected region.
ClassMetrics pixel_metrics(const LabelGrid& pred, const LabelGrid& truth,
                           const RegionMask* region = nullptr,
                           ScoringMode mode = ScoringMode::ExcludeUnknown);

// Greedy one-to-one matching of same-class components in descending
// overlap; a pair is a candidate when the larger of the two directional
// overlap fractions reaches the threshold.
ClassMetrics polygon_metrics(const std::vector<Component>& pred,
                             const std::vector<Component>& truth, double overlap_threshold);

// Inputs of one ablation strategy, ready for repeated evaluation under
// different eval-time filters.
struct StrategyArtifacts {
    std::string strategy;
    std::vector<Component> pred;
    std::vector<Component> truth;
    PerClassAreas annotated_areas;
    double overlap_threshold = 0.05;
};

struct StrategyRow {
    std::string strategy;
    std::optional<double> e_th;  // absent = raw
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::int64_t tp_total = 0;
    std::vector<std::size_t> kept_pred_indices;
    ClassMetrics detail;
};

// Applies the p-value filter to the predicted components when e_th is set,
// then scores at polygon level. Classes with no annotated reference areas
// pass through unfiltered.
StrategyRow evaluate_strategy(const StrategyArtifacts& artifacts, std::optional<double> e_th);

std::string metrics_to_csv(const std::vector<StrategyRow>& rows);
std::string metrics_to_json(const std::vector<StrategyRow>& rows);

// The compact strategy x filter table of macro F1 scores.
std::string ablation_csv(const std::vector<StrategyRow>& rows);

}  // namespace sparseseg
