#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "sparseseg/core.hpp"

namespace sparseseg {

struct PValueRecord {
    ClassId cls = ClassId::Waterhole;
    double area_m2 = 0.0;
    double pvalue = 0.0;
};

// Rank-based tail probability of an area among the annotated areas:
// (1 + #{a : a >= area}) / (N + 1). Ties count toward the numerator.
double empirical_pvalue(double area_m2, const std::vector<double>& annotated_areas);

// Reference area lists per annotated class.
struct PerClassAreas {
    std::vector<double> waterhole;
    std::vector<double> omuti;
    std::vector<double> bigtree;

    const std::vector<double>& for_class(ClassId c) const;
    std::vector<double>& for_class(ClassId c);
};

struct FilterClassReport {
    std::int64_t n_input = 0;
    std::int64_t n_kept = 0;
    std::int64_t n_discarded = 0;
    double mu = 0.0;
    double sigma = 0.0;
    double e_th = 0.0;
};

struct FilterReport {
    std::array<FilterClassReport, 3> per_class;  // waterhole, omuti, bigtree

    FilterClassReport& for_class(ClassId c);
    const FilterClassReport& for_class(ClassId c) const;
};

struct FilterOutcome {
    std::vector<PValueRecord> kept;
    std::vector<PValueRecord> discarded;
    // Positions in the input list, so callers can mirror the partition onto
    // parallel structures (components, annotations).
    std::vector<std::size_t> kept_indices;
    std::vector<std::size_t> discarded_indices;
    FilterReport report;
};

// Per class: mean and population standard deviation of the records'
// p-values; keep records with |p - mu| <= e_th * sigma.
FilterOutcome filter_by_threshold(const std::vector<PValueRecord>& records, double e_th);

std::string filter_report_json(const FilterReport& report);

struct PValueHistogram {
    int bins = 0;
    std::array<std::vector<std::int64_t>, 3> counts;  // waterhole, omuti, bigtree

    const std::vector<std::int64_t>& for_class(ClassId c) const;
};

// Equal-width bins over [0,1]; p = 1 lands in the last bin.
PValueHistogram pvalue_histogram(const std::vector<PValueRecord>& records, int bins);

}  // namespace sparseseg
