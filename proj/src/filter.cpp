#include "sparseseg/filter.hpp"

#include <cmath>

#include <json.hpp>

namespace sparseseg {

namespace {

std::size_t class_slot(ClassId c) {
    return static_cast<std::size_t>(c) - 1;  // annotated classes start at 1
}

}  // namespace

double empirical_pvalue(double area_m2, const std::vector<double>& annotated_areas) {
    if (annotated_areas.empty()) {
        throw Error("EmptyReference", "no annotated areas to rank against");
    }
    std::int64_t at_least = 0;
    for (double a : annotated_areas) {
        at_least += (a >= area_m2);
    }
    return static_cast<double>(1 + at_least) /
           static_cast<double>(annotated_areas.size() + 1);
}

const std::vector<double>& PerClassAreas::for_class(ClassId c) const {
    switch (c) {
        case ClassId::Waterhole: return waterhole;
        case ClassId::Omuti: return omuti;
        default: return bigtree;
    }
}

std::vector<double>& PerClassAreas::for_class(ClassId c) {
    switch (c) {
        case ClassId::Waterhole: return waterhole;
        case ClassId::Omuti: return omuti;
        default: return bigtree;
    }
}

FilterClassReport& FilterReport::for_class(ClassId c) { return per_class[class_slot(c)]; }

const FilterClassReport& FilterReport::for_class(ClassId c) const {
    return per_class[class_slot(c)];
}

FilterOutcome filter_by_threshold(const std::vector<PValueRecord>& records, double e_th) {
    if (!(e_th > 0.0)) {
        throw Error("InvalidThreshold", "e_th must be > 0");
    }

    std::array<double, 3> sum = {0, 0, 0};
    std::array<double, 3> sum_sq = {0, 0, 0};
    std::array<std::int64_t, 3> n = {0, 0, 0};
    for (const PValueRecord& r : records) {
        const std::size_t k = class_slot(r.cls);
        sum[k] += r.pvalue;
        sum_sq[k] += r.pvalue * r.pvalue;
        ++n[k];
    }

    FilterOutcome out;
    for (ClassId c : kAnnotatedClasses) {
        const std::size_t k = class_slot(c);
        FilterClassReport& rep = out.report.per_class[k];
        rep.n_input = n[k];
        rep.e_th = e_th;
        if (n[k] > 0) {
            rep.mu = sum[k] / static_cast<double>(n[k]);
            const double var = sum_sq[k] / static_cast<double>(n[k]) - rep.mu * rep.mu;
            rep.sigma = std::sqrt(std::max(var, 0.0));
        }
    }

    for (std::size_t i = 0; i < records.size(); ++i) {
        const PValueRecord& r = records[i];
        const FilterClassReport& rep = out.report.per_class[class_slot(r.cls)];
        if (std::abs(r.pvalue - rep.mu) <= e_th * rep.sigma) {
            out.kept.push_back(r);
            out.kept_indices.push_back(i);
        } else {
            out.discarded.push_back(r);
            out.discarded_indices.push_back(i);
        }
    }
    for (ClassId c : kAnnotatedClasses) {
        const std::size_t k = class_slot(c);
        FilterClassReport& rep = out.report.per_class[k];
        for (const PValueRecord& r : out.kept) {
            rep.n_kept += (class_slot(r.cls) == k);
        }
        rep.n_discarded = rep.n_input - rep.n_kept;
    }
    return out;
}

std::string filter_report_json(const FilterReport& report) {
    nlohmann::json j;
    for (ClassId c : kAnnotatedClasses) {
        const FilterClassReport& rep = report.for_class(c);
        nlohmann::json row;
        row["n_input"] = rep.n_input;
        row["n_kept"] = rep.n_kept;
        row["n_discarded"] = rep.n_discarded;
        row["mu"] = rep.mu;
        row["sigma"] = rep.sigma;
        row["e_th"] = rep.e_th;
        j[class_name(c)] = std::move(row);
    }
    return j.dump() + "\n";
}

const std::vector<std::int64_t>& PValueHistogram::for_class(ClassId c) const {
    return counts[static_cast<std::size_t>(c) - 1];
}

PValueHistogram pvalue_histogram(const std::vector<PValueRecord>& records, int bins) {
    if (bins < 1) {
        throw Error("InvalidBinCount", "bins must be >= 1");
    }
    PValueHistogram h;
    h.bins = bins;
    for (auto& c : h.counts) {
        c.assign(static_cast<std::size_t>(bins), 0);
    }
    for (const PValueRecord& r : records) {
        int bin = static_cast<int>(r.pvalue * bins);
        bin = std::min(std::max(bin, 0), bins - 1);
        ++h.counts[class_slot(r.cls)][static_cast<std::size_t>(bin)];
    }
    return h;
}

}  // namespace sparseseg
