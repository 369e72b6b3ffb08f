#include "sparseseg/change.hpp"

#include <cmath>
#include <cstdio>

#include <json.hpp>

namespace sparseseg {

namespace {

constexpr double kFlatTolerance = 0.005;  // m2, half the reported precision

ClassChange diff_rows(const ClassStatsRow& a, const ClassStatsRow& b) {
    ClassChange c;
    c.count_t1 = a.polygons;
    c.count_t2 = b.polygons;
    c.delta_count = b.polygons - a.polygons;
    c.mean_t1 = a.mean_area_m2;
    c.mean_t2 = b.mean_area_m2;
    c.delta_mean = b.mean_area_m2 - a.mean_area_m2;
    c.sum_t1 = a.sum_area_m2;
    c.sum_t2 = b.sum_area_m2;
    c.delta_sum = b.sum_area_m2 - a.sum_area_m2;
    if (std::abs(c.delta_mean) < kFlatTolerance) {
        c.direction = ChangeDirection::Flat;
    } else {
        c.direction = c.delta_mean > 0 ? ChangeDirection::Increase : ChangeDirection::Decrease;
    }
    return c;
}

}  // namespace

const std::string& direction_name(ChangeDirection d) {
    static const std::string names[3] = {"increase", "decrease", "flat"};
    return names[static_cast<std::size_t>(d)];
}

const ClassChange& ChangeReport::row(ClassId c) const {
    switch (c) {
        case ClassId::Waterhole: return waterhole;
        case ClassId::Omuti: return omuti;
        default: return bigtree;
    }
}

ChangeReport compare_epochs(const ClassStats& t1, const ClassStats& t2) {
    ChangeReport report;
    report.waterhole = diff_rows(t1.waterhole, t2.waterhole);
    report.omuti = diff_rows(t1.omuti, t2.omuti);
    report.bigtree = diff_rows(t1.bigtree, t2.bigtree);
    return report;
}

std::string change_to_csv(const ChangeReport& report) {
    std::string out = "class,count_t1,count_t2,mean_t1,mean_t2,sum_t1,sum_t2,direction\n";
    for (ClassId c : kAnnotatedClasses) {
        const ClassChange& row = report.row(c);
        char buf[256];
        std::snprintf(buf, sizeof(buf), "%s,%lld,%lld,%.2f,%.2f,%.2f,%.2f,%s\n",
                      class_name(c).c_str(), static_cast<long long>(row.count_t1),
                      static_cast<long long>(row.count_t2), row.mean_t1, row.mean_t2, row.sum_t1,
                      row.sum_t2, direction_name(row.direction).c_str());
        out += buf;
    }
    return out;
}

std::string change_to_json(const ChangeReport& report) {
    nlohmann::json j;
    for (ClassId c : kAnnotatedClasses) {
        const ClassChange& row = report.row(c);
        nlohmann::json r;
        r["count_t1"] = row.count_t1;
        r["count_t2"] = row.count_t2;
        r["delta_count"] = row.delta_count;
        r["mean_t1"] = row.mean_t1;
        r["mean_t2"] = row.mean_t2;
        r["delta_mean"] = row.delta_mean;
        r["sum_t1"] = row.sum_t1;
        r["sum_t2"] = row.sum_t2;
        r["delta_sum"] = row.delta_sum;
        r["direction"] = direction_name(row.direction);
        j[class_name(c)] = std::move(r);
    }
    return j.dump() + "\n";
}

}  // namespace sparseseg
