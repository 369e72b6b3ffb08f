#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sparseseg/annot.hpp"
#include "sparseseg/core.hpp"

// Absolute-tolerance check; doctest's Approx is relative-only.
#define CHECK_NEAR(a, b, tol) CHECK(std::abs((a) - (b)) <= (tol))

namespace sparseseg::testing {

// Published annotation-table numbers used as fixtures across the suites.
struct PublishedRow {
    std::int64_t pixels;
    std::int64_t polygons;
    double sum_area;
    double mean_area;
};

struct PublishedTable {
    PublishedRow waterhole;
    PublishedRow omuti;
    PublishedRow bigtree;
};

inline PublishedTable published_1943() {
    return {{39776, 103, 14809.0, 143.77},
            {483095, 205, 190892.0, 931.18},
            {580251, 2685, 230052.0, 85.68}};
}

inline PublishedTable published_1972() {
    return {{52397, 273, 47850.0, 175.27},
            {350400, 482, 348398.0, 722.82},
            {1410979, 13088, 1410616.0, 107.78}};
}

// Builds a valid annotation set with the exact polygon count and total
// shoelace area per class. Individual areas vary around the mean so the
// fixture is not a single repeated square; squares sit on a lattice with
// clearance so they never touch.
inline AnnotationSet make_count_area_fixture(const PublishedTable& table) {
    AnnotationSet set;

    double max_side = 0.0;
    for (const PublishedRow* row : {&table.waterhole, &table.omuti, &table.bigtree}) {
        const double base = row->sum_area / static_cast<double>(row->polygons);
        max_side = std::max(max_side, std::sqrt(base * 1.3));
    }
    const double cell = max_side + 4.0;
    const std::int64_t total =
        table.waterhole.polygons + table.omuti.polygons + table.bigtree.polygons;
    const auto columns = static_cast<std::int64_t>(std::ceil(std::sqrt(static_cast<double>(total))));

    std::int64_t placed = 0;
    auto add_class = [&](ClassId cls, const PublishedRow& row) {
        const double base = row.sum_area / static_cast<double>(row.polygons);
        for (std::int64_t i = 0; i < row.polygons; ++i) {
            // +/-25% in pairs keeps the running total at count * base.
            double area = base;
            if (i + 1 < row.polygons || (row.polygons % 2) == 0) {
                area = (i % 2 == 0) ? base * 1.25 : base * 0.75;
            }
            const double side = std::sqrt(area);
            const double x0 = static_cast<double>(placed % columns) * cell;
            const double y0 = -static_cast<double>(placed / columns) * cell;
            Annotation a;
            a.cls = cls;
            a.polygon.exterior = {{x0, y0},
                                  {x0 + side, y0},
                                  {x0 + side, y0 - side},
                                  {x0, y0 - side}};
            set.entries.push_back(std::move(a));
            ++placed;
        }
    };
    add_class(ClassId::Waterhole, table.waterhole);
    add_class(ClassId::Omuti, table.omuti);
    add_class(ClassId::BigTree, table.bigtree);
    return set;
}

// Stats carrying the published polygon/mean/sum numbers directly, for tests
// that start from the table rather than from polygons.
inline ClassStats published_stats(const PublishedTable& table) {
    ClassStats stats;
    auto fill = [](ClassStatsRow& row, const PublishedRow& src) {
        row.pixels = src.pixels;
        row.polygons = src.polygons;
        row.sum_area_m2 = src.sum_area;
        row.mean_area_m2 = src.mean_area;
    };
    fill(stats.waterhole, table.waterhole);
    fill(stats.omuti, table.omuti);
    fill(stats.bigtree, table.bigtree);
    stats.total.pixels =
        table.waterhole.pixels + table.omuti.pixels + table.bigtree.pixels;
    stats.total.polygons =
        table.waterhole.polygons + table.omuti.polygons + table.bigtree.polygons;
    stats.total.sum_area_m2 =
        table.waterhole.sum_area + table.omuti.sum_area + table.bigtree.sum_area;
    stats.total.mean_area_m2 = stats.total.sum_area_m2 / static_cast<double>(stats.total.polygons);
    return stats;
}

// Scratch directory under the test working directory, wiped on entry.
inline std::filesystem::path scratch_dir(const std::string& name) {
    const std::filesystem::path dir = std::filesystem::path("scratch") / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace sparseseg::testing
