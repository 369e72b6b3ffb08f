#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sparseseg/core.hpp"

namespace sparseseg {

struct MapPoint {
    double x = 0.0;  // easting, meters
    double y = 0.0;  // northing, meters
};

// Single exterior ring, stored open (first vertex not repeated at the end).
struct Polygon {
    std::vector<MapPoint> exterior;
};

double polygon_area(const Polygon& p);       // shoelace, absolute
double polygon_perimeter(const Polygon& p);  // Euclidean, closed ring
MapPoint polygon_centroid(const Polygon& p); // vertex mean

// Rejects rings with < 3 vertices, zero area, or proper self-intersections.
// Rings touching themselves at isolated points (as traced component
// boundaries may) are accepted.
void validate_polygon(const Polygon& p);

enum class AnnotationSource : std::uint8_t { Expert, Pseudo };

struct Annotation {
    ClassId cls = ClassId::Waterhole;
    Polygon polygon;
    AnnotationSource source = AnnotationSource::Expert;
    // Carried through GeoJSON when present; pixel-count area and p-value of
    // predicted polygons.
    std::optional<double> area_m2;
    std::optional<double> pvalue;
};

// Entry order is preserved: it defines rasterization precedence
// (later entries win where polygons overlap).
struct AnnotationSet {
    std::vector<Annotation> entries;

    std::size_t size() const { return entries.size(); }
    bool empty() const { return entries.empty(); }
};

AnnotationSet load_annotations(const std::string& path);
void save_annotations(const AnnotationSet& set, const std::string& path);

// Pixel-center point-in-polygon with the even-odd rule; later entries
// overwrite earlier ones; everything else stays Unknown.
LabelGrid rasterize(const AnnotationSet& set, const GeoTransform& geo, int width, int height);

// Row-major linear indices of the in-bounds pixels whose center lies inside
// the ring (even-odd rule). The primitive behind rasterize.
std::vector<std::int64_t> covered_pixels(const Polygon& p, const GeoTransform& geo, int width,
                                         int height);

enum class SplitSide : std::uint8_t { Train = 0, Test = 1 };

struct SplitSpec {
    int block_size = 256;
    double train_fraction = 0.7;
    std::uint64_t seed = 0;
    int tiles_x = 0;
    int tiles_y = 0;
    std::vector<SplitSide> assignment;  // row-major over tiles

    SplitSide tile_side(int tx, int ty) const {
        return assignment[static_cast<std::size_t>(ty) * tiles_x + tx];
    }
    std::int64_t tile_count(SplitSide side) const;

    // Pixel mask of one side over a grid of the given dimensions.
    // Throws DimensionMismatch when the spec does not cover the grid.
    RegionMask region_mask(SplitSide side, int width, int height) const;
};

SplitSpec spatial_split(int width, int height, double train_fraction, int block_size,
                        std::uint64_t seed);

SplitSpec load_split(const std::string& path);
void save_split(const SplitSpec& spec, const std::string& path);

// Train copy keeps labels only on Train tiles, test copy only on Test tiles.
std::pair<LabelGrid, LabelGrid> mask_split(const LabelGrid& grid, const SplitSpec& spec);

// Assigns each polygon to the side of the tile containing its centroid.
std::pair<AnnotationSet, AnnotationSet> split_annotations(const AnnotationSet& set,
                                                          const SplitSpec& spec,
                                                          const GeoTransform& geo,
                                                          int width, int height);

struct ClassStatsRow {
    std::int64_t pixels = 0;
    double pixel_pct = 0.0;
    std::int64_t polygons = 0;
    double polygon_pct = 0.0;
    double sum_area_m2 = 0.0;
    double mean_area_m2 = 0.0;
};

struct ClassStats {
    ClassStatsRow waterhole;
    ClassStatsRow omuti;
    ClassStatsRow bigtree;
    ClassStatsRow total;

    const ClassStatsRow& row(ClassId c) const;
    ClassStatsRow& row(ClassId c);
};

// Pixel columns come from the grid, polygon columns from the annotations.
ClassStats compute_stats(const LabelGrid& grid, const AnnotationSet& set);

std::string stats_to_csv(const ClassStats& stats);
ClassStats stats_from_csv(const std::string& csv);
void save_stats_csv(const ClassStats& stats, const std::string& path);
ClassStats load_stats_csv(const std::string& path);

}  // namespace sparseseg
