#include "sparseseg/annot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

namespace sparseseg {

namespace {

constexpr double kAreaEps = 1e-12;

int orientation_sign(const MapPoint& a, const MapPoint& b, const MapPoint& c) {
    const double v = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    if (v > 0.0) return 1;
    if (v < 0.0) return -1;
    return 0;
}

bool on_segment(const MapPoint& a, const MapPoint& b, const MapPoint& p) {
    return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) &&
           std::min(a.y, b.y) <= p.y && p.y <= std::max(a.y, b.y);
}

bool points_equal(const MapPoint& a, const MapPoint& b) {
    return a.x == b.x && a.y == b.y;
}

// Segments may share endpoints (touch); anything beyond that counts as an
// intersection.
bool segments_cross(const MapPoint& p1, const MapPoint& p2, const MapPoint& q1,
                    const MapPoint& q2) {
    const int o1 = orientation_sign(p1, p2, q1);
    const int o2 = orientation_sign(p1, p2, q2);
    const int o3 = orientation_sign(q1, q2, p1);
    const int o4 = orientation_sign(q1, q2, p2);

    if (o1 != o2 && o3 != o4 && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0) {
        return true;  // proper crossing
    }

    // Collinear or endpoint contact. Shared endpoints are fine; a vertex in
    // the interior of the other segment, or overlapping collinear runs, are
    // not.
    auto touches_improperly = [](const MapPoint& a, const MapPoint& b, const MapPoint& p,
                                 const MapPoint& other1, const MapPoint& other2) {
        if (orientation_sign(a, b, p) != 0 || !on_segment(a, b, p)) {
            return false;
        }
        return !points_equal(p, other1) && !points_equal(p, other2);
    };
    if (touches_improperly(p1, p2, q1, p1, p2)) return true;
    if (touches_improperly(p1, p2, q2, p1, p2)) return true;
    if (touches_improperly(q1, q2, p1, q1, q2)) return true;
    if (touches_improperly(q1, q2, p2, q1, q2)) return true;
    return false;
}

double shoelace_signed(const std::vector<MapPoint>& ring) {
    double acc = 0.0;
    const std::size_t n = ring.size();
    for (std::size_t i = 0; i < n; ++i) {
        const MapPoint& a = ring[i];
        const MapPoint& b = ring[(i + 1) % n];
        acc += a.x * b.y - b.x * a.y;
    }
    return 0.5 * acc;
}

nlohmann::json polygon_to_geojson(const Polygon& p) {
    nlohmann::json ring = nlohmann::json::array();
    for (const MapPoint& v : p.exterior) {
        ring.push_back({v.x, v.y});
    }
    ring.push_back({p.exterior.front().x, p.exterior.front().y});
    nlohmann::json geom;
    geom["type"] = "Polygon";
    geom["coordinates"] = nlohmann::json::array({ring});
    return geom;
}

Polygon polygon_from_geojson(const nlohmann::json& geom, std::size_t feature_index) {
    const std::string where = "feature " + std::to_string(feature_index);
    if (!geom.is_object() || geom.value("type", "") != "Polygon" ||
        !geom.contains("coordinates") || !geom["coordinates"].is_array() ||
        geom["coordinates"].empty()) {
        throw Error("MalformedGeoJson", where + " has no Polygon geometry");
    }
    if (geom["coordinates"].size() > 1) {
        throw Error("MalformedGeoJson", where + " has interior rings; only single exterior rings are supported");
    }
    const auto& ring = geom["coordinates"][0];
    if (!ring.is_array()) {
        throw Error("MalformedGeoJson", where + " exterior ring is not an array");
    }
    Polygon p;
    for (const auto& v : ring) {
        if (!v.is_array() || v.size() < 2 || !v[0].is_number() || !v[1].is_number()) {
            throw Error("MalformedGeoJson", where + " has a malformed coordinate");
        }
        p.exterior.push_back({v[0].get<double>(), v[1].get<double>()});
    }
    if (p.exterior.size() >= 2 && points_equal(p.exterior.front(), p.exterior.back())) {
        p.exterior.pop_back();  // stored open
    }
    return p;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("MissingFile", "cannot open " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("IoFailure", "cannot open " + path + " for writing");
    }
    out << text;
    if (!out) {
        throw Error("IoFailure", "short write to " + path);
    }
}

void fill_row(ClassStatsRow& row, std::int64_t pixels, std::int64_t grid_pixels,
              std::int64_t polygons, std::int64_t total_polygons, double sum_area) {
    row.pixels = pixels;
    row.pixel_pct = grid_pixels > 0 ? 100.0 * static_cast<double>(pixels) / grid_pixels : 0.0;
    row.polygons = polygons;
    row.polygon_pct =
        total_polygons > 0 ? 100.0 * static_cast<double>(polygons) / total_polygons : 0.0;
    row.sum_area_m2 = sum_area;
    row.mean_area_m2 = polygons > 0 ? sum_area / static_cast<double>(polygons) : 0.0;
}

}  // namespace

double polygon_area(const Polygon& p) {
    return std::abs(shoelace_signed(p.exterior));
}

double polygon_perimeter(const Polygon& p) {
    double acc = 0.0;
    const std::size_t n = p.exterior.size();
    for (std::size_t i = 0; i < n; ++i) {
        const MapPoint& a = p.exterior[i];
        const MapPoint& b = p.exterior[(i + 1) % n];
        acc += std::hypot(b.x - a.x, b.y - a.y);
    }
    return acc;
}

MapPoint polygon_centroid(const Polygon& p) {
    MapPoint c;
    for (const MapPoint& v : p.exterior) {
        c.x += v.x;
        c.y += v.y;
    }
    const double n = static_cast<double>(p.exterior.size());
    return {c.x / n, c.y / n};
}

void validate_polygon(const Polygon& p) {
    const std::size_t n = p.exterior.size();
    if (n < 3) {
        throw Error("DegeneratePolygon",
                    "ring has " + std::to_string(n) + " vertices, need at least 3");
    }
    if (std::abs(shoelace_signed(p.exterior)) <= kAreaEps) {
        throw Error("DegeneratePolygon", "ring has zero area");
    }
    for (std::size_t i = 0; i < n; ++i) {
        const MapPoint& a1 = p.exterior[i];
        const MapPoint& a2 = p.exterior[(i + 1) % n];
        for (std::size_t j = i + 1; j < n; ++j) {
            // Skip the shared-endpoint neighbours of edge i.
            if (j == i + 1 || (i == 0 && j == n - 1)) {
                continue;
            }
            const MapPoint& b1 = p.exterior[j];
            const MapPoint& b2 = p.exterior[(j + 1) % n];
            if (segments_cross(a1, a2, b1, b2)) {
                throw Error("SelfIntersectingPolygon",
                            "edges " + std::to_string(i) + " and " + std::to_string(j) +
                                " intersect");
            }
        }
    }
}

AnnotationSet load_annotations(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text(path));
    } catch (const nlohmann::json::exception& e) {
        throw Error("MalformedGeoJson", std::string(e.what()) + " in " + path);
    }
    if (!j.is_object() || j.value("type", "") != "FeatureCollection" ||
        !j.contains("features") || !j["features"].is_array()) {
        throw Error("MalformedGeoJson", "expected a FeatureCollection in " + path);
    }

    AnnotationSet set;
    std::size_t index = 0;
    for (const auto& feature : j["features"]) {
        const std::string where = "feature " + std::to_string(index);
        if (!feature.is_object() || !feature.contains("properties") ||
            !feature["properties"].is_object() || !feature.contains("geometry")) {
            throw Error("MalformedGeoJson", where + " is not a Feature in " + path);
        }
        const auto& props = feature["properties"];
        if (!props.contains("class") || !props["class"].is_string()) {
            throw Error("MalformedGeoJson", where + " has no class property in " + path);
        }
        const ClassId cls = class_from_name(props["class"].get<std::string>());
        if (cls == ClassId::Unknown) {
            throw Error("UnknownClassName", where + " uses the background class");
        }

        Annotation a;
        a.cls = cls;
        a.polygon = polygon_from_geojson(feature["geometry"], index);
        validate_polygon(a.polygon);
        if (props.contains("source") && props["source"].is_string()) {
            const std::string s = props["source"].get<std::string>();
            if (s == "pseudo") {
                a.source = AnnotationSource::Pseudo;
            } else if (s == "expert") {
                a.source = AnnotationSource::Expert;
            } else {
                throw Error("MalformedGeoJson", where + " has unknown source '" + s + "'");
            }
        }
        if (props.contains("area_m2") && props["area_m2"].is_number()) {
            a.area_m2 = props["area_m2"].get<double>();
        }
        if (props.contains("pvalue") && props["pvalue"].is_number()) {
            a.pvalue = props["pvalue"].get<double>();
        }
        set.entries.push_back(std::move(a));
        ++index;
    }
    return set;
}

void save_annotations(const AnnotationSet& set, const std::string& path) {
    nlohmann::json features = nlohmann::json::array();
    for (const Annotation& a : set.entries) {
        nlohmann::json props;
        props["class"] = class_name(a.cls);
        props["source"] = a.source == AnnotationSource::Pseudo ? "pseudo" : "expert";
        if (a.area_m2) {
            props["area_m2"] = *a.area_m2;
        }
        if (a.pvalue) {
            props["pvalue"] = *a.pvalue;
        }
        nlohmann::json feature;
        feature["type"] = "Feature";
        feature["properties"] = std::move(props);
        feature["geometry"] = polygon_to_geojson(a.polygon);
        features.push_back(std::move(feature));
    }
    nlohmann::json root;
    root["type"] = "FeatureCollection";
    root["features"] = std::move(features);
    write_text(path, root.dump() + "\n");
}

std::vector<std::int64_t> covered_pixels(const Polygon& p, const GeoTransform& geo, int width,
                                         int height) {
    std::vector<std::int64_t> covered;
    const double ps = geo.pixel_size;
    const auto& ring = p.exterior;
    double min_y = ring[0].y, max_y = ring[0].y;
    for (const MapPoint& v : ring) {
        min_y = std::min(min_y, v.y);
        max_y = std::max(max_y, v.y);
    }
    // Pixel rows whose center northing falls inside [min_y, max_y].
    int row_lo = static_cast<int>(std::ceil((geo.origin_y - max_y) / ps));
    int row_hi = static_cast<int>(std::floor((geo.origin_y - min_y) / ps));
    row_lo = std::max(row_lo, 0);
    row_hi = std::min(row_hi, height - 1);

    std::vector<double> crossings;
    for (int row = row_lo; row <= row_hi; ++row) {
        const double y = geo.origin_y - row * ps;
        crossings.clear();
        const std::size_t n = ring.size();
        for (std::size_t i = 0; i < n; ++i) {
            const MapPoint& p1 = ring[i];
            const MapPoint& p2 = ring[(i + 1) % n];
            if ((p1.y > y) == (p2.y > y)) {
                continue;
            }
            crossings.push_back(p1.x + (y - p1.y) * (p2.x - p1.x) / (p2.y - p1.y));
        }
        std::sort(crossings.begin(), crossings.end());
        for (std::size_t i = 0; i + 1 < crossings.size(); i += 2) {
            const double t_lo = (crossings[i] - geo.origin_x) / ps;
            const double t_hi = (crossings[i + 1] - geo.origin_x) / ps;
            int col_lo = static_cast<int>(std::floor(t_lo)) + 1;
            int col_hi = static_cast<int>(std::ceil(t_hi)) - 1;
            col_lo = std::max(col_lo, 0);
            col_hi = std::min(col_hi, width - 1);
            for (int col = col_lo; col <= col_hi; ++col) {
                covered.push_back(static_cast<std::int64_t>(row) * width + col);
            }
        }
    }
    return covered;
}

LabelGrid rasterize(const AnnotationSet& set, const GeoTransform& geo, int width, int height) {
    if (width < 1 || height < 1) {
        throw Error("EmptyGrid", "rasterize target must be at least 1x1");
    }
    LabelGrid grid;
    grid.width = width;
    grid.height = height;
    grid.geo = geo;
    grid.labels.assign(static_cast<std::size_t>(width) * height, ClassId::Unknown);

    for (const Annotation& a : set.entries) {
        for (std::int64_t pix : covered_pixels(a.polygon, geo, width, height)) {
            grid.labels[static_cast<std::size_t>(pix)] = a.cls;
        }
    }
    return grid;
}

std::int64_t SplitSpec::tile_count(SplitSide side) const {
    std::int64_t n = 0;
    for (SplitSide s : assignment) {
        n += (s == side);
    }
    return n;
}

RegionMask SplitSpec::region_mask(SplitSide side, int width, int height) const {
    const int need_x = (width + block_size - 1) / block_size;
    const int need_y = (height + block_size - 1) / block_size;
    if (need_x != tiles_x || need_y != tiles_y) {
        throw Error("DimensionMismatch",
                    "split covers " + std::to_string(tiles_x) + "x" + std::to_string(tiles_y) +
                        " tiles, grid needs " + std::to_string(need_x) + "x" +
                        std::to_string(need_y));
    }
    RegionMask mask;
    mask.width = width;
    mask.height = height;
    mask.inside.assign(static_cast<std::size_t>(width) * height, 0);
    for (int row = 0; row < height; ++row) {
        const int ty = row / block_size;
        for (int col = 0; col < width; ++col) {
            const int tx = col / block_size;
            if (tile_side(tx, ty) == side) {
                mask.inside[static_cast<std::size_t>(row) * width + col] = 1;
            }
        }
    }
    return mask;
}

SplitSpec spatial_split(int width, int height, double train_fraction, int block_size,
                        std::uint64_t seed) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw Error("InvalidSplitFraction", "train_fraction must be in (0,1)");
    }
    if (block_size < 1) {
        throw Error("InvalidBlockSize", "block_size must be >= 1");
    }
    SplitSpec spec;
    spec.block_size = block_size;
    spec.train_fraction = train_fraction;
    spec.seed = seed;
    spec.tiles_x = (width + block_size - 1) / block_size;
    spec.tiles_y = (height + block_size - 1) / block_size;

    const std::size_t n = static_cast<std::size_t>(spec.tiles_x) * spec.tiles_y;
    std::vector<std::uint32_t> order(n);
    for (std::size_t i = 0; i < n; ++i) {
        order[i] = static_cast<std::uint32_t>(i);
    }
    // Hand-rolled Fisher-Yates: std::shuffle's visit order is
    // implementation-defined, seeds must reproduce across toolchains.
    std::mt19937 rng(static_cast<std::uint32_t>(seed));
    for (std::size_t i = n; i > 1; --i) {
        const std::size_t j = rng() % i;
        std::swap(order[i - 1], order[j]);
    }
    const auto n_train = static_cast<std::size_t>(
        std::ceil(train_fraction * static_cast<double>(n) - 1e-9));
    spec.assignment.assign(n, SplitSide::Test);
    for (std::size_t i = 0; i < n_train && i < n; ++i) {
        spec.assignment[order[i]] = SplitSide::Train;
    }
    return spec;
}

SplitSpec load_split(const std::string& path) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_text(path));
    } catch (const nlohmann::json::exception& e) {
        throw Error("MalformedSplitSpec", std::string(e.what()) + " in " + path);
    }
    SplitSpec spec;
    try {
        spec.block_size = j.at("block_size").get<int>();
        spec.train_fraction = j.at("train_fraction").get<double>();
        spec.seed = j.at("seed").get<std::uint64_t>();
        spec.tiles_x = j.at("tiles_x").get<int>();
        spec.tiles_y = j.at("tiles_y").get<int>();
        for (const auto& v : j.at("assignment")) {
            spec.assignment.push_back(v.get<int>() == 0 ? SplitSide::Train : SplitSide::Test);
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error("MalformedSplitSpec", std::string(e.what()) + " in " + path);
    }
    if (spec.assignment.size() != static_cast<std::size_t>(spec.tiles_x) * spec.tiles_y) {
        throw Error("MalformedSplitSpec", "assignment does not cover the tile grid in " + path);
    }
    return spec;
}

void save_split(const SplitSpec& spec, const std::string& path) {
    nlohmann::json j;
    j["block_size"] = spec.block_size;
    j["train_fraction"] = spec.train_fraction;
    j["seed"] = spec.seed;
    j["tiles_x"] = spec.tiles_x;
    j["tiles_y"] = spec.tiles_y;
    nlohmann::json assignment = nlohmann::json::array();
    for (SplitSide s : spec.assignment) {
        assignment.push_back(s == SplitSide::Train ? 0 : 1);
    }
    j["assignment"] = std::move(assignment);
    write_text(path, j.dump() + "\n");
}

std::pair<LabelGrid, LabelGrid> mask_split(const LabelGrid& grid, const SplitSpec& spec) {
    const RegionMask train = spec.region_mask(SplitSide::Train, grid.width, grid.height);
    const RegionMask test = spec.region_mask(SplitSide::Test, grid.width, grid.height);
    return {apply_region(grid, train), apply_region(grid, test)};
}

std::pair<AnnotationSet, AnnotationSet> split_annotations(const AnnotationSet& set,
                                                          const SplitSpec& spec,
                                                          const GeoTransform& geo,
                                                          int width, int height) {
    AnnotationSet train, test;
    for (const Annotation& a : set.entries) {
        const MapPoint c = polygon_centroid(a.polygon);
        auto [fx, fy] = geo.to_pixel(c.x, c.y);
        int col = static_cast<int>(std::llround(fx));
        int row = static_cast<int>(std::llround(fy));
        col = std::clamp(col, 0, width - 1);
        row = std::clamp(row, 0, height - 1);
        const int tx = std::min(col / spec.block_size, spec.tiles_x - 1);
        const int ty = std::min(row / spec.block_size, spec.tiles_y - 1);
        if (spec.tile_side(tx, ty) == SplitSide::Train) {
            train.entries.push_back(a);
        } else {
            test.entries.push_back(a);
        }
    }
    return {std::move(train), std::move(test)};
}

const ClassStatsRow& ClassStats::row(ClassId c) const {
    switch (c) {
        case ClassId::Waterhole: return waterhole;
        case ClassId::Omuti: return omuti;
        case ClassId::BigTree: return bigtree;
        default: return total;
    }
}

ClassStatsRow& ClassStats::row(ClassId c) {
    switch (c) {
        case ClassId::Waterhole: return waterhole;
        case ClassId::Omuti: return omuti;
        case ClassId::BigTree: return bigtree;
        default: return total;
    }
}

ClassStats compute_stats(const LabelGrid& grid, const AnnotationSet& set) {
    const PixelCounts counts = count_labels(grid);
    const std::int64_t grid_pixels = grid.pixel_count();

    std::array<std::int64_t, kNumClasses> polygons = {0, 0, 0, 0};
    std::array<double, kNumClasses> sum_area = {0.0, 0.0, 0.0, 0.0};
    for (const Annotation& a : set.entries) {
        const auto k = static_cast<std::size_t>(a.cls);
        ++polygons[k];
        sum_area[k] += polygon_area(a.polygon);
    }
    const std::int64_t total_polygons = polygons[1] + polygons[2] + polygons[3];
    const double total_area = sum_area[1] + sum_area[2] + sum_area[3];

    ClassStats stats;
    fill_row(stats.waterhole, counts.waterhole, grid_pixels, polygons[1], total_polygons,
             sum_area[1]);
    fill_row(stats.omuti, counts.omuti, grid_pixels, polygons[2], total_polygons, sum_area[2]);
    fill_row(stats.bigtree, counts.bigtree, grid_pixels, polygons[3], total_polygons,
             sum_area[3]);
    fill_row(stats.total, counts.labeled(), grid_pixels, total_polygons, total_polygons,
             total_area);
    return stats;
}

std::string stats_to_csv(const ClassStats& stats) {
    std::string out = "class,pixels,pixel_pct,polygons,polygon_pct,sum_area_m2,mean_area_m2\n";
    auto add = [&out](const std::string& name, const ClassStatsRow& row) {
        char buf[256];
        std::snprintf(buf, sizeof(buf), "%s,%lld,%.4f,%lld,%.2f,%.2f,%.2f\n", name.c_str(),
                      static_cast<long long>(row.pixels), row.pixel_pct,
                      static_cast<long long>(row.polygons), row.polygon_pct, row.sum_area_m2,
                      row.mean_area_m2);
        out += buf;
    };
    add("waterhole", stats.waterhole);
    add("omuti", stats.omuti);
    add("bigtree", stats.bigtree);
    add("total", stats.total);
    return out;
}

ClassStats stats_from_csv(const std::string& csv) {
    std::istringstream in(csv);
    std::string line;
    if (!std::getline(in, line) ||
        line.rfind("class,pixels,pixel_pct,polygons,polygon_pct,sum_area_m2,mean_area_m2", 0) !=
            0) {
        throw Error("MalformedStatsCsv", "unexpected header: " + line);
    }
    ClassStats stats;
    int seen = 0;
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        std::istringstream row(line);
        std::string name, field;
        std::getline(row, name, ',');
        ClassStatsRow parsed;
        auto next_double = [&]() {
            if (!std::getline(row, field, ',')) {
                throw Error("MalformedStatsCsv", "truncated row: " + line);
            }
            return std::stod(field);
        };
        parsed.pixels = static_cast<std::int64_t>(next_double());
        parsed.pixel_pct = next_double();
        parsed.polygons = static_cast<std::int64_t>(next_double());
        parsed.polygon_pct = next_double();
        parsed.sum_area_m2 = next_double();
        parsed.mean_area_m2 = next_double();

        if (name == "waterhole") {
            stats.waterhole = parsed;
        } else if (name == "omuti") {
            stats.omuti = parsed;
        } else if (name == "bigtree") {
            stats.bigtree = parsed;
        } else if (name == "total") {
            stats.total = parsed;
        } else {
            throw Error("MalformedStatsCsv", "unknown row '" + name + "'");
        }
        ++seen;
    }
    if (seen < 4) {
        throw Error("MalformedStatsCsv", "expected waterhole/omuti/bigtree/total rows");
    }
    return stats;
}

void save_stats_csv(const ClassStats& stats, const std::string& path) {
    write_text(path, stats_to_csv(stats));
}

ClassStats load_stats_csv(const std::string& path) {
    return stats_from_csv(read_text(path));
}

}  // namespace sparseseg
