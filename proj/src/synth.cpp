#include "sparseseg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include <json.hpp>

namespace sparseseg {

namespace {

constexpr double kMinAreaM2 = 4.0;
constexpr double kPlacementGapPx = 3.0;  // keeps neighbouring components 8-disconnected

class SceneRng {
public:
    explicit SceneRng(std::uint64_t seed) : rng_(seed) {}

    double uniform() {  // [0,1)
        return static_cast<double>(rng_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller; hand-rolled so the draw sequence does not depend on the
    // standard library's distribution internals.
    double normal() {
        const double u1 = std::max(uniform(), 1e-300);
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    std::uint64_t next_index(std::uint64_t bound) { return rng_() % bound; }

private:
    std::mt19937_64 rng_;
};

struct PlacedObject {
    ClassId cls = ClassId::Waterhole;
    double cx = 0.0;  // map coordinates
    double cy = 0.0;
    double axis_a = 0.0;
    double axis_b = 0.0;
    double rotation = 0.0;
    double bound_radius = 0.0;
    Polygon polygon;
};

Polygon ellipse_polygon(const PlacedObject& obj) {
    const double per_vertex = 1.5;  // target edge length in meters
    const double circumference = 2.0 * std::numbers::pi * std::max(obj.axis_a, obj.axis_b);
    int n = static_cast<int>(circumference / per_vertex);
    n = std::clamp(n, 12, 60);

    const double cos_r = std::cos(obj.rotation);
    const double sin_r = std::sin(obj.rotation);
    Polygon poly;
    poly.exterior.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        const double phi = 2.0 * std::numbers::pi * i / n;
        const double u = obj.axis_a * std::cos(phi);
        const double v = obj.axis_b * std::sin(phi);
        poly.exterior.push_back(
            {obj.cx + u * cos_r - v * sin_r, obj.cy + u * sin_r + v * cos_r});
    }
    return poly;
}

std::uint8_t quantize(double level) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(level), 0L, 255L));
}

ObjectProfile profile_from_json(const nlohmann::json& j, const ObjectProfile& defaults) {
    ObjectProfile p = defaults;
    p.count = j.value("count", defaults.count);
    p.area_log_mean = j.value("area_log_mean", defaults.area_log_mean);
    p.area_log_sigma = j.value("area_log_sigma", defaults.area_log_sigma);
    p.fill_level = j.value("fill", defaults.fill_level);
    p.rim_level = j.value("rim", defaults.rim_level);
    p.noise_std = j.value("noise", defaults.noise_std);
    return p;
}

nlohmann::json profile_to_json(const ObjectProfile& p) {
    nlohmann::json j;
    j["count"] = p.count;
    j["area_log_mean"] = p.area_log_mean;
    j["area_log_sigma"] = p.area_log_sigma;
    j["fill"] = p.fill_level;
    j["rim"] = p.rim_level;
    j["noise"] = p.noise_std;
    return j;
}

}  // namespace

const ObjectProfile& SceneSpec::profile(ClassId c) const {
    switch (c) {
        case ClassId::Waterhole: return waterhole;
        case ClassId::Omuti: return omuti;
        default: return bigtree;
    }
}

ObjectProfile& SceneSpec::profile(ClassId c) {
    switch (c) {
        case ClassId::Waterhole: return waterhole;
        case ClassId::Omuti: return omuti;
        default: return bigtree;
    }
}

void SceneSpec::validate() const {
    if (width < 1 || height < 1) {
        throw Error("InvalidSceneSpec", "scene must be at least 1x1");
    }
    if (!(pixel_size > 0.0)) {
        throw Error("InvalidSceneSpec", "pixel_size must be > 0");
    }
    if (!(annotated_fraction > 0.0 && annotated_fraction <= 1.0)) {
        throw Error("InvalidSceneSpec", "annotated_fraction must be in (0,1]");
    }
    for (ClassId c : kAnnotatedClasses) {
        if (profile(c).count < 0) {
            throw Error("InvalidSceneSpec", "object counts must be >= 0");
        }
    }
}

Scene generate_scene(const SceneSpec& spec) {
    spec.validate();
    SceneRng rng(spec.seed);

    const double ps = spec.pixel_size;
    GeoTransform geo;
    geo.pixel_size = ps;

    Scene scene;
    scene.raster.width = spec.width;
    scene.raster.height = spec.height;
    scene.raster.geo = geo;
    scene.raster.values.resize(static_cast<std::size_t>(spec.width) * spec.height);
    for (auto& v : scene.raster.values) {
        v = quantize(spec.background_level + spec.background_noise * rng.normal());
    }

    const double map_w = (spec.width - 1) * ps;
    const double map_h = (spec.height - 1) * ps;
    const double max_area = 0.02 * static_cast<double>(spec.width) * spec.height * ps * ps;
    const double gap = kPlacementGapPx * ps;

    std::vector<PlacedObject> placed;
    for (ClassId cls : kAnnotatedClasses) {
        const ObjectProfile& prof = spec.profile(cls);
        for (int i = 0; i < prof.count; ++i) {
            const double area = std::clamp(
                std::exp(prof.area_log_mean + prof.area_log_sigma * rng.normal()), kMinAreaM2,
                max_area);
            const double q = rng.uniform(0.65, 1.0);
            PlacedObject obj;
            obj.cls = cls;
            obj.axis_a = std::sqrt(area / (std::numbers::pi * q));
            obj.axis_b = obj.axis_a * q;
            obj.rotation = rng.uniform(0.0, std::numbers::pi);
            obj.bound_radius = obj.axis_a;

            const double margin = obj.bound_radius + 2.0 * ps;
            if (2.0 * margin >= map_w || 2.0 * margin >= map_h) {
                throw Error("PlacementFailure", "object larger than the scene");
            }
            bool ok = false;
            for (int attempt = 0; attempt < spec.placement_attempts; ++attempt) {
                obj.cx = rng.uniform(margin, map_w - margin);
                obj.cy = -rng.uniform(margin, map_h - margin);
                ok = true;
                for (const PlacedObject& other : placed) {
                    const double d = std::hypot(obj.cx - other.cx, obj.cy - other.cy);
                    if (d < obj.bound_radius + other.bound_radius + gap) {
                        ok = false;
                        break;
                    }
                }
                if (ok) {
                    break;
                }
            }
            if (!ok) {
                throw Error("PlacementFailure",
                            "could not place all " + class_name(cls) + " objects after " +
                                std::to_string(spec.placement_attempts) + " attempts");
            }
            obj.polygon = ellipse_polygon(obj);
            placed.push_back(std::move(obj));
        }
    }

    // Paint in placement order; regions never overlap so order is cosmetic.
    for (const PlacedObject& obj : placed) {
        const ObjectProfile& prof = spec.profile(obj.cls);
        const double cos_r = std::cos(obj.rotation);
        const double sin_r = std::sin(obj.rotation);
        for (std::int64_t pix : covered_pixels(obj.polygon, geo, spec.width, spec.height)) {
            const int col = static_cast<int>(pix % spec.width);
            const int row = static_cast<int>(pix / spec.width);
            const auto [px, py] = geo.to_map(col, row);
            const double dx = px - obj.cx;
            const double dy = py - obj.cy;
            const double u = (dx * cos_r + dy * sin_r) / obj.axis_a;
            const double v = (-dx * sin_r + dy * cos_r) / obj.axis_b;
            const double rho = std::sqrt(u * u + v * v);
            double level = prof.fill_level;
            if (prof.rim_level > 0.0 && rho >= 0.72) {
                level = prof.rim_level;
            }
            scene.raster.values[static_cast<std::size_t>(pix)] =
                quantize(level + prof.noise_std * rng.normal());
        }
    }

    for (const PlacedObject& obj : placed) {
        Annotation a;
        a.cls = obj.cls;
        a.polygon = obj.polygon;
        a.source = AnnotationSource::Expert;
        scene.full_truth.entries.push_back(std::move(a));
    }

    // Per class, keep a seeded random annotated_fraction of the objects,
    // preserving their original order.
    for (ClassId cls : kAnnotatedClasses) {
        std::vector<std::size_t> indices;
        for (std::size_t i = 0; i < scene.full_truth.entries.size(); ++i) {
            if (scene.full_truth.entries[i].cls == cls) {
                indices.push_back(i);
            }
        }
        const auto k = static_cast<std::size_t>(
            std::lround(spec.annotated_fraction * static_cast<double>(indices.size())));
        for (std::size_t i = indices.size(); i > 1; --i) {
            const std::size_t j = rng.next_index(i);
            std::swap(indices[i - 1], indices[j]);
        }
        indices.resize(std::min(k, indices.size()));
        std::sort(indices.begin(), indices.end());
        for (std::size_t i : indices) {
            scene.sparse_labels.entries.push_back(scene.full_truth.entries[i]);
        }
    }

    return scene;
}

SceneSpec scene_spec_from_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error("MissingFile", "cannot open " + path);
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw Error("MalformedSceneSpec", std::string(e.what()) + " in " + path);
    }
    SceneSpec defaults;
    SceneSpec spec;
    spec.width = j.value("width", defaults.width);
    spec.height = j.value("height", defaults.height);
    spec.pixel_size = j.value("pixel_size", defaults.pixel_size);
    spec.seed = j.value("seed", defaults.seed);
    spec.annotated_fraction = j.value("annotated_fraction", defaults.annotated_fraction);
    spec.placement_attempts = j.value("placement_attempts", defaults.placement_attempts);
    if (j.contains("background")) {
        spec.background_level = j["background"].value("level", defaults.background_level);
        spec.background_noise = j["background"].value("noise", defaults.background_noise);
    }
    if (j.contains("classes")) {
        const auto& classes = j["classes"];
        for (ClassId c : kAnnotatedClasses) {
            if (classes.contains(class_name(c))) {
                spec.profile(c) = profile_from_json(classes[class_name(c)], defaults.profile(c));
            }
        }
    }
    spec.validate();
    return spec;
}

void save_scene_spec(const SceneSpec& spec, const std::string& path) {
    nlohmann::json j;
    j["width"] = spec.width;
    j["height"] = spec.height;
    j["pixel_size"] = spec.pixel_size;
    j["seed"] = spec.seed;
    j["annotated_fraction"] = spec.annotated_fraction;
    j["placement_attempts"] = spec.placement_attempts;
    j["background"] = {{"level", spec.background_level}, {"noise", spec.background_noise}};
    nlohmann::json classes;
    for (ClassId c : kAnnotatedClasses) {
        classes[class_name(c)] = profile_to_json(spec.profile(c));
    }
    j["classes"] = std::move(classes);

    std::ofstream out(path, std::ios::trunc);
    if (!out) {
        throw Error("IoFailure", "cannot open " + path + " for writing");
    }
    out << j.dump(2) << "\n";
}

}  // namespace sparseseg
