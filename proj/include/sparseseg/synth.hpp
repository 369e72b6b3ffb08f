#pragma once

#include <cstdint>
#include <string>

#include "sparseseg/annot.hpp"
#include "sparseseg/core.hpp"

namespace sparseseg {

// Appearance and abundance of one object class. Areas are drawn log-normal
// (parameters in natural-log m2 space) so the size distributions are
// right-skewed like real object populations. rim_level 0 means a flat fill;
// otherwise the outer band of the object is drawn at rim_level.
struct ObjectProfile {
    int count = 0;
    double area_log_mean = 4.5;
    double area_log_sigma = 0.5;
    double fill_level = 128.0;
    double rim_level = 0.0;
    double noise_std = 4.0;
};

struct SceneSpec {
    int width = 512;
    int height = 512;
    double pixel_size = 1.0;
    std::uint64_t seed = 0;
    double background_level = 128.0;
    double background_noise = 6.0;
    double annotated_fraction = 1.0;
    int placement_attempts = 200;

    // Defaults mirror the observed polygon shares: trees dominate the
    // counts, waterholes are rare, omutis large ring compounds. Intensity
    // bands are chosen so no class sits between another class and the
    // background, which keeps boundary-mixing patches out of foreign bands:
    // waterholes are dark pits with a bright berm rim, omutis mid-dark
    // ringed compounds, trees bright-rimmed blobs.
    ObjectProfile waterhole = {6, 5.3, 0.4, 40.0, 170.0, 3.0};
    ObjectProfile omuti = {10, 6.8, 0.3, 95.0, 108.0, 3.0};
    ObjectProfile bigtree = {140, 4.329, 0.45, 205.0, 235.0, 3.0};

    const ObjectProfile& profile(ClassId c) const;
    ObjectProfile& profile(ClassId c);
    void validate() const;
};

struct Scene {
    GrayRaster raster;
    AnnotationSet full_truth;     // every object
    AnnotationSet sparse_labels;  // seeded per-class subset of full_truth
};

// Deterministic per seed: identical raster bytes and annotation sets.
// Objects never overlap (any class pair), so components stay separable.
Scene generate_scene(const SceneSpec& spec);

SceneSpec scene_spec_from_json_file(const std::string& path);
void save_scene_spec(const SceneSpec& spec, const std::string& path);

}  // namespace sparseseg
