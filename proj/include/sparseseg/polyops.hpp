#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "sparseseg/annot.hpp"
#include "sparseseg/core.hpp"

namespace sparseseg {

enum class Connectivity : int { Four = 4, Eight = 8 };

// Maximal same-class pixel region of a label grid. Pixels are stored as
// sorted row-major linear indices; area is the pixel-count area.
struct Component {
    ClassId cls = ClassId::Waterhole;
    int grid_width = 0;
    int grid_height = 0;
    std::vector<std::int64_t> pixels;
    int min_col = 0;
    int min_row = 0;
    int max_col = 0;
    int max_row = 0;
    double area_m2 = 0.0;
};

// One component per maximal connected same-class region, Unknown excluded,
// in row-major order of each component's first pixel.
std::vector<Component> connected_components(const LabelGrid& grid,
                                            Connectivity connectivity = Connectivity::Eight);

// Outer boundary of the pixel region, walked along pixel corners, as a
// closed ring in map coordinates. The returned area is the pixel-count
// area, not the ring's shoelace area. The connectivity must match the one
// used to extract the component so diagonal contacts trace correctly.
std::pair<Polygon, double> component_to_polygon(const Component& c, const GeoTransform& geo,
                                                Connectivity connectivity = Connectivity::Eight);

// Fraction of a's pixels covered by b. Asymmetric by design; evaluation
// checks both directions.
double overlap_fraction(const Component& a, const Component& b);

}  // namespace sparseseg
