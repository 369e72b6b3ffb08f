#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace sparseseg {

// Every failure carries a stable machine-readable name ("MissingFile",
// "DimensionMismatch", ...) next to the human-readable message. The CLI
// prints the name; tests match on it.
class Error : public std::runtime_error {
public:
    Error(std::string name, const std::string& message)
        : std::runtime_error(name + ": " + message), name_(std::move(name)) {}

    const std::string& name() const noexcept { return name_; }

private:
    std::string name_;
};

enum class ClassId : std::uint8_t {
    Unknown = 0,
    Waterhole = 1,
    Omuti = 2,
    BigTree = 3,
};

inline constexpr int kNumClasses = 4;

// The classes an expert actually annotates; Unknown is never among them.
inline constexpr std::array<ClassId, 3> kAnnotatedClasses = {
    ClassId::Waterhole, ClassId::Omuti, ClassId::BigTree};

const std::string& class_name(ClassId c);
ClassId class_from_name(const std::string& name);  // throws UnknownClassName

struct GeoTransform {
    double origin_x = 0.0;   // easting of pixel (0,0) center, meters
    double origin_y = 0.0;   // northing of pixel (0,0) center, meters
    double pixel_size = 1.0; // meters per pixel, uniform in x and y

    // Center of pixel (col,row) in map coordinates. Rows grow southwards.
    std::pair<double, double> to_map(double col, double row) const {
        return {origin_x + col * pixel_size, origin_y - row * pixel_size};
    }

    // Fractional pixel coordinates of a map point. Inverse of to_map.
    std::pair<double, double> to_pixel(double x, double y) const {
        return {(x - origin_x) / pixel_size, (origin_y - y) / pixel_size};
    }
};

double pixel_area(const GeoTransform& geo);

struct GrayRaster {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> values;  // row-major, [0,255]
    GeoTransform geo;

    std::uint8_t at(int col, int row) const {
        return values[static_cast<std::size_t>(row) * width + col];
    }
    std::int64_t pixel_count() const {
        return static_cast<std::int64_t>(width) * height;
    }
};

struct LabelGrid {
    int width = 0;
    int height = 0;
    std::vector<ClassId> labels;  // row-major
    GeoTransform geo;

    ClassId at(int col, int row) const {
        return labels[static_cast<std::size_t>(row) * width + col];
    }
    ClassId& at(int col, int row) {
        return labels[static_cast<std::size_t>(row) * width + col];
    }
    std::int64_t pixel_count() const {
        return static_cast<std::int64_t>(width) * height;
    }
};

// Per-class pixel tallies of a label grid (N_w, N_o, N_b, N_u).
struct PixelCounts {
    std::int64_t waterhole = 0;
    std::int64_t omuti = 0;
    std::int64_t bigtree = 0;
    std::int64_t unknown = 0;

    std::int64_t labeled() const { return waterhole + omuti + bigtree; }
    std::int64_t total() const { return labeled() + unknown; }
    std::int64_t for_class(ClassId c) const;
};

// Subset of grid pixels (e.g. the train tiles of a split).
struct RegionMask {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> inside;  // row-major, 0/1

    bool at(int col, int row) const {
        return inside[static_cast<std::size_t>(row) * width + col] != 0;
    }
    std::int64_t count() const;
};

// Per-pixel class probabilities. Use create() so the sum-to-one invariant
// is checked on construction.
struct ProbabilityGrid {
    int width = 0;
    int height = 0;
    std::vector<std::array<double, kNumClasses>> probs;  // row-major
    GeoTransform geo;

    static ProbabilityGrid create(int width, int height,
                                  std::vector<std::array<double, kNumClasses>> probs,
                                  const GeoTransform& geo);

    const std::array<double, kNumClasses>& at(int col, int row) const {
        return probs[static_cast<std::size_t>(row) * width + col];
    }
};

PixelCounts count_labels(const LabelGrid& grid, const RegionMask* region = nullptr);

// Copy of the grid with labels outside the region forced to Unknown.
LabelGrid apply_region(const LabelGrid& grid, const RegionMask& region);

// Binary P5 raster with a JSON geo sidecar at path + ".geo.json".
GrayRaster load_raster(const std::string& path);
void save_raster(const GrayRaster& raster, const std::string& path);

// Label grids reuse the P5 container with payload bytes equal to the class
// codes 0..3.
LabelGrid load_label_grid(const std::string& path);
void save_label_grid(const LabelGrid& grid, const std::string& path);

}  // namespace sparseseg
