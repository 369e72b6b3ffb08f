#include "sparseseg/core.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace sparseseg {

namespace {

const std::array<std::string, kNumClasses> kClassNames = {
    "unknown", "waterhole", "omuti", "bigtree"};

std::string read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error("MissingFile", "cannot open " + path);
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file_bytes(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error("IoFailure", "cannot open " + path + " for writing");
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw Error("IoFailure", "short write to " + path);
    }
}

std::string sidecar_path(const std::string& path) { return path + ".geo.json"; }

GeoTransform load_geo_sidecar(const std::string& raster_path) {
    const std::string path = sidecar_path(raster_path);
    if (!std::filesystem::exists(path)) {
        throw Error("MissingGeoSidecar", "no sidecar at " + path);
    }
    nlohmann::json j;
    try {
        std::ifstream in(path);
        in >> j;
    } catch (const std::exception& e) {
        throw Error("MalformedGeoSidecar", std::string(e.what()) + " in " + path);
    }
    if (!j.is_object() || !j.contains("origin_x") || !j.contains("origin_y") ||
        !j.contains("pixel_size") || !j["origin_x"].is_number() ||
        !j["origin_y"].is_number() || !j["pixel_size"].is_number()) {
        throw Error("MalformedGeoSidecar", "expected origin_x/origin_y/pixel_size in " + path);
    }
    GeoTransform geo;
    geo.origin_x = j["origin_x"].get<double>();
    geo.origin_y = j["origin_y"].get<double>();
    geo.pixel_size = j["pixel_size"].get<double>();
    if (!std::isfinite(geo.origin_x) || !std::isfinite(geo.origin_y) ||
        !std::isfinite(geo.pixel_size) || geo.pixel_size <= 0.0) {
        throw Error("MalformedGeoSidecar", "pixel_size must be finite and > 0 in " + path);
    }
    return geo;
}

void save_geo_sidecar(const GeoTransform& geo, const std::string& raster_path) {
    nlohmann::json j;
    j["origin_x"] = geo.origin_x;
    j["origin_y"] = geo.origin_y;
    j["pixel_size"] = geo.pixel_size;
    write_file_bytes(sidecar_path(raster_path), j.dump() + "\n");
}

// Parses "P5 <width> <height> 255" followed by exactly one whitespace byte
// and the payload. Returns the payload offset.
struct P5Header {
    int width = 0;
    int height = 0;
    std::size_t payload_offset = 0;
};

P5Header parse_p5_header(const std::string& bytes, const std::string& path) {
    std::size_t pos = 0;
    auto fail = [&](const std::string& why) -> void {
        throw Error("MalformedHeader", why + " in " + path);
    };
    auto skip_ws = [&]() {
        std::size_t start = pos;
        while (pos < bytes.size() && std::isspace(static_cast<unsigned char>(bytes[pos]))) {
            ++pos;
        }
        if (pos == start) {
            fail("expected whitespace");
        }
    };
    auto read_uint = [&]() -> long {
        if (pos >= bytes.size() || !std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
            fail("expected integer");
        }
        long v = 0;
        while (pos < bytes.size() && std::isdigit(static_cast<unsigned char>(bytes[pos]))) {
            v = v * 10 + (bytes[pos] - '0');
            if (v > 1'000'000'000L) {
                fail("integer out of range");
            }
            ++pos;
        }
        return v;
    };

    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
        fail("not a binary P5 graymap");
    }
    pos = 2;
    skip_ws();
    const long w = read_uint();
    skip_ws();
    const long h = read_uint();
    skip_ws();
    const long maxval = read_uint();
    if (maxval != 255) {
        fail("maxval must be 255");
    }
    if (w < 1 || h < 1) {
        fail("dimensions must be >= 1");
    }
    if (pos >= bytes.size() || !std::isspace(static_cast<unsigned char>(bytes[pos]))) {
        fail("expected single whitespace after maxval");
    }
    ++pos;

    P5Header hdr;
    hdr.width = static_cast<int>(w);
    hdr.height = static_cast<int>(h);
    hdr.payload_offset = pos;
    return hdr;
}

std::string p5_bytes(int width, int height, const std::uint8_t* payload, std::size_t n) {
    std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
    out.append(reinterpret_cast<const char*>(payload), n);
    return out;
}

}  // namespace

const std::string& class_name(ClassId c) {
    return kClassNames[static_cast<std::size_t>(c)];
}

ClassId class_from_name(const std::string& name) {
    for (int i = 0; i < kNumClasses; ++i) {
        if (kClassNames[static_cast<std::size_t>(i)] == name) {
            return static_cast<ClassId>(i);
        }
    }
    throw Error("UnknownClassName", "no class named '" + name + "'");
}

double pixel_area(const GeoTransform& geo) {
    return geo.pixel_size * geo.pixel_size;
}

std::int64_t PixelCounts::for_class(ClassId c) const {
    switch (c) {
        case ClassId::Unknown: return unknown;
        case ClassId::Waterhole: return waterhole;
        case ClassId::Omuti: return omuti;
        case ClassId::BigTree: return bigtree;
    }
    return 0;
}

std::int64_t RegionMask::count() const {
    std::int64_t n = 0;
    for (std::uint8_t v : inside) {
        n += (v != 0);
    }
    return n;
}

ProbabilityGrid ProbabilityGrid::create(int width, int height,
                                        std::vector<std::array<double, kNumClasses>> probs,
                                        const GeoTransform& geo) {
    if (width < 1 || height < 1) {
        throw Error("EmptyGrid", "probability grid must be at least 1x1");
    }
    if (probs.size() != static_cast<std::size_t>(width) * height) {
        throw Error("DimensionMismatch", "probability vector count does not match grid size");
    }
    for (std::size_t i = 0; i < probs.size(); ++i) {
        double sum = 0.0;
        for (double p : probs[i]) {
            if (!(p >= 0.0)) {
                throw Error("InvalidProbability",
                            "negative or NaN probability at pixel " + std::to_string(i));
            }
            sum += p;
        }
        if (std::abs(sum - 1.0) > 1e-6) {
            throw Error("InvalidProbability",
                        "probabilities at pixel " + std::to_string(i) + " sum to " +
                            std::to_string(sum));
        }
    }
    ProbabilityGrid g;
    g.width = width;
    g.height = height;
    g.probs = std::move(probs);
    g.geo = geo;
    return g;
}

PixelCounts count_labels(const LabelGrid& grid, const RegionMask* region) {
    if (region != nullptr && (region->width != grid.width || region->height != grid.height)) {
        throw Error("DimensionMismatch", "region mask does not match grid size");
    }
    PixelCounts counts;
    std::array<std::int64_t, kNumClasses> tally = {0, 0, 0, 0};
    const std::size_t n = grid.labels.size();
    if (region == nullptr) {
        for (std::size_t i = 0; i < n; ++i) {
            ++tally[static_cast<std::size_t>(grid.labels[i])];
        }
    } else {
        for (std::size_t i = 0; i < n; ++i) {
            if (region->inside[i] != 0) {
                ++tally[static_cast<std::size_t>(grid.labels[i])];
            }
        }
    }
    counts.unknown = tally[0];
    counts.waterhole = tally[1];
    counts.omuti = tally[2];
    counts.bigtree = tally[3];
    return counts;
}

LabelGrid apply_region(const LabelGrid& grid, const RegionMask& region) {
    if (region.width != grid.width || region.height != grid.height) {
        throw Error("DimensionMismatch", "region mask does not match grid size");
    }
    LabelGrid out = grid;
    for (std::size_t i = 0; i < out.labels.size(); ++i) {
        if (region.inside[i] == 0) {
            out.labels[i] = ClassId::Unknown;
        }
    }
    return out;
}

GrayRaster load_raster(const std::string& path) {
    const std::string bytes = read_file_bytes(path);
    const P5Header hdr = parse_p5_header(bytes, path);
    const std::size_t expected = static_cast<std::size_t>(hdr.width) * hdr.height;
    const std::size_t got = bytes.size() - hdr.payload_offset;
    if (got != expected) {
        throw Error("DimensionMismatch",
                    "header claims " + std::to_string(expected) + " payload bytes, file has " +
                        std::to_string(got) + " in " + path);
    }
    GrayRaster r;
    r.width = hdr.width;
    r.height = hdr.height;
    r.values.assign(bytes.begin() + static_cast<std::ptrdiff_t>(hdr.payload_offset), bytes.end());
    r.geo = load_geo_sidecar(path);
    return r;
}

void save_raster(const GrayRaster& raster, const std::string& path) {
    write_file_bytes(path, p5_bytes(raster.width, raster.height, raster.values.data(),
                                    raster.values.size()));
    save_geo_sidecar(raster.geo, path);
}

LabelGrid load_label_grid(const std::string& path) {
    const GrayRaster r = load_raster(path);
    LabelGrid g;
    g.width = r.width;
    g.height = r.height;
    g.geo = r.geo;
    g.labels.resize(r.values.size());
    for (std::size_t i = 0; i < r.values.size(); ++i) {
        if (r.values[i] >= kNumClasses) {
            throw Error("MalformedLabelValue",
                        "payload byte " + std::to_string(r.values[i]) + " is not a class code in " +
                            path);
        }
        g.labels[i] = static_cast<ClassId>(r.values[i]);
    }
    return g;
}

void save_label_grid(const LabelGrid& grid, const std::string& path) {
    GrayRaster r;
    r.width = grid.width;
    r.height = grid.height;
    r.geo = grid.geo;
    r.values.resize(grid.labels.size());
    for (std::size_t i = 0; i < grid.labels.size(); ++i) {
        r.values[i] = static_cast<std::uint8_t>(grid.labels[i]);
    }
    save_raster(r, path);
}

}  // namespace sparseseg
