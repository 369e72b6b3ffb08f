#include "sparseseg/polyops.hpp"

#include <algorithm>
#include <cmath>

namespace sparseseg {

namespace {

struct Dir {
    int dx;
    int dy;
};

constexpr Dir kEast = {1, 0};

bool same(Dir a, Dir b) { return a.dx == b.dx && a.dy == b.dy; }
Dir turn_left(Dir d) { return {d.dy, -d.dx}; }
Dir turn_right(Dir d) { return {-d.dy, d.dx}; }

// Bitmap of the component's own pixels, padded view with out-of-range false.
class LocalBitmap {
public:
    LocalBitmap(const Component& c)
        : width_(c.max_col - c.min_col + 1),
          height_(c.max_row - c.min_row + 1),
          cells_(static_cast<std::size_t>(width_) * height_, 0) {
        for (std::int64_t p : c.pixels) {
            const int col = static_cast<int>(p % c.grid_width) - c.min_col;
            const int row = static_cast<int>(p / c.grid_width) - c.min_row;
            cells_[static_cast<std::size_t>(row) * width_ + col] = 1;
        }
    }

    bool at(int x, int y) const {
        if (x < 0 || y < 0 || x >= width_ || y >= height_) {
            return false;
        }
        return cells_[static_cast<std::size_t>(y) * width_ + x] != 0;
    }

    int width() const { return width_; }
    int height() const { return height_; }

private:
    int width_;
    int height_;
    std::vector<std::uint8_t> cells_;
};

}  // namespace

std::vector<Component> connected_components(const LabelGrid& grid, Connectivity connectivity) {
    std::vector<Component> components;
    const int w = grid.width;
    const int h = grid.height;
    const double area_per_pixel = pixel_area(grid.geo);

    std::vector<std::uint8_t> visited(grid.labels.size(), 0);
    std::vector<std::int64_t> stack;

    const int n_neighbors = connectivity == Connectivity::Eight ? 8 : 4;
    static constexpr int dc[8] = {1, -1, 0, 0, 1, 1, -1, -1};
    static constexpr int dr[8] = {0, 0, 1, -1, 1, -1, 1, -1};

    for (std::int64_t start = 0; start < grid.pixel_count(); ++start) {
        const auto idx = static_cast<std::size_t>(start);
        if (visited[idx] || grid.labels[idx] == ClassId::Unknown) {
            continue;
        }
        const ClassId cls = grid.labels[idx];
        Component comp;
        comp.cls = cls;
        comp.grid_width = w;
        comp.grid_height = h;
        comp.min_col = comp.max_col = static_cast<int>(start % w);
        comp.min_row = comp.max_row = static_cast<int>(start / w);

        visited[idx] = 1;
        stack.clear();
        stack.push_back(start);
        while (!stack.empty()) {
            const std::int64_t p = stack.back();
            stack.pop_back();
            comp.pixels.push_back(p);
            const int col = static_cast<int>(p % w);
            const int row = static_cast<int>(p / w);
            comp.min_col = std::min(comp.min_col, col);
            comp.max_col = std::max(comp.max_col, col);
            comp.min_row = std::min(comp.min_row, row);
            comp.max_row = std::max(comp.max_row, row);
            for (int k = 0; k < n_neighbors; ++k) {
                const int nc = col + dc[k];
                const int nr = row + dr[k];
                if (nc < 0 || nr < 0 || nc >= w || nr >= h) {
                    continue;
                }
                const std::int64_t np = static_cast<std::int64_t>(nr) * w + nc;
                const auto nidx = static_cast<std::size_t>(np);
                if (!visited[nidx] && grid.labels[nidx] == cls) {
                    visited[nidx] = 1;
                    stack.push_back(np);
                }
            }
        }
        std::sort(comp.pixels.begin(), comp.pixels.end());
        comp.area_m2 = static_cast<double>(comp.pixels.size()) * area_per_pixel;
        components.push_back(std::move(comp));
    }
    return components;
}

std::pair<Polygon, double> component_to_polygon(const Component& c, const GeoTransform& geo,
                                                Connectivity connectivity) {
    if (c.pixels.empty()) {
        throw Error("EmptyComponent", "cannot trace an empty component");
    }
    const LocalBitmap in(c);

    // First pixel in row-major order; nothing of the component sits above it,
    // so its top edge starts the outer ring.
    const std::int64_t first = c.pixels.front();
    const int start_x = static_cast<int>(first % c.grid_width) - c.min_col;
    const int start_y = static_cast<int>(first / c.grid_width) - c.min_row;

    const bool diagonals_connect = connectivity == Connectivity::Eight;

    // Walks corner-to-corner keeping component pixels on the right-hand
    // side. At saddle corners the turn direction decides whether diagonal
    // contact counts as connected.
    auto outgoing = [&](int cx, int cy, Dir incoming) -> Dir {
        const bool tl = in.at(cx - 1, cy - 1);
        const bool tr = in.at(cx, cy - 1);
        const bool bl = in.at(cx - 1, cy);
        const bool br = in.at(cx, cy);
        const bool saddle = (tl == br) && (tr == bl) && (tl != tr);
        if (saddle) {
            return diagonals_connect ? turn_left(incoming) : turn_right(incoming);
        }
        if (br && !tr) return {1, 0};   // east
        if (bl && !br) return {0, 1};   // south
        if (tl && !bl) return {-1, 0};  // west
        if (tr && !tl) return {0, -1};  // north
        throw Error("InternalError", "boundary walk left the component outline");
    };

    std::vector<std::pair<int, int>> corners;
    int cx = start_x;
    int cy = start_y;
    Dir dir = kEast;
    const std::int64_t max_steps =
        4 * static_cast<std::int64_t>(in.width() + 1) * (in.height() + 1) + 8;
    std::int64_t steps = 0;
    while (true) {
        cx += dir.dx;
        cy += dir.dy;
        const Dir next = outgoing(cx, cy, dir);
        if (!same(next, dir)) {
            corners.emplace_back(cx, cy);
        }
        dir = next;
        if (cx == start_x && cy == start_y && same(dir, kEast)) {
            break;
        }
        if (++steps > max_steps) {
            throw Error("InternalError", "boundary walk did not close");
        }
    }

    Polygon poly;
    poly.exterior.reserve(corners.size());
    for (const auto& [lx, ly] : corners) {
        const double col_corner = static_cast<double>(c.min_col + lx) - 0.5;
        const double row_corner = static_cast<double>(c.min_row + ly) - 0.5;
        poly.exterior.push_back({geo.origin_x + col_corner * geo.pixel_size,
                                 geo.origin_y - row_corner * geo.pixel_size});
    }
    return {std::move(poly), c.area_m2};
}

double overlap_fraction(const Component& a, const Component& b) {
    if (a.grid_width != b.grid_width || a.grid_height != b.grid_height) {
        throw Error("GeometryMismatch", "components come from different grids");
    }
    if (a.pixels.empty()) {
        throw Error("EmptyComponent", "overlap of an empty component is undefined");
    }
    std::size_t i = 0;
    std::size_t j = 0;
    std::int64_t shared = 0;
    while (i < a.pixels.size() && j < b.pixels.size()) {
        if (a.pixels[i] < b.pixels[j]) {
            ++i;
        } else if (a.pixels[i] > b.pixels[j]) {
            ++j;
        } else {
            ++shared;
            ++i;
            ++j;
        }
    }
    return static_cast<double>(shared) / static_cast<double>(a.pixels.size());
}

}  // namespace sparseseg
