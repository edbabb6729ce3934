// Hexagonal hierarchical spatial index (H3-compatible cell addressing).
//
// A self-contained C++ implementation of the published H3 grid: point to
// cell, cell center, cell boundary, parent/children and the immediate
// neighbor ring. Coordinates at this interface are WGS84 degrees.
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace hexembed::h3 {

using H3Index = std::uint64_t;

inline constexpr int kMaxResolution = 15;
inline constexpr H3Index kNullIndex = 0;

struct LatLngDeg {
    double lat = 0.0;
    double lng = 0.0;
};

/// Cell containing the point at the given resolution. Throws
/// std::invalid_argument for a resolution outside [0, 15] or non-finite input.
H3Index latlng_to_cell(double lat_deg, double lng_deg, int res);

/// Center point of a cell.
LatLngDeg cell_to_latlng(H3Index cell);

/// Boundary vertices in counterclockwise order, not closed. Hexagons have six
/// topological vertices; extra vertices appear where a Class III cell edge
/// crosses an icosahedron edge, pentagons have five (plus crossings).
std::vector<LatLngDeg> cell_to_boundary(H3Index cell);

int resolution(H3Index cell);
int base_cell(H3Index cell);
bool is_pentagon(H3Index cell);
bool is_valid_cell(H3Index cell);

H3Index cell_to_parent(H3Index cell, int parent_res);
std::vector<H3Index> cell_to_children(H3Index cell, int child_res);

/// The cells sharing an edge with `cell` (six, or five around a pentagon),
/// sorted ascending.
std::vector<H3Index> neighbors(H3Index cell);
bool are_neighbors(H3Index a, H3Index b);

/// Canonical lowercase hexadecimal form, e.g. "891e24aa0b3ffff".
std::string to_string(H3Index cell);
/// Parses the hexadecimal form; throws std::invalid_argument unless the
/// result is a valid cell.
H3Index from_string(std::string_view text);

}  // namespace hexembed::h3
