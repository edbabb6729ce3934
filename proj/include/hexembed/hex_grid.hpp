// Road segment to hexagonal-cell assignment.
#pragma once

#include "hexembed/geo_ingest.hpp"
#include "hexembed/hex_index.hpp"

#include <compare>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace hexembed {

inline constexpr int kDefaultResolution = 9;

/// A cell address. Ordering follows the numeric address, which matches the
/// ordering of the fixed-width hexadecimal form within one resolution.
class CellId {
  public:
    CellId() = default;
    explicit CellId(h3::H3Index address);

    static CellId parse(std::string_view text);

    h3::H3Index address() const { return address_; }
    int resolution() const { return h3::resolution(address_); }
    std::string str() const { return h3::to_string(address_); }

    auto operator<=>(const CellId&) const = default;

  private:
    h3::H3Index address_ = h3::kNullIndex;
};

/// Throws DataError for coordinates outside WGS84 ranges and UsageError for a
/// resolution outside [0, 15].
CellId cell_of_point(double lon, double lat, int resolution);

/// Every cell the polyline passes through, in order of first touch. Chords
/// between vertices are straight lines in lon/lat.
std::vector<CellId> cells_of_segment(const std::vector<LonLat>& geometry, int resolution);
inline std::vector<CellId> cells_of_segment(const RoadSegment& seg, int resolution) {
    return cells_of_segment(seg.geometry, resolution);
}

struct CellAssignment {
    int resolution = kDefaultResolution;
    std::map<std::string, std::vector<CellId>> segment_to_cells;  // first-touch order
    std::map<CellId, std::vector<std::string>> cell_to_segments;  // ids sorted

    /// (segment, cell) pairs, segments in id order then first-touch order.
    std::vector<std::pair<std::string, CellId>> incidences() const;
};

CellAssignment assign_network(const RoadNetwork& net, int resolution);

void write_assignment_csv(const std::filesystem::path& path, const CellAssignment& a);
CellAssignment read_assignment_csv(const std::filesystem::path& path);

}  // namespace hexembed
