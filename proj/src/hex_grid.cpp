#include "hexembed/hex_grid.hpp"

#include "hexembed/error.hpp"
#include "hexembed/io.hpp"
#include "hexembed/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace hexembed {

CellId::CellId(h3::H3Index address) : address_(address) {
    if (!h3::is_valid_cell(address)) throw DataError("invalid cell address " + h3::to_string(address));
}

CellId CellId::parse(std::string_view text) {
    try {
        return CellId(h3::from_string(text));
    } catch (const std::invalid_argument&) {
        throw DataError("invalid cell address '" + std::string(text) + "'");
    }
}

CellId cell_of_point(double lon, double lat, int resolution) {
    if (resolution < 0 || resolution > h3::kMaxResolution) {
        throw UsageError("resolution must be in [0, 15], got " + std::to_string(resolution));
    }
    if (!std::isfinite(lon) || !std::isfinite(lat) || lon < -180.0 || lon > 180.0 || lat < -90.0 ||
        lat > 90.0) {
        throw DataError("coordinate out of range: (" + io::format_double(lon) + ", " +
                        io::format_double(lat) + ")");
    }
    return CellId(h3::latlng_to_cell(lat, lon, resolution));
}

namespace {

constexpr double kEarthRadiusM = 6371007.180918475;
// Average hexagon edge at resolution 0; each finer level divides it by sqrt(7).
constexpr double kEdgeRes0M = 1107712.591;
// Bisection stops once the bracket is shorter than this along the chord.
constexpr double kExitToleranceM = 1e-3;

double chord_meters(const LonLat& a, const LonLat& b) {
    constexpr double deg = std::numbers::pi / 180.0;
    const double mean_lat = 0.5 * (a.lat + b.lat) * deg;
    const double dx = (b.lon - a.lon) * deg * std::cos(mean_lat);
    const double dy = (b.lat - a.lat) * deg;
    return kEarthRadiusM * std::hypot(dx, dy);
}

}  // namespace

std::vector<CellId> cells_of_segment(const std::vector<LonLat>& geometry, int resolution) {
    std::vector<CellId> out;
    if (geometry.empty()) return out;
    // A quarter of the average edge stays well under half the smallest
    // inradius, so samples cannot jump over a whole cell.
    const double step = 0.25 * kEdgeRes0M / std::pow(std::sqrt(7.0), resolution);

    auto add = [&out](CellId c) {
        if (std::find(out.begin(), out.end(), c) == out.end()) out.push_back(c);
    };

    CellId cur = cell_of_point(geometry[0].lon, geometry[0].lat, resolution);
    add(cur);
    for (std::size_t v = 1; v < geometry.size(); ++v) {
        const LonLat a = geometry[v - 1];
        const LonLat b = geometry[v];
        const double len = chord_meters(a, b);
        auto cell_at = [&](double t) {
            if (t >= 1.0) return cell_of_point(b.lon, b.lat, resolution);
            return cell_of_point(a.lon + t * (b.lon - a.lon), a.lat + t * (b.lat - a.lat), resolution);
        };
        const auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(len / step)));
        double lo = 0.0;
        for (std::size_t i = 1; i <= n; ++i) {
            const double t = i == n ? 1.0 : static_cast<double>(i) / static_cast<double>(n);
            const CellId target = cell_at(t);
            // Walk cell by cell from lo to t, locating each exit by bisection.
            while (target != cur) {
                double hi = t;
                while ((hi - lo) * len > kExitToleranceM) {
                    const double mid = 0.5 * (lo + hi);
                    if (mid <= lo || mid >= hi) break;
                    if (cell_at(mid) == cur) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                cur = cell_at(hi);
                add(cur);
                lo = hi;
            }
            lo = t;
        }
    }
    return out;
}

std::vector<std::pair<std::string, CellId>> CellAssignment::incidences() const {
    std::vector<std::pair<std::string, CellId>> out;
    for (const auto& [id, cells] : segment_to_cells) {
        for (const auto& c : cells) out.emplace_back(id, c);
    }
    return out;
}

CellAssignment assign_network(const RoadNetwork& net, int resolution) {
    if (net.segments.empty()) throw EmptyInputError("cannot index an empty road network");
    std::vector<std::vector<CellId>> per_segment(net.segments.size());
    parallel_for(net.segments.size(), [&](std::size_t i) {
        per_segment[i] = cells_of_segment(net.segments[i], resolution);
    });

    CellAssignment a;
    a.resolution = resolution;
    for (std::size_t i = 0; i < net.segments.size(); ++i) {
        const std::string& id = net.segments[i].id;
        for (const auto& c : per_segment[i]) a.cell_to_segments[c].push_back(id);
        a.segment_to_cells.emplace(id, std::move(per_segment[i]));
    }
    for (auto& [cell, ids] : a.cell_to_segments) std::sort(ids.begin(), ids.end());
    return a;
}

void write_assignment_csv(const std::filesystem::path& path, const CellAssignment& a) {
    std::string out = "segment_id,cell_address\n";
    for (const auto& [id, cell] : a.incidences()) out += io::csv_line({id, cell.str()});
    io::write_file(path, out);
}

CellAssignment read_assignment_csv(const std::filesystem::path& path) {
    const io::CsvTable t = io::read_csv(path);
    const std::size_t sc = t.column("segment_id");
    const std::size_t cc = t.column("cell_address");
    CellAssignment a;
    bool first = true;
    for (const auto& row : t.rows) {
        const CellId c = CellId::parse(row[cc]);
        if (first) {
            a.resolution = c.resolution();
            first = false;
        } else if (c.resolution() != a.resolution) {
            throw DataError(path.string() + ": mixed cell resolutions");
        }
        a.segment_to_cells[row[sc]].push_back(c);
        a.cell_to_segments[c].push_back(row[sc]);
    }
    for (auto& [cell, ids] : a.cell_to_segments) std::sort(ids.begin(), ids.end());
    return a;
}

}  // namespace hexembed
