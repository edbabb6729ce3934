#include "hexembed/gridville.hpp"

#include "hexembed/error.hpp"
#include "hexembed/io.hpp"
#include "hexembed/random.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <numbers>
#include <set>

namespace hexembed {

const char* archetype_name(Archetype a) {
    switch (a) {
        case Archetype::Arterial: return "arterial";
        case Archetype::PavedResidential: return "paved_residential";
        case Archetype::UnpavedResidential: return "unpaved_residential";
    }
    return "?";
}

namespace {

constexpr int kResolution = 9;
constexpr double kMetersPerDegLat = 111320.0;

struct CitySite {
    const char* name;
    double lat;
    double lon;
};

constexpr CitySite kSites[] = {
    {"gridville_north", 45.020, 10.010},
    {"gridville_south", 44.930, 10.060},
    {"gridville_east", 44.990, 10.180},
};

using Tags = std::map<std::string, std::string>;

template <typename T, std::size_t N>
const T& pick(Rng& rng, const T (&items)[N]) {
    return items[rng.below(N)];
}

bool chance(Rng& rng, double p) { return rng.uniform() < p; }

Tags arterial_tags(Rng& rng) {
    static const char* highway[] = {"primary", "primary", "secondary", "secondary", "trunk"};
    static const char* lanes[] = {"2", "2", "3", "3", "4"};
    static const char* speed[] = {"50", "50", "60", "70", "40 mph"};
    static const char* width[] = {"7", "8", "9.5", "10 m"};
    Tags t{{"highway", pick(rng, highway)}, {"surface", "asphalt"}, {"lanes", pick(rng, lanes)},
           {"maxspeed", pick(rng, speed)}};
    t["oneway"] = chance(rng, 0.9) ? "yes" : "no";
    if (chance(rng, 0.4)) t["width"] = pick(rng, width);
    if (chance(rng, 0.05)) t["bridge"] = "yes";
    return t;
}

Tags paved_tags(Rng& rng) {
    static const char* surface[] = {"asphalt", "asphalt", "asphalt", "paving_stones", "paving_stones"};
    static const char* speed[] = {"30", "30", "50"};
    Tags t{{"highway", chance(rng, 0.85) ? "residential" : "living_street"}, {"surface", pick(rng, surface)}};
    if (chance(rng, 0.8)) t["oneway"] = "no";
    if (chance(rng, 0.7)) t["maxspeed"] = pick(rng, speed);
    if (chance(rng, 0.5)) t["lanes"] = chance(rng, 0.6) ? "2" : "1";
    if (chance(rng, 0.3)) t["width"] = chance(rng, 0.5) ? "5" : "6";
    return t;
}

Tags unpaved_tags(Rng& rng) {
    static const char* highway[] = {"residential", "residential", "residential", "track", "unclassified"};
    static const char* surface[] = {"unpaved", "unpaved", "gravel", "dirt", "ground", "compacted"};
    Tags t{{"highway", pick(rng, highway)}, {"surface", pick(rng, surface)}};
    if (chance(rng, 0.5)) t["oneway"] = "no";
    if (chance(rng, 0.1)) t["maxspeed"] = "20";
    if (chance(rng, 0.2)) t["width"] = chance(rng, 0.5) ? "3" : "4,0";
    return t;
}

Tags tags_for(Archetype a, Rng& rng) {
    switch (a) {
        case Archetype::Arterial: return arterial_tags(rng);
        case Archetype::PavedResidential: return paved_tags(rng);
        case Archetype::UnpavedResidential: return unpaved_tags(rng);
    }
    return {};
}

// Coordinates as an OSM extract would carry them (1e-7 degrees).
double snap(double deg) { return std::round(deg * 1e7) / 1e7; }

LonLat offset_m(const LonLat& p, double east, double north) {
    const double lat = p.lat + north / kMetersPerDegLat;
    const double lon = p.lon + east / (kMetersPerDegLat * std::cos(p.lat * std::numbers::pi / 180.0));
    return {snap(lon), snap(lat)};
}

std::vector<CellId> disk(const CellId& center, int radius) {
    std::set<CellId> seen{center};
    std::vector<CellId> frontier{center};
    for (int r = 0; r < radius; ++r) {
        std::vector<CellId> next;
        for (const auto& c : frontier) {
            for (auto nb : h3::neighbors(c.address())) {
                if (seen.insert(CellId(nb)).second) next.emplace_back(nb);
            }
        }
        frontier = std::move(next);
    }
    return {seen.begin(), seen.end()};
}

nlohmann::ordered_json line_feature(const std::string& id, const std::vector<LonLat>& pts, const Tags& tags,
                                    const char* archetype) {
    nlohmann::ordered_json f;
    f["type"] = "Feature";
    f["id"] = id;
    nlohmann::ordered_json coords = nlohmann::ordered_json::array();
    for (const auto& p : pts) coords.push_back({p.lon, p.lat});
    f["geometry"] = {{"type", "LineString"}, {"coordinates", std::move(coords)}};
    nlohmann::ordered_json props(tags);
    props["fixture_archetype"] = archetype;
    f["properties"] = std::move(props);
    return f;
}

}  // namespace

Gridville make_gridville(const GridvilleOptions& opt) {
    if (opt.ring_radius < 1 || opt.min_local < 1 || opt.max_local < opt.min_local) {
        throw UsageError("invalid gridville options");
    }
    Rng rng(opt.seed);
    Gridville g;
    for (const CitySite& site : kSites) {
        const CellId center = cell_of_point(site.lon, site.lat, kResolution);
        const h3::LatLngDeg c0 = h3::cell_to_latlng(center.address());
        // Sector of each cell by bearing from the city centre. A main street
        // runs west through the paved residential sector.
        std::map<CellId, Archetype> zone;
        std::set<CellId> main_street;
        for (const auto& cell : disk(center, opt.ring_radius)) {
            const h3::LatLngDeg c = h3::cell_to_latlng(cell.address());
            const double east = (c.lng - c0.lng) * std::cos(c0.lat * std::numbers::pi / 180.0);
            const double north = c.lat - c0.lat;
            double angle = std::atan2(north, east) * 180.0 / std::numbers::pi;
            if (angle < 0) angle += 360.0;
            zone[cell] = cell == center ? Archetype::Arterial : static_cast<Archetype>(static_cast<int>(angle / 120.0) % 3);
            if (zone[cell] == Archetype::PavedResidential && std::abs(angle - 180.0) < 10.0) main_street.insert(cell);
        }

        nlohmann::ordered_json fc;
        fc["type"] = "FeatureCollection";
        fc["features"] = nlohmann::ordered_json::array();
        std::size_t serial = 0;
        auto next_id = [&] { return std::string(site.name) + "/" + std::to_string(++serial); };

        for (const auto& [cell, arch] : zone) {
            const h3::LatLngDeg cc = h3::cell_to_latlng(cell.address());
            const LonLat centre{snap(cc.lng), snap(cc.lat)};
            const int n_local = opt.min_local + static_cast<int>(rng.below(static_cast<std::uint64_t>(opt.max_local - opt.min_local + 1)));
            for (int s = 0; s < n_local; ++s) {
                // Redraw until the whole polyline stays inside the cell.
                std::vector<LonLat> pts;
                for (int attempt = 0; attempt < 100; ++attempt) {
                    const double r0 = rng.uniform(0.0, 45.0);
                    const double a0 = rng.uniform(0.0, 2.0 * std::numbers::pi);
                    pts = {offset_m(centre, r0 * std::cos(a0), r0 * std::sin(a0))};
                    double heading = rng.uniform(0.0, 2.0 * std::numbers::pi);
                    const int legs = 1 + static_cast<int>(rng.below(3));
                    for (int l = 0; l < legs; ++l) {
                        const double len = rng.uniform(15.0, 35.0);
                        pts.push_back(offset_m(pts.back(), len * std::cos(heading), len * std::sin(heading)));
                        heading += rng.uniform(-0.8, 0.8);
                    }
                    const auto cells = cells_of_segment(pts, kResolution);
                    if (cells.size() == 1 && cells[0] == cell) break;
                    pts.clear();
                }
                if (pts.empty()) continue;
                const Tags tags = tags_for(arch, rng);
                fc["features"].push_back(line_feature(next_id(), pts, tags, archetype_name(arch)));
                g.planted[cell] = arch;
                g.city_of[cell] = site.name;
            }
            // Arterials run through: link to same-sector neighbours with larger address.
            if (arch == Archetype::Arterial || chance(rng, 0.25)) {
                for (auto nb_addr : h3::neighbors(cell.address())) {
                    const CellId nb(nb_addr);
                    auto it = zone.find(nb);
                    if (it == zone.end() || it->second != arch || !(cell < nb)) continue;
                    if (arch != Archetype::Arterial && !chance(rng, 0.3)) continue;
                    const h3::LatLngDeg nc = h3::cell_to_latlng(nb_addr);
                    const std::vector<LonLat> pts{centre, {snap(nc.lng), snap(nc.lat)}};
                    const auto cells = cells_of_segment(pts, kResolution);
                    if (cells.size() != 2) continue;
                    const Tags tags = tags_for(arch, rng);
                    fc["features"].push_back(line_feature(next_id(), pts, tags, archetype_name(arch)));
                    g.planted[cell] = g.planted[nb] = arch;
                    g.city_of[cell] = g.city_of[nb] = site.name;
                }
            }
            if (main_street.count(cell)) {
                for (auto nb_addr : h3::neighbors(cell.address())) {
                    const CellId nb(nb_addr);
                    if (!main_street.count(nb) || !(cell < nb)) continue;
                    const h3::LatLngDeg nc = h3::cell_to_latlng(nb_addr);
                    const std::vector<LonLat> pts{centre, {snap(nc.lng), snap(nc.lat)}};
                    if (cells_of_segment(pts, kResolution).size() != 2) continue;
                    const Tags tags = tags_for(Archetype::Arterial, rng);
                    fc["features"].push_back(line_feature(next_id(), pts, tags, archetype_name(Archetype::Arterial)));
                }
            }
            // Occasional footpath: not driveable, removed by the default filter.
            if (chance(rng, 0.05)) {
                const std::vector<LonLat> pts{offset_m(centre, -10, -10), offset_m(centre, 10, 10)};
                fc["features"].push_back(line_feature(next_id(), pts, {{"highway", "footway"}}, "none"));
            }
        }
        // A stray point feature, as extraction tools sometimes emit.
        fc["features"].push_back({{"type", "Feature"},
                                  {"id", next_id()},
                                  {"geometry", {{"type", "Point"}, {"coordinates", {snap(c0.lng), snap(c0.lat)}}}},
                                  {"properties", {{"highway", "traffic_signals"}}}});
        g.cities.push_back({site.name, fc.dump(1) + "\n"});
    }
    return g;
}

void write_gridville(const std::filesystem::path& dir, const Gridville& g) {
    for (const auto& c : g.cities) io::write_file(dir / (c.name + ".geojson"), c.geojson);
    std::string out = "cell_address,city,archetype\n";
    for (const auto& [cell, arch] : g.planted) {
        out += cell.str() + ',' + g.city_of.at(cell) + ',' + archetype_name(arch) + '\n';
    }
    io::write_file(dir / "planted.csv", out);
}

std::map<CellId, PlantedCell> read_planted_csv(const std::filesystem::path& path) {
    const io::CsvTable t = io::read_csv(path);
    const std::size_t cc = t.column("cell_address");
    const std::size_t ci = t.column("city");
    const std::size_t ca = t.column("archetype");
    std::map<CellId, PlantedCell> out;
    for (const auto& row : t.rows) {
        Archetype a;
        if (row[ca] == "arterial") {
            a = Archetype::Arterial;
        } else if (row[ca] == "paved_residential") {
            a = Archetype::PavedResidential;
        } else if (row[ca] == "unpaved_residential") {
            a = Archetype::UnpavedResidential;
        } else {
            throw DataError(path.string() + ": unknown archetype '" + row[ca] + "'");
        }
        out[CellId::parse(row[cc])] = {row[ci], a};
    }
    return out;
}

}  // namespace hexembed
