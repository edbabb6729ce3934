// Synthetic multi-city road network with planted road archetypes, used as
// the bundled fixture and as ground truth for recovery tests.
#pragma once

#include "hexembed/hex_grid.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace hexembed {

enum class Archetype { Arterial = 0, PavedResidential = 1, UnpavedResidential = 2 };

const char* archetype_name(Archetype a);

struct GridvilleOptions {
    std::uint64_t seed = 2024;
    int ring_radius = 8;   // hexagonal disk of cells around each city centre
    int min_local = 3;     // short segments kept inside one cell
    int max_local = 6;
};

struct GridvilleCity {
    std::string name;
    std::string geojson;
};

struct Gridville {
    std::vector<GridvilleCity> cities;
    std::map<CellId, Archetype> planted;  // archetype of every cell holding a road
    std::map<CellId, std::string> city_of;
};

/// Three pseudo-cities at resolution 9, each split into three sectors, one
/// per archetype. Local segments stay inside their cell; through segments
/// join centres of neighbouring cells of the same sector, and a main street
/// of arterial segments crosses each paved residential sector. A few footways
/// and one point feature per city exercise filtering and ingest.
Gridville make_gridville(const GridvilleOptions& options = {});

/// Writes `<city>.geojson` per city and `planted.csv` (cell_address,city,archetype).
void write_gridville(const std::filesystem::path& dir, const Gridville& g);

struct PlantedCell {
    std::string city;
    Archetype archetype;
};
std::map<CellId, PlantedCell> read_planted_csv(const std::filesystem::path& path);

}  // namespace hexembed
