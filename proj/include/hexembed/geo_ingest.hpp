// Road-network ingestion: GeoJSON LineString collections in, validated
// road segments out, plus the workspace's roads.jsonl format.
#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace hexembed {

struct LonLat {
    double lon = 0.0;
    double lat = 0.0;

    bool operator==(const LonLat&) const = default;
};

struct RoadSegment {
    std::string id;
    std::vector<LonLat> geometry;
    std::map<std::string, std::string> tags;  // lowercase keys, non-empty values
    std::string city;

    bool operator==(const RoadSegment&) const = default;
};

struct RoadNetwork {
    std::vector<RoadSegment> segments;
    std::set<std::string> cities;

    bool operator==(const RoadNetwork&) const = default;
};

struct IngestReport {
    std::size_t skipped_features = 0;  // no usable LineString geometry
    std::size_t list_values = 0;       // list-valued properties reduced to their first element
    std::size_t renamed_ids = 0;       // duplicate feature ids made unique
    std::vector<std::string> warnings;
};

/// Parses a GeoJSON FeatureCollection. Each LineString becomes one segment;
/// MultiLineString parts become `<id>#k`. Throws ParseError on malformed JSON
/// and EmptyInputError when nothing usable remains.
RoadNetwork parse_road_collection(std::string_view bytes, const std::string& city,
                                  IngestReport* report = nullptr);

/// Keeps segments whose `highway` value is in `allowed`, preserving order.
RoadNetwork filter_driveable(const RoadNetwork& net, const std::set<std::string>& allowed);

/// Concatenates networks; ids must stay unique across them.
RoadNetwork merge_networks(std::vector<RoadNetwork> parts);

/// FeatureCollection of LineStrings with the segment id as feature id and
/// tags as properties; parsing it back yields an equal network.
std::string to_geojson(const RoadNetwork& net);

std::string to_jsonl(const RoadNetwork& net);
RoadNetwork from_jsonl(std::string_view text);
void write_roads_jsonl(const std::filesystem::path& path, const RoadNetwork& net);
RoadNetwork read_roads_jsonl(const std::filesystem::path& path);

}  // namespace hexembed
