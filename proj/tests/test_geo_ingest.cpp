#include "hexembed/error.hpp"
#include "hexembed/feature_schema.hpp"
#include "hexembed/geo_ingest.hpp"
#include "hexembed/io.hpp"
#include "oracles.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <set>

using namespace hexembed;

namespace {

const char* kOneLine = R"({"type":"FeatureCollection","features":[
  {"type":"Feature","id":"w7","geometry":{"type":"LineString","coordinates":[[16.9,52.4],[16.91,52.41],[16.92,52.4]]},
   "properties":{"highway":"residential"}}]})";

}  // namespace

TEST_SUITE("geo_ingest") {

TEST_CASE("one LineString becomes one segment") {
    const RoadNetwork net = parse_road_collection(kOneLine, "poz");
    REQUIRE(net.segments.size() == 1);
    const RoadSegment& s = net.segments[0];
    CHECK(s.id == "w7");
    CHECK(s.city == "poz");
    CHECK(s.geometry.size() == 3);
    CHECK(s.tags == std::map<std::string, std::string>{{"highway", "residential"}});
    CHECK(net.cities == std::set<std::string>{"poz"});
}

TEST_CASE("non-line geometry is skipped and counted") {
    const std::string doc = R"({"type":"FeatureCollection","features":[
      {"type":"Feature","id":"p","geometry":{"type":"Point","coordinates":[16.9,52.4]},"properties":{}},
      {"type":"Feature","id":"a","geometry":{"type":"LineString","coordinates":[[16.9,52.4],[16.91,52.41]]},"properties":{}}]})";
    IngestReport rep;
    const RoadNetwork net = parse_road_collection(doc, "c", &rep);
    CHECK(net.segments.size() == 1);
    CHECK(rep.skipped_features == 1);
}

TEST_CASE("MultiLineString parts get #k suffixes") {
    const std::string doc = R"({"type":"FeatureCollection","features":[
      {"type":"Feature","id":"w1","geometry":{"type":"MultiLineString","coordinates":[
        [[16.9,52.4],[16.91,52.41]],[[16.92,52.4],[16.93,52.41],[16.94,52.42]]]},"properties":{"highway":"primary"}}]})";
    const RoadNetwork net = parse_road_collection(doc, "c");
    std::set<std::string> ids;
    for (const auto& s : net.segments) ids.insert(s.id);
    CHECK(ids == std::set<std::string>{"w1#0", "w1#1"});
    CHECK(net.segments[1].geometry.size() == 3);
}

TEST_CASE("null values dropped, lists reduced with a warning, booleans and numbers as text") {
    const std::string doc = R"({"type":"FeatureCollection","features":[
      {"type":"Feature","geometry":{"type":"LineString","coordinates":[[16.9,52.4],[16.91,52.41]]},
       "properties":{"highway":["primary","secondary"],"name":null,"Lanes":2,"bridge":true,"ref":""}}]})";
    IngestReport rep;
    const RoadNetwork net = parse_road_collection(doc, "c", &rep);
    const auto& tags = net.segments.at(0).tags;
    CHECK(tags.at("highway") == "primary");
    CHECK(tags.at("lanes") == "2");
    CHECK(tags.at("bridge") == "yes");
    CHECK_FALSE(tags.count("name"));
    CHECK_FALSE(tags.count("ref"));
    CHECK(rep.list_values == 1);
    CHECK_FALSE(rep.warnings.empty());
}

TEST_CASE("malformed JSON reports a byte offset") {
    const std::string doc = R"({"type":"FeatureCollection","features":[ {"type": ]})";
    try {
        parse_road_collection(doc, "c");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.byte_offset() > 0);
        CHECK(e.byte_offset() <= doc.size());
    }
}

TEST_CASE("no usable feature is an empty-input error") {
    CHECK_THROWS_AS(parse_road_collection(R"({"type":"FeatureCollection","features":[]})", "c"), EmptyInputError);
    const std::string one_point = R"({"type":"FeatureCollection","features":[
      {"type":"Feature","geometry":{"type":"LineString","coordinates":[[16.9,52.4]]},"properties":{}}]})";
    CHECK_THROWS_AS(parse_road_collection(one_point, "c"), EmptyInputError);
}

TEST_CASE("duplicate ids are made unique") {
    const std::string doc = R"({"type":"FeatureCollection","features":[
      {"type":"Feature","id":"x","geometry":{"type":"LineString","coordinates":[[16.9,52.4],[16.91,52.41]]},"properties":{}},
      {"type":"Feature","id":"x","geometry":{"type":"LineString","coordinates":[[16.9,52.4],[16.92,52.41]]},"properties":{}}]})";
    IngestReport rep;
    const RoadNetwork net = parse_road_collection(doc, "c", &rep);
    CHECK(net.segments[0].id != net.segments[1].id);
    CHECK(rep.renamed_ids == 1);
}

TEST_CASE("filter_driveable keeps allowed highway values in order") {
    RoadNetwork net;
    for (const char* hw : {"residential", "footway", "primary"}) {
        RoadSegment s;
        s.id = hw;
        s.geometry = {{0, 0}, {0.001, 0}};
        s.tags["highway"] = hw;
        s.city = "c";
        net.segments.push_back(s);
    }
    net.cities = {"c"};
    const RoadNetwork kept = filter_driveable(net, default_driveable_values());
    REQUIRE(kept.segments.size() == 2);
    CHECK(kept.segments[0].id == "residential");
    CHECK(kept.segments[1].id == "primary");
    CHECK(filter_driveable(net, {"residential", "footway", "primary"}) == net);
}

TEST_CASE("fixture filter count equals an independent scan of the file") {
    const auto path = oracle::fixture_dir() / "gridville_north.geojson";
    const auto allowed = default_driveable_values();
    const nlohmann::json doc = nlohmann::json::parse(io::read_file(path));
    std::size_t expected = 0;
    for (const auto& f : doc["features"]) {
        if (f["geometry"]["type"] != "LineString") continue;
        const auto& props = f["properties"];
        if (props.contains("highway") && allowed.count(props["highway"].get<std::string>())) ++expected;
    }
    const RoadNetwork net = parse_road_collection(io::read_file(path), "gridville_north");
    CHECK(expected > 100);
    CHECK(filter_driveable(net, allowed).segments.size() == expected);
}

TEST_CASE("GeoJSON and jsonl round trips are exact") {
    const RoadNetwork net =
        parse_road_collection(io::read_file(oracle::fixture_dir() / "gridville_south.geojson"), "gridville_south");
    CHECK(parse_road_collection(to_geojson(net), "gridville_south") == net);
    CHECK(from_jsonl(to_jsonl(net)) == net);
    CHECK(parse_road_collection(io::read_file(oracle::fixture_dir() / "gridville_south.geojson"), "gridville_south") ==
          net);
    for (const auto& s : net.segments) CHECK(s.geometry.size() >= 2);
}

TEST_CASE("merging networks rejects duplicate ids") {
    const RoadNetwork a = parse_road_collection(kOneLine, "a");
    const RoadNetwork b = parse_road_collection(kOneLine, "b");
    CHECK_THROWS_AS(merge_networks({a, b}), DataError);
    RoadNetwork c = b;
    c.segments[0].id = "w8";
    const RoadNetwork m = merge_networks({a, c});
    CHECK(m.segments.size() == 2);
    CHECK(m.cities == std::set<std::string>{"a", "b"});
}

}
