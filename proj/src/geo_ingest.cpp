#include "hexembed/geo_ingest.hpp"

#include "hexembed/error.hpp"
#include "hexembed/io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <unordered_set>

namespace hexembed {

using nlohmann::json;

namespace {

std::string lowercase(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

// Scalar JSON property to a tag string; empty result means "drop".
std::string scalar_text(const json& v) {
    switch (v.type()) {
        case json::value_t::string:
            return v.get<std::string>();
        case json::value_t::boolean:
            return v.get<bool>() ? "yes" : "no";
        case json::value_t::number_integer:
            return std::to_string(v.get<std::int64_t>());
        case json::value_t::number_unsigned:
            return std::to_string(v.get<std::uint64_t>());
        case json::value_t::number_float:
            return io::format_double(v.get<double>());
        default:
            return {};
    }
}

std::string feature_id(const json& feature, const json& props, std::size_t index) {
    for (const json* src : {&feature, &props}) {
        for (const char* name : {"id", "osmid"}) {
            if (src->is_object() && src->contains(name)) {
                const json& v = (*src)[name];
                std::string s = v.is_array() && !v.empty() ? scalar_text(v.front()) : scalar_text(v);
                if (!s.empty()) return s;
            }
        }
    }
    return "f" + std::to_string(index);
}

bool read_line(const json& coords, std::vector<LonLat>& out) {
    if (!coords.is_array() || coords.size() < 2) return false;
    out.clear();
    out.reserve(coords.size());
    for (const auto& pt : coords) {
        if (!pt.is_array() || pt.size() < 2 || !pt[0].is_number() || !pt[1].is_number()) return false;
        const double lon = pt[0].get<double>();
        const double lat = pt[1].get<double>();
        if (!std::isfinite(lon) || !std::isfinite(lat) || lon < -180.0 || lon > 180.0 ||
            lat < -90.0 || lat > 90.0) {
            return false;
        }
        out.push_back({lon, lat});
    }
    return true;
}

std::map<std::string, std::string> read_tags(const json& props, IngestReport& rep,
                                             const std::string& fid) {
    std::map<std::string, std::string> tags;
    if (!props.is_object()) return tags;
    for (const auto& [key, value] : props.items()) {
        std::string text;
        if (value.is_array()) {
            for (const auto& item : value) {
                text = scalar_text(item);
                if (!text.empty()) break;
            }
            if (!text.empty()) {
                ++rep.list_values;
                rep.warnings.push_back(fid + ": list value for '" + key + "', kept first element");
            }
        } else {
            text = scalar_text(value);
        }
        if (text.empty()) continue;
        tags.emplace(lowercase(key), std::move(text));  // first spelling wins on case clashes
    }
    return tags;
}

}  // namespace

RoadNetwork parse_road_collection(std::string_view bytes, const std::string& city,
                                  IngestReport* report) {
    IngestReport local;
    IngestReport& rep = report ? *report : local;

    json doc;
    try {
        doc = json::parse(bytes.begin(), bytes.end());
    } catch (const json::parse_error& e) {
        throw ParseError(std::string("malformed GeoJSON: ") + e.what(), e.byte);
    }
    if (!doc.is_object() || doc.value("type", "") != "FeatureCollection" ||
        !doc.contains("features") || !doc["features"].is_array()) {
        throw DataError("input is not a GeoJSON FeatureCollection");
    }

    RoadNetwork net;
    std::unordered_set<std::string> seen;
    auto unique_id = [&](std::string id) {
        if (seen.insert(id).second) return id;
        for (std::size_t k = 1;; ++k) {
            std::string alt = id + "~" + std::to_string(k);
            if (seen.insert(alt).second) {
                ++rep.renamed_ids;
                rep.warnings.push_back("duplicate id '" + id + "' renamed to '" + alt + "'");
                return alt;
            }
        }
    };

    const json& features = doc["features"];
    std::vector<LonLat> line;
    for (std::size_t i = 0; i < features.size(); ++i) {
        const json& f = features[i];
        const json* geom = f.is_object() && f.contains("geometry") ? &f["geometry"] : nullptr;
        const std::string type = geom && geom->is_object() ? geom->value("type", "") : "";
        const json& coords = geom && geom->is_object() && geom->contains("coordinates")
                                 ? (*geom)["coordinates"]
                                 : json();
        const json props = f.is_object() && f.contains("properties") ? f["properties"] : json();
        const std::string fid = feature_id(f, props, i);

        std::vector<std::pair<std::string, std::vector<LonLat>>> parts;
        if (type == "LineString") {
            if (read_line(coords, line)) parts.emplace_back(fid, line);
        } else if (type == "MultiLineString" && coords.is_array()) {
            for (std::size_t k = 0; k < coords.size(); ++k) {
                if (read_line(coords[k], line)) parts.emplace_back(fid + "#" + std::to_string(k), line);
            }
        }
        if (parts.empty()) {
            ++rep.skipped_features;
            continue;
        }
        const auto tags = read_tags(props, rep, fid);
        for (auto& [id, pts] : parts) {
            net.segments.push_back({unique_id(std::move(id)), std::move(pts), tags, city});
        }
    }
    if (net.segments.empty()) {
        throw EmptyInputError("no usable LineString features for city '" + city + "' (" +
                              std::to_string(rep.skipped_features) + " skipped)");
    }
    net.cities.insert(city);
    return net;
}

RoadNetwork filter_driveable(const RoadNetwork& net, const std::set<std::string>& allowed) {
    RoadNetwork out;
    for (const auto& s : net.segments) {
        auto it = s.tags.find("highway");
        if (it != s.tags.end() && allowed.count(it->second)) {
            out.segments.push_back(s);
            out.cities.insert(s.city);
        }
    }
    return out;
}

RoadNetwork merge_networks(std::vector<RoadNetwork> parts) {
    RoadNetwork out;
    std::unordered_set<std::string> ids;
    for (auto& p : parts) {
        for (auto& s : p.segments) {
            if (!ids.insert(s.id).second) {
                throw DataError("segment id '" + s.id + "' appears in more than one input");
            }
            out.cities.insert(s.city);
            out.segments.push_back(std::move(s));
        }
    }
    return out;
}

namespace {

json coords_json(const std::vector<LonLat>& g) {
    json arr = json::array();
    for (const auto& p : g) arr.push_back({p.lon, p.lat});
    return arr;
}

}  // namespace

std::string to_geojson(const RoadNetwork& net) {
    nlohmann::ordered_json fc;
    fc["type"] = "FeatureCollection";
    fc["features"] = nlohmann::ordered_json::array();
    for (const auto& s : net.segments) {
        nlohmann::ordered_json f;
        f["type"] = "Feature";
        f["id"] = s.id;
        f["geometry"] = {{"type", "LineString"}, {"coordinates", coords_json(s.geometry)}};
        f["properties"] = s.tags;
        fc["features"].push_back(std::move(f));
    }
    return fc.dump() + "\n";
}

std::string to_jsonl(const RoadNetwork& net) {
    std::string out;
    for (const auto& s : net.segments) {
        nlohmann::ordered_json row;
        row["id"] = s.id;
        row["city"] = s.city;
        row["coords"] = coords_json(s.geometry);
        row["tags"] = s.tags;
        out += row.dump();
        out += '\n';
    }
    return out;
}

RoadNetwork from_jsonl(std::string_view text) {
    RoadNetwork net;
    std::unordered_set<std::string> ids;
    std::size_t offset = 0;
    std::size_t lineno = 0;
    while (offset < text.size()) {
        std::size_t end = text.find('\n', offset);
        if (end == std::string_view::npos) end = text.size();
        const std::string_view line = text.substr(offset, end - offset);
        ++lineno;
        if (!line.empty()) {
            json row;
            try {
                row = json::parse(line);
            } catch (const json::parse_error& e) {
                throw ParseError("roads.jsonl line " + std::to_string(lineno), offset + e.byte);
            }
            RoadSegment s;
            try {
                s.id = row.at("id").get<std::string>();
                s.city = row.at("city").get<std::string>();
                s.tags = row.at("tags").get<std::map<std::string, std::string>>();
                if (!read_line(row.at("coords"), s.geometry)) throw DataError("bad coords");
            } catch (const json::exception& e) {
                throw DataError("roads.jsonl line " + std::to_string(lineno) + ": " + e.what());
            } catch (const DataError& e) {
                throw DataError("roads.jsonl line " + std::to_string(lineno) + ": " + e.what());
            }
            if (!ids.insert(s.id).second) throw DataError("duplicate segment id '" + s.id + "'");
            net.cities.insert(s.city);
            net.segments.push_back(std::move(s));
        }
        offset = end + 1;
    }
    return net;
}

void write_roads_jsonl(const std::filesystem::path& path, const RoadNetwork& net) {
    io::write_file(path, to_jsonl(net));
}

RoadNetwork read_roads_jsonl(const std::filesystem::path& path) {
    return from_jsonl(io::read_file(path));
}

}  // namespace hexembed
