#include "hexembed/feature_schema.hpp"

#include "hexembed/error.hpp"
#include "hexembed/io.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <map>

namespace hexembed {

using nlohmann::ordered_json;

FeatureSchema::FeatureSchema(std::string version, std::vector<KeySpec> keys)
    : version_(std::move(version)), keys_(std::move(keys)) {
    std::set<std::string> key_names;
    for (const auto& k : keys_) {
        if (k.name.empty() || !key_names.insert(k.name).second) {
            throw DataError("schema: duplicate or empty key '" + k.name + "'");
        }
        if (k.bins.empty()) throw DataError("schema: key '" + k.name + "' has no bins");
        std::set<std::string> bin_names;
        std::optional<double> prev_hi;
        bool unbounded_seen = false;
        for (std::size_t b = 0; b < k.bins.size(); ++b) {
            const Bin& bin = k.bins[b];
            if (bin.name.empty() || !bin_names.insert(bin.name).second) {
                throw DataError("schema: duplicate bin '" + bin.name + "' in key '" + k.name + "'");
            }
            if (bin.other) {
                if (b + 1 != k.bins.size()) {
                    throw DataError("schema: 'other' must be the last bin of '" + k.name + "'");
                }
                continue;
            }
            if (k.parser == ValueParser::Text) {
                if (bin.lo || bin.hi) throw DataError("schema: text key '" + k.name + "' has a numeric bin");
                continue;
            }
            if (!bin.lo) throw DataError("schema: numeric bin '" + bin.name + "' lacks 'lo'");
            if (unbounded_seen || (bin.hi && !(*bin.hi > *bin.lo)) || (prev_hi && *bin.lo < *prev_hi)) {
                throw DataError("schema: bins of '" + k.name + "' are not strictly increasing");
            }
            prev_hi = bin.hi ? bin.hi : bin.lo;
            unbounded_seen = !bin.hi.has_value();
        }
    }
    offsets_.reserve(keys_.size());
    for (const auto& k : keys_) {
        offsets_.push_back(width_);
        width_ += k.bins.size();
    }
}

std::optional<std::size_t> FeatureSchema::key_index(std::string_view key) const {
    for (std::size_t i = 0; i < keys_.size(); ++i) {
        if (keys_[i].name == key) return i;
    }
    return std::nullopt;
}

std::optional<std::size_t> FeatureSchema::column(std::string_view key, std::string_view bin) const {
    auto k = key_index(key);
    if (!k) return std::nullopt;
    const auto& bins = keys_[*k].bins;
    for (std::size_t b = 0; b < bins.size(); ++b) {
        if (bins[b].name == bin) return offsets_[*k] + b;
    }
    return std::nullopt;
}

std::vector<std::string> FeatureSchema::column_names() const {
    std::vector<std::string> out;
    out.reserve(width_);
    for (const auto& k : keys_) {
        for (const auto& b : k.bins) out.push_back(k.name + ":" + b.name);
    }
    return out;
}

std::vector<std::size_t> FeatureSchema::column_keys() const {
    std::vector<std::size_t> out;
    out.reserve(width_);
    for (std::size_t i = 0; i < keys_.size(); ++i) out.insert(out.end(), keys_[i].bins.size(), i);
    return out;
}

namespace {

Bin text_bin(std::string name, std::vector<std::string> match = {}) {
    Bin b;
    if (match.empty()) match.push_back(name);
    b.name = std::move(name);
    b.match = std::move(match);
    return b;
}

Bin range_bin(std::string name, double lo, std::optional<double> hi) {
    Bin b;
    b.name = std::move(name);
    b.lo = lo;
    b.hi = hi;
    return b;
}

Bin other_bin() {
    Bin b;
    b.name = "other";
    b.other = true;
    return b;
}

KeySpec text_key(std::string name, std::initializer_list<const char*> values, bool with_other) {
    KeySpec k{std::move(name), ValueParser::Text, {}};
    for (const char* v : values) k.bins.push_back(text_bin(v));
    if (with_other) k.bins.push_back(other_bin());
    return k;
}

}  // namespace

FeatureSchema default_schema() {
    std::vector<KeySpec> keys;

    KeySpec oneway{"oneway", ValueParser::Text, {}};
    oneway.bins = {text_bin("yes", {"yes", "true", "1"}), text_bin("no", {"no", "false", "0"}),
                   text_bin("reversed", {"-1", "reverse"})};
    keys.push_back(std::move(oneway));

    keys.push_back(text_key("highway",
                            {"motorway", "trunk", "primary", "secondary", "tertiary", "unclassified",
                             "residential", "living_street", "service", "road", "motorway_link",
                             "trunk_link", "primary_link", "secondary_link", "tertiary_link", "track"},
                            true));
    keys.push_back(text_key("surface",
                            {"asphalt", "paved", "concrete", "concrete_plates", "paving_stones", "sett",
                             "cobblestone", "unpaved", "compacted", "gravel", "fine_gravel", "ground",
                             "dirt", "grass", "sand"},
                            true));

    // Nearest of 10, 20, ..., 120 km/h; a value exactly halfway goes up.
    KeySpec maxspeed{"maxspeed", ValueParser::Speed, {}};
    for (int v = 10; v <= 120; v += 10) {
        maxspeed.bins.push_back(range_bin(std::to_string(v), v == 10 ? 0.0 : v - 5.0, v + 5.0));
    }
    maxspeed.bins.push_back(other_bin());
    keys.push_back(std::move(maxspeed));

    KeySpec lanes{"lanes", ValueParser::Count, {}};
    for (int v = 1; v <= 7; ++v) lanes.bins.push_back(range_bin(std::to_string(v), v, v + 1.0));
    lanes.bins.push_back(range_bin("8+", 8, std::nullopt));
    keys.push_back(std::move(lanes));

    keys.push_back(text_key("bridge", {"yes", "viaduct", "movable"}, true));
    keys.push_back(text_key("junction", {"roundabout", "circular", "jughandle"}, true));
    keys.push_back(text_key("access", {"yes", "permissive", "no", "private", "destination"}, true));
    keys.push_back(text_key("tunnel", {"yes", "building_passage", "culvert"}, true));

    KeySpec width{"width", ValueParser::Width, {}};
    for (int v = 1; v <= 12; ++v) width.bins.push_back(range_bin(std::to_string(v), v - 0.5, v + 0.5));
    width.bins.push_back(other_bin());
    keys.push_back(std::move(width));

    return FeatureSchema("1", std::move(keys));
}

std::set<std::string> default_driveable_values() {
    std::set<std::string> out;
    const FeatureSchema schema = default_schema();
    for (const auto& b : schema.keys()[*schema.key_index("highway")].bins) {
        if (!b.other) out.insert(b.name);
    }
    return out;
}

namespace {

const char* parser_name(ValueParser p) {
    switch (p) {
        case ValueParser::Text: return "text";
        case ValueParser::Speed: return "speed";
        case ValueParser::Width: return "width";
        case ValueParser::Count: return "count";
    }
    return "text";
}

ValueParser parser_from(const std::string& s) {
    if (s == "text") return ValueParser::Text;
    if (s == "speed") return ValueParser::Speed;
    if (s == "width") return ValueParser::Width;
    if (s == "count") return ValueParser::Count;
    throw DataError("schema: unknown parser '" + s + "'");
}

}  // namespace

FeatureSchema schema_from_json(std::string_view text) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const ordered_json::parse_error& e) {
        throw ParseError(std::string("schema: ") + e.what(), e.byte);
    }
    try {
        std::vector<KeySpec> keys;
        for (const auto& jk : doc.at("keys")) {
            KeySpec k;
            k.name = jk.at("name").get<std::string>();
            k.parser = parser_from(jk.value("parser", "text"));
            for (const auto& jb : jk.at("bins")) {
                Bin b;
                b.name = jb.at("name").get<std::string>();
                b.other = jb.value("other", false);
                if (jb.contains("match")) b.match = jb["match"].get<std::vector<std::string>>();
                if (jb.contains("lo")) b.lo = jb["lo"].get<double>();
                if (jb.contains("hi") && !jb["hi"].is_null()) b.hi = jb["hi"].get<double>();
                if (k.parser == ValueParser::Text && !b.other && b.match.empty()) b.match = {b.name};
                k.bins.push_back(std::move(b));
            }
            keys.push_back(std::move(k));
        }
        return FeatureSchema(doc.at("version").get<std::string>(), std::move(keys));
    } catch (const ordered_json::exception& e) {
        throw DataError(std::string("schema: ") + e.what());
    }
}

std::string schema_to_json(const FeatureSchema& schema) {
    ordered_json doc;
    doc["version"] = schema.version();
    doc["keys"] = ordered_json::array();
    for (const auto& k : schema.keys()) {
        ordered_json jk;
        jk["name"] = k.name;
        jk["parser"] = parser_name(k.parser);
        jk["bins"] = ordered_json::array();
        for (const auto& b : k.bins) {
            ordered_json jb;
            jb["name"] = b.name;
            if (b.other) jb["other"] = true;
            if (!b.match.empty()) jb["match"] = b.match;
            if (b.lo) jb["lo"] = *b.lo;
            if (b.lo) jb["hi"] = b.hi ? ordered_json(*b.hi) : ordered_json(nullptr);
            jk["bins"].push_back(std::move(jb));
        }
        doc["keys"].push_back(std::move(jk));
    }
    return doc.dump(2) + "\n";
}

FeatureSchema load_schema(const std::filesystem::path& path) {
    return schema_from_json(io::read_file(path));
}

namespace {

std::string clean(std::string_view raw) {
    raw = raw.substr(0, raw.find(';'));
    std::string s(raw);
    auto not_space = [](unsigned char c) { return !std::isspace(c); };
    s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
    s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

std::optional<double> leading_number(std::string_view s, std::string_view& rest) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || !std::isfinite(v)) return std::nullopt;
    rest = s.substr(static_cast<std::size_t>(ptr - s.data()));
    while (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
    return v;
}

double round_half_up(double x) { return std::floor(x + 0.5); }

std::string integer_text(double v) { return std::to_string(static_cast<long long>(v)); }

NormalizedTag numeric(double v) {
    return {true, integer_text(v), v};
}

NormalizedTag parse_speed(const std::string& s) {
    if (s == "walk") return numeric(10);
    std::string_view rest;
    auto v = leading_number(s, rest);
    if (!v || *v <= 0) return {false, s, std::nullopt};
    if (rest == "mph") return numeric(round_half_up(*v * 1.609344));
    if (rest.empty() || rest == "km/h" || rest == "kmh" || rest == "kph") return numeric(round_half_up(*v));
    return {false, s, std::nullopt};
}

NormalizedTag parse_width(std::string s) {
    std::replace(s.begin(), s.end(), ',', '.');
    std::string_view rest;
    auto v = leading_number(s, rest);
    if (!v || *v <= 0) return {false, s, std::nullopt};
    if (!(rest.empty() || rest == "m")) return {false, s, std::nullopt};
    return numeric(round_half_up(*v));
}

NormalizedTag parse_count(const std::string& s) {
    long long v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size() || v <= 0) return {false, s, std::nullopt};
    return numeric(static_cast<double>(v));
}

}  // namespace

NormalizedTag normalize_tag(const KeySpec& key, std::string_view raw) {
    const std::string s = clean(raw);
    switch (key.parser) {
        case ValueParser::Speed: return parse_speed(s);
        case ValueParser::Width: return parse_width(s);
        case ValueParser::Count: return parse_count(s);
        case ValueParser::Text: break;
    }
    for (const auto& b : key.bins) {
        if (b.other) continue;
        if (std::find(b.match.begin(), b.match.end(), s) != b.match.end()) return {true, b.name, std::nullopt};
    }
    return {false, s, std::nullopt};
}

NormalizedTag normalize_tag(std::string_view key, std::string_view raw) {
    static const FeatureSchema schema = default_schema();
    auto k = schema.key_index(key);
    if (!k) throw UsageError("not a schema key: '" + std::string(key) + "'");
    return normalize_tag(schema.keys()[*k], raw);
}

std::optional<std::size_t> bin_of(const KeySpec& key, std::string_view raw) {
    const NormalizedTag t = normalize_tag(key, raw);
    if (t.recognized) {
        for (std::size_t b = 0; b < key.bins.size(); ++b) {
            const Bin& bin = key.bins[b];
            if (bin.other) continue;
            if (t.number) {
                if (*t.number >= *bin.lo && (!bin.hi || *t.number < *bin.hi)) return b;
            } else if (bin.name == t.value) {
                return b;
            }
        }
    }
    if (key.bins.back().other) return key.bins.size() - 1;
    return std::nullopt;
}

std::vector<std::uint8_t> encode_segment(const RoadSegment& seg, const FeatureSchema& schema) {
    std::vector<std::uint8_t> bits(schema.width(), 0);
    for (std::size_t k = 0; k < schema.keys().size(); ++k) {
        const KeySpec& key = schema.keys()[k];
        auto it = seg.tags.find(key.name);
        if (it == seg.tags.end()) continue;
        if (auto b = bin_of(key, it->second)) bits[schema.offset(k) + *b] = 1;
    }
    return bits;
}

FeatureMatrix encode_network(const RoadNetwork& net, const FeatureSchema& schema) {
    FeatureMatrix m;
    m.columns = schema.column_names();
    m.bits.resize(static_cast<Eigen::Index>(net.segments.size()), static_cast<Eigen::Index>(schema.width()));
    for (std::size_t i = 0; i < net.segments.size(); ++i) {
        m.ids.push_back(net.segments[i].id);
        const auto bits = encode_segment(net.segments[i], schema);
        for (std::size_t j = 0; j < bits.size(); ++j) {
            m.bits(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = bits[j];
        }
    }
    return m;
}

void write_feature_csv(const std::filesystem::path& path, const FeatureMatrix& m) {
    io::CsvRow header{"segment_id"};
    header.insert(header.end(), m.columns.begin(), m.columns.end());
    std::string out = io::csv_line(header);
    for (Eigen::Index i = 0; i < m.bits.rows(); ++i) {
        out += io::csv_escape(m.ids[static_cast<std::size_t>(i)]);
        for (Eigen::Index j = 0; j < m.bits.cols(); ++j) {
            out += m.bits(i, j) ? ",1" : ",0";
        }
        out += '\n';
    }
    io::write_file(path, out);
}

FeatureMatrix read_feature_csv(const std::filesystem::path& path) {
    const io::CsvTable t = io::read_csv(path);
    if (t.header.empty() || t.header[0] != "segment_id") {
        throw DataError(path.string() + ": first column must be segment_id");
    }
    FeatureMatrix m;
    m.columns.assign(t.header.begin() + 1, t.header.end());
    m.bits.resize(static_cast<Eigen::Index>(t.rows.size()), static_cast<Eigen::Index>(m.columns.size()));
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        m.ids.push_back(t.rows[i][0]);
        for (std::size_t j = 0; j < m.columns.size(); ++j) {
            const std::string& v = t.rows[i][j + 1];
            if (v != "0" && v != "1") throw DataError(path.string() + ": non-binary value '" + v + "'");
            m.bits(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v == "1";
        }
    }
    return m;
}

std::vector<KeyCoverage> tag_coverage_stats(const RoadNetwork& net, const FeatureSchema& schema) {
    if (net.segments.empty()) throw EmptyInputError("tag statistics need at least one segment");
    std::vector<KeyCoverage> out;
    for (const auto& key : schema.keys()) {
        KeyCoverage c;
        c.key = key.name;
        std::map<std::string, std::size_t> freq;
        for (const auto& s : net.segments) {
            auto it = s.tags.find(key.name);
            if (it == s.tags.end()) continue;
            ++c.count;
            ++freq[it->second];
        }
        c.share = static_cast<double>(c.count) / static_cast<double>(net.segments.size());
        c.values.assign(freq.begin(), freq.end());
        std::stable_sort(c.values.begin(), c.values.end(),
                         [](const auto& a, const auto& b) { return a.second > b.second; });
        out.push_back(std::move(c));
    }
    return out;
}

}  // namespace hexembed
