// Tag normalization and one-hot encoding of road segments.
#pragma once

#include "hexembed/geo_ingest.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace hexembed {

/// How raw values of a key are read before binning.
enum class ValueParser {
    Text,   // lowercase exact match against bin match lists
    Speed,  // km/h; "X mph" converted; "walk" is 10
    Width,  // meters, optional "m" suffix, decimal comma allowed, rounded
    Count,  // positive integer
};

struct Bin {
    std::string name;
    std::vector<std::string> match;  // Text keys; empty means {name}
    std::optional<double> lo;        // numeric keys: [lo, hi)
    std::optional<double> hi;        // absent = unbounded
    bool other = false;              // catch-all, always the last bin of its key

    bool operator==(const Bin&) const = default;
};

struct KeySpec {
    std::string name;
    ValueParser parser = ValueParser::Text;
    std::vector<Bin> bins;

    bool operator==(const KeySpec&) const = default;
};

class FeatureSchema {
  public:
    FeatureSchema() = default;
    FeatureSchema(std::string version, std::vector<KeySpec> keys);

    const std::string& version() const { return version_; }
    const std::vector<KeySpec>& keys() const { return keys_; }
    std::size_t width() const { return width_; }

    /// First column of key `k` (schema order).
    std::size_t offset(std::size_t k) const { return offsets_[k]; }
    std::optional<std::size_t> key_index(std::string_view key) const;
    std::optional<std::size_t> column(std::string_view key, std::string_view bin) const;
    /// "key:bin" for every column.
    std::vector<std::string> column_names() const;
    /// Schema key owning each column.
    std::vector<std::size_t> column_keys() const;

    bool operator==(const FeatureSchema& o) const { return version_ == o.version_ && keys_ == o.keys_; }

  private:
    std::string version_;
    std::vector<KeySpec> keys_;
    std::vector<std::size_t> offsets_;
    std::size_t width_ = 0;
};

FeatureSchema default_schema();

/// Highway values accepted by the default driveable filter.
std::set<std::string> default_driveable_values();

FeatureSchema schema_from_json(std::string_view text);
std::string schema_to_json(const FeatureSchema& schema);
FeatureSchema load_schema(const std::filesystem::path& path);

struct NormalizedTag {
    bool recognized = false;
    std::string value;             // canonical text form
    std::optional<double> number;  // parsed numeric value for numeric keys
};

/// Consolidates one raw value. Multi-valued "a;b" keeps "a". Never throws on
/// bad values: they come back unrecognized.
NormalizedTag normalize_tag(const KeySpec& key, std::string_view raw);
/// Same, looking the key up in the default schema. Throws for unknown keys.
NormalizedTag normalize_tag(std::string_view key, std::string_view raw);

/// Bin index within the key for a raw value: the matching bin, else the
/// key's `other` bin, else nothing.
std::optional<std::size_t> bin_of(const KeySpec& key, std::string_view raw);

std::vector<std::uint8_t> encode_segment(const RoadSegment& seg, const FeatureSchema& schema);

struct FeatureMatrix {
    std::vector<std::string> ids;
    std::vector<std::string> columns;
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> bits;

    Eigen::MatrixXd as_real() const { return bits.cast<double>(); }
};

FeatureMatrix encode_network(const RoadNetwork& net, const FeatureSchema& schema);
void write_feature_csv(const std::filesystem::path& path, const FeatureMatrix& m);
FeatureMatrix read_feature_csv(const std::filesystem::path& path);

struct KeyCoverage {
    std::string key;
    std::size_t count = 0;
    double share = 0.0;
    std::vector<std::pair<std::string, std::size_t>> values;  // descending frequency
};

/// Occurrence share of every schema key plus its raw value frequencies.
std::vector<KeyCoverage> tag_coverage_stats(const RoadNetwork& net,
                                            const FeatureSchema& schema = default_schema());

}  // namespace hexembed
