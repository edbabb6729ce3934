// Segment embeddings averaged into one embedding per cell, and tag shares
// over groups of cells.
#pragma once

#include "hexembed/feature_schema.hpp"
#include "hexembed/hex_grid.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace hexembed {

/// Row-per-item embedding table with id lookup. The lookup index is built on
/// first use; call reindex() after editing `keys` in place.
template <typename Key, typename Hash = std::hash<Key>>
struct EmbeddingTable {
    std::vector<Key> keys;
    Eigen::MatrixXd values;  // keys.size() x dim

    std::optional<std::size_t> find(const Key& k) const {
        if (index_.size() != keys.size()) reindex();
        auto it = index_.find(k);
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }
    void reindex() const {
        index_.clear();
        for (std::size_t i = 0; i < keys.size(); ++i) index_.emplace(keys[i], i);
    }
    std::size_t size() const { return keys.size(); }
    Eigen::Index dim() const { return values.cols(); }

  private:
    mutable std::unordered_map<Key, std::size_t, Hash> index_;
};

struct CellIdHash {
    std::size_t operator()(const CellId& c) const noexcept { return std::hash<std::uint64_t>{}(c.address()); }
};

using SegmentEmbeddings = EmbeddingTable<std::string>;

struct RegionEmbedding {
    CellId cell;
    Eigen::VectorXd values;
    std::size_t segment_count = 0;
};

/// Regions sorted by cell address.
struct RegionEmbeddings : EmbeddingTable<CellId, CellIdHash> {
    std::vector<std::size_t> segment_counts;

    RegionEmbedding at(std::size_t i) const { return {keys[i], values.row(static_cast<Eigen::Index>(i)).transpose(), segment_counts[i]}; }
};

/// Mean of member segment embeddings per assigned cell, summed in segment id
/// order. With `weights` (segment id -> weight, e.g. length) the mean is
/// weighted. Throws DataError naming a segment without an embedding.
RegionEmbeddings aggregate_mean(const CellAssignment& assignment, const SegmentEmbeddings& segments,
                                const std::unordered_map<std::string, double>* weights = nullptr);

enum class ShareMode {
    Membership,  // a segment counts once per region it belongs to
    Unique,      // a segment counts once however many regions of the set hold it
};

/// Per-column share of set bits over the segments of `region_set`.
Eigen::VectorXd region_feature_share(const CellAssignment& assignment, const FeatureMatrix& features,
                                     const std::vector<CellId>& region_set,
                                     ShareMode mode = ShareMode::Membership);

/// Planar length of a polyline in meters (equirectangular per chord).
double polyline_length_m(const std::vector<LonLat>& geometry);

void write_segment_embeddings_csv(const std::filesystem::path& path, const SegmentEmbeddings& e);
SegmentEmbeddings read_segment_embeddings_csv(const std::filesystem::path& path);
void write_region_embeddings_csv(const std::filesystem::path& path, const RegionEmbeddings& r);
RegionEmbeddings read_region_embeddings_csv(const std::filesystem::path& path);

}  // namespace hexembed
