// Ward agglomerative clustering, flat cuts and split profiles.
#pragma once

#include "hexembed/feature_schema.hpp"
#include "hexembed/hex_grid.hpp"
#include "hexembed/region_aggregate.hpp"

#include <Eigen/Core>

#include <filesystem>
#include <vector>

namespace hexembed {

struct Merge {
    std::size_t left = 0;   // smaller node id
    std::size_t right = 0;  // larger node id
    double distance = 0.0;  // Ward criterion at the merge
    std::size_t size = 0;
};

/// Leaves are 0..n-1 in `leaves` order, the node created by merge t is n+t.
struct Dendrogram {
    std::vector<CellId> leaves;
    std::vector<Merge> merges;

    std::size_t leaf_count() const { return leaves.size(); }
};

/// Ward linkage on the rows of `points` via Lance-Williams updates. The
/// criterion between clusters A and B is |A||B|/(|A|+|B|) * |cA - cB|^2; ties
/// go to the lexicographically smallest (left, right) node pair.
std::vector<Merge> ward_linkage(const Eigen::MatrixXd& points);

/// Clusters regions in cell-address order, so the tree does not depend on
/// input order.
Dendrogram agglomerative_ward(const RegionEmbeddings& regions);

struct ClusterCut {
    int k = 0;
    std::vector<CellId> cells;
    std::vector<int> labels;  // 0 = largest cluster, ties by smallest member address

    int label_of(const CellId& c) const;
    std::vector<CellId> members(int cluster) const;
};

/// Flat labeling with k clusters: the first n-k merges applied.
ClusterCut cut_tree(const Dendrogram& d, int k);

struct SplitDifference {
    int parent = 0;     // cluster split in the coarser cut
    int new_child = 0;  // label in the finer cut
    int old_child = 0;
    Eigen::VectorXd per_column;  // share(new) - share(old)
    Eigen::VectorXd per_key;     // same, shares normalized within each key first
};

/// Profile of the one cluster that `finer` splits off from `coarser`. The
/// smaller child is "new"; on equal sizes, the child holding the smaller cell.
SplitDifference split_difference(const ClusterCut& coarser, const ClusterCut& finer,
                                 const CellAssignment& assignment, const FeatureMatrix& features,
                                 const FeatureSchema& schema, ShareMode mode = ShareMode::Membership);

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b);

/// `limit` keeps only the last merges (0 = all); merge indices stay global.
void write_dendrogram_csv(const std::filesystem::path& path, const Dendrogram& d, std::size_t limit = 0);
void write_cut_csv(const std::filesystem::path& path, const ClusterCut& cut);
ClusterCut read_cut_csv(const std::filesystem::path& path);

}  // namespace hexembed
