#include "hexembed/clustering.hpp"

#include "hexembed/error.hpp"
#include "hexembed/io.hpp"
#include "hexembed/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <tuple>

namespace hexembed {

namespace {

// Upper-triangle storage of the pairwise criterion between slots.
class Condensed {
  public:
    explicit Condensed(std::size_t n) : n_(n), d_(n * (n - 1) / 2) {}
    double& at(std::size_t a, std::size_t b) {
        if (a > b) std::swap(a, b);
        return d_[a * n_ - a * (a + 1) / 2 + (b - a - 1)];
    }

  private:
    std::size_t n_;
    std::vector<double> d_;
};

struct Key {
    double d = std::numeric_limits<double>::infinity();
    std::size_t lo = std::numeric_limits<std::size_t>::max();
    std::size_t hi = std::numeric_limits<std::size_t>::max();

    bool operator<(const Key& o) const { return std::tie(d, lo, hi) < std::tie(o.d, o.lo, o.hi); }
};

}  // namespace

std::vector<Merge> ward_linkage(const Eigen::MatrixXd& points) {
    const auto n = static_cast<std::size_t>(points.rows());
    if (n < 2) throw DataError("clustering needs at least 2 regions, got " + std::to_string(n));
    if (!points.allFinite()) throw DataError("clustering input contains non-finite values");

    Condensed dist(n);
    parallel_for(n, [&](std::size_t a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            dist.at(a, b) = 0.5 * (points.row(static_cast<Eigen::Index>(a)) -
                                   points.row(static_cast<Eigen::Index>(b)))
                                      .squaredNorm();
        }
    });

    std::vector<std::size_t> node(n), size(n, 1);
    std::iota(node.begin(), node.end(), 0);
    std::vector<char> active(n, 1);
    std::vector<std::size_t> nn(n, 0);
    std::vector<Key> nn_key(n);

    auto key_of = [&](std::size_t a, std::size_t b) {
        return Key{dist.at(a, b), std::min(node[a], node[b]), std::max(node[a], node[b])};
    };
    auto refresh = [&](std::size_t a) {
        nn_key[a] = Key{};
        for (std::size_t b = 0; b < n; ++b) {
            if (b == a || !active[b]) continue;
            const Key k = key_of(a, b);
            if (k < nn_key[a]) {
                nn_key[a] = k;
                nn[a] = b;
            }
        }
    };
    parallel_for(n, refresh);

    std::vector<Merge> merges;
    merges.reserve(n - 1);
    for (std::size_t t = 0; t + 1 < n; ++t) {
        std::size_t i = n;
        for (std::size_t a = 0; a < n; ++a) {
            if (active[a] && (i == n || nn_key[a] < nn_key[i])) i = a;
        }
        std::size_t j = nn[i];
        if (j < i) std::swap(i, j);
        const double dij = dist.at(i, j);
        merges.push_back({std::min(node[i], node[j]), std::max(node[i], node[j]), dij, size[i] + size[j]});

        // Lance-Williams update for Ward, written for the criterion itself.
        const double si = static_cast<double>(size[i]);
        const double sj = static_cast<double>(size[j]);
        for (std::size_t k = 0; k < n; ++k) {
            if (!active[k] || k == i || k == j) continue;
            const double sk = static_cast<double>(size[k]);
            const double v = ((si + sk) * dist.at(k, i) + (sj + sk) * dist.at(k, j) - sk * dij) / (si + sj + sk);
            dist.at(k, i) = std::max(0.0, v);
        }
        active[j] = 0;
        node[i] = n + t;
        size[i] += size[j];

        refresh(i);
        for (std::size_t k = 0; k < n; ++k) {
            if (!active[k] || k == i) continue;
            if (nn[k] == i || nn[k] == j) {
                refresh(k);
            } else if (const Key c = key_of(k, i); c < nn_key[k]) {
                nn_key[k] = c;
                nn[k] = i;
            }
        }
    }
    return merges;
}

Dendrogram agglomerative_ward(const RegionEmbeddings& regions) {
    std::vector<std::size_t> order(regions.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return regions.keys[a] < regions.keys[b]; });
    Eigen::MatrixXd pts(static_cast<Eigen::Index>(order.size()), regions.dim());
    Dendrogram d;
    for (std::size_t i = 0; i < order.size(); ++i) {
        pts.row(static_cast<Eigen::Index>(i)) = regions.values.row(static_cast<Eigen::Index>(order[i]));
        d.leaves.push_back(regions.keys[order[i]]);
    }
    d.merges = ward_linkage(pts);
    return d;
}

int ClusterCut::label_of(const CellId& c) const {
    auto it = std::lower_bound(cells.begin(), cells.end(), c);
    if (it == cells.end() || *it != c) {
        // cells are normally sorted; fall back to a scan otherwise
        auto f = std::find(cells.begin(), cells.end(), c);
        if (f == cells.end()) throw DataError("cell " + c.str() + " is not in the cut");
        return labels[static_cast<std::size_t>(f - cells.begin())];
    }
    return labels[static_cast<std::size_t>(it - cells.begin())];
}

std::vector<CellId> ClusterCut::members(int cluster) const {
    std::vector<CellId> out;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (labels[i] == cluster) out.push_back(cells[i]);
    }
    return out;
}

ClusterCut cut_tree(const Dendrogram& d, int k) {
    const std::size_t n = d.leaf_count();
    if (k < 1 || static_cast<std::size_t>(k) > n) {
        throw UsageError("k must be in [1, " + std::to_string(n) + "], got " + std::to_string(k));
    }
    std::vector<std::size_t> parent(2 * n - 1);
    std::iota(parent.begin(), parent.end(), 0);
    for (std::size_t t = 0; t < n - static_cast<std::size_t>(k); ++t) {
        parent[d.merges[t].left] = n + t;
        parent[d.merges[t].right] = n + t;
    }
    std::vector<std::size_t> root(n);
    for (std::size_t leaf = 0; leaf < n; ++leaf) {
        std::size_t r = leaf;
        while (parent[r] != r) r = parent[r];
        root[leaf] = r;
    }

    struct Group {
        std::size_t size = 0;
        CellId first;
        std::vector<std::size_t> leaves;
    };
    std::map<std::size_t, Group> groups;
    for (std::size_t leaf = 0; leaf < n; ++leaf) {
        Group& g = groups[root[leaf]];
        if (g.leaves.empty() || d.leaves[leaf] < g.first) g.first = d.leaves[leaf];
        g.leaves.push_back(leaf);
        ++g.size;
    }
    std::vector<const Group*> ordered;
    for (const auto& [r, g] : groups) ordered.push_back(&g);
    std::sort(ordered.begin(), ordered.end(), [](const Group* a, const Group* b) {
        if (a->size != b->size) return a->size > b->size;
        return a->first < b->first;
    });

    ClusterCut cut;
    cut.k = k;
    std::vector<int> by_leaf(n);
    for (std::size_t c = 0; c < ordered.size(); ++c) {
        for (std::size_t leaf : ordered[c]->leaves) by_leaf[leaf] = static_cast<int>(c);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return d.leaves[a] < d.leaves[b]; });
    for (std::size_t leaf : order) {
        cut.cells.push_back(d.leaves[leaf]);
        cut.labels.push_back(by_leaf[leaf]);
    }
    return cut;
}

namespace {

Eigen::VectorXd key_normalized(const Eigen::VectorXd& share, const FeatureSchema& schema) {
    Eigen::VectorXd out = Eigen::VectorXd::Zero(share.size());
    for (std::size_t k = 0; k < schema.keys().size(); ++k) {
        const auto off = static_cast<Eigen::Index>(schema.offset(k));
        const auto len = static_cast<Eigen::Index>(schema.keys()[k].bins.size());
        const double total = share.segment(off, len).sum();
        if (total > 0.0) out.segment(off, len) = share.segment(off, len) / total;
    }
    return out;
}

}  // namespace

SplitDifference split_difference(const ClusterCut& coarser, const ClusterCut& finer,
                                 const CellAssignment& assignment, const FeatureMatrix& features,
                                 const FeatureSchema& schema, ShareMode mode) {
    if (finer.k != coarser.k + 1 || finer.cells != coarser.cells) {
        throw DataError("split_difference needs cuts with k and k+1 clusters over the same regions");
    }
    std::map<int, int> parent_of;
    std::map<int, std::vector<int>> children;
    for (std::size_t i = 0; i < finer.cells.size(); ++i) {
        auto [it, inserted] = parent_of.emplace(finer.labels[i], coarser.labels[i]);
        if (!inserted && it->second != coarser.labels[i]) {
            throw DataError("finer cut is not a refinement of the coarser cut");
        }
    }
    for (const auto& [child, parent] : parent_of) children[parent].push_back(child);
    const std::vector<int>* split = nullptr;
    int parent = -1;
    for (const auto& [p, kids] : children) {
        if (kids.size() > 2) throw DataError("a cluster splits into more than two parts");
        if (kids.size() == 2) {
            if (split) throw DataError("more than one cluster splits");
            split = &kids;
            parent = p;
        }
    }
    if (!split) throw DataError("no cluster splits between the cuts");

    auto a = finer.members((*split)[0]);
    auto b = finer.members((*split)[1]);
    const bool a_new = a.size() != b.size() ? a.size() < b.size()
                                            : *std::min_element(a.begin(), a.end()) < *std::min_element(b.begin(), b.end());
    SplitDifference out;
    out.parent = parent;
    out.new_child = a_new ? (*split)[0] : (*split)[1];
    out.old_child = a_new ? (*split)[1] : (*split)[0];
    const Eigen::VectorXd s_new = region_feature_share(assignment, features, a_new ? a : b, mode);
    const Eigen::VectorXd s_old = region_feature_share(assignment, features, a_new ? b : a, mode);
    out.per_column = s_new - s_old;
    out.per_key = key_normalized(s_new, schema) - key_normalized(s_old, schema);
    return out;
}

double adjusted_rand_index(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) throw DataError("label vectors differ in length");
    const auto n = static_cast<double>(a.size());
    std::map<std::pair<int, int>, double> joint;
    std::map<int, double> ca, cb;
    for (std::size_t i = 0; i < a.size(); ++i) {
        joint[{a[i], b[i]}] += 1;
        ca[a[i]] += 1;
        cb[b[i]] += 1;
    }
    auto pairs = [](double x) { return x * (x - 1) / 2; };
    double sum_joint = 0, sum_a = 0, sum_b = 0;
    for (const auto& [k, v] : joint) sum_joint += pairs(v);
    for (const auto& [k, v] : ca) sum_a += pairs(v);
    for (const auto& [k, v] : cb) sum_b += pairs(v);
    const double expected = sum_a * sum_b / pairs(n);
    const double max_index = 0.5 * (sum_a + sum_b);
    if (max_index == expected) return 1.0;  // both labelings trivial and identical in structure
    return (sum_joint - expected) / (max_index - expected);
}

void write_dendrogram_csv(const std::filesystem::path& path, const Dendrogram& d, std::size_t limit) {
    std::string out = "merge_index,left,right,distance,size\n";
    const std::size_t first = limit == 0 || limit >= d.merges.size() ? 0 : d.merges.size() - limit;
    for (std::size_t t = first; t < d.merges.size(); ++t) {
        const Merge& m = d.merges[t];
        out += std::to_string(t) + ',' + std::to_string(m.left) + ',' + std::to_string(m.right) + ',' +
               io::format_double(m.distance) + ',' + std::to_string(m.size) + '\n';
    }
    io::write_file(path, out);
}

void write_cut_csv(const std::filesystem::path& path, const ClusterCut& cut) {
    std::string out = "cell_address,cluster_id\n";
    for (std::size_t i = 0; i < cut.cells.size(); ++i) {
        out += cut.cells[i].str() + ',' + std::to_string(cut.labels[i]) + '\n';
    }
    io::write_file(path, out);
}

ClusterCut read_cut_csv(const std::filesystem::path& path) {
    const io::CsvTable t = io::read_csv(path);
    const std::size_t cc = t.column("cell_address");
    const std::size_t lc = t.column("cluster_id");
    ClusterCut cut;
    int max_label = -1;
    for (const auto& row : t.rows) {
        cut.cells.push_back(CellId::parse(row[cc]));
        cut.labels.push_back(static_cast<int>(io::parse_int(row[lc])));
        max_label = std::max(max_label, cut.labels.back());
    }
    cut.k = max_label + 1;
    return cut;
}

}  // namespace hexembed
