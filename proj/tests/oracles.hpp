// Independent reference computations used by the unit and acceptance tests.
// Each one recomputes a result from its definition, sharing no code with the
// library routine it checks.
#pragma once

#include "hexembed/autoencoder.hpp"
#include "hexembed/clustering.hpp"
#include "hexembed/feature_schema.hpp"
#include "hexembed/hex_grid.hpp"
#include "hexembed/region_aggregate.hpp"

#include <Eigen/Core>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace oracle {

std::filesystem::path fixture_dir();
std::filesystem::path test_data_dir();

/// Ward merge sequence recomputed from cluster centroids at every step,
/// O(n^3). Ties go to the smallest (left, right) node pair.
std::vector<hexembed::Merge> naive_ward(const Eigen::MatrixXd& points);

/// Cells hit by sampling every chord of the polyline at most `step_m` meters
/// apart (geodesic length), straight in lon/lat.
std::set<hexembed::CellId> dense_sample_cells(const std::vector<hexembed::LonLat>& geometry, int resolution,
                                              double step_m = 1.0);

/// Great-circle distance in meters.
double haversine_m(const hexembed::LonLat& a, const hexembed::LonLat& b);

/// Central finite-difference gradient of the batch loss for every parameter,
/// flattened in for_each_tensor order.
std::vector<double> numeric_gradient(const hexembed::ModelParams& p, const Eigen::MatrixXd& batch, double eps,
                                     hexembed::LossKind loss = hexembed::LossKind::Mse);
std::vector<double> flatten(const hexembed::ModelParams& p);

/// Mean squared error by explicit loops.
double naive_mse(const Eigen::MatrixXd& x, const Eigen::MatrixXd& x_hat);

/// Forward pass written out entry by entry.
Eigen::MatrixXd naive_reconstruction(const hexembed::ModelParams& p, const Eigen::MatrixXd& x);

/// Per-cell mean embedding from (segment, cell) rows and a segment table,
/// summed in plain loops.
std::map<hexembed::CellId, Eigen::VectorXd> brute_region_means(
    const std::vector<std::pair<std::string, hexembed::CellId>>& incidences,
    const std::map<std::string, Eigen::VectorXd>& segments);

/// Share of each column over all (region, segment) memberships of `cells`.
Eigen::VectorXd brute_shares(const std::vector<std::pair<std::string, hexembed::CellId>>& incidences,
                             const std::map<std::string, std::vector<int>>& bits, const std::set<hexembed::CellId>& cells,
                             std::size_t width);

/// ARI from the pair-counting definition, O(n^2).
double pair_count_ari(const std::vector<int>& a, const std::vector<int>& b);

/// Two-means (Lloyd) seeded with the two mutually farthest points.
std::vector<int> two_means(const Eigen::MatrixXd& x);

}  // namespace oracle
