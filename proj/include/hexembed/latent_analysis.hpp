// Projections of region embeddings (PCA, RGB colouring, exact t-SNE) and
// signed embedding arithmetic with constrained nearest-neighbour lookup.
#pragma once

#include "hexembed/hex_grid.hpp"
#include "hexembed/region_aggregate.hpp"

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace hexembed {

struct PcaResult {
    Eigen::MatrixXd coords;       // n x dims
    Eigen::MatrixXd components;   // d x dims, orthonormal columns
    Eigen::VectorXd explained;    // variance ratio per component, descending
    Eigen::RowVectorXd mean;
};

/// Covariance eigendecomposition. Each component is signed so that its
/// largest-magnitude loading is positive. Throws DataError when the data
/// rank is below `dims`.
PcaResult pca_project(const Eigen::MatrixXd& x, int dims);

/// Per-axis min-max scaling to 0..255 with round-half-up; a constant axis
/// maps to 128.
std::vector<std::array<int, 3>> rgb_encode(const Eigen::MatrixXd& coords);

struct TsneConfig {
    double perplexity = 100.0;
    int iterations = 1000;
    double learning_rate = 200.0;
    double early_exaggeration = 12.0;
    int exaggeration_iterations = 250;
    double initial_momentum = 0.5;
    double final_momentum = 0.8;
    int momentum_switch = 250;
    double init_sigma = 1e-4;
    double perplexity_tolerance = 1e-3;
    int max_search_steps = 50;
    double min_gain = 0.01;
    std::uint64_t seed = 42;
};

struct TsneResult {
    Eigen::MatrixXd coords;            // n x 2
    double perplexity = 0.0;           // after clamping
    std::vector<double> achieved;      // calibrated perplexity per point
    std::vector<std::pair<int, double>> kl;  // (iteration, KL) every 50 iterations and at the end
    std::size_t jittered = 0;          // duplicate rows nudged apart
    std::vector<std::string> warnings;

    /// KL after the given iteration; throws when it was not recorded.
    double kl_at(int iteration) const;
};

/// Exact O(n^2) t-SNE to two dimensions.
TsneResult tsne_project(const Eigen::MatrixXd& x, const TsneConfig& config);

/// Perplexity of the conditional distribution of point i for precision beta
/// over squared distances d2 (entry i itself is ignored).
double conditional_perplexity(const Eigen::VectorXd& d2, std::size_t i, double beta);

struct ArithmeticTerm {
    int sign = 1;  // +1 or -1
    CellId cell;
};

struct ArithmeticOptions {
    bool keep_operands = false;
    bool average = false;  // divide the signed sum by the number of + terms
};

struct ArithmeticResult {
    Eigen::VectorXd query;
    CellId result;
    double distance = 0.0;
};

/// Resolves sum(sign * e) to the nearest constraint region (Euclidean, ties
/// to the smaller address). Operand cells are excluded unless kept.
ArithmeticResult embed_arithmetic(const std::vector<ArithmeticTerm>& terms, const std::vector<CellId>& constraint,
                                  const RegionEmbeddings& regions, const ArithmeticOptions& options = {});

struct Neighbor {
    CellId cell;
    double distance = 0.0;
};

/// Exact k nearest regions of `constraint`, ascending by distance then
/// address. When k exceeds the constraint size all are returned and
/// `truncated` is set.
std::vector<Neighbor> nearest_regions(const Eigen::VectorXd& query, const std::vector<CellId>& constraint,
                                      const RegionEmbeddings& regions, std::size_t k, bool* truncated = nullptr);

void write_projection_csv(const std::filesystem::path& path, const std::vector<CellId>& cells,
                          const Eigen::MatrixXd& coords);
void write_rgb_csv(const std::filesystem::path& path, const std::vector<CellId>& cells,
                   const std::vector<std::array<int, 3>>& rgb);

}  // namespace hexembed
