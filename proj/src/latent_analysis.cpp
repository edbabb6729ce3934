#include "hexembed/latent_analysis.hpp"

#include "hexembed/error.hpp"
#include "hexembed/io.hpp"
#include "hexembed/parallel.hpp"
#include "hexembed/random.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace hexembed {

PcaResult pca_project(const Eigen::MatrixXd& x, int dims) {
    if (dims < 1 || dims > x.cols()) throw UsageError("PCA dims must be in [1, " + std::to_string(x.cols()) + "]");
    if (x.rows() < dims + 1) {
        throw DataError("PCA to " + std::to_string(dims) + " dims needs at least " + std::to_string(dims + 1) +
                        " regions, got " + std::to_string(x.rows()));
    }
    if (!x.allFinite()) throw DataError("PCA input contains non-finite values");

    PcaResult r;
    r.mean = x.colwise().mean();
    const Eigen::MatrixXd centered = x.rowwise() - r.mean;
    const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(x.rows() - 1);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(cov);
    if (eig.info() != Eigen::Success) throw DataError("PCA eigendecomposition failed");

    // Eigen returns ascending eigenvalues.
    const Eigen::Index d = cov.rows();
    const Eigen::VectorXd values = eig.eigenvalues().reverse().cwiseMax(0.0);
    const double total = values.sum();
    const double cutoff = values(0) * 1e-10;
    Eigen::Index rank = 0;
    while (rank < d && values(rank) > cutoff && values(rank) > 0.0) ++rank;
    if (rank < dims) {
        throw DataError("data rank " + std::to_string(rank) + " is below the requested " + std::to_string(dims) +
                        " PCA dimensions");
    }

    r.components.resize(d, dims);
    r.explained.resize(dims);
    for (int k = 0; k < dims; ++k) {
        Eigen::VectorXd v = eig.eigenvectors().col(d - 1 - k);
        Eigen::Index arg = 0;
        for (Eigen::Index i = 1; i < d; ++i) {
            if (std::abs(v(i)) > std::abs(v(arg))) arg = i;
        }
        if (v(arg) < 0.0) v = -v;
        r.components.col(k) = v;
        r.explained(k) = values(k) / total;
    }
    r.coords = centered * r.components;
    return r;
}

std::vector<std::array<int, 3>> rgb_encode(const Eigen::MatrixXd& coords) {
    if (coords.cols() != 3) throw UsageError("RGB encoding needs a 3-dimensional projection");
    std::vector<std::array<int, 3>> out(static_cast<std::size_t>(coords.rows()));
    for (Eigen::Index axis = 0; axis < 3; ++axis) {
        const double lo = coords.col(axis).minCoeff();
        const double hi = coords.col(axis).maxCoeff();
        for (Eigen::Index i = 0; i < coords.rows(); ++i) {
            int v = 128;
            if (hi > lo) v = static_cast<int>(std::floor((coords(i, axis) - lo) / (hi - lo) * 255.0 + 0.5));
            out[static_cast<std::size_t>(i)][static_cast<std::size_t>(axis)] = std::clamp(v, 0, 255);
        }
    }
    return out;
}

double TsneResult::kl_at(int iteration) const {
    for (const auto& [it, value] : kl) {
        if (it == iteration) return value;
    }
    throw UsageError("KL divergence was not recorded at iteration " + std::to_string(iteration));
}

namespace {

struct RowEntropy {
    double perplexity;
    Eigen::VectorXd p;  // normalized conditional distribution, p(i) = 0
};

RowEntropy row_distribution(const Eigen::VectorXd& d2, std::size_t i, double beta) {
    const auto n = d2.size();
    double dmin = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < n; ++j) {
        if (static_cast<std::size_t>(j) != i) dmin = std::min(dmin, d2(j));
    }
    RowEntropy r;
    r.p = Eigen::VectorXd::Zero(n);
    double sum = 0.0, weighted = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
        if (static_cast<std::size_t>(j) == i) continue;
        const double shifted = d2(j) - dmin;
        const double v = std::exp(-beta * shifted);
        r.p(j) = v;
        sum += v;
        weighted += shifted * v;
    }
    r.p /= sum;
    r.perplexity = std::exp(std::log(sum) + beta * weighted / sum);
    return r;
}

}  // namespace

double conditional_perplexity(const Eigen::VectorXd& d2, std::size_t i, double beta) {
    return row_distribution(d2, i, beta).perplexity;
}

namespace {

constexpr std::uint64_t kJitterStream = 0x6a09e667f3bcc909ULL;

std::size_t jitter_duplicates(Eigen::MatrixXd& x, std::uint64_t seed) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(x.rows()));
    std::iota(order.begin(), order.end(), 0);
    auto row_less = [&](Eigen::Index a, Eigen::Index b) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            if (x(a, j) != x(b, j)) return x(a, j) < x(b, j);
        }
        return a < b;
    };
    std::sort(order.begin(), order.end(), row_less);
    std::vector<Eigen::Index> dups;
    for (std::size_t k = 1; k < order.size(); ++k) {
        if (x.row(order[k]) == x.row(order[k - 1])) dups.push_back(order[k]);
    }
    std::sort(dups.begin(), dups.end());
    Rng rng(seed ^ kJitterStream);
    for (Eigen::Index r : dups) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) x(r, j) += 1e-10 * rng.normal();
    }
    return dups.size();
}

}  // namespace

TsneResult tsne_project(const Eigen::MatrixXd& input, const TsneConfig& cfg) {
    const auto n = static_cast<std::size_t>(input.rows());
    if (n < 4) throw DataError("t-SNE needs at least 4 points, got " + std::to_string(n));
    if (!input.allFinite()) throw DataError("t-SNE input contains non-finite values");
    if (!(cfg.perplexity > 0.0)) throw UsageError("perplexity must be positive");
    const auto N = static_cast<Eigen::Index>(n);

    TsneResult r;
    r.perplexity = cfg.perplexity;
    if (static_cast<double>(n) <= 3.0 * cfg.perplexity) {
        r.perplexity = static_cast<double>(n - 1) / 3.0;
        r.warnings.push_back("perplexity " + io::format_double(cfg.perplexity) + " too large for " +
                             std::to_string(n) + " points, clamped to " + io::format_double(r.perplexity));
    }

    Eigen::MatrixXd x = input;
    r.jittered = jitter_duplicates(x, cfg.seed);

    Eigen::MatrixXd d2(N, N);
    parallel_for(n, [&](std::size_t i) {
        const auto I = static_cast<Eigen::Index>(i);
        for (Eigen::Index j = 0; j < N; ++j) d2(I, j) = (x.row(I) - x.row(j)).squaredNorm();
    });

    // Per-point precision by bisection on log(beta).
    Eigen::MatrixXd cond(N, N);
    r.achieved.assign(n, 0.0);
    std::vector<char> missed(n, 0);
    const double target = r.perplexity;
    parallel_for(n, [&](std::size_t i) {
        const auto I = static_cast<Eigen::Index>(i);
        const Eigen::VectorXd row = d2.row(I).transpose();
        double spread = 0.0;
        double dmin = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < N; ++j) {
            if (j != I) dmin = std::min(dmin, row(j));
        }
        for (Eigen::Index j = 0; j < N; ++j) {
            if (j != I) spread += row(j) - dmin;
        }
        spread /= static_cast<double>(n - 1);
        double log_beta = spread > 0.0 ? -std::log(spread) : 0.0;
        double lo = -std::numeric_limits<double>::infinity();
        double hi = std::numeric_limits<double>::infinity();
        double stride = 2.0;  // grows until the target is bracketed
        RowEntropy best = row_distribution(row, i, std::exp(log_beta));
        for (int step = 0; step < cfg.max_search_steps; ++step) {
            if (std::abs(best.perplexity - target) < cfg.perplexity_tolerance) break;
            if (best.perplexity > target) {
                lo = log_beta;  // too flat: sharpen
                log_beta = std::isfinite(hi) ? 0.5 * (lo + hi) : log_beta + (stride *= 2.0);
            } else {
                hi = log_beta;
                log_beta = std::isfinite(lo) ? 0.5 * (lo + hi) : log_beta - (stride *= 2.0);
            }
            best = row_distribution(row, i, std::exp(log_beta));
        }
        r.achieved[i] = best.perplexity;
        missed[i] = std::abs(best.perplexity - target) >= cfg.perplexity_tolerance;
        cond.row(I) = best.p.transpose();
    });
    const auto n_missed = std::count(missed.begin(), missed.end(), 1);
    if (n_missed > 0) {
        r.warnings.push_back(std::to_string(n_missed) + " points missed the perplexity tolerance");
    }

    Eigen::MatrixXd p = (cond + cond.transpose()) / (2.0 * static_cast<double>(n));
    cond.resize(0, 0);
    d2.resize(0, 0);

    Rng rng(cfg.seed);
    Eigen::MatrixXd y(N, 2);
    for (Eigen::Index i = 0; i < N; ++i) {
        y(i, 0) = cfg.init_sigma * rng.normal();
        y(i, 1) = cfg.init_sigma * rng.normal();
    }
    Eigen::MatrixXd update = Eigen::MatrixXd::Zero(N, 2);
    Eigen::MatrixXd gains = Eigen::MatrixXd::Ones(N, 2);
    Eigen::MatrixXd attract(N, 2), repel(N, 2);
    std::vector<double> z_part(n);

    auto kl_divergence = [&]() {
        std::vector<double> z_row(n), pq_row(n);
        parallel_for(n, [&](std::size_t i) {
            const auto I = static_cast<Eigen::Index>(i);
            double z = 0.0;
            for (Eigen::Index j = 0; j < N; ++j) {
                if (j != I) z += 1.0 / (1.0 + (y.row(I) - y.row(j)).squaredNorm());
            }
            z_row[i] = z;
        });
        const double z = std::accumulate(z_row.begin(), z_row.end(), 0.0);
        parallel_for(n, [&](std::size_t i) {
            const auto I = static_cast<Eigen::Index>(i);
            double s = 0.0;
            for (Eigen::Index j = 0; j < N; ++j) {
                if (j == I || p(I, j) <= 0.0) continue;
                const double q = 1.0 / (1.0 + (y.row(I) - y.row(j)).squaredNorm()) / z;
                s += p(I, j) * std::log(p(I, j) / q);
            }
            pq_row[i] = s;
        });
        return std::accumulate(pq_row.begin(), pq_row.end(), 0.0);
    };

    for (int it = 0; it < cfg.iterations; ++it) {
        const double exaggeration = it < cfg.exaggeration_iterations ? cfg.early_exaggeration : 1.0;
        const double momentum = it < cfg.momentum_switch ? cfg.initial_momentum : cfg.final_momentum;
        parallel_for(n, [&](std::size_t i) {
            const auto I = static_cast<Eigen::Index>(i);
            double z = 0.0, ax = 0.0, ay = 0.0, rx = 0.0, ry = 0.0;
            const double yi0 = y(I, 0), yi1 = y(I, 1);
            for (Eigen::Index j = 0; j < N; ++j) {
                if (j == I) continue;
                const double dx = yi0 - y(j, 0);
                const double dy = yi1 - y(j, 1);
                const double w = 1.0 / (1.0 + dx * dx + dy * dy);
                z += w;
                const double pw = exaggeration * p(I, j) * w;
                ax += pw * dx;
                ay += pw * dy;
                rx += w * w * dx;
                ry += w * w * dy;
            }
            z_part[i] = z;
            attract(I, 0) = ax;
            attract(I, 1) = ay;
            repel(I, 0) = rx;
            repel(I, 1) = ry;
        });
        const double z = std::accumulate(z_part.begin(), z_part.end(), 0.0);
        for (Eigen::Index i = 0; i < N; ++i) {
            for (Eigen::Index c = 0; c < 2; ++c) {
                const double g = 4.0 * (attract(i, c) - repel(i, c) / z);
                double& gain = gains(i, c);
                gain = (g > 0.0) != (update(i, c) > 0.0) ? gain + 0.2 : gain * 0.8;
                gain = std::max(gain, cfg.min_gain);
                update(i, c) = momentum * update(i, c) - cfg.learning_rate * gain * g;
                y(i, c) += update(i, c);
            }
        }
        y.rowwise() -= y.colwise().mean();
        if (!y.allFinite()) throw DataError("t-SNE diverged at iteration " + std::to_string(it + 1));
        const int done = it + 1;
        if (done % 50 == 0 || done == cfg.iterations) r.kl.emplace_back(done, kl_divergence());
    }
    r.coords = std::move(y);
    return r;
}

namespace {

double distance_to(const RegionEmbeddings& regions, const CellId& c, const Eigen::VectorXd& q) {
    auto row = regions.find(c);
    if (!row) throw DataError("region " + c.str() + " has no embedding");
    return (regions.values.row(static_cast<Eigen::Index>(*row)).transpose() - q).norm();
}

}  // namespace

ArithmeticResult embed_arithmetic(const std::vector<ArithmeticTerm>& terms, const std::vector<CellId>& constraint,
                                  const RegionEmbeddings& regions, const ArithmeticOptions& options) {
    if (terms.empty()) throw UsageError("arithmetic needs at least one term");
    ArithmeticResult r;
    r.query = Eigen::VectorXd::Zero(regions.dim());
    int plus = 0;
    std::set<CellId> operands;
    for (const auto& t : terms) {
        if (t.sign != 1 && t.sign != -1) throw UsageError("term sign must be +1 or -1");
        auto row = regions.find(t.cell);
        if (!row) throw DataError("operand " + t.cell.str() + " has no embedding");
        r.query += static_cast<double>(t.sign) * regions.values.row(static_cast<Eigen::Index>(*row)).transpose();
        plus += t.sign > 0;
        operands.insert(t.cell);
    }
    if (options.average && plus > 0) r.query /= static_cast<double>(plus);

    bool found = false;
    for (const auto& c : constraint) {
        if (!options.keep_operands && operands.count(c)) continue;
        const double d = distance_to(regions, c, r.query);
        if (!found || d < r.distance || (d == r.distance && c < r.result)) {
            r.result = c;
            r.distance = d;
            found = true;
        }
    }
    if (!found) throw DataError("no candidate regions left in the constraint set");
    return r;
}

std::vector<Neighbor> nearest_regions(const Eigen::VectorXd& query, const std::vector<CellId>& constraint,
                                      const RegionEmbeddings& regions, std::size_t k, bool* truncated) {
    if (k < 1) throw UsageError("k must be at least 1");
    if (constraint.empty()) throw DataError("empty constraint set");
    std::vector<Neighbor> all;
    all.reserve(constraint.size());
    for (const auto& c : constraint) all.push_back({c, distance_to(regions, c, query)});
    auto less = [](const Neighbor& a, const Neighbor& b) {
        return a.distance != b.distance ? a.distance < b.distance : a.cell < b.cell;
    };
    if (truncated) *truncated = k > all.size();
    k = std::min(k, all.size());
    std::partial_sort(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(k), all.end(), less);
    all.resize(k);
    return all;
}

void write_projection_csv(const std::filesystem::path& path, const std::vector<CellId>& cells,
                          const Eigen::MatrixXd& coords) {
    static const char* axis[] = {"x", "y", "z"};
    io::CsvRow header{"cell_address"};
    for (Eigen::Index j = 0; j < coords.cols() && j < 3; ++j) header.push_back(axis[j]);
    std::string out = io::csv_line(header);
    for (std::size_t i = 0; i < cells.size(); ++i) {
        out += cells[i].str();
        for (Eigen::Index j = 0; j < coords.cols(); ++j) {
            out += ',' + io::format_double(coords(static_cast<Eigen::Index>(i), j));
        }
        out += '\n';
    }
    io::write_file(path, out);
}

void write_rgb_csv(const std::filesystem::path& path, const std::vector<CellId>& cells,
                   const std::vector<std::array<int, 3>>& rgb) {
    std::string out = "cell_address,r,g,b\n";
    for (std::size_t i = 0; i < cells.size(); ++i) {
        out += cells[i].str() + ',' + std::to_string(rgb[i][0]) + ',' + std::to_string(rgb[i][1]) + ',' +
               std::to_string(rgb[i][2]) + '\n';
    }
    io::write_file(path, out);
}

}  // namespace hexembed
