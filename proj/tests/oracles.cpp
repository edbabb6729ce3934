#include "oracles.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <tuple>

namespace oracle {

using hexembed::CellId;
using hexembed::LonLat;

std::filesystem::path fixture_dir() { return HEXEMBED_FIXTURE_DIR; }
std::filesystem::path test_data_dir() { return HEXEMBED_TEST_DATA_DIR; }

std::vector<hexembed::Merge> naive_ward(const Eigen::MatrixXd& points) {
    const std::size_t n = static_cast<std::size_t>(points.rows());
    struct Cluster {
        std::size_t node;
        std::vector<Eigen::Index> members;
    };
    std::vector<Cluster> active;
    for (std::size_t i = 0; i < n; ++i) active.push_back({i, {static_cast<Eigen::Index>(i)}});
    auto centroid = [&](const Cluster& c) {
        Eigen::RowVectorXd m = Eigen::RowVectorXd::Zero(points.cols());
        for (auto r : c.members) m += points.row(r);
        return Eigen::RowVectorXd(m / static_cast<double>(c.members.size()));
    };
    std::vector<hexembed::Merge> out;
    while (active.size() > 1) {
        std::tuple<double, std::size_t, std::size_t> best{std::numeric_limits<double>::infinity(), 0, 0};
        std::size_t bi = 0, bj = 0;
        for (std::size_t i = 0; i < active.size(); ++i) {
            for (std::size_t j = i + 1; j < active.size(); ++j) {
                const double na = static_cast<double>(active[i].members.size());
                const double nb = static_cast<double>(active[j].members.size());
                const double d = na * nb / (na + nb) * (centroid(active[i]) - centroid(active[j])).squaredNorm();
                const std::size_t lo = std::min(active[i].node, active[j].node);
                const std::size_t hi = std::max(active[i].node, active[j].node);
                const std::tuple<double, std::size_t, std::size_t> key{d, lo, hi};
                if (key < best) {
                    best = key;
                    bi = i;
                    bj = j;
                }
            }
        }
        Cluster merged{n + out.size(), active[bi].members};
        merged.members.insert(merged.members.end(), active[bj].members.begin(), active[bj].members.end());
        out.push_back({std::get<1>(best), std::get<2>(best), std::get<0>(best), merged.members.size()});
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(bj));
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(bi));
        active.push_back(std::move(merged));
    }
    return out;
}

double haversine_m(const LonLat& a, const LonLat& b) {
    constexpr double r = 6371007.180918475;
    constexpr double rad = std::numbers::pi / 180.0;
    const double dlat = (b.lat - a.lat) * rad;
    const double dlon = (b.lon - a.lon) * rad;
    const double h = std::sin(dlat / 2) * std::sin(dlat / 2) +
                     std::cos(a.lat * rad) * std::cos(b.lat * rad) * std::sin(dlon / 2) * std::sin(dlon / 2);
    return 2.0 * r * std::asin(std::min(1.0, std::sqrt(h)));
}

std::set<CellId> dense_sample_cells(const std::vector<LonLat>& geometry, int resolution, double step_m) {
    std::set<CellId> out;
    for (const auto& p : geometry) out.insert(hexembed::cell_of_point(p.lon, p.lat, resolution));
    for (std::size_t i = 1; i < geometry.size(); ++i) {
        const LonLat a = geometry[i - 1];
        const LonLat b = geometry[i];
        const auto steps = static_cast<long>(std::ceil(haversine_m(a, b) / step_m));
        for (long s = 1; s < steps; ++s) {
            const double t = static_cast<double>(s) / static_cast<double>(steps);
            out.insert(hexembed::cell_of_point(a.lon + t * (b.lon - a.lon), a.lat + t * (b.lat - a.lat), resolution));
        }
    }
    return out;
}

namespace {

std::vector<double*> entries(hexembed::ModelParams& p) {
    std::vector<double*> out;
    auto add = [&](auto& t, auto&) {
        for (Eigen::Index i = 0; i < t.size(); ++i) out.push_back(t.data() + i);
    };
    for_each_tensor(p, p, add);
    return out;
}

double batch_loss(const hexembed::ModelParams& p, const Eigen::MatrixXd& batch, hexembed::LossKind loss) {
    const auto f = hexembed::forward(p, batch, loss);
    if (loss == hexembed::LossKind::Mse) return naive_mse(batch, f.x_hat);
    double s = 0.0;
    for (Eigen::Index r = 0; r < batch.rows(); ++r) {
        for (Eigen::Index c = 0; c < batch.cols(); ++c) {
            const double q = f.x_hat(r, c);
            s -= batch(r, c) * std::log(q) + (1.0 - batch(r, c)) * std::log(1.0 - q);
        }
    }
    return s / static_cast<double>(batch.size());
}

}  // namespace

std::vector<double> flatten(const hexembed::ModelParams& p) {
    hexembed::ModelParams copy = p;
    std::vector<double> out;
    for (double* e : entries(copy)) out.push_back(*e);
    return out;
}

std::vector<double> numeric_gradient(const hexembed::ModelParams& p, const Eigen::MatrixXd& batch, double eps,
                                     hexembed::LossKind loss) {
    hexembed::ModelParams work = p;
    std::vector<double> out;
    for (double* e : entries(work)) {
        const double keep = *e;
        *e = keep + eps;
        const double up = batch_loss(work, batch, loss);
        *e = keep - eps;
        const double down = batch_loss(work, batch, loss);
        *e = keep;
        out.push_back((up - down) / (2.0 * eps));
    }
    return out;
}

double naive_mse(const Eigen::MatrixXd& x, const Eigen::MatrixXd& x_hat) {
    double s = 0.0;
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
        for (Eigen::Index c = 0; c < x.cols(); ++c) {
            const double d = x(r, c) - x_hat(r, c);
            s += d * d;
        }
    }
    return s / static_cast<double>(x.rows() * x.cols());
}

Eigen::MatrixXd naive_reconstruction(const hexembed::ModelParams& p, const Eigen::MatrixXd& x) {
    auto layer = [](const Eigen::MatrixXd& in, const Eigen::MatrixXd& w, const Eigen::RowVectorXd& b, bool relu) {
        Eigen::MatrixXd out(in.rows(), w.cols());
        for (Eigen::Index r = 0; r < in.rows(); ++r) {
            for (Eigen::Index j = 0; j < w.cols(); ++j) {
                double s = b(j);
                for (Eigen::Index i = 0; i < w.rows(); ++i) s += in(r, i) * w(i, j);
                out(r, j) = relu ? std::max(0.0, s) : s;
            }
        }
        return out;
    };
    const Eigen::MatrixXd h = layer(layer(x, p.enc_w1, p.enc_b1, true), p.enc_w2, p.enc_b2, false);
    return layer(layer(h, p.dec_w1, p.dec_b1, true), p.dec_w2, p.dec_b2, false);
}

std::map<CellId, Eigen::VectorXd> brute_region_means(const std::vector<std::pair<std::string, CellId>>& incidences,
                                                     const std::map<std::string, Eigen::VectorXd>& segments) {
    std::map<CellId, std::vector<std::string>> members;
    for (const auto& [seg, cell] : incidences) members[cell].push_back(seg);
    std::map<CellId, Eigen::VectorXd> out;
    for (auto& [cell, segs] : members) {
        std::sort(segs.begin(), segs.end());
        Eigen::VectorXd sum = Eigen::VectorXd::Zero(segments.at(segs.front()).size());
        for (const auto& s : segs) {
            const Eigen::VectorXd& e = segments.at(s);
            for (Eigen::Index j = 0; j < e.size(); ++j) sum(j) += e(j);
        }
        out[cell] = sum / static_cast<double>(segs.size());
    }
    return out;
}

Eigen::VectorXd brute_shares(const std::vector<std::pair<std::string, CellId>>& incidences,
                             const std::map<std::string, std::vector<int>>& bits, const std::set<CellId>& cells,
                             std::size_t width) {
    Eigen::VectorXd count = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(width));
    double total = 0.0;
    for (const auto& [seg, cell] : incidences) {
        if (!cells.count(cell)) continue;
        total += 1.0;
        const auto& b = bits.at(seg);
        for (std::size_t j = 0; j < width; ++j) count(static_cast<Eigen::Index>(j)) += b[j];
    }
    return count / total;
}

double pair_count_ari(const std::vector<int>& a, const std::vector<int>& b) {
    // Counts over unordered pairs: both same, same in a, same in b.
    double both = 0, in_a = 0, in_b = 0, pairs = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        for (std::size_t j = i + 1; j < a.size(); ++j) {
            const bool sa = a[i] == a[j];
            const bool sb = b[i] == b[j];
            both += sa && sb;
            in_a += sa;
            in_b += sb;
            pairs += 1;
        }
    }
    const double expected = in_a * in_b / pairs;
    const double max_index = 0.5 * (in_a + in_b);
    if (max_index == expected) return 1.0;
    return (both - expected) / (max_index - expected);
}

std::vector<int> two_means(const Eigen::MatrixXd& x) {
    Eigen::Index s0 = 0, s1 = 0;
    double far = -1.0;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < x.rows(); ++j) {
            const double d = (x.row(i) - x.row(j)).squaredNorm();
            if (d > far) {
                far = d;
                s0 = i;
                s1 = j;
            }
        }
    }
    Eigen::RowVectorXd c0 = x.row(s0), c1 = x.row(s1);
    std::vector<int> label(static_cast<std::size_t>(x.rows()), -1);
    for (int iter = 0; iter < 100; ++iter) {
        bool changed = false;
        Eigen::RowVectorXd m0 = Eigen::RowVectorXd::Zero(x.cols()), m1 = m0;
        double n0 = 0, n1 = 0;
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            const int l = (x.row(i) - c0).squaredNorm() <= (x.row(i) - c1).squaredNorm() ? 0 : 1;
            changed |= label[static_cast<std::size_t>(i)] != l;
            label[static_cast<std::size_t>(i)] = l;
            if (l == 0) {
                m0 += x.row(i);
                n0 += 1;
            } else {
                m1 += x.row(i);
                n1 += 1;
            }
        }
        if (!changed) break;
        if (n0 > 0) c0 = m0 / n0;
        if (n1 > 0) c1 = m1 / n1;
    }
    return label;
}

}  // namespace oracle
