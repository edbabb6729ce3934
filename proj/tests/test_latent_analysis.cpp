#include "hexembed/error.hpp"
#include "hexembed/latent_analysis.hpp"
#include "hexembed/random.hpp"
#include "oracles.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace hexembed;

namespace {

Eigen::MatrixXd gaussian(Rng& rng, Eigen::Index n, Eigen::Index d) {
    Eigen::MatrixXd m(n, d);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
    return m;
}

RegionEmbeddings regions_from(const Eigen::MatrixXd& x) {
    RegionEmbeddings r;
    const CellId origin = cell_of_point(16.93, 52.41, 9);
    std::set<CellId> cells{origin};
    while (cells.size() < static_cast<std::size_t>(x.rows())) {
        std::set<CellId> grown = cells;
        for (const auto& c : cells) {
            for (auto a : h3::neighbors(c.address())) grown.insert(CellId(a));
        }
        cells = grown;
    }
    for (const auto& c : cells) {
        if (r.keys.size() == static_cast<std::size_t>(x.rows())) break;
        r.keys.push_back(c);
    }
    r.values = x;
    r.segment_counts.assign(r.keys.size(), 1);
    return r;
}

}  // namespace

TEST_SUITE("latent_analysis") {

TEST_CASE("PCA on exact subspaces") {
    Rng rng(31);
    const Eigen::MatrixXd basis = gaussian(rng, 2, 30);
    const Eigen::MatrixXd x = (gaussian(rng, 200, 2) * basis).rowwise() + gaussian(rng, 1, 30).row(0);
    const PcaResult p = pca_project(x, 2);
    CHECK(std::abs(p.explained.sum() - 1.0) < 1e-9);
    CHECK(p.explained(0) >= p.explained(1));
    const Eigen::MatrixXd gram = p.components.transpose() * p.components;
    CHECK((gram - Eigen::MatrixXd::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-8);
    // Reconstruction from the projection is exact.
    const Eigen::MatrixXd rebuilt = (p.coords * p.components.transpose()).rowwise() + p.mean;
    CHECK((rebuilt - x).cwiseAbs().maxCoeff() < 1e-9);
    // The mean point projects to the origin.
    const Eigen::RowVectorXd centre = ((x.colwise().mean() - p.mean) * p.components);
    CHECK(centre.cwiseAbs().maxCoeff() < 1e-12);
    // Largest-magnitude loading is positive.
    for (Eigen::Index c = 0; c < 2; ++c) {
        Eigen::Index arg;
        p.components.col(c).cwiseAbs().maxCoeff(&arg);
        CHECK(p.components(arg, c) > 0);
    }
    CHECK_THROWS_AS(pca_project(x, 3), DataError);
}

TEST_CASE("PCA of an isotropic sample has no dominant component") {
    Rng rng(32);
    const PcaResult p = pca_project(gaussian(rng, 10000, 30), 3);
    for (Eigen::Index i = 0; i < 3; ++i) CHECK(p.explained(i) == doctest::Approx(1.0 / 30).epsilon(0.25));
    CHECK(p.explained.maxCoeff() - p.explained.minCoeff() < 0.05);
    for (Eigen::Index i = 1; i < 3; ++i) CHECK(p.explained(i - 1) >= p.explained(i));
}

TEST_CASE("RGB scaling") {
    Eigen::MatrixXd c(3, 3);
    c << 0, 5, -1, 10, 5, 1, 5, 5, 0;
    const auto rgb = rgb_encode(c);
    CHECK(rgb[0] == std::array<int, 3>{0, 128, 0});
    CHECK(rgb[1] == std::array<int, 3>{255, 128, 255});
    // 127.5 rounds half up.
    CHECK(rgb[2] == std::array<int, 3>{128, 128, 128});
}

TEST_CASE("perplexity calibration and determinism") {
    Rng rng(33);
    const Eigen::MatrixXd x = gaussian(rng, 300, 10);
    TsneConfig cfg;
    cfg.perplexity = 30;
    cfg.iterations = 300;
    const TsneResult a = tsne_project(x, cfg);
    REQUIRE(a.achieved.size() == 300);
    for (double p : a.achieved) CHECK(std::abs(p - 30.0) < 1e-3);
    const TsneResult b = tsne_project(x, cfg);
    CHECK(a.coords == b.coords);
    CHECK(a.kl_at(300) < a.kl_at(100));
    CHECK_THROWS(a.kl_at(123));
}

TEST_CASE("perplexity is clamped for small inputs and duplicates are jittered") {
    Rng rng(34);
    Eigen::MatrixXd x = gaussian(rng, 40, 5);
    x.row(7) = x.row(3);
    TsneConfig cfg;
    cfg.iterations = 100;
    const TsneResult r = tsne_project(x, cfg);
    CHECK(r.perplexity == doctest::Approx(13.0));
    CHECK_FALSE(r.warnings.empty());
    CHECK(r.jittered == 1);
    CHECK(r.coords.allFinite());
}

TEST_CASE("conditional perplexity of equal distances is the neighbour count") {
    const Eigen::VectorXd d2 = Eigen::VectorXd::Constant(11, 4.0);
    CHECK(conditional_perplexity(d2, 0, 0.7) == doctest::Approx(10.0));
}

TEST_CASE("two separated blobs stay apart") {
    Rng rng(35);
    Eigen::MatrixXd x = gaussian(rng, 400, 10);
    std::vector<int> truth(400);
    for (Eigen::Index i = 0; i < 400; ++i) {
        truth[static_cast<std::size_t>(i)] = i < 200 ? 0 : 1;
        if (i >= 200) x(i, 0) += 50.0;
    }
    TsneConfig cfg;
    cfg.perplexity = 30;
    cfg.iterations = 500;
    const TsneResult r = tsne_project(x, cfg);
    CHECK(oracle::pair_count_ari(truth, oracle::two_means(r.coords)) >= 0.99);
}

TEST_CASE("arithmetic identities") {
    Rng rng(36);
    const RegionEmbeddings r = regions_from(gaussian(rng, 30, 6));
    const CellId a = r.keys[4], b = r.keys[11];
    std::vector<CellId> all = r.keys;
    ArithmeticOptions keep;
    keep.keep_operands = true;
    CHECK(embed_arithmetic({{1, a}}, all, r, keep).result == a);
    CHECK(embed_arithmetic({{1, a}, {-1, a}, {1, b}}, all, r, keep).result == b);
    // Without retention the operands are not candidates.
    const auto res = embed_arithmetic({{1, a}}, all, r);
    CHECK(res.result != a);
    CHECK_THROWS_AS(embed_arithmetic({{1, a}}, {a}, r), DataError);

    ArithmeticOptions avg;
    avg.average = true;
    avg.keep_operands = true;
    const auto mean = embed_arithmetic({{1, a}, {1, b}}, all, r, avg);
    CHECK((mean.query - (r.values.row(4) + r.values.row(11)).transpose() / 2).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("nearest regions equal a full scan") {
    Rng rng(37);
    const RegionEmbeddings r = regions_from(gaussian(rng, 50, 4));
    const Eigen::VectorXd q = gaussian(rng, 1, 4).row(0).transpose();
    bool truncated = false;
    const auto top = nearest_regions(q, r.keys, r, 5, &truncated);
    CHECK_FALSE(truncated);
    std::vector<std::pair<double, CellId>> scan;
    for (std::size_t i = 0; i < r.size(); ++i) scan.push_back({(r.values.row(static_cast<Eigen::Index>(i)).transpose() - q).norm(), r.keys[i]});
    std::sort(scan.begin(), scan.end());
    for (std::size_t i = 0; i < 5; ++i) {
        CHECK(top[i].cell == scan[i].second);
        CHECK(top[i].distance == doctest::Approx(scan[i].first).epsilon(1e-14));
    }
    const auto every = nearest_regions(q, r.keys, r, 80, &truncated);
    CHECK(truncated);
    CHECK(every.size() == 50);
    for (std::size_t i = 1; i < every.size(); ++i) CHECK(every[i - 1].distance <= every[i].distance);
    const Eigen::VectorXd own = r.values.row(9).transpose();
    CHECK(nearest_regions(own, r.keys, r, 1)[0].cell == r.keys[9]);
}

}
