// Acceptance run: one PASS/FAIL line per criterion with the measured value,
// the pinned threshold and the runtime. Exit status is non-zero on any FAIL.
#include "hexembed/error.hpp"
#include "hexembed/gridville.hpp"
#include "hexembed/io.hpp"
#include "hexembed/pipeline.hpp"
#include "hexembed/random.hpp"
#include "oracles.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <string>

using namespace hexembed;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

std::string fmt6(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

struct Context {
    fs::path root;
    PipelineConfig run_a;
    PipelineConfig run_b;
    double run_a_seconds = 0.0;
    std::string run_a_error;
};

PipelineConfig gridville_config(const fs::path& ws) {
    PipelineConfig cfg;
    cfg.workspace = ws;
    cfg.seed = 42;
    cfg.k = 3;
    for (const char* city : {"gridville_north", "gridville_south", "gridville_east"}) {
        cfg.inputs.push_back({oracle::fixture_dir() / (std::string(city) + ".geojson"), city});
    }
    return cfg;
}

// 1. Configuration parity.
Verdict config_parity(Context&) {
    const PipelineConfig cfg;
    const auto j = cfg.to_json();
    std::vector<std::string> bad;
    auto expect = [&](bool ok, const std::string& what) {
        if (!ok) bad.push_back(what);
    };
    expect(cfg.load_schema().width() == 88 && j["model"]["input"] == 88, "input 88");
    expect(cfg.train.dims.hidden == 64 && j["model"]["hidden"] == 64, "hidden 64");
    expect(cfg.train.dims.latent == 30 && j["model"]["latent"] == 30, "latent 30");
    expect(cfg.train.learning_rate == 0.001 && j["train"]["learning_rate"] == 0.001, "lr 0.001");
    expect(cfg.train.batch_size == 200 && j["train"]["batch_size"] == 200, "batch 200");
    expect(cfg.train.epochs == 50 && j["train"]["epochs"] == 50, "epochs 50");
    expect(cfg.train.test_ratio == 0.2 && j["train"]["test_ratio"] == 0.2, "test ratio 0.2");
    expect(cfg.tsne.perplexity == 100.0 && j["perplexity"] == 100.0, "perplexity 100");
    expect(cfg.resolution == 9 && j["resolution"] == 9, "resolution 9");
    expect(cfg.k == 8 && j["k"] == 8, "k 8");
    const auto golden = nlohmann::json::parse(io::read_file(oracle::test_data_dir() / "config_default.json"));
    expect(nlohmann::json(j) == golden, "golden dump");
    std::string detail = "10 paper values + golden dump";
    for (const auto& b : bad) detail += "; mismatch: " + b;
    return {bad.empty(), detail};
}

// 2. Gradient oracle.
Verdict gradient_oracle(Context&) {
    Rng rng(2002);
    double worst = 0.0;
    std::size_t entries = 0;
    for (int t = 0; t < 20; ++t) {
        const ModelDims d{1 + static_cast<int>(rng.below(8)), 1 + static_cast<int>(rng.below(8)),
                          1 + static_cast<int>(rng.below(8))};
        ModelParams p = init_params(rng.next_u64(), d);
        auto jitter = [&](auto& x, auto&) {
            for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] += rng.uniform(-0.1, 0.1);
        };
        for_each_tensor(p, p, jitter);
        Eigen::MatrixXd batch(2 + static_cast<Eigen::Index>(rng.below(9)), d.input);
        for (Eigen::Index i = 0; i < batch.size(); ++i) batch.data()[i] = rng.uniform();
        const auto analytic = oracle::flatten(backward(p, batch).grad);
        const auto numeric = oracle::numeric_gradient(p, batch, 1e-5);
        for (std::size_t i = 0; i < analytic.size(); ++i) {
            const double scale = std::max({std::abs(analytic[i]), std::abs(numeric[i]), 1e-8});
            worst = std::max(worst, std::abs(analytic[i] - numeric[i]) / scale);
        }
        entries += analytic.size();
    }
    return {worst < 1e-4, "20 nets, " + std::to_string(entries) + " entries, max rel err " + fmt(worst) + " (< 1e-4)"};
}

// 3. Ward oracle.
Verdict ward_oracle(Context&) {
    Rng rng(3003);
    double worst = 0.0;
    std::size_t pair_mismatches = 0, merges = 0;
    for (int t = 0; t < 25; ++t) {
        const auto n = static_cast<Eigen::Index>(2 + rng.below(49));
        const auto d = static_cast<Eigen::Index>(1 + rng.below(10));
        Eigen::MatrixXd x(n, d);
        for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = rng.normal();
        const auto fast = ward_linkage(x);
        const auto slow = oracle::naive_ward(x);
        for (std::size_t i = 0; i < fast.size(); ++i) {
            if (fast[i].left != slow[i].left || fast[i].right != slow[i].right) ++pair_mismatches;
            worst = std::max(worst, std::abs(fast[i].distance - slow[i].distance));
        }
        merges += fast.size();
    }
    return {pair_mismatches == 0 && worst <= 1e-9, "25 datasets, " + std::to_string(merges) + " merges, " +
                                                       std::to_string(pair_mismatches) + " pair mismatches, max |dd| " +
                                                       fmt(worst) + " (<= 1e-9)"};
}

// 4. Aggregation oracle on the gridville run.
Verdict aggregation_oracle(Context& ctx) {
    if (!ctx.run_a_error.empty()) return {false, "pipeline failed: " + ctx.run_a_error};
    const fs::path ws = ctx.run_a.workspace;
    const CellAssignment a = read_assignment_csv(ws / "assignment.csv");
    const SegmentEmbeddings seg = read_segment_embeddings_csv(ws / "segment_embeddings.csv");
    std::map<std::string, Eigen::VectorXd> by_id;
    for (std::size_t i = 0; i < seg.size(); ++i) by_id[seg.keys[i]] = seg.values.row(static_cast<Eigen::Index>(i)).transpose();
    const auto expected = oracle::brute_region_means(a.incidences(), by_id);
    const RegionEmbeddings got = read_region_embeddings_csv(ws / "region_embeddings.csv");
    double worst = 0.0;
    bool same_cells = got.size() == expected.size();
    for (std::size_t i = 0; i < got.size() && same_cells; ++i) {
        auto it = expected.find(got.keys[i]);
        if (it == expected.end()) {
            same_cells = false;
            break;
        }
        worst = std::max(worst, (got.values.row(static_cast<Eigen::Index>(i)).transpose() - it->second).cwiseAbs().maxCoeff());
    }
    return {same_cells && worst <= 1e-12,
            std::to_string(got.size()) + " regions, max |diff| " + fmt(worst) + " (<= 1e-12)"};
}

// 5. Cell assignment oracles.
Verdict cell_oracle(Context&) {
    Rng rng(5005);
    std::size_t seg_mismatch = 0, cells = 0;
    for (int t = 0; t < 200; ++t) {
        std::vector<LonLat> g{{rng.uniform(-180, 180), rng.uniform(-60, 60)}};
        const int legs = 1 + static_cast<int>(rng.below(4));
        for (int l = 0; l < legs; ++l) {
            const double len = rng.uniform(10, 1000), heading = rng.uniform(0, 2 * 3.141592653589793);
            const LonLat& p = g.back();
            g.push_back({p.lon + len * std::sin(heading) / (111195.0 * std::cos(p.lat * 3.141592653589793 / 180.0)),
                         p.lat + len * std::cos(heading) / 111195.0});
        }
        const auto got = cells_of_segment(g, 9);
        const std::set<CellId> s(got.begin(), got.end());
        if (s != oracle::dense_sample_cells(g, 9) || s.size() != got.size()) ++seg_mismatch;
        cells += got.size();
    }
    const auto ref = nlohmann::json::parse(io::read_file(oracle::test_data_dir() / "h3_reference.json"));
    std::size_t pt_mismatch = 0, points = 0;
    for (const auto& p : ref["points"]) {
        if (points == 1000) break;
        ++points;
        if (cell_of_point(p[1].get<double>(), p[0].get<double>(), p[2].get<int>()).str() != p[3].get<std::string>()) {
            ++pt_mismatch;
        }
    }
    return {seg_mismatch == 0 && pt_mismatch == 0 && points == 1000,
            "200 segments (" + std::to_string(cells) + " cells), " + std::to_string(seg_mismatch) +
                " set mismatches vs 1 m sampling; " + std::to_string(points) + " points, " +
                std::to_string(pt_mismatch) + " mismatches vs reference index"};
}

// 6. End-to-end recovery.
Verdict recovery(Context& ctx) {
    if (!ctx.run_a_error.empty()) return {false, "pipeline failed: " + ctx.run_a_error};
    const fs::path ws = ctx.run_a.workspace;
    const auto planted = read_planted_csv(oracle::fixture_dir() / "planted.csv");
    const ClusterCut cut = read_cut_csv(ws / "cut.csv");
    std::vector<int> truth, labels;
    bool complete = true;
    for (std::size_t i = 0; i < cut.cells.size(); ++i) {
        auto it = planted.find(cut.cells[i]);
        if (it == planted.end()) {
            complete = false;
            continue;
        }
        truth.push_back(static_cast<int>(it->second.archetype));
        labels.push_back(cut.labels[i]);
    }
    const double ari = adjusted_rand_index(truth, labels);
    const io::CsvTable loss = io::read_csv(ws / "loss.csv");
    const double mse = io::parse_double(loss.rows.back()[loss.column("train_mse")]);
    const int epochs = static_cast<int>(loss.rows.size());
    const bool pass = complete && cut.k == 3 && ari >= 0.9 && mse < 0.01 && epochs == 50 && ctx.run_a_seconds < 120;
    return {pass, std::to_string(cut.cells.size()) + " regions, ARI " + fmt(ari) + " (>= 0.9), train MSE " + fmt(mse) +
                      " after " + std::to_string(epochs) + " epochs (< 0.01), pipeline " + fmt(ctx.run_a_seconds) +
                      " s (< 120)"};
}

// 7. t-SNE calibration and separation at n = 2000.
Verdict tsne_check(Context&) {
    Rng rng(7007);
    Eigen::MatrixXd x(2000, 10);
    std::vector<int> truth(2000);
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = rng.normal();
        truth[static_cast<std::size_t>(i)] = i < 1000 ? 0 : 1;
        if (i >= 1000) x(i, 0) += 30.0;
    }
    TsneConfig cfg;
    const TsneResult r = tsne_project(x, cfg);
    double worst = 0.0;
    for (double p : r.achieved) worst = std::max(worst, std::abs(p - r.perplexity));
    const double ari = oracle::pair_count_ari(truth, oracle::two_means(r.coords));
    const double kl300 = r.kl_at(300), kl1000 = r.kl_at(1000);
    return {r.perplexity == 100.0 && worst <= 1e-3 && ari >= 0.99 && kl1000 < kl300,
            "n 2000, perplexity " + fmt(r.perplexity) + ", max |perp - target| " + fmt6(worst) + " (<= 1e-3), ARI " +
                fmt(ari) + " (>= 0.99), KL300 " + fmt(kl300) + " > KL1000 " + fmt(kl1000)};
}

// 8. PCA properties.
Verdict pca_check(Context& ctx) {
    Rng rng(8008);
    Eigen::MatrixXd basis(3, 30), coef(500, 3), offset(1, 30);
    for (Eigen::Index i = 0; i < basis.size(); ++i) basis.data()[i] = rng.normal();
    for (Eigen::Index i = 0; i < coef.size(); ++i) coef.data()[i] = rng.normal() * (1 + i % 3);
    for (Eigen::Index i = 0; i < offset.size(); ++i) offset.data()[i] = rng.normal();
    const Eigen::MatrixXd x = (coef * basis).rowwise() + offset.row(0);
    const PcaResult p = pca_project(x, 3);
    const double rebuild = ((p.coords * p.components.transpose()).rowwise() + p.mean - x).cwiseAbs().maxCoeff();
    double ortho = (p.components.transpose() * p.components - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff();
    bool descending = p.explained(0) >= p.explained(1) && p.explained(1) >= p.explained(2);
    if (ctx.run_a_error.empty()) {
        const RegionEmbeddings r = read_region_embeddings_csv(ctx.run_a.workspace / "region_embeddings.csv");
        const PcaResult q = pca_project(r.values, 3);
        ortho = std::max(ortho, (q.components.transpose() * q.components - Eigen::MatrixXd::Identity(3, 3)).cwiseAbs().maxCoeff());
        descending = descending && q.explained(0) >= q.explained(1) && q.explained(1) >= q.explained(2);
    }
    return {ortho <= 1e-8 && descending && rebuild < 1e-9,
            "orthonormality err " + fmt(ortho) + " (<= 1e-8), ratios descending " + (descending ? "yes" : "no") +
                ", rank-3 reconstruction err " + fmt(rebuild) + " (< 1e-9)"};
}

// Share of a single region's columns within the summands' interval.
double merger_fraction(const CellAssignment& a, const FeatureMatrix& f, const CellId& s1, const CellId& s2,
                       const CellId& res) {
    const Eigen::VectorXd p = region_feature_share(a, f, {s1});
    const Eigen::VectorXd q = region_feature_share(a, f, {s2});
    const Eigen::VectorXd r = region_feature_share(a, f, {res});
    int active = 0, inside = 0;
    for (Eigen::Index j = 0; j < p.size(); ++j) {
        if (p(j) == 0 && q(j) == 0 && r(j) == 0) continue;
        ++active;
        if (r(j) >= std::min(p(j), q(j)) - 1e-12 && r(j) <= std::max(p(j), q(j)) + 1e-12) ++inside;
    }
    return active == 0 ? 0.0 : static_cast<double>(inside) / active;
}

// Region closest to the mean embedding of a planted group.
CellId medoid(const RegionEmbeddings& r, const std::vector<CellId>& group) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(r.dim());
    for (const auto& c : group) mean += r.values.row(static_cast<Eigen::Index>(*r.find(c))).transpose();
    mean /= static_cast<double>(group.size());
    return nearest_regions(mean, group, r, 1)[0].cell;
}

// 9. Arithmetic semantics.
Verdict arithmetic_check(Context& ctx) {
    Rng rng(9009);
    int failures = 0;
    for (int t = 0; t < 100; ++t) {
        const auto n = static_cast<std::size_t>(5 + rng.below(56));
        const auto d = static_cast<Eigen::Index>(2 + rng.below(29));
        RegionEmbeddings r;
        const CellId origin = cell_of_point(rng.uniform(-170, 170), rng.uniform(-60, 60), 9);
        std::vector<h3::H3Index> ring{origin.address()};
        std::set<h3::H3Index> seen{origin.address()};
        for (std::size_t i = 0; i < ring.size() && seen.size() < n; ++i) {
            for (auto nb : h3::neighbors(ring[i])) {
                if (seen.insert(nb).second) ring.push_back(nb);
            }
        }
        std::set<CellId> cells;
        for (auto c : seen) cells.insert(CellId(c));
        for (const auto& c : cells) {
            if (r.keys.size() < n) r.keys.push_back(c);
        }
        r.values.resize(static_cast<Eigen::Index>(n), d);
        for (Eigen::Index i = 0; i < r.values.size(); ++i) r.values.data()[i] = rng.normal();
        r.segment_counts.assign(n, 1);
        const CellId a = r.keys[rng.below(n)], b = r.keys[rng.below(n)];
        ArithmeticOptions keep;
        keep.keep_operands = true;
        if (embed_arithmetic({{1, a}}, r.keys, r, keep).result != a) ++failures;
        if (embed_arithmetic({{1, a}, {-1, a}, {1, b}}, r.keys, r, keep).result != b) ++failures;

        std::vector<ArithmeticTerm> terms;
        for (int k = 0; k < 3; ++k) terms.push_back({rng.uniform() < 0.5 ? -1 : 1, r.keys[rng.below(n)]});
        std::vector<CellId> constraint;
        for (const auto& c : r.keys) {
            if (rng.uniform() < 0.7) constraint.push_back(c);
        }
        constraint.push_back(r.keys.front());
        std::sort(constraint.begin(), constraint.end());
        constraint.erase(std::unique(constraint.begin(), constraint.end()), constraint.end());
        RegionEmbeddings scaled = r;
        scaled.values *= rng.uniform(0.01, 100.0);
        if (embed_arithmetic(terms, constraint, r, keep).result != embed_arithmetic(terms, constraint, scaled, keep).result) {
            ++failures;
        }
    }
    if (!ctx.run_a_error.empty()) return {false, "pipeline failed: " + ctx.run_a_error};

    const fs::path ws = ctx.run_a.workspace;
    const RegionEmbeddings r = read_region_embeddings_csv(ws / "region_embeddings.csv");
    const CellAssignment asg = read_assignment_csv(ws / "assignment.csv");
    const FeatureMatrix features = read_feature_csv(ws / "features.csv");
    const auto planted = read_planted_csv(oracle::fixture_dir() / "planted.csv");
    auto group = [&](const std::string& city, Archetype arch) {
        std::vector<CellId> out;
        for (const auto& c : r.keys) {
            auto it = planted.find(c);
            if (it != planted.end() && it->second.city == city && it->second.archetype == arch) out.push_back(c);
        }
        return out;
    };
    std::vector<CellId> third;
    for (const auto& c : r.keys) {
        auto it = planted.find(c);
        if (it != planted.end() && it->second.city == "gridville_east") third.push_back(c);
    }
    const CellId arterial = medoid(r, group("gridville_north", Archetype::Arterial));
    const CellId residential = medoid(r, group("gridville_north", Archetype::PavedResidential));
    const CellId unpaved = medoid(r, group("gridville_north", Archetype::UnpavedResidential));
    const auto res = embed_arithmetic({{1, arterial}, {1, residential}}, third, r);
    const double frac = merger_fraction(asg, features, arterial, residential, res.result);
    const auto res_u = embed_arithmetic({{1, arterial}, {1, unpaved}}, third, r);
    const double frac_u = merger_fraction(asg, features, arterial, unpaved, res_u.result);
    std::cout << "  info: arterial + unpaved residential -> " << res_u.result.str() << ", within-interval share "
              << fmt(frac_u) << '\n';
    return {failures == 0 && frac >= 0.7,
            "100 configs, " + std::to_string(failures) + " identity/invariance failures; arterial + residential -> " +
                res.result.str() + " (" + planted.at(res.result).city + "), within-interval share " + fmt(frac) +
                " (>= 0.7)"};
}

// 10. Determinism across two full runs.
Verdict determinism(Context& ctx) {
    if (!ctx.run_a_error.empty()) return {false, "pipeline failed: " + ctx.run_a_error};
    run_all(ctx.run_b);
    std::vector<std::string> differ;
    const std::vector<std::string> files{"model.json", "loss.csv", "segment_embeddings.csv", "region_embeddings.csv",
                                         "cut.csv", "dendrogram.csv", "pca.csv", "rgb.csv", "tsne.csv",
                                         "clusters.geojson", "rgb.geojson"};
    for (const auto& f : files) {
        if (io::sha256_file(ctx.run_a.workspace / f) != io::sha256_file(ctx.run_b.workspace / f)) differ.push_back(f);
    }
    std::string detail = std::to_string(files.size()) + " artifacts compared, " + std::to_string(differ.size()) + " differ";
    for (const auto& f : differ) detail += " " + f;
    return {differ.empty(), detail};
}

}  // namespace

int main(int argc, char** argv) {
    fs::path root = "acceptance_ws";
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--workspace") root = argv[i + 1];
    }
    Context ctx;
    ctx.root = root;
    fs::remove_all(root);
    ctx.run_a = gridville_config(root / "run_a");
    ctx.run_b = gridville_config(root / "run_b");
    {
        const auto t0 = Clock::now();
        try {
            run_all(ctx.run_a);
        } catch (const std::exception& e) {
            ctx.run_a_error = e.what();
        }
        ctx.run_a_seconds = seconds_since(t0);
    }

    struct Criterion {
        int id;
        const char* name;
        double budget;  // seconds; 0 = none
        std::function<Verdict(Context&)> fn;
    };
    const std::vector<Criterion> criteria{
        {1, "configuration parity", 1, config_parity},
        {2, "gradient oracle", 30, gradient_oracle},
        {3, "ward oracle", 60, ward_oracle},
        {4, "aggregation oracle", 10, aggregation_oracle},
        {5, "cell assignment oracle", 60, cell_oracle},
        {6, "end-to-end recovery", 0, recovery},
        {7, "t-SNE calibration and separation", 120, tsne_check},
        {8, "PCA properties", 0, pca_check},
        {9, "arithmetic semantics", 30, arithmetic_check},
        {10, "determinism", 0, determinism},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto t0 = Clock::now();
        Verdict v;
        try {
            v = c.fn(ctx);
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double s = seconds_since(t0);
        if (c.budget > 0 && s >= c.budget) {
            v.pass = false;
            v.detail += "; over time budget " + fmt(c.budget) + " s";
        }
        failed += !v.pass;
        std::cout << (v.pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): " << v.detail << " ["
                  << fmt(s) << " s]" << std::endl;
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed"
              << std::endl;
    return failed == 0 ? 0 : 1;
}
