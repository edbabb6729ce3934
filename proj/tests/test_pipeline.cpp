#include "hexembed/error.hpp"
#include "hexembed/io.hpp"
#include "hexembed/pipeline.hpp"
#include "oracles.hpp"

#include <doctest.h>
#include <nlohmann/json.hpp>

#include <algorithm>

using namespace hexembed;
namespace fs = std::filesystem;

namespace {

PipelineConfig quick_config(const fs::path& ws) {
    PipelineConfig cfg;
    cfg.workspace = ws;
    cfg.k = 3;
    for (const char* city : {"gridville_north", "gridville_south", "gridville_east"}) {
        cfg.inputs.push_back({oracle::fixture_dir() / (std::string(city) + ".geojson"), city});
    }
    cfg.train.epochs = 5;
    cfg.tsne.iterations = 100;
    cfg.tsne.perplexity = 20;
    return cfg;
}

fs::path fresh_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / name;
    fs::remove_all(p);
    return p;
}

// Signed area of a lon/lat ring (positive = counterclockwise).
double ring_area(const nlohmann::json& ring) {
    double a = 0;
    for (std::size_t i = 1; i < ring.size(); ++i) {
        a += ring[i - 1][0].get<double>() * ring[i][1].get<double>() - ring[i][0].get<double>() * ring[i - 1][1].get<double>();
    }
    return a / 2;
}

}  // namespace

TEST_SUITE("pipeline") {

TEST_CASE("default configuration matches the golden dump") {
    const auto golden = nlohmann::json::parse(io::read_file(oracle::test_data_dir() / "config_default.json"));
    CHECK(nlohmann::json(PipelineConfig{}.to_json()) == golden);
}

TEST_CASE("configuration files overlay defaults") {
    PipelineConfig cfg;
    cfg.apply_json(nlohmann::json::parse(R"({"k": 5, "train": {"epochs": 7}, "model": {"latent": 12},
                                             "inputs": [{"path": "a.geojson", "city": "a"}]})"));
    CHECK(cfg.k == 5);
    CHECK(cfg.train.epochs == 7);
    CHECK(cfg.train.dims.latent == 12);
    CHECK(cfg.train.batch_size == 200);
    REQUIRE(cfg.inputs.size() == 1);
    CHECK(cfg.inputs[0].city == "a");
    CHECK_THROWS_AS(cfg.apply_json(nlohmann::json::parse(R"({"k": "many"})")), UsageError);
    CHECK_THROWS_AS(cfg.apply_json(nlohmann::json::parse("[1]")), UsageError);
}

TEST_CASE("stage table") {
    const std::vector<std::string> order{"ingest", "featurize", "index",   "train", "embed",
                                         "aggregate", "cluster", "project", "arith", "export"};
    CHECK(stage_names() == order);
    for (std::size_t i = 0; i < order.size(); ++i) {
        for (const auto& d : stage_dependencies(order[i])) {
            const auto pos = std::find(order.begin(), order.end(), d) - order.begin();
            CHECK(static_cast<std::size_t>(pos) < i);
        }
    }
    CHECK(stage_dependencies("ingest").empty());
    PipelineConfig cfg;
    CHECK_THROWS_AS(run_stage("polish", cfg), UsageError);
}

TEST_CASE("full run, rerun identity and staleness") {
    const PipelineConfig cfg = quick_config(fresh_dir("hexembed_pipe_a"));
    const auto outcomes = run_all(cfg);
    CHECK(outcomes.size() == 9);
    for (const char* f : {"roads.jsonl", "features.csv", "schema.json", "tag_stats.csv", "assignment.csv", "model.json",
                          "loss.csv", "segment_embeddings.csv", "region_embeddings.csv", "dendrogram.csv", "cut.csv",
                          "split_differences.csv", "cluster_shares.csv", "pca.csv", "rgb.csv", "pca_variance.csv",
                          "tsne.csv", "tsne_kl.csv", "clusters.geojson", "rgb.geojson", "manifest.json", "run_log.jsonl"}) {
        CHECK_MESSAGE(fs::exists(cfg.workspace / f), f);
    }

    const std::string cut = io::read_file(cfg.workspace / "cut.csv");
    const std::string model = io::read_file(cfg.workspace / "model.json");
    run_stage("train", cfg);
    run_stage("cluster", cfg);
    CHECK(io::read_file(cfg.workspace / "model.json") == model);
    CHECK(io::read_file(cfg.workspace / "cut.csv") == cut);

    // Missing upstream artifact.
    fs::remove(cfg.workspace / "region_embeddings.csv");
    try {
        run_stage("cluster", cfg);
        FAIL("expected StaleError");
    } catch (const StaleError& e) {
        CHECK(e.stage() == "aggregate");
    }
    run_stage("aggregate", cfg);
    run_stage("cluster", cfg);

    // Edited upstream artifact.
    io::write_file(cfg.workspace / "assignment.csv", io::read_file(cfg.workspace / "assignment.csv") + "\n");
    try {
        run_stage("aggregate", cfg);
        FAIL("expected StaleError");
    } catch (const StaleError& e) {
        CHECK(e.stage() == "index");
    }
    run_stage("index", cfg);
    run_stage("aggregate", cfg);

    // Retraining with another seed invalidates everything built on the old model.
    PipelineConfig other = cfg;
    other.seed = 43;
    run_stage("train", other);
    try {
        run_stage("aggregate", other);
        FAIL("expected StaleError");
    } catch (const StaleError& e) {
        CHECK(e.stage() == "embed");
    }
}

TEST_CASE("two runs with the same seed are byte identical") {
    const PipelineConfig a = quick_config(fresh_dir("hexembed_pipe_b"));
    const PipelineConfig b = quick_config(fresh_dir("hexembed_pipe_c"));
    run_all(a);
    run_all(b);
    for (const char* f : {"model.json", "segment_embeddings.csv", "region_embeddings.csv", "cut.csv", "dendrogram.csv",
                          "pca.csv", "tsne.csv", "clusters.geojson", "rgb.geojson", "manifest.json"}) {
        CHECK_MESSAGE(io::read_file(a.workspace / f) == io::read_file(b.workspace / f), f);
    }
}

TEST_CASE("missing input and unknown city") {
    PipelineConfig cfg = quick_config(fresh_dir("hexembed_pipe_d"));
    cfg.inputs = {{"/nonexistent/roads.geojson", "x"}};
    CHECK_THROWS_AS(run_stage("ingest", cfg), DataError);
    cfg.inputs.clear();
    CHECK_THROWS_AS(run_stage("ingest", cfg), UsageError);
}

TEST_CASE("GeoJSON export rings") {
    const CellId c = cell_of_point(16.93, 52.41, 9);
    const auto doc = nlohmann::json::parse(export_geojson({{c, {{"cluster_id", 2}}}}));
    REQUIRE(doc["features"].size() == 1);
    const auto& f = doc["features"][0];
    CHECK(f["geometry"]["type"] == "Polygon");
    const auto& ring = f["geometry"]["coordinates"][0];
    CHECK(ring.size() == 7);
    CHECK(ring.front() == ring.back());
    CHECK(ring_area(ring) > 0);
    CHECK(f["properties"]["cluster_id"] == 2);

    // A pentagon has five vertices plus the closing repeat.
    h3::H3Index pent = 0;
    for (auto cell : h3::cell_to_children(h3::from_string("8009fffffffffff"), 2)) {
        if (h3::is_pentagon(cell)) pent = cell;
    }
    REQUIRE(pent != 0);
    const auto pdoc = nlohmann::json::parse(export_geojson({{CellId(pent), {}}}));
    const auto& pring = pdoc["features"][0]["geometry"]["coordinates"][0];
    CHECK(pring.size() == 6);
    CHECK(pring.front() == pring.back());
    CHECK(ring_area(pring) > 0);
}

}
