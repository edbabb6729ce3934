// File-based pipeline over a workspace directory: one stage per step, a
// manifest of content hashes, and staleness checks between stages.
#pragma once

#include "hexembed/autoencoder.hpp"
#include "hexembed/clustering.hpp"
#include "hexembed/latent_analysis.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace hexembed {

struct InputSpec {
    std::filesystem::path path;
    std::string city;
};

struct ArithmeticRequest {
    std::vector<std::string> plus;
    std::vector<std::string> minus;
    std::string within;  // city label; empty = all regions
    bool keep_operands = false;
    bool average = false;
    std::size_t top = 5;
};

struct PipelineConfig {
    std::filesystem::path workspace = "workspace";
    std::uint64_t seed = 42;
    int resolution = kDefaultResolution;
    std::optional<std::filesystem::path> schema;  // default schema when absent
    int k = 8;
    std::vector<InputSpec> inputs;
    std::set<std::string> highway_filter = default_driveable_values();

    TrainConfig train;  // train.dims.input follows the schema width
    bool stratify_by_city = false;
    bool length_weighted = false;
    ShareMode share_mode = ShareMode::Membership;
    std::size_t dendrogram_merges = 100;
    TsneConfig tsne;    // tsne.perplexity is the --perplexity flag
    std::optional<std::string> tsne_city;
    ArithmeticRequest arith;

    /// Effective configuration; `schema_width` fills the model input size.
    nlohmann::ordered_json to_json() const;
    /// Overlays the keys present in `j` on top of this configuration.
    void apply_json(const nlohmann::json& j);
    FeatureSchema load_schema() const;
};

/// Pipeline stages in execution order.
const std::vector<std::string>& stage_names();
/// Stages whose outputs `stage` reads.
const std::vector<std::string>& stage_dependencies(const std::string& stage);

struct StageOutcome {
    std::string stage;
    std::vector<std::string> outputs;   // file names relative to the workspace
    std::vector<std::string> messages;  // warnings and results for the user
    double seconds = 0.0;
};

/// Runs one stage. Throws StaleError when an upstream stage's recorded
/// outputs are missing, edited, or were built from older inputs.
StageOutcome run_stage(const std::string& stage, const PipelineConfig& config);

/// ingest through export (arith is skipped unless terms are configured).
std::vector<StageOutcome> run_all(const PipelineConfig& config);

/// Verifies that `stage` may run now; throws StaleError naming the culprit.
void check_upstream(const std::string& stage, const PipelineConfig& config);

struct RegionFeature {
    CellId cell;
    nlohmann::ordered_json properties;
};

/// FeatureCollection of cell polygons: closed, counterclockwise rings.
std::string export_geojson(const std::vector<RegionFeature>& regions);

}  // namespace hexembed
