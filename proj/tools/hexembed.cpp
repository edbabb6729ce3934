// hexembed: command-line driver for the road-embedding pipeline.
//
//   hexembed gridville --out fixtures/gridville
//   hexembed ingest --workspace ws --input a.geojson --city a
//   hexembed all --workspace ws --input a.geojson --city a --seed 42
//
// Exit codes: 0 success, 2 usage error, 3 data error, 4 stale upstream.

#include "hexembed/error.hpp"
#include "hexembed/gridville.hpp"
#include "hexembed/io.hpp"
#include "hexembed/pipeline.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <iostream>

namespace {

enum ExitCode { kOk = 0, kInternal = 1, kUsage = 2, kData = 3, kStale = 4 };

void report(const hexembed::StageOutcome& o) {
    std::cout << "[" << o.stage << "] done in " << hexembed::io::format_double(std::round(o.seconds * 1000) / 1000)
              << " s";
    for (const auto& f : o.outputs) std::cout << ' ' << f;
    std::cout << '\n';
    for (const auto& m : o.messages) std::cout << "[" << o.stage << "] " << m << '\n';
}

}  // namespace

int main(int argc, char** argv) {
    using hexembed::PipelineConfig;
    CLI::App app{"Road-network embeddings over hexagonal microregions"};
    app.require_subcommand(1);

    std::string workspace, schema, config_path, loss, share_mode, tsne_city, within, out_dir = "fixtures/gridville";
    std::uint64_t seed = 0, fixture_seed = hexembed::GridvilleOptions{}.seed;
    int resolution = 0, k = 0, epochs = 0, batch = 0, hidden = 0, latent = 0, tsne_iterations = 0;
    double perplexity = 0, lr = 0, test_ratio = 0;
    std::size_t dendrogram_merges = 0, top = 0;
    std::vector<std::string> inputs, cities, plus, minus;
    bool stratify = false, weighted = false, keep = false, average = false;

    auto* o_ws = app.add_option("--workspace", workspace, "Workspace directory");
    auto* o_seed = app.add_option("--seed", seed, "Seed for training, projections and jitter");
    auto* o_res = app.add_option("--resolution", resolution, "Hexagonal grid resolution (0-15)");
    auto* o_schema = app.add_option("--schema", schema, "Feature schema JSON");
    auto* o_k = app.add_option("--k", k, "Number of clusters in the flat cut");
    auto* o_perp = app.add_option("--perplexity", perplexity, "t-SNE perplexity");
    app.add_option("--config", config_path, "JSON configuration file (flags take precedence)");
    auto* o_in = app.add_option("--input", inputs, "GeoJSON road extract (repeatable, pairs with --city)");
    auto* o_city = app.add_option("--city", cities, "City label of the matching --input");
    auto* o_epochs = app.add_option("--epochs", epochs, "Training epochs");
    auto* o_batch = app.add_option("--batch-size", batch, "Mini-batch size");
    auto* o_lr = app.add_option("--learning-rate", lr, "Adam learning rate");
    auto* o_ratio = app.add_option("--test-ratio", test_ratio, "Held-out share of segments");
    auto* o_hidden = app.add_option("--hidden", hidden, "Hidden layer width");
    auto* o_latent = app.add_option("--latent", latent, "Embedding size");
    auto* o_loss = app.add_option("--loss", loss, "Reconstruction loss")->check(CLI::IsMember({"mse", "bce"}));
    auto* o_strat = app.add_flag("--stratify-city", stratify, "Split train/test within each city");
    auto* o_weight = app.add_flag("--length-weighted", weighted, "Weight segments by length when averaging");
    auto* o_share = app.add_option("--share-mode", share_mode, "Feature share counting")
                        ->check(CLI::IsMember({"membership", "unique"}));
    auto* o_dendro = app.add_option("--dendrogram-merges", dendrogram_merges, "Merges kept in dendrogram.csv (0 = all)");
    auto* o_tsne_it = app.add_option("--tsne-iterations", tsne_iterations, "t-SNE iterations");
    auto* o_tsne_city = app.add_option("--tsne-city", tsne_city, "Restrict t-SNE to one city");
    app.add_option("--plus", plus, "Cell added in arith (repeatable)");
    app.add_option("--minus", minus, "Cell subtracted in arith (repeatable)");
    app.add_option("--within", within, "City the arith result must lie in");
    app.add_flag("--keep-operands", keep, "Allow operand cells as the arith result");
    app.add_flag("--average", average, "Average instead of summing arith terms");
    app.add_option("--top", top, "Neighbours listed by arith")->default_val(5);
    app.add_option("--out", out_dir, "Output directory for gridville");
    app.add_option("--fixture-seed", fixture_seed, "Seed of the gridville generator");

    std::vector<std::string> commands = hexembed::stage_names();
    commands.insert(commands.end(), {"all", "config", "gridville"});
    for (const auto& c : commands) {
        std::string help = c == "all" ? "Run every stage in order"
                           : c == "config" ? "Print the effective configuration"
                           : c == "gridville" ? "Write the synthetic fixture"
                                              : "Run the " + c + " stage";
        app.add_subcommand(c, help)->fallthrough();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kUsage;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    try {
        if (command == "gridville") {
            hexembed::GridvilleOptions opt;
            opt.seed = fixture_seed;
            hexembed::write_gridville(out_dir, hexembed::make_gridville(opt));
            std::cout << "gridville written to " << out_dir << '\n';
            return kOk;
        }

        PipelineConfig cfg;
        if (!config_path.empty()) {
            nlohmann::json doc;
            try {
                doc = nlohmann::json::parse(hexembed::io::read_file(config_path));
            } catch (const nlohmann::json::parse_error& e) {
                throw hexembed::UsageError("config " + config_path + ": " + e.what());
            }
            cfg.apply_json(doc);
        }
        if (o_ws->count()) cfg.workspace = workspace;
        if (o_seed->count()) cfg.seed = seed;
        if (o_res->count()) cfg.resolution = resolution;
        if (o_schema->count()) cfg.schema = schema;
        if (o_k->count()) cfg.k = k;
        if (o_perp->count()) cfg.tsne.perplexity = perplexity;
        if (o_in->count() || o_city->count()) {
            if (inputs.size() != cities.size()) throw hexembed::UsageError("each --input needs a matching --city");
            cfg.inputs.clear();
            for (std::size_t i = 0; i < inputs.size(); ++i) cfg.inputs.push_back({inputs[i], cities[i]});
        }
        if (o_epochs->count()) cfg.train.epochs = epochs;
        if (o_batch->count()) cfg.train.batch_size = batch;
        if (o_lr->count()) cfg.train.learning_rate = lr;
        if (o_ratio->count()) cfg.train.test_ratio = test_ratio;
        if (o_hidden->count()) cfg.train.dims.hidden = hidden;
        if (o_latent->count()) cfg.train.dims.latent = latent;
        if (o_loss->count()) cfg.train.loss = loss == "bce" ? hexembed::LossKind::Bce : hexembed::LossKind::Mse;
        if (o_strat->count()) cfg.stratify_by_city = stratify;
        if (o_weight->count()) cfg.length_weighted = weighted;
        if (o_share->count()) {
            cfg.share_mode = share_mode == "unique" ? hexembed::ShareMode::Unique : hexembed::ShareMode::Membership;
        }
        if (o_dendro->count()) cfg.dendrogram_merges = dendrogram_merges;
        if (o_tsne_it->count()) cfg.tsne.iterations = tsne_iterations;
        if (o_tsne_city->count()) cfg.tsne_city = tsne_city;
        cfg.arith = {plus, minus, within, keep, average, top};
        if (cfg.resolution < 0 || cfg.resolution > hexembed::h3::kMaxResolution) {
            throw hexembed::UsageError("--resolution must be in [0, 15]");
        }

        if (command == "config") {
            std::cout << cfg.to_json().dump(2) << '\n';
        } else if (command == "all") {
            for (const auto& o : hexembed::run_all(cfg)) report(o);
        } else {
            report(hexembed::run_stage(command, cfg));
        }
        return kOk;
    } catch (const hexembed::UsageError& e) {
        std::cerr << "usage error: " << e.what() << '\n';
        return kUsage;
    } catch (const hexembed::StaleError& e) {
        std::cerr << "stale: " << e.what() << '\n';
        return kStale;
    } catch (const hexembed::DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kInternal;
    }
}
