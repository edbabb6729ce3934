#include "hexembed/pipeline.hpp"

#include "hexembed/error.hpp"
#include "hexembed/io.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <map>
#include <unordered_map>

namespace hexembed {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

const char* loss_name(LossKind k) { return k == LossKind::Bce ? "bce" : "mse"; }

const char* share_mode_name(ShareMode m) { return m == ShareMode::Unique ? "unique" : "membership"; }

template <typename T>
void take(const json& j, const char* key, T& out) {
    if (!j.contains(key) || j[key].is_null()) return;
    try {
        out = j[key].get<T>();
    } catch (const json::exception& e) {
        throw UsageError(std::string("config key '") + key + "': " + e.what());
    }
}

}  // namespace

ordered_json PipelineConfig::to_json() const {
    ordered_json j;
    j["workspace"] = workspace.string();
    j["seed"] = seed;
    j["resolution"] = resolution;
    j["schema"] = schema ? ordered_json(schema->string()) : ordered_json(nullptr);
    j["k"] = k;
    j["perplexity"] = tsne.perplexity;
    ordered_json in = ordered_json::array();
    for (const auto& i : inputs) in.push_back({{"path", i.path.string()}, {"city", i.city}});
    j["inputs"] = in;
    j["highway_filter"] = highway_filter;
    j["model"] = {{"input", load_schema().width()}, {"hidden", train.dims.hidden}, {"latent", train.dims.latent}};
    j["train"] = {{"learning_rate", train.learning_rate},
                  {"batch_size", train.batch_size},
                  {"epochs", train.epochs},
                  {"test_ratio", train.test_ratio},
                  {"adam_beta1", train.adam_beta1},
                  {"adam_beta2", train.adam_beta2},
                  {"adam_eps", train.adam_eps},
                  {"loss", loss_name(train.loss)},
                  {"stratify_by_city", stratify_by_city}};
    j["aggregate"] = {{"length_weighted", length_weighted}};
    j["cluster"] = {{"dendrogram_merges", dendrogram_merges}, {"share_mode", share_mode_name(share_mode)}};
    j["tsne"] = {{"iterations", tsne.iterations},
                 {"learning_rate", tsne.learning_rate},
                 {"early_exaggeration", tsne.early_exaggeration},
                 {"exaggeration_iterations", tsne.exaggeration_iterations},
                 {"initial_momentum", tsne.initial_momentum},
                 {"final_momentum", tsne.final_momentum},
                 {"momentum_switch", tsne.momentum_switch},
                 {"init_sigma", tsne.init_sigma},
                 {"city", tsne_city ? ordered_json(*tsne_city) : ordered_json(nullptr)}};
    return j;
}

void PipelineConfig::apply_json(const json& j) {
    if (!j.is_object()) throw UsageError("config file must hold a JSON object");
    std::string text;
    if (j.contains("workspace")) {
        take(j, "workspace", text);
        workspace = text;
    }
    take(j, "seed", seed);
    take(j, "resolution", resolution);
    if (j.contains("schema") && !j["schema"].is_null()) {
        take(j, "schema", text);
        schema = text;
    }
    take(j, "k", k);
    take(j, "perplexity", tsne.perplexity);
    if (j.contains("inputs")) {
        inputs.clear();
        for (const auto& i : j["inputs"]) {
            if (!i.is_object() || !i.contains("path") || !i.contains("city")) {
                throw UsageError("config inputs need 'path' and 'city'");
            }
            inputs.push_back({i["path"].get<std::string>(), i["city"].get<std::string>()});
        }
    }
    take(j, "highway_filter", highway_filter);
    if (j.contains("model")) {
        take(j["model"], "hidden", train.dims.hidden);
        take(j["model"], "latent", train.dims.latent);
    }
    if (j.contains("train")) {
        const json& t = j["train"];
        take(t, "learning_rate", train.learning_rate);
        take(t, "batch_size", train.batch_size);
        take(t, "epochs", train.epochs);
        take(t, "test_ratio", train.test_ratio);
        take(t, "adam_beta1", train.adam_beta1);
        take(t, "adam_beta2", train.adam_beta2);
        take(t, "adam_eps", train.adam_eps);
        take(t, "stratify_by_city", stratify_by_city);
        if (t.contains("loss")) {
            take(t, "loss", text);
            if (text != "mse" && text != "bce") throw UsageError("loss must be 'mse' or 'bce'");
            train.loss = text == "bce" ? LossKind::Bce : LossKind::Mse;
        }
    }
    if (j.contains("aggregate")) take(j["aggregate"], "length_weighted", length_weighted);
    if (j.contains("cluster")) {
        take(j["cluster"], "dendrogram_merges", dendrogram_merges);
        if (j["cluster"].contains("share_mode")) {
            take(j["cluster"], "share_mode", text);
            if (text != "membership" && text != "unique") throw UsageError("share_mode must be 'membership' or 'unique'");
            share_mode = text == "unique" ? ShareMode::Unique : ShareMode::Membership;
        }
    }
    if (j.contains("tsne")) {
        const json& t = j["tsne"];
        take(t, "iterations", tsne.iterations);
        take(t, "learning_rate", tsne.learning_rate);
        take(t, "early_exaggeration", tsne.early_exaggeration);
        take(t, "exaggeration_iterations", tsne.exaggeration_iterations);
        take(t, "initial_momentum", tsne.initial_momentum);
        take(t, "final_momentum", tsne.final_momentum);
        take(t, "momentum_switch", tsne.momentum_switch);
        take(t, "init_sigma", tsne.init_sigma);
        if (t.contains("city") && !t["city"].is_null()) {
            take(t, "city", text);
            tsne_city = text;
        }
    }
}

FeatureSchema PipelineConfig::load_schema() const {
    return schema ? hexembed::load_schema(*schema) : default_schema();
}

const std::vector<std::string>& stage_names() {
    static const std::vector<std::string> names = {"ingest",    "featurize", "index",   "train", "embed",
                                                   "aggregate", "cluster",   "project", "arith", "export"};
    return names;
}

const std::vector<std::string>& stage_dependencies(const std::string& stage) {
    static const std::map<std::string, std::vector<std::string>> deps = {
        {"ingest", {}},
        {"featurize", {"ingest"}},
        {"index", {"ingest"}},
        {"train", {"featurize"}},
        {"embed", {"featurize", "train"}},
        {"aggregate", {"index", "embed"}},
        {"cluster", {"aggregate", "featurize", "index"}},
        {"project", {"aggregate"}},
        {"arith", {"aggregate"}},
        {"export", {"aggregate", "cluster", "project"}},
    };
    auto it = deps.find(stage);
    if (it == deps.end()) throw UsageError("unknown stage '" + stage + "'");
    return it->second;
}

namespace {

constexpr const char* kManifest = "manifest.json";

json load_manifest(const fs::path& ws) {
    const fs::path p = ws / kManifest;
    if (!fs::exists(p)) return json{{"stages", json::object()}};
    try {
        return json::parse(io::read_file(p));
    } catch (const json::parse_error& e) {
        throw ParseError("manifest.json is corrupt", e.byte);
    }
}

void save_manifest(const fs::path& ws, const json& m) { io::write_file(ws / kManifest, m.dump(2) + "\n"); }

std::string fingerprint(const json& outputs) {
    std::string acc;
    for (const auto& [name, hash] : outputs.items()) acc += name + ":" + hash.get<std::string>() + "\n";
    return io::sha256_hex(acc);
}

json input_records(const std::vector<InputSpec>& inputs) {
    json out = json::array();
    for (const auto& i : inputs) {
        if (!fs::exists(i.path)) throw DataError("input file not found: " + i.path.string());
        out.push_back({{"path", i.path.string()}, {"city", i.city}, {"sha256", io::sha256_file(i.path)}});
    }
    return out;
}

void verify(const std::string& stage, const json& m, const fs::path& ws, std::set<std::string>& done) {
    if (done.count(stage)) return;
    const json& stages = m["stages"];
    if (!stages.contains(stage)) throw StaleError(stage, "it has not been run in this workspace");
    const json& rec = stages[stage];
    for (const auto& [name, hash] : rec["outputs"].items()) {
        const fs::path p = ws / name;
        if (!fs::exists(p)) throw StaleError(stage, name + " is missing");
        if (io::sha256_file(p) != hash.get<std::string>()) throw StaleError(stage, name + " was modified");
    }
    if (stage == "ingest") {
        for (const auto& in : rec["inputs"]) {
            const fs::path p = in["path"].get<std::string>();
            if (!fs::exists(p) || io::sha256_file(p) != in["sha256"].get<std::string>()) {
                throw StaleError(stage, "input " + p.string() + " changed since ingest");
            }
        }
    }
    for (const auto& up : stage_dependencies(stage)) {
        verify(up, m, ws, done);
        if (rec["upstream"].value(up, "") != stages[up]["fingerprint"].get<std::string>()) {
            throw StaleError(stage, "it was built from an older '" + up + "' run");
        }
    }
    done.insert(stage);
}

struct Workspace {
    fs::path dir;
    fs::path file(const std::string& name) const { return dir / name; }
};

std::map<std::string, std::string> city_by_segment(const RoadNetwork& net) {
    std::map<std::string, std::string> out;
    for (const auto& s : net.segments) out.emplace(s.id, s.city);
    return out;
}

std::vector<CellId> cells_of_city(const Workspace& ws, const std::string& city) {
    const RoadNetwork net = read_roads_jsonl(ws.file("roads.jsonl"));
    const auto cities = city_by_segment(net);
    if (!net.cities.count(city)) throw DataError("no city named '" + city + "' in the workspace");
    const CellAssignment a = read_assignment_csv(ws.file("assignment.csv"));
    std::vector<CellId> out;
    for (const auto& [cell, ids] : a.cell_to_segments) {
        if (std::any_of(ids.begin(), ids.end(), [&](const std::string& id) { return cities.at(id) == city; })) {
            out.push_back(cell);
        }
    }
    return out;
}

using StageFn = void (*)(const PipelineConfig&, const Workspace&, StageOutcome&);

void stage_ingest(const PipelineConfig& cfg, const Workspace& ws, StageOutcome& out) {
    if (cfg.inputs.empty()) throw UsageError("ingest needs at least one --input with its --city");
    std::vector<RoadNetwork> parts;
    for (const auto& in : cfg.inputs) {
        IngestReport rep;
        RoadNetwork net = parse_road_collection(io::read_file(in.path), in.city, &rep);
        const std::size_t parsed = net.segments.size();
        net = filter_driveable(net, cfg.highway_filter);
        out.messages.push_back(in.city + ": " + std::to_string(parsed) + " segments parsed, " +
                               std::to_string(parsed - net.segments.size()) + " not driveable, " +
                               std::to_string(rep.skipped_features) + " features without line geometry, " +
                               std::to_string(rep.list_values) + " list-valued tags");
        if (rep.renamed_ids) out.messages.push_back(in.city + ": " + std::to_string(rep.renamed_ids) + " duplicate ids renamed");
        parts.push_back(std::move(net));
    }
    RoadNetwork net = merge_networks(std::move(parts));
    if (net.segments.empty()) throw EmptyInputError("no driveable segments in the inputs");
    write_roads_jsonl(ws.file("roads.jsonl"), net);
    out.outputs = {"roads.jsonl"};
}

void stage_featurize(const PipelineConfig& cfg, const Workspace& ws, StageOutcome& out) {
    const FeatureSchema schema = cfg.load_schema();
    const RoadNetwork net = read_roads_jsonl(ws.file("roads.jsonl"));
    write_feature_csv(ws.file("features.csv"), encode_network(net, schema));
    io::write_file(ws.file("schema.json"), schema_to_json(schema));
    std::string stats = "key,value,count,share\n";
    const double n = static_cast<double>(net.segments.size());
    for (const auto& k : tag_coverage_stats(net, schema)) {
        stats += io::csv_line({k.key, "", std::to_string(k.count), io::format_double(k.share)});
        for (const auto& [v, c] : k.values) {
            stats += io::csv_line({k.key, v, std::to_string(c), io::format_double(static_cast<double>(c) / n)});
        }
    }
    io::write_file(ws.file("tag_stats.csv"), stats);
    out.outputs = {"features.csv", "schema.json", "tag_stats.csv"};
    out.messages.push_back(std::to_string(net.segments.size()) + " segments x " + std::to_string(schema.width()) +
                           " columns");
}

void stage_index(const PipelineConfig& cfg, const Workspace& ws, StageOutcome& out) {
    const RoadNetwork net = read_roads_jsonl(ws.file("roads.jsonl"));
    const CellAssignment a = assign_network(net, cfg.resolution);
    write_assignment_csv(ws.file("assignment.csv"), a);
    out.outputs = {"assignment.csv"};
    out.messages.push_back(std::to_string(a.cell_to_segments.size()) + " cells at resolution " +
                           std::to_string(cfg.resolution));
}

void stage_train(const PipelineConfig& cfg, const Workspace& ws, StageOutcome& out) {
    const FeatureSchema schema = schema_from_json(io::read_file(ws.file("schema.json")));
    const FeatureMatrix fm = read_feature_csv(ws.file("features.csv"));
    TrainConfig tc = cfg.train;
    tc.seed = cfg.seed;
    tc.dims.input = static_cast<int>(schema.width());
    std::vector<std::string> groups;
    if (cfg.stratify_by_city) {
        const auto cities = city_by_segment(read_roads_jsonl(ws.file("roads.jsonl")));
        for (const auto& id : fm.ids) groups.push_back(cities.at(id));
    }
    const TrainResult r = train(fm.as_real(), tc, cfg.stratify_by_city ? &groups : nullptr);
    io::write_file(ws.file("model.json"), model_to_json(r.params, cfg.seed, schema.version()));
    write_loss_csv(ws.file("loss.csv"), r.history);
    out.outputs = {"model.json", "loss.csv"};
    if (!r.history.empty()) {
        out.messages.push_back("final train MSE " + io::format_double(r.history.back().train_mse) + ", test MSE " +
                               io::format_double(r.history.back().test_mse));
    }
}

void stage_embed(const PipelineConfig&, const Workspace& ws, StageOutcome& out) {
    const ModelParams p = model_from_json(io::read_file(ws.file("model.json")));
    const FeatureMatrix fm = read_feature_csv(ws.file("features.csv"));
    SegmentEmbeddings e;
    e.keys = fm.ids;
    e.values = encode(p, fm.as_real());
    write_segment_embeddings_csv(ws.file("segment_embeddings.csv"), e);
    out.outputs = {"segment_embeddings.csv"};
}

void stage_aggregate(const PipelineConfig& cfg, const Workspace& ws, StageOutcome& out) {
    const CellAssignment a = read_assignment_csv(ws.file("assignment.csv"));
    const SegmentEmbeddings e = read_segment_embeddings_csv(ws.file("segment_embeddings.csv"));
    std::unordered_map<std::string, double> weights;
    if (cfg.length_weighted) {
        for (const auto& s : read_roads_jsonl(ws.file("roads.jsonl")).segments) {
            weights[s.id] = polyline_length_m(s.geometry);
        }
    }
    const RegionEmbeddings r = aggregate_mean(a, e, cfg.length_weighted ? &weights : nullptr);
    write_region_embeddings_csv(ws.file("region_embeddings.csv"), r);
    out.outputs = {"region_embeddings.csv"};
    out.messages.push_back(std::to_string(r.size()) + " region embeddings");
}

void stage_cluster(const PipelineConfig& cfg, const Workspace& ws, StageOutcome& out) {
    const RegionEmbeddings regions = read_region_embeddings_csv(ws.file("region_embeddings.csv"));
    if (cfg.k < 1 || static_cast<std::size_t>(cfg.k) > regions.size()) {
        throw UsageError("--k must be in [1, " + std::to_string(regions.size()) + "]");
    }
    const Dendrogram d = agglomerative_ward(regions);
    write_dendrogram_csv(ws.file("dendrogram.csv"), d, cfg.dendrogram_merges);
    const ClusterCut cut = cut_tree(d, cfg.k);
    write_cut_csv(ws.file("cut.csv"), cut);

    const FeatureSchema schema = schema_from_json(io::read_file(ws.file("schema.json")));
    const FeatureMatrix fm = read_feature_csv(ws.file("features.csv"));
    const CellAssignment a = read_assignment_csv(ws.file("assignment.csv"));

    std::string splits = "k,parent,new_cluster,old_cluster,column,delta,delta_per_key\n";
    ClusterCut coarser = cut_tree(d, 1);
    for (int k = 1; k < cfg.k; ++k) {
        ClusterCut finer = cut_tree(d, k + 1);
        const SplitDifference s = split_difference(coarser, finer, a, fm, schema, cfg.share_mode);
        for (std::size_t c = 0; c < fm.columns.size(); ++c) {
            const auto C = static_cast<Eigen::Index>(c);
            splits += std::to_string(k + 1) + ',' + std::to_string(s.parent) + ',' + std::to_string(s.new_child) +
                      ',' + std::to_string(s.old_child) + ',' + io::csv_escape(fm.columns[c]) + ',' +
                      io::format_double(s.per_column(C)) + ',' + io::format_double(s.per_key(C)) + '\n';
        }
        coarser = std::move(finer);
    }
    io::write_file(ws.file("split_differences.csv"), splits);

    io::CsvRow header{"cluster_id", "regions"};
    header.insert(header.end(), fm.columns.begin(), fm.columns.end());
    std::string shares = io::csv_line(header);
    for (int c = 0; c < cut.k; ++c) {
        const auto members = cut.members(c);
        const Eigen::VectorXd s = region_feature_share(a, fm, members, cfg.share_mode);
        shares += std::to_string(c) + ',' + std::to_string(members.size());
        for (Eigen::Index j = 0; j < s.size(); ++j) shares += ',' + io::format_double(s(j));
        shares += '\n';
    }
    io::write_file(ws.file("cluster_shares.csv"), shares);
    out.outputs = {"dendrogram.csv", "cut.csv", "split_differences.csv", "cluster_shares.csv"};
    out.messages.push_back(std::to_string(regions.size()) + " regions in " + std::to_string(cfg.k) + " clusters");
}

void stage_project(const PipelineConfig& cfg, const Workspace& ws, StageOutcome& out) {
    const RegionEmbeddings regions = read_region_embeddings_csv(ws.file("region_embeddings.csv"));
    const PcaResult pca = pca_project(regions.values, 3);
    write_projection_csv(ws.file("pca.csv"), regions.keys, pca.coords);
    write_rgb_csv(ws.file("rgb.csv"), regions.keys, rgb_encode(pca.coords));
    std::string var = "component,explained_variance_ratio\n";
    for (Eigen::Index k = 0; k < pca.explained.size(); ++k) {
        var += std::to_string(k) + ',' + io::format_double(pca.explained(k)) + '\n';
    }
    io::write_file(ws.file("pca_variance.csv"), var);

    std::vector<CellId> cells = regions.keys;
    Eigen::MatrixXd x = regions.values;
    if (cfg.tsne_city) {
        cells = cells_of_city(ws, *cfg.tsne_city);
        x.resize(static_cast<Eigen::Index>(cells.size()), regions.dim());
        for (std::size_t i = 0; i < cells.size(); ++i) {
            x.row(static_cast<Eigen::Index>(i)) = regions.values.row(static_cast<Eigen::Index>(*regions.find(cells[i])));
        }
    }
    TsneConfig tc = cfg.tsne;
    tc.seed = cfg.seed;
    const TsneResult t = tsne_project(x, tc);
    write_projection_csv(ws.file("tsne.csv"), cells, t.coords);
    std::string kl = "iteration,kl_divergence\n";
    for (const auto& [it, v] : t.kl) kl += std::to_string(it) + ',' + io::format_double(v) + '\n';
    io::write_file(ws.file("tsne_kl.csv"), kl);
    out.messages.insert(out.messages.end(), t.warnings.begin(), t.warnings.end());
    out.outputs = {"pca.csv", "rgb.csv", "pca_variance.csv", "tsne.csv", "tsne_kl.csv"};
}

void stage_arith(const PipelineConfig& cfg, const Workspace& ws, StageOutcome& out) {
    const ArithmeticRequest& q = cfg.arith;
    if (q.plus.empty() && q.minus.empty()) throw UsageError("arith needs at least one --plus or --minus cell");
    const RegionEmbeddings regions = read_region_embeddings_csv(ws.file("region_embeddings.csv"));
    std::vector<ArithmeticTerm> terms;
    ordered_json jterms = ordered_json::array();
    for (const auto& c : q.plus) {
        terms.push_back({+1, CellId::parse(c)});
        jterms.push_back({{"sign", "+"}, {"cell", c}});
    }
    for (const auto& c : q.minus) {
        terms.push_back({-1, CellId::parse(c)});
        jterms.push_back({{"sign", "-"}, {"cell", c}});
    }
    const std::vector<CellId> constraint = q.within.empty() ? regions.keys : cells_of_city(ws, q.within);
    const ArithmeticResult r = embed_arithmetic(terms, constraint, regions, {q.keep_operands, q.average});

    std::vector<CellId> pool;
    for (const auto& c : constraint) {
        if (q.keep_operands || std::none_of(terms.begin(), terms.end(), [&](const auto& t) { return t.cell == c; })) {
            pool.push_back(c);
        }
    }
    bool truncated = false;
    const auto near = nearest_regions(r.query, pool, regions, std::max<std::size_t>(1, q.top), &truncated);
    ordered_json j;
    j["terms"] = jterms;
    j["within"] = q.within;
    j["keep_operands"] = q.keep_operands;
    j["average"] = q.average;
    j["result"] = r.result.str();
    j["distance"] = r.distance;
    ordered_json nj = ordered_json::array();
    for (const auto& n : near) nj.push_back({{"cell", n.cell.str()}, {"distance", n.distance}});
    j["nearest"] = nj;
    io::write_file(ws.file("arith.json"), j.dump(2) + "\n");
    out.outputs = {"arith.json"};
    out.messages.push_back(r.result.str() + " " + io::format_double(r.distance));
    if (truncated) out.messages.push_back("fewer candidates than --top; listing all");
}

void stage_export(const PipelineConfig&, const Workspace& ws, StageOutcome& out) {
    const RegionEmbeddings regions = read_region_embeddings_csv(ws.file("region_embeddings.csv"));
    std::map<CellId, std::size_t> counts;
    for (std::size_t i = 0; i < regions.size(); ++i) counts[regions.keys[i]] = regions.segment_counts[i];

    const ClusterCut cut = read_cut_csv(ws.file("cut.csv"));
    std::vector<RegionFeature> clusters;
    for (std::size_t i = 0; i < cut.cells.size(); ++i) {
        ordered_json p;
        p["cell_address"] = cut.cells[i].str();
        p["cluster_id"] = cut.labels[i];
        p["segment_count"] = counts.at(cut.cells[i]);
        clusters.push_back({cut.cells[i], std::move(p)});
    }
    io::write_file(ws.file("clusters.geojson"), export_geojson(clusters));

    const io::CsvTable rgb = io::read_csv(ws.file("rgb.csv"));
    std::vector<RegionFeature> colours;
    for (const auto& row : rgb.rows) {
        const CellId c = CellId::parse(row[0]);
        ordered_json p;
        p["cell_address"] = row[0];
        p["r"] = io::parse_int(row[1]);
        p["g"] = io::parse_int(row[2]);
        p["b"] = io::parse_int(row[3]);
        p["segment_count"] = counts.at(c);
        colours.push_back({c, std::move(p)});
    }
    io::write_file(ws.file("rgb.geojson"), export_geojson(colours));
    out.outputs = {"clusters.geojson", "rgb.geojson"};
}

const std::map<std::string, StageFn>& stage_table() {
    static const std::map<std::string, StageFn> table = {
        {"ingest", stage_ingest},   {"featurize", stage_featurize}, {"index", stage_index},
        {"train", stage_train},     {"embed", stage_embed},         {"aggregate", stage_aggregate},
        {"cluster", stage_cluster}, {"project", stage_project},     {"arith", stage_arith},
        {"export", stage_export},
    };
    return table;
}

}  // namespace

void check_upstream(const std::string& stage, const PipelineConfig& cfg) {
    const json m = load_manifest(cfg.workspace);
    std::set<std::string> done;
    for (const auto& up : stage_dependencies(stage)) verify(up, m, cfg.workspace, done);
}

StageOutcome run_stage(const std::string& stage, const PipelineConfig& cfg) {
    const auto& table = stage_table();
    auto fn = table.find(stage);
    if (fn == table.end()) throw UsageError("unknown stage '" + stage + "'");
    check_upstream(stage, cfg);
    fs::create_directories(cfg.workspace);

    const auto t0 = std::chrono::steady_clock::now();
    StageOutcome out;
    out.stage = stage;
    const Workspace ws{cfg.workspace};
    json inputs;
    if (stage == "ingest") inputs = input_records(cfg.inputs);
    fn->second(cfg, ws, out);
    out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    json m = load_manifest(cfg.workspace);
    json rec;
    rec["outputs"] = json::object();
    for (const auto& name : out.outputs) rec["outputs"][name] = io::sha256_file(ws.file(name));
    rec["fingerprint"] = fingerprint(rec["outputs"]);
    rec["upstream"] = json::object();
    for (const auto& up : stage_dependencies(stage)) {
        rec["upstream"][up] = m["stages"][up]["fingerprint"];
    }
    if (stage == "ingest") rec["inputs"] = inputs;
    m["stages"][stage] = rec;
    if (stage == "ingest") m["inputs"] = inputs;
    if (stage == "featurize") m["schema_version"] = cfg.load_schema().version();
    if (stage == "index") m["resolution"] = cfg.resolution;
    if (stage == "train") m["seed"] = cfg.seed;
    save_manifest(cfg.workspace, m);

    ordered_json log;
    log["stage"] = stage;
    log["seed"] = cfg.seed;
    log["seconds"] = out.seconds;
    log["outputs"] = out.outputs;
    log["messages"] = out.messages;
    log["config"] = cfg.to_json();
    std::ofstream(ws.file("run_log.jsonl"), std::ios::app) << log.dump() << '\n';
    return out;
}

std::vector<StageOutcome> run_all(const PipelineConfig& cfg) {
    std::vector<StageOutcome> out;
    const bool with_arith = !cfg.arith.plus.empty() || !cfg.arith.minus.empty();
    for (const auto& s : stage_names()) {
        if (s == "arith" && !with_arith) continue;
        out.push_back(run_stage(s, cfg));
    }
    return out;
}

std::string export_geojson(const std::vector<RegionFeature>& regions) {
    ordered_json fc;
    fc["type"] = "FeatureCollection";
    fc["features"] = ordered_json::array();
    for (const auto& r : regions) {
        ordered_json ring = ordered_json::array();
        const auto boundary = h3::cell_to_boundary(r.cell.address());
        for (const auto& v : boundary) ring.push_back({v.lng, v.lat});
        ring.push_back(ring.front());
        ordered_json f;
        f["type"] = "Feature";
        f["geometry"] = {{"type", "Polygon"}, {"coordinates", ordered_json::array({ring})}};
        f["properties"] = r.properties;
        fc["features"].push_back(std::move(f));
    }
    return fc.dump() + "\n";
}

}  // namespace hexembed
