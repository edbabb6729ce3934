#include "hexembed/error.hpp"
#include "hexembed/gridville.hpp"
#include "hexembed/io.hpp"
#include "hexembed/pipeline.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace hexembed;

namespace {

py::dict segment_dict(const RoadSegment& s) {
    py::list coords;
    for (const auto& p : s.geometry) coords.append(py::make_tuple(p.lon, p.lat));
    py::dict d;
    d["id"] = s.id;
    d["city"] = s.city;
    d["coords"] = coords;
    d["tags"] = s.tags;
    return d;
}

std::vector<LonLat> to_line(const std::vector<std::pair<double, double>>& coords) {
    std::vector<LonLat> out;
    for (const auto& [lon, lat] : coords) out.push_back({lon, lat});
    return out;
}

std::vector<std::string> cell_strings(const std::vector<CellId>& cells) {
    std::vector<std::string> out;
    for (const auto& c : cells) out.push_back(c.str());
    return out;
}

Eigen::MatrixXd merges_array(const std::vector<Merge>& merges) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(merges.size()), 4);
    for (std::size_t t = 0; t < merges.size(); ++t) {
        const auto T = static_cast<Eigen::Index>(t);
        out(T, 0) = static_cast<double>(merges[t].left);
        out(T, 1) = static_cast<double>(merges[t].right);
        out(T, 2) = merges[t].distance;
        out(T, 3) = static_cast<double>(merges[t].size);
    }
    return out;
}

PipelineConfig config_from(const std::string& workspace, const py::dict& overrides) {
    PipelineConfig cfg;
    if (!overrides.empty()) {
        py::object dumps = py::module_::import("json").attr("dumps");
        cfg.apply_json(nlohmann::json::parse(dumps(overrides).cast<std::string>()));
    }
    cfg.workspace = workspace;
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Road-network embeddings over hexagonal microregions";

    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<UsageError>(m, "UsageError", PyExc_ValueError);
    py::register_exception<StaleError>(m, "StaleError", PyExc_RuntimeError);

    m.def(
        "parse_road_collection",
        [](const std::string& text, const std::string& city) {
            IngestReport rep;
            const RoadNetwork net = parse_road_collection(text, city, &rep);
            py::list segs;
            for (const auto& s : net.segments) segs.append(segment_dict(s));
            return py::make_tuple(segs, rep.skipped_features);
        },
        py::arg("geojson"), py::arg("city"),
        "Parse a GeoJSON FeatureCollection; returns (segments, skipped feature count).");

    m.def("schema_width", [] { return default_schema().width(); });
    m.def("schema_columns", [] { return default_schema().column_names(); });
    m.def(
        "normalize_tag",
        [](const std::string& key, const std::string& raw) -> py::object {
            const NormalizedTag t = normalize_tag(key, raw);
            if (!t.recognized) return py::none();
            return py::str(t.value);
        },
        py::arg("key"), py::arg("raw"), "Canonical value, or None when unrecognized.");
    m.def(
        "encode_tags",
        [](const std::map<std::string, std::string>& tags) {
            RoadSegment s;
            s.tags = tags;
            const auto bits = encode_segment(s, default_schema());
            return Eigen::VectorXd(Eigen::Map<const Eigen::Matrix<std::uint8_t, Eigen::Dynamic, 1>>(bits.data(),
                                                                                                  static_cast<Eigen::Index>(bits.size()))
                                       .cast<double>());
        },
        py::arg("tags"), "One-hot feature vector of a tag dict under the default schema.");

    m.def(
        "cell_of_point", [](double lon, double lat, int res) { return cell_of_point(lon, lat, res).str(); },
        py::arg("lon"), py::arg("lat"), py::arg("resolution") = kDefaultResolution);
    m.def(
        "cells_of_segment",
        [](const std::vector<std::pair<double, double>>& coords, int res) {
            return cell_strings(cells_of_segment(to_line(coords), res));
        },
        py::arg("coords"), py::arg("resolution") = kDefaultResolution,
        "Cells crossed by a [(lon, lat), ...] polyline, in order of first touch.");
    m.def(
        "cell_boundary",
        [](const std::string& cell) {
            std::vector<std::pair<double, double>> out;
            for (const auto& v : h3::cell_to_boundary(CellId::parse(cell).address())) out.emplace_back(v.lng, v.lat);
            return out;
        },
        py::arg("cell"));

    m.def(
        "train_autoencoder",
        [](const Eigen::MatrixXd& data, std::uint64_t seed, int epochs, int batch_size, double learning_rate,
           int hidden, int latent) {
            TrainConfig cfg;
            cfg.seed = seed;
            cfg.epochs = epochs;
            cfg.batch_size = batch_size;
            cfg.learning_rate = learning_rate;
            cfg.dims = {static_cast<int>(data.cols()), hidden, latent};
            TrainResult r;
            {
                py::gil_scoped_release release;
                r = train(data, cfg);
            }
            std::vector<std::tuple<int, double, double>> hist;
            for (const auto& e : r.history) hist.emplace_back(e.epoch, e.train_mse, e.test_mse);
            return py::make_tuple(model_to_json(r.params, seed, "1"), hist);
        },
        py::arg("data"), py::arg("seed") = 42, py::arg("epochs") = 50, py::arg("batch_size") = 200,
        py::arg("learning_rate") = 0.001, py::arg("hidden") = 64, py::arg("latent") = 30,
        "Train on a binary feature matrix; returns (model JSON, [(epoch, train_mse, test_mse)]).");
    m.def(
        "encode", [](const std::string& model_json, const Eigen::MatrixXd& x) { return encode(model_from_json(model_json), x); },
        py::arg("model_json"), py::arg("x"));
    m.def("mse_loss", &mse_loss, py::arg("x"), py::arg("x_hat"));

    m.def(
        "ward_linkage", [](const Eigen::MatrixXd& points) { return merges_array(ward_linkage(points)); },
        py::arg("points"), "Merges as rows (left, right, ward criterion, size).");
    m.def("adjusted_rand_index", &adjusted_rand_index, py::arg("a"), py::arg("b"));

    m.def(
        "pca_project",
        [](const Eigen::MatrixXd& x, int dims) {
            const PcaResult r = pca_project(x, dims);
            return py::make_tuple(r.coords, r.components, r.explained);
        },
        py::arg("x"), py::arg("dims") = 3, "Returns (coords, components, explained variance ratios).");
    m.def(
        "rgb_encode",
        [](const Eigen::MatrixXd& coords) { return rgb_encode(coords); }, py::arg("coords"));
    m.def(
        "tsne",
        [](const Eigen::MatrixXd& x, double perplexity, std::uint64_t seed, int iterations) {
            TsneConfig cfg;
            cfg.perplexity = perplexity;
            cfg.seed = seed;
            cfg.iterations = iterations;
            TsneResult r;
            {
                py::gil_scoped_release release;
                r = tsne_project(x, cfg);
            }
            return py::make_tuple(r.coords, r.kl, r.achieved);
        },
        py::arg("x"), py::arg("perplexity") = 100.0, py::arg("seed") = 42, py::arg("iterations") = 1000,
        "Exact t-SNE; returns (coords, [(iteration, KL)], per-point perplexity).");

    m.def("stages", &stage_names);
    m.def(
        "run_stage",
        [](const std::string& stage, const std::string& workspace, const py::dict& config) {
            const PipelineConfig cfg = config_from(workspace, config);
            StageOutcome o;
            {
                py::gil_scoped_release release;
                o = run_stage(stage, cfg);
            }
            return o.messages;
        },
        py::arg("stage"), py::arg("workspace"), py::arg("config") = py::dict(),
        "Run one pipeline stage; `config` uses the keys of the JSON config file.");
    m.def(
        "write_gridville",
        [](const std::string& dir, std::uint64_t seed) {
            GridvilleOptions opt;
            opt.seed = seed;
            write_gridville(dir, make_gridville(opt));
        },
        py::arg("directory"), py::arg("seed") = GridvilleOptions{}.seed);
}
