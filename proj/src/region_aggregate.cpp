#include "hexembed/region_aggregate.hpp"

#include "hexembed/error.hpp"
#include "hexembed/io.hpp"
#include "hexembed/parallel.hpp"

#include <cmath>
#include <numbers>
#include <set>

namespace hexembed {

RegionEmbeddings aggregate_mean(const CellAssignment& assignment, const SegmentEmbeddings& segments,
                                const std::unordered_map<std::string, double>* weights) {
    RegionEmbeddings out;
    const std::size_t n = assignment.cell_to_segments.size();
    out.keys.reserve(n);
    std::vector<const std::vector<std::string>*> members;
    members.reserve(n);
    for (const auto& [cell, ids] : assignment.cell_to_segments) {
        out.keys.push_back(cell);
        members.push_back(&ids);
    }
    // Resolve every member up front so the error names the first missing id.
    std::vector<std::vector<std::size_t>> rows(n);
    for (std::size_t c = 0; c < n; ++c) {
        for (const auto& id : *members[c]) {
            auto r = segments.find(id);
            if (!r) throw DataError("segment '" + id + "' has no embedding");
            rows[c].push_back(*r);
        }
        if (weights) {
            for (const auto& id : *members[c]) {
                auto it = weights->find(id);
                if (it == weights->end() || !(it->second > 0.0) || !std::isfinite(it->second)) {
                    throw DataError("segment '" + id + "' has no positive weight");
                }
            }
        }
    }

    out.values.resize(static_cast<Eigen::Index>(n), segments.dim());
    out.segment_counts.resize(n);
    parallel_for(n, [&](std::size_t c) {
        Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(segments.dim());
        double total = 0.0;
        for (std::size_t m = 0; m < rows[c].size(); ++m) {
            const double w = weights ? weights->at((*members[c])[m]) : 1.0;
            sum += w * segments.values.row(static_cast<Eigen::Index>(rows[c][m]));
            total += w;
        }
        out.values.row(static_cast<Eigen::Index>(c)) = sum / total;
        out.segment_counts[c] = rows[c].size();
    });
    return out;
}

Eigen::VectorXd region_feature_share(const CellAssignment& assignment, const FeatureMatrix& features,
                                     const std::vector<CellId>& region_set, ShareMode mode) {
    std::unordered_map<std::string, std::size_t> row_of;
    for (std::size_t i = 0; i < features.ids.size(); ++i) row_of.emplace(features.ids[i], i);

    std::vector<std::size_t> rows;
    std::set<std::string> seen;
    for (const auto& cell : region_set) {
        auto it = assignment.cell_to_segments.find(cell);
        if (it == assignment.cell_to_segments.end()) continue;
        for (const auto& id : it->second) {
            if (mode == ShareMode::Unique && !seen.insert(id).second) continue;
            auto r = row_of.find(id);
            if (r == row_of.end()) throw DataError("segment '" + id + "' has no feature row");
            rows.push_back(r->second);
        }
    }
    if (rows.empty()) throw DataError("region set has no member segments");

    Eigen::VectorXd share = Eigen::VectorXd::Zero(features.bits.cols());
    for (std::size_t r : rows) {
        share += features.bits.row(static_cast<Eigen::Index>(r)).cast<double>().transpose();
    }
    return share / static_cast<double>(rows.size());
}

double polyline_length_m(const std::vector<LonLat>& g) {
    constexpr double deg = std::numbers::pi / 180.0;
    constexpr double radius = 6371007.180918475;
    double total = 0.0;
    for (std::size_t i = 1; i < g.size(); ++i) {
        const double mean_lat = 0.5 * (g[i - 1].lat + g[i].lat) * deg;
        total += radius * std::hypot((g[i].lon - g[i - 1].lon) * deg * std::cos(mean_lat),
                                     (g[i].lat - g[i - 1].lat) * deg);
    }
    return total;
}

namespace {

io::CsvRow value_header(const std::string& first, Eigen::Index dim) {
    io::CsvRow h{first};
    for (Eigen::Index j = 0; j < dim; ++j) h.push_back("v" + std::to_string(j));
    return h;
}

void append_values(std::string& out, const Eigen::MatrixXd& m, Eigen::Index row) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        out += ',';
        out += io::format_double(m(row, j));
    }
}

Eigen::Index value_columns(const io::CsvTable& t, std::size_t skip_tail) {
    const auto n = static_cast<Eigen::Index>(t.header.size()) - 1 - static_cast<Eigen::Index>(skip_tail);
    for (Eigen::Index j = 0; j < n; ++j) {
        if (t.header[static_cast<std::size_t>(j + 1)] != "v" + std::to_string(j)) {
            throw DataError("unexpected embedding column '" + t.header[static_cast<std::size_t>(j + 1)] + "'");
        }
    }
    return n;
}

}  // namespace

void write_segment_embeddings_csv(const std::filesystem::path& path, const SegmentEmbeddings& e) {
    std::string out = io::csv_line(value_header("segment_id", e.dim()));
    for (std::size_t i = 0; i < e.size(); ++i) {
        out += io::csv_escape(e.keys[i]);
        append_values(out, e.values, static_cast<Eigen::Index>(i));
        out += '\n';
    }
    io::write_file(path, out);
}

SegmentEmbeddings read_segment_embeddings_csv(const std::filesystem::path& path) {
    const io::CsvTable t = io::read_csv(path);
    const Eigen::Index dim = value_columns(t, 0);
    SegmentEmbeddings e;
    e.values.resize(static_cast<Eigen::Index>(t.rows.size()), dim);
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        e.keys.push_back(t.rows[i][0]);
        for (Eigen::Index j = 0; j < dim; ++j) {
            e.values(static_cast<Eigen::Index>(i), j) = io::parse_double(t.rows[i][static_cast<std::size_t>(j + 1)]);
        }
    }
    return e;
}

void write_region_embeddings_csv(const std::filesystem::path& path, const RegionEmbeddings& r) {
    io::CsvRow header = value_header("cell_address", r.dim());
    header.push_back("segment_count");
    std::string out = io::csv_line(header);
    for (std::size_t i = 0; i < r.size(); ++i) {
        out += r.keys[i].str();
        append_values(out, r.values, static_cast<Eigen::Index>(i));
        out += ',' + std::to_string(r.segment_counts[i]) + '\n';
    }
    io::write_file(path, out);
}

RegionEmbeddings read_region_embeddings_csv(const std::filesystem::path& path) {
    const io::CsvTable t = io::read_csv(path);
    if (t.header.back() != "segment_count") throw DataError(path.string() + ": last column must be segment_count");
    const Eigen::Index dim = value_columns(t, 1);
    RegionEmbeddings r;
    r.values.resize(static_cast<Eigen::Index>(t.rows.size()), dim);
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        r.keys.push_back(CellId::parse(t.rows[i][0]));
        for (Eigen::Index j = 0; j < dim; ++j) {
            r.values(static_cast<Eigen::Index>(i), j) = io::parse_double(t.rows[i][static_cast<std::size_t>(j + 1)]);
        }
        r.segment_counts.push_back(static_cast<std::size_t>(io::parse_int(t.rows[i].back())));
    }
    return r;
}

}  // namespace hexembed
