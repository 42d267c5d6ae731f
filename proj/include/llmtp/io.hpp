#pragma once

#include <llmtp/anchor.hpp>
#include <llmtp/error.hpp>
#include <llmtp/solver.hpp>

#include <nlohmann/json.hpp>

#include <Eigen/Dense>

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace llmtp::io {

namespace fs = std::filesystem;

/// JSON manifest: {"name", "views": [paths], "labels"?, "delimiter"?}.
/// Relative paths are resolved against the manifest's directory.
struct DatasetManifest {
    std::string name;
    std::vector<fs::path> views;
    std::optional<fs::path> labels;
    char delimiter = ',';
    std::optional<Index> expected_samples;
    std::optional<Index> expected_views;

    static DatasetManifest from_json(const nlohmann::json& j, const fs::path& base = {}) {
        DatasetManifest m;
        try {
            m.name = j.value("name", std::string("dataset"));
            for (const auto& v : j.at("views"))
                m.views.push_back(base / fs::path(v.get<std::string>()));
            if (j.contains("labels") && !j.at("labels").is_null())
                m.labels = base / fs::path(j.at("labels").get<std::string>());
            const std::string delim = j.value("delimiter", std::string(","));
            if (delim.size() != 1 && delim != "\\t")
                throw InvalidArgument("manifest delimiter must be a single character");
            m.delimiter = delim == "\\t" ? '\t' : delim[0];
            if (j.contains("n"))
                m.expected_samples = j.at("n").get<Index>();
            if (j.contains("V"))
                m.expected_views = j.at("V").get<Index>();
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("manifest", 0, 0, std::string("malformed manifest: ") + e.what());
        }
        if (m.views.empty())
            throw InvalidArgument("manifest lists no views");
        return m;
    }

    static DatasetManifest from_file(const fs::path& path) {
        std::ifstream in(path);
        if (!in)
            throw InvalidArgument("cannot open manifest " + path.string());
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(path.string(), 1, e.byte, e.what());
        }
        return from_json(j, path.parent_path());
    }

    /// Paths are written relative to `base` when they live below it.
    nlohmann::json to_json(const fs::path& base = {}) const {
        auto rel = [&](const fs::path& p) {
            return base.empty() ? p.generic_string() : p.lexically_relative(base).generic_string();
        };
        nlohmann::json j;
        j["name"] = name;
        j["views"] = nlohmann::json::array();
        for (const auto& v : views)
            j["views"].push_back(rel(v));
        if (labels)
            j["labels"] = rel(*labels);
        j["delimiter"] = std::string(1, delimiter);
        return j;
    }
};

namespace detail {

inline std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double parse_number(std::string_view tok, const std::string& file, std::size_t line,
                           std::size_t column) {
    tok = trim(tok);
    if (!tok.empty() && tok.front() == '+')
        tok.remove_prefix(1);
    double value = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
    if (tok.empty() || ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(value))
        throw ParseError(file, line, column, "not a finite number: '" + std::string(tok) + "'");
    return value;
}

/// Splits on the delimiter; whitespace delimiters collapse runs.
inline std::vector<std::pair<std::string_view, std::size_t>> split(std::string_view line,
                                                                   char delim) {
    std::vector<std::pair<std::string_view, std::size_t>> out;
    const bool ws = delim == ' ' || delim == '\t';
    std::size_t pos = 0;
    while (pos <= line.size()) {
        if (ws) {
            pos = line.find_first_not_of(" \t\r", pos);
            if (pos == std::string_view::npos)
                break;
            auto end = line.find_first_of(" \t\r", pos);
            if (end == std::string_view::npos)
                end = line.size();
            out.emplace_back(line.substr(pos, end - pos), pos + 1);
            pos = end;
            continue;
        }
        auto end = line.find(delim, pos);
        if (end == std::string_view::npos)
            end = line.size();
        out.emplace_back(line.substr(pos, end - pos), pos + 1);
        pos = end + 1;
    }
    return out;
}

} // namespace detail

/// Delimiter-separated numeric matrix, one row per non-empty line.
inline Eigen::MatrixXd read_matrix(const fs::path& path, char delimiter = ',') {
    std::ifstream in(path);
    if (!in)
        throw ParseError(path.string(), 0, 0, "cannot open file");
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (detail::trim(line).empty())
            continue;
        std::vector<double> row;
        for (const auto& [tok, col] : detail::split(line, delimiter))
            row.push_back(detail::parse_number(tok, path.string(), lineno, col));
        if (!rows.empty() && row.size() != rows.front().size())
            throw ParseError(path.string(), lineno, 1,
                             "expected " + std::to_string(rows.front().size()) + " columns, got " +
                                 std::to_string(row.size()));
        rows.push_back(std::move(row));
    }
    if (rows.empty())
        throw ParseError(path.string(), lineno, 0, "no data rows");
    Eigen::MatrixXd m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
    return m;
}

/// One non-negative integer per line. A trailing ",label" column (as in
/// labels.csv written by this library) is also accepted.
inline std::vector<int> read_labels(const fs::path& path) {
    std::ifstream in(path);
    if (!in)
        throw ParseError(path.string(), 0, 0, "cannot open file");
    std::vector<int> labels;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string_view s = detail::trim(line);
        if (s.empty())
            continue;
        std::size_t column = 1;
        if (auto comma = s.rfind(','); comma != std::string_view::npos) {
            column = comma + 2;
            s = detail::trim(s.substr(comma + 1));
        }
        if (lineno == 1 && s == "label")
            continue;
        int v = 0;
        const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
        if (ec != std::errc() || ptr != s.data() + s.size() || v < 0)
            throw ParseError(path.string(), lineno, column,
                             "not a non-negative integer label: '" + std::string(s) + "'");
        labels.push_back(v);
    }
    return labels;
}

inline MultiViewDataset load_dataset(const DatasetManifest& manifest) {
    MultiViewDataset data;
    data.name = manifest.name;
    for (const auto& p : manifest.views)
        data.views.push_back(read_matrix(p, manifest.delimiter));
    for (std::size_t v = 1; v < data.views.size(); ++v)
        if (data.views[v].rows() != data.views[0].rows())
            throw ShapeMismatch("view " + manifest.views[v].string() + " has " +
                                std::to_string(data.views[v].rows()) + " rows, view " +
                                manifest.views[0].string() + " has " +
                                std::to_string(data.views[0].rows()));
    if (manifest.labels)
        data.labels = read_labels(*manifest.labels);
    if (manifest.expected_samples && *manifest.expected_samples != data.samples())
        throw ShapeMismatch("manifest declares n=" + std::to_string(*manifest.expected_samples) +
                            ", files hold " + std::to_string(data.samples()));
    if (manifest.expected_views && *manifest.expected_views != data.view_count())
        throw ShapeMismatch("manifest declares V=" + std::to_string(*manifest.expected_views) +
                            ", lists " + std::to_string(data.view_count()));
    data.validate();
    return data;
}

// ---------------------------------------------------------------------------
// Synthetic data

struct SyntheticSpec {
    Index samples = 300;
    int clusters = 4;
    std::vector<Index> dims{4, 8, 16};
    /// Minimum pairwise distance between cluster means, in units of noise.
    double separation = 8.0;
    double noise = 1.0;
    std::uint64_t seed = 0;

    Index views() const { return static_cast<Index>(dims.size()); }
};

/// Gaussian blobs with labels shared across views: sample i belongs to
/// cluster i mod K, and each view draws its own cluster means.
inline MultiViewDataset generate_synthetic(const SyntheticSpec& spec) {
    if (spec.clusters < 2 || spec.samples < 2 * spec.clusters)
        throw InvalidArgument("generate_synthetic: need K >= 2 and n >= 2K");
    if (spec.dims.empty())
        throw InvalidArgument("generate_synthetic: need at least one view");
    for (auto d : spec.dims)
        if (d < 1)
            throw InvalidArgument("generate_synthetic: view dimensions must be positive");
    if (!(spec.noise > 0) || !(spec.separation > 0))
        throw InvalidArgument("generate_synthetic: noise and separation must be positive");

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> gauss;
    MultiViewDataset data;
    data.name = "synthetic";
    data.labels = std::vector<int>(static_cast<std::size_t>(spec.samples));
    for (Index i = 0; i < spec.samples; ++i)
        (*data.labels)[static_cast<std::size_t>(i)] = static_cast<int>(i % spec.clusters);

    const double gap = spec.separation * spec.noise;
    for (Index d : spec.dims) {
        Eigen::MatrixXd means(spec.clusters, d);
        double scale = gap;
        for (int attempt = 0;; ++attempt) {
            for (Index r = 0; r < means.rows(); ++r)
                for (Index c = 0; c < d; ++c)
                    means(r, c) = scale * gauss(rng);
            double closest = std::numeric_limits<double>::infinity();
            for (Index a = 0; a < means.rows(); ++a)
                for (Index b = a + 1; b < means.rows(); ++b)
                    closest = std::min(closest, (means.row(a) - means.row(b)).norm());
            if (closest >= gap)
                break;
            if (attempt % 20 == 19)
                scale *= 1.5;
        }
        Eigen::MatrixXd x(spec.samples, d);
        for (Index i = 0; i < spec.samples; ++i)
            for (Index c = 0; c < d; ++c)
                x(i, c) = means(i % spec.clusters, c) + spec.noise * gauss(rng);
        data.views.push_back(std::move(x));
    }
    return data;
}

// ---------------------------------------------------------------------------
// Writers. Numbers use 17 significant digits so re-parsing is exact.

inline std::string format_double(double v) {
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os.precision(17);
    os << v;
    return os.str();
}

inline std::ofstream open_output(const fs::path& path) {
    if (path.has_parent_path())
        fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw InvalidArgument("cannot write " + path.string());
    return out;
}

inline void write_matrix(const fs::path& path, const Eigen::MatrixXd& m, char delimiter = ',') {
    auto out = open_output(path);
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j)
                out << delimiter;
            out << format_double(m(i, j));
        }
        out << '\n';
    }
}

/// labels.csv: "index,label" header then one row per sample.
inline void write_labels_csv(const fs::path& path, const std::vector<int>& labels) {
    auto out = open_output(path);
    out << "index,label\n";
    for (std::size_t i = 0; i < labels.size(); ++i)
        out << i << ',' << labels[i] << '\n';
}

/// Plain label file, one integer per line (the manifest's labels format).
inline void write_label_lines(const fs::path& path, const std::vector<int>& labels) {
    auto out = open_output(path);
    for (int l : labels)
        out << l << '\n';
}

/// trace.csv: iter,res_q,res_j[,acc]
inline void write_trace_csv(const fs::path& path, const std::vector<ResidualRecord>& trace,
                            const std::vector<double>& acc = {}) {
    auto out = open_output(path);
    out << "iter,res_q,res_j" << (acc.empty() ? "" : ",acc") << '\n';
    for (std::size_t i = 0; i < trace.size(); ++i) {
        out << trace[i].iter << ',' << format_double(trace[i].res_q) << ','
            << format_double(trace[i].res_j);
        if (!acc.empty())
            out << ',' << format_double(acc[i]);
        out << '\n';
    }
}

/// Writes view_<v>.csv, labels.txt and manifest.json into dir.
inline DatasetManifest write_dataset(const MultiViewDataset& data, const fs::path& dir) {
    DatasetManifest m;
    m.name = data.name;
    for (std::size_t v = 0; v < data.views.size(); ++v) {
        m.views.push_back(dir / ("view_" + std::to_string(v) + ".csv"));
        write_matrix(m.views.back(), data.views[v]);
    }
    if (data.labels) {
        m.labels = dir / "labels.txt";
        write_label_lines(*m.labels, *data.labels);
    }
    auto out = open_output(dir / "manifest.json");
    out << m.to_json(dir).dump(2) << '\n';
    return m;
}

} // namespace llmtp::io
