#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "tpch/error.hpp"
#include "tpch/kernelizer.hpp"

namespace tpch {

namespace fs = std::filesystem;

struct MultiViewData {
    std::vector<ViewMatrix> views;          ///< each d_p x n
    std::optional<std::vector<Index>> labels;
    std::string name;

    Index samples() const { return views.empty() ? 0 : views.front().cols(); }
};

namespace detail {

inline std::string where(const fs::path &file, std::size_t line) {
    return file.filename().string() + ":" + std::to_string(line);
}

inline double parse_double(std::string_view field, const fs::path &file, std::size_t line) {
    while (!field.empty() && (field.front() == ' ' || field.front() == '\t'))
        field.remove_prefix(1);
    while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r'))
        field.remove_suffix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc() || ptr != field.data() + field.size() || field.empty())
        fail(Errc::ParseError, where(file, line) + ": bad number '" + std::string(field) + "'");
    if (!std::isfinite(value))
        fail(Errc::ParseError, where(file, line) + ": non-finite value");
    return value;
}

inline std::string format_double(double x) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, x, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

/// One row per feature, one comma-separated column per sample.
inline ViewMatrix read_view_csv(const fs::path &file) {
    std::ifstream in(file);
    if (!in)
        fail(Errc::IoError, "cannot open " + file.string());
    std::vector<std::vector<double>> rows;
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        if (!text.empty() && text.back() == '\r')
            text.pop_back();
        if (text.empty())
            continue;
        std::vector<double> row;
        std::size_t start = 0;
        while (true) {
            const std::size_t comma = text.find(',', start);
            const auto field = std::string_view(text).substr(
                start, comma == std::string::npos ? std::string::npos : comma - start);
            row.push_back(parse_double(field, file, line));
            if (comma == std::string::npos)
                break;
            start = comma + 1;
        }
        if (!rows.empty() && row.size() != rows.front().size())
            fail(Errc::RaggedRows, where(file, line) + ": " + std::to_string(row.size()) +
                                       " columns, expected " +
                                       std::to_string(rows.front().size()));
        rows.push_back(std::move(row));
    }
    if (rows.empty())
        fail(Errc::ParseError, file.filename().string() + ": no data rows");
    ViewMatrix m(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            m(static_cast<Index>(r), static_cast<Index>(c)) = rows[r][c];
    return m;
}

inline std::vector<Index> read_labels(const fs::path &file) {
    std::ifstream in(file);
    if (!in)
        fail(Errc::IoError, "cannot open " + file.string());
    std::vector<Index> labels;
    std::string text;
    std::size_t line = 0;
    while (std::getline(in, text)) {
        ++line;
        std::string_view f(text);
        while (!f.empty() && (f.back() == '\r' || f.back() == ' ' || f.back() == '\t'))
            f.remove_suffix(1);
        while (!f.empty() && (f.front() == ' ' || f.front() == '\t'))
            f.remove_prefix(1);
        if (f.empty())
            continue;
        long long v = 0;
        const auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
        if (ec != std::errc() || ptr != f.data() + f.size())
            fail(Errc::ParseError, where(file, line) + ": bad label '" + std::string(f) + "'");
        labels.push_back(static_cast<Index>(v));
    }
    return labels;
}

inline void write_text(const fs::path &file, const std::string &content) {
    std::ofstream out(file, std::ios::binary | std::ios::trunc);
    if (!out)
        fail(Errc::IoError, "cannot write " + file.string());
    out << content;
    if (!out)
        fail(Errc::IoError, "write failed for " + file.string());
}

} // namespace detail

inline fs::path view_file(const fs::path &dir, std::size_t p) {
    return dir / ("view_" + std::to_string(p + 1) + ".csv");
}

inline void write_labels(const fs::path &file, const std::vector<Index> &labels) {
    std::string text;
    for (Index v : labels)
        text += std::to_string(v) + "\n";
    detail::write_text(file, text);
}

/// Reads view_1.csv, view_2.csv, ... plus optional labels.csv and meta.json.
inline MultiViewData load_multiview(const fs::path &dir) {
    if (!fs::is_directory(dir))
        fail(Errc::MissingView, dir.string() + " is not a directory");

    std::optional<nlohmann::json> meta;
    if (fs::exists(dir / "meta.json")) {
        std::ifstream in(dir / "meta.json");
        try {
            meta = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception &e) {
            fail(Errc::ParseError, "meta.json: " + std::string(e.what()));
        }
    }

    MultiViewData data;
    data.name = dir.filename().string();
    if (data.name.empty())
        data.name = dir.parent_path().filename().string();
    for (std::size_t p = 0; fs::exists(view_file(dir, p)); ++p)
        data.views.push_back(detail::read_view_csv(view_file(dir, p)));
    if (data.views.empty())
        fail(Errc::MissingView, "no view_1.csv in " + dir.string());

    const Index n = data.views.front().cols();
    for (std::size_t p = 1; p < data.views.size(); ++p)
        if (data.views[p].cols() != n)
            fail(Errc::RaggedRows, view_file(dir, p).filename().string() + ": " +
                                       std::to_string(data.views[p].cols()) +
                                       " samples, view_1.csv has " + std::to_string(n));

    if (fs::exists(dir / "labels.csv")) {
        auto labels = detail::read_labels(dir / "labels.csv");
        if (static_cast<Index>(labels.size()) != n)
            fail(Errc::LabelLengthMismatch, "labels.csv has " + std::to_string(labels.size()) +
                                                " entries for " + std::to_string(n) + " samples");
        data.labels = std::move(labels);
    }

    if (meta) {
        try {
            if (meta->contains("name"))
                data.name = meta->at("name").get<std::string>();
            if (meta->contains("v")) {
                const auto v = meta->at("v").get<std::size_t>();
                if (v > data.views.size())
                    fail(Errc::MissingView, "meta.json declares " + std::to_string(v) +
                                                " views, missing " +
                                                view_file(dir, data.views.size()).filename().string());
                if (v < data.views.size())
                    fail(Errc::ParseError, "meta.json declares " + std::to_string(v) +
                                               " views but more view files exist");
            }
            if (meta->contains("n") && meta->at("n").get<Index>() != n)
                fail(Errc::RaggedRows, "meta.json declares n = " +
                                           std::to_string(meta->at("n").get<Index>()) +
                                           ", files have " + std::to_string(n));
            if (meta->contains("dims")) {
                const auto dims = meta->at("dims").get<std::vector<Index>>();
                for (std::size_t p = 0; p < dims.size() && p < data.views.size(); ++p)
                    if (dims[p] != data.views[p].rows())
                        fail(Errc::RaggedRows, view_file(dir, p).filename().string() + " has " +
                                                   std::to_string(data.views[p].rows()) +
                                                   " rows, meta.json says " +
                                                   std::to_string(dims[p]));
            }
        } catch (const nlohmann::json::exception &e) {
            fail(Errc::ParseError, "meta.json: " + std::string(e.what()));
        }
    }
    return data;
}

/// Writes the directory format read by load_multiview. Refuses to replace an existing
/// dataset unless overwrite is set.
inline void save_multiview(const MultiViewData &data, const fs::path &dir, bool overwrite = false) {
    require(!data.views.empty(), Errc::Empty, "dataset has no views");
    std::error_code ec;
    if (!overwrite && (fs::exists(view_file(dir, 0)) || fs::exists(dir / "meta.json") ||
                       fs::exists(dir / "labels.csv")))
        fail(Errc::IoError, dir.string() + " already holds a dataset; pass overwrite to replace it");
    fs::create_directories(dir, ec);
    if (ec)
        fail(Errc::IoError, "cannot create " + dir.string() + ": " + ec.message());
    if (overwrite) {
        for (std::size_t p = 0; fs::exists(view_file(dir, p)); ++p)
            fs::remove(view_file(dir, p));
        fs::remove(dir / "labels.csv");
    }

    nlohmann::json meta;
    meta["name"] = data.name;
    meta["v"] = data.views.size();
    meta["n"] = data.samples();
    std::vector<Index> dims;
    for (std::size_t p = 0; p < data.views.size(); ++p) {
        const auto &x = data.views[p];
        require(x.cols() == data.samples(), Errc::InconsistentSampleCounts,
                "views disagree on sample count");
        dims.push_back(x.rows());
        std::string text;
        for (Index r = 0; r < x.rows(); ++r) {
            for (Index c = 0; c < x.cols(); ++c) {
                if (c > 0)
                    text += ',';
                text += detail::format_double(x(r, c));
            }
            text += '\n';
        }
        detail::write_text(view_file(dir, p), text);
    }
    meta["dims"] = dims;
    if (data.labels) {
        require(static_cast<Index>(data.labels->size()) == data.samples(),
                Errc::LabelLengthMismatch, "label count differs from sample count");
        write_labels(dir / "labels.csv", *data.labels);
    }
    detail::write_text(dir / "meta.json", meta.dump(2) + "\n");
}

/// Cluster means used by gen_synthetic_gaussian: per view a dims[p] x k matrix whose
/// columns lie on the sphere of radius sep.
inline std::vector<Eigen::MatrixXd> synthetic_means(Index k, const std::vector<Index> &dims,
                                                    double sep, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<Eigen::MatrixXd> means;
    for (Index d : dims) {
        Eigen::MatrixXd mu(d, k);
        for (Index j = 0; j < k; ++j) {
            Eigen::VectorXd dir(d);
            do {
                for (Index r = 0; r < d; ++r)
                    dir(r) = normal(rng);
            } while (dir.norm() == 0.0);
            mu.col(j) = sep * dir.normalized();
        }
        means.push_back(std::move(mu));
    }
    return means;
}

/// k Gaussian clusters per view (unit isotropic variance around sphere-placed means),
/// sample i labelled i mod k.
inline MultiViewData gen_synthetic_gaussian(Index k, Index v, Index n, const std::vector<Index> &dims,
                                            double sep, std::uint64_t seed) {
    require(k >= 1 && n >= k, Errc::InvalidArgs, "need k >= 1 and n >= k");
    require(v >= 1 && static_cast<Index>(dims.size()) == v, Errc::InvalidArgs,
            "one dimensionality per view required");
    require(sep >= 0.0 && std::isfinite(sep), Errc::InvalidArgs, "sep must be >= 0");
    for (Index d : dims)
        require(d >= 1, Errc::InvalidArgs, "view dimensionality must be >= 1");

    const auto means = synthetic_means(k, dims, sep, seed);
    // Samples come from a second stream so the means stay reproducible on their own.
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::normal_distribution<double> normal(0.0, 1.0);

    MultiViewData data;
    data.name = "synthetic_gaussian";
    std::vector<Index> labels(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i)
        labels[static_cast<std::size_t>(i)] = i % k;
    for (Index p = 0; p < v; ++p) {
        const auto &mu = means[static_cast<std::size_t>(p)];
        ViewMatrix x(mu.rows(), n);
        for (Index i = 0; i < n; ++i)
            for (Index r = 0; r < mu.rows(); ++r)
                x(r, i) = mu(r, i % k) + normal(rng);
        data.views.push_back(std::move(x));
    }
    data.labels = std::move(labels);
    return data;
}

namespace detail {

inline std::vector<Index> draw_positions(Index total, double ratio, std::mt19937_64 &rng) {
    require(ratio >= 0.0 && ratio <= 1.0, Errc::InvalidRatio,
            "noise ratio must lie in [0, 1], got " + std::to_string(ratio));
    const auto count = static_cast<Index>(std::floor(ratio * static_cast<double>(total) + 1e-9));
    std::vector<Index> perm(static_cast<std::size_t>(total));
    for (Index i = 0; i < total; ++i)
        perm[static_cast<std::size_t>(i)] = i;
    for (Index i = 0; i < count; ++i) {
        std::uniform_int_distribution<Index> pick(i, total - 1);
        std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(pick(rng))]);
    }
    perm.resize(static_cast<std::size_t>(count));
    return perm;
}

} // namespace detail

/// Positions (column-major linear indices) hit by salt_pepper with the same arguments.
inline std::vector<Index> salt_pepper_positions(Index total, double ratio, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    return detail::draw_positions(total, ratio, rng);
}

/// Sets floor(ratio * size) distinct entries to the view's global minimum or maximum,
/// each with probability 1/2.
inline ViewMatrix salt_pepper(const ViewMatrix &view, double ratio, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const auto positions = detail::draw_positions(view.size(), ratio, rng);
    ViewMatrix out = view;
    if (positions.empty())
        return out;
    const double lo = view.minCoeff(), hi = view.maxCoeff();
    std::bernoulli_distribution salt(0.5);
    for (Index pos : positions)
        out.data()[pos] = salt(rng) ? hi : lo;
    return out;
}

/// Applies salt_pepper to every view with per-view seeds seed + p.
inline MultiViewData salt_pepper(const MultiViewData &data, double ratio, std::uint64_t seed) {
    MultiViewData out = data;
    for (std::size_t p = 0; p < out.views.size(); ++p)
        out.views[p] = salt_pepper(data.views[p], ratio, seed + p);
    return out;
}

} // namespace tpch
