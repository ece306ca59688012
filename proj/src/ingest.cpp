#include "rfs/ingest.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "rfs/common.hpp"

namespace rfs::ingest {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return "";
    auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

bool parse_double(const std::string& field, double& out) {
    std::string t = trim(field);
    if (t.empty()) return false;
    const char* begin = t.data();
    const char* end = begin + t.size();
    auto res = std::from_chars(begin, end, out);
    return res.ec == std::errc() && res.ptr == end && std::isfinite(out);
}

std::string resolve_path(const std::string& path) {
    namespace fs = std::filesystem;
    if (fs::exists(path)) return path;
    if (!fs::path(path).is_absolute()) {
        if (const char* root = std::getenv("RFS_DATA_DIR")) {
            fs::path candidate = fs::path(root) / path;
            if (fs::exists(candidate)) return candidate.string();
        }
    }
    return path;
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& label_column, Eigen::Index limit,
                 std::optional<ClassMapping> mapping) {
    if (limit < 1) throw std::invalid_argument("load_csv: limit must be >= 1");
    std::string resolved = resolve_path(path);
    std::ifstream in(resolved);
    if (!in) throw std::runtime_error("load_csv: cannot open " + path);

    std::string line;
    long line_no = 0;
    if (!std::getline(in, line)) throw std::runtime_error("load_csv: empty file " + path);
    ++line_no;

    std::vector<std::string> first = split_fields(line);
    const std::size_t ncols = first.size();
    if (ncols < 2) throw std::runtime_error("load_csv: need at least two columns");

    // header if any field of the first line is not numeric
    double tmp;
    bool has_header = false;
    for (const auto& f : first)
        if (!parse_double(f, tmp)) { has_header = true; break; }

    std::vector<std::string> names(ncols);
    if (has_header)
        for (std::size_t i = 0; i < ncols; ++i) names[i] = trim(first[i]);
    else
        for (std::size_t i = 0; i < ncols; ++i) names[i] = "col" + std::to_string(i);

    // label column by name, then by index
    std::size_t label_idx = ncols;
    auto it = std::find(names.begin(), names.end(), label_column);
    if (it != names.end()) {
        label_idx = static_cast<std::size_t>(it - names.begin());
    } else {
        int idx;
        auto res = std::from_chars(label_column.data(), label_column.data() + label_column.size(), idx);
        if (res.ec == std::errc() && res.ptr == label_column.data() + label_column.size() &&
            idx >= 0 && static_cast<std::size_t>(idx) < ncols)
            label_idx = static_cast<std::size_t>(idx);
    }
    if (label_idx == ncols)
        throw std::runtime_error("load_csv: label column '" + label_column + "' not found");

    std::vector<std::vector<double>> rows;
    std::vector<double> labels;
    auto consume = [&](const std::vector<std::string>& fields, long ln) {
        if (fields.size() != ncols)
            throw std::runtime_error("load_csv: line " + std::to_string(ln) + " has " +
                                     std::to_string(fields.size()) + " fields, expected " +
                                     std::to_string(ncols));
        std::vector<double> row;
        row.reserve(ncols - 1);
        for (std::size_t i = 0; i < ncols; ++i) {
            double v;
            if (!parse_double(fields[i], v))
                throw std::runtime_error("load_csv: line " + std::to_string(ln) +
                                         ": cannot parse '" + trim(fields[i]) + "'");
            if (i == label_idx)
                labels.push_back(v);
            else
                row.push_back(v);
        }
        rows.push_back(std::move(row));
    };

    if (!has_header) consume(first, line_no);
    while (static_cast<Eigen::Index>(rows.size()) < limit && std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        consume(split_fields(line), line_no);
    }
    if (rows.empty()) throw std::runtime_error("load_csv: no data rows in " + path);

    Dataset ds;
    ds.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(ncols - 1));
    ds.y.resize(static_cast<Eigen::Index>(rows.size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j + 1 < ncols; ++j) ds.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        ds.y(static_cast<Eigen::Index>(i)) = labels[i];
    }
    ds.source = path;
    for (std::size_t i = 0; i < ncols; ++i)
        if (i != label_idx) ds.feature_names.push_back(names[i]);

    if (mapping) {
        ds.classification = true;
        for (Eigen::Index i = 0; i < ds.y.size(); ++i) {
            if (ds.y(i) == mapping->raw_negative)
                ds.y(i) = -1.0;
            else if (ds.y(i) == mapping->raw_positive)
                ds.y(i) = 1.0;
            else
                throw std::runtime_error("load_csv: label " + std::to_string(ds.y(i)) +
                                         " not covered by the class mapping");
        }
    }
    return ds;
}

void save_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_csv: cannot open " + path);
    out.precision(17);
    for (const auto& name : ds.feature_names) out << name << ',';
    out << "label\n";
    for (Eigen::Index i = 0; i < ds.n(); ++i) {
        for (Eigen::Index j = 0; j < ds.dim(); ++j) out << ds.X(i, j) << ',';
        out << ds.y(i) << '\n';
    }
}

std::pair<Dataset, ColumnTransform> standardize(const Dataset& ds) {
    if (ds.n() < 2) throw std::invalid_argument("standardize: need at least two rows");
    ColumnTransform t;
    t.mean = ds.X.colwise().mean();
    Eigen::MatrixXd centered = ds.X.rowwise() - t.mean.transpose();
    t.std = (centered.array().square().colwise().mean()).sqrt();
    for (Eigen::Index j = 0; j < t.std.size(); ++j)
        if (t.std(j) < 1e-12) t.std(j) = 0.0;
    return {apply_transform(ds, t), t};
}

Dataset apply_transform(const Dataset& ds, const ColumnTransform& t) {
    if (ds.dim() != t.mean.size())
        throw std::invalid_argument("apply_transform: column count mismatch");
    Dataset out = ds;
    for (Eigen::Index j = 0; j < ds.dim(); ++j) {
        if (t.std(j) == 0.0)
            out.X.col(j).setZero();
        else
            out.X.col(j) = (ds.X.col(j).array() - t.mean(j)) / t.std(j);
    }
    return out;
}

std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, std::uint64_t seed) {
    if (!(train_fraction > 0.0) || !(train_fraction < 1.0))
        throw std::invalid_argument("split: fraction must lie in (0,1)");
    if (ds.n() < 2) throw std::invalid_argument("split: need at least two rows");
    const Eigen::Index n = ds.n();
    Eigen::Index n_train = static_cast<Eigen::Index>(
        std::floor(train_fraction * static_cast<double>(n) + 1e-9));
    if (n_train < 1 || n_train >= n)
        throw std::invalid_argument("split: degenerate split (one side would be empty)");

    std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), 0);
    auto rng = make_rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);

    auto take = [&](Eigen::Index begin, Eigen::Index count) {
        Dataset part;
        part.X.resize(count, ds.dim());
        part.y.resize(count);
        for (Eigen::Index i = 0; i < count; ++i) {
            part.X.row(i) = ds.X.row(perm[static_cast<std::size_t>(begin + i)]);
            part.y(i) = ds.y(perm[static_cast<std::size_t>(begin + i)]);
        }
        part.source = ds.source;
        part.classification = ds.classification;
        part.feature_names = ds.feature_names;
        return part;
    };
    return {take(0, n_train), take(n_train, n - n_train)};
}

Dataset make_blobs(Eigen::Index n, int d, double separation, std::uint64_t seed) {
    if (n < 2) throw std::invalid_argument("make_blobs: n must be >= 2");
    if (d < 1) throw std::invalid_argument("make_blobs: d must be >= 1");
    auto rng = make_rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::bernoulli_distribution coin(0.5);

    Eigen::VectorXd dir = Eigen::VectorXd::Zero(d);
    dir(0) = 1.0;  // blob axis
    Dataset ds;
    ds.X.resize(n, d);
    ds.y.resize(n);
    ds.classification = true;
    ds.source = "blobs(d=" + std::to_string(d) + ")";
    for (Eigen::Index i = 0; i < n; ++i) {
        double label = coin(rng) ? 1.0 : -1.0;
        for (int j = 0; j < d; ++j) ds.X(i, j) = gauss(rng);
        ds.X.row(i) += (label * separation / 2.0) * dir.transpose();
        ds.y(i) = label;
    }
    return ds;
}

}  // namespace rfs::ingest
