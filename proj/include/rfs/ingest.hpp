#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>

#include "rfs/dataset.hpp"

namespace rfs::ingest {

// Binary label recoding, e.g. {0 -> -1, 1 -> +1}.
struct ClassMapping {
    double raw_negative = 0.0;
    double raw_positive = 1.0;
};

// Loads a comma-separated file: optional header line, decimal floats, label
// column selected by name or 0-based index. At most `limit` rows in file
// order. Malformed cells are reported with their line number. Relative paths
// are also resolved against $RFS_DATA_DIR.
Dataset load_csv(const std::string& path, const std::string& label_column, Eigen::Index limit,
                 std::optional<ClassMapping> mapping = std::nullopt);

void save_csv(const Dataset& ds, const std::string& path);

struct ColumnTransform {
    Eigen::VectorXd mean;
    Eigen::VectorXd std;  // 0 recorded for constant columns
};

// Column-wise standardization (population convention). Constant columns map
// to all zeros with std recorded as 0.
std::pair<Dataset, ColumnTransform> standardize(const Dataset& ds);

// Applies stored training statistics to another dataset (e.g. the test split).
Dataset apply_transform(const Dataset& ds, const ColumnTransform& t);

// Seeded shuffle split; train gets floor(fraction*n) rows, test the rest.
std::pair<Dataset, Dataset> split(const Dataset& ds, double train_fraction, std::uint64_t seed);

// Offline stand-in for binary classification experiments: two Gaussian blobs
// centered at +-separation/2 * e, labels -1/+1, d-dimensional.
Dataset make_blobs(Eigen::Index n, int d, double separation, std::uint64_t seed);

}  // namespace rfs::ingest
