#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace rfs {

// In-memory dataset: inputs X (n x d), labels y (n). Classification datasets
// carry labels in {-1, +1}.
struct Dataset {
    Eigen::MatrixXd X;
    Eigen::VectorXd y;
    std::string source;
    bool classification = false;
    std::vector<std::string> feature_names;

    Eigen::Index n() const { return X.rows(); }
    Eigen::Index dim() const { return X.cols(); }
};

}  // namespace rfs
