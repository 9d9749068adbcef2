// Labeled multi-task data splits.

#pragma once

#include <vector>

#include "pareto_forge/common.hpp"
#include "pareto_forge/matrix.hpp"

namespace pforge {

struct DataSplit {
    Matrix inputs;                          // samples x features
    std::vector<std::vector<int>> labels;   // per task: sample class ids

    std::size_t size() const { return inputs.rows(); }

    void validate() const {
        for (const auto& l : labels)
            require(l.size() == inputs.rows(), "data split: label count != sample count");
    }
};

struct Dataset {
    DataSplit train, val, test;
    int feature_dim = 0;
    std::vector<int> class_counts;  // per task

    int tasks() const { return int(class_counts.size()); }
};

}  // namespace pforge
