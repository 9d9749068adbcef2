// Sparsity / compression / sharing metrics record.
//
//   SR = #zero params / #total params
//   PS = #nonzero params / #unique params
//   CR = #total params / #unique params
//
// "Unique" counts distinct values among nonzero parameters by exact bit
// equality, which cluster tying guarantees within a cluster; an untied model
// with generic (e.g. randomly initialized) weights reports PS = 1.

#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "pareto_forge/common.hpp"

namespace pforge {

struct MetricsRecord {
    double sr = 0.0;  // in [0, 1]
    double cr = 1.0;  // >= 1
    double ps = 1.0;  // >= 1 when anything is tied, 1 otherwise
    std::vector<double> task_accuracy;
    double average_accuracy = 0.0;
    double max_constraint = 0.0;  // max_i H_i at the reported solution

    nlohmann::json to_json() const {
        return nlohmann::json{{"SR", sr},
                              {"CR", cr},
                              {"PS", ps},
                              {"task_accuracy", task_accuracy},
                              {"average_accuracy", average_accuracy},
                              {"max_constraint", max_constraint}};
    }

    static MetricsRecord from_json(const nlohmann::json& j) {
        MetricsRecord m;
        m.sr = j.value("SR", 0.0);
        m.cr = j.value("CR", 1.0);
        m.ps = j.value("PS", 1.0);
        if (j.contains("task_accuracy"))
            m.task_accuracy = j.at("task_accuracy").get<std::vector<double>>();
        m.average_accuracy = j.value("average_accuracy", 0.0);
        m.max_constraint = j.value("max_constraint", 0.0);
        return m;
    }
};

}  // namespace pforge
