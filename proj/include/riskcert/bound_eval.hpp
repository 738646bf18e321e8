#pragma once

#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "riskcert/bounds.hpp"

namespace riskcert {

// Builds a loss spec from a JSON object {"kind": ..., "num_classes": ...,
// "alpha": ..., "delta_h": ...}; defaults mirror the CLI defaults.
LossSpec loss_from_json(const nlohmann::json& j);
LossSpec loss_from_name(const std::string& name, int num_classes, double alpha, double delta_h);

// Evaluates a named bound formula against a JSON parameter object.
BoundResult evaluate_bound(const std::string& bound_id, const nlohmann::json& params,
                           Confidence conf);

const std::vector<std::string>& bound_formula_ids();

struct CompareRow {
    std::string bound_id;
    double value = 0.0;
    double delta_spent = 0.0;
    bool vacuous = false;
};

// One row per scenario entry, sorted by ascending bound value.
std::vector<CompareRow> compare_bounds(
    const std::vector<std::pair<std::string, nlohmann::json>>& scenario, Confidence conf);

std::string compare_csv(const std::vector<CompareRow>& rows);

}  // namespace riskcert
