#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "chestnet/metrics.hpp"
#include "chestnet/training.hpp"

namespace chestnet {

nlohmann::json report_to_json(const EvalReport& report);

/// Fixed-width table: one row per class, then the average.
std::string report_to_text(const EvalReport& report);

/// `class,fpr,tpr` rows for every curve.
std::string roc_to_csv(const std::vector<RocCurve>& curves, const std::vector<std::string>& class_names);

/// Unit-square plot with one polyline per curve and the chance diagonal.
std::string roc_to_svg(const std::vector<RocCurve>& curves, const std::vector<std::string>& class_names);

/// `iteration,phase,lr,loss` with a header row.
std::string loss_to_csv(const std::vector<LossRecord>& records);

}  // namespace chestnet
