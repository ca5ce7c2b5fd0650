#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chestnet/labels.hpp"

namespace chestnet {

/// Strict threshold: score > threshold is positive; exactly 0.5 is negative.
std::vector<std::uint8_t> diagnose(const LabelVector& scores, double threshold = 0.5);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

struct RocCurve {
    std::size_t class_id = 0;
    std::vector<RocPoint> points;  // (0,0) first, (1,1) last, both axes non-decreasing
};

/// Sweeps every distinct score as a threshold, highest first; equal scores
/// move together. Throws UndefinedMetricError without both classes present.
RocCurve roc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels,
                   std::size_t class_id = 0);

/// Trapezoidal area under roc_curve (ties count half).
double auc(std::span<const double> scores, std::span<const std::uint8_t> labels, std::size_t class_id = 0);

double area_under(const RocCurve& curve);

struct EvalReport {
    std::string branch;
    std::vector<std::string> class_names;
    std::vector<std::optional<double>> per_class_auc;  // nullopt when undefined
    std::vector<std::size_t> positives;
    std::vector<std::size_t> negatives;
    std::vector<std::size_t> excluded;  // classes left out of the average
    std::optional<double> average_auc;
    std::size_t samples = 0;
};

/// Scores and labels are row-major [samples x classes].
EvalReport build_report(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels,
                        std::size_t classes, std::vector<std::string> class_names, std::string branch);

/// ROC curves for every class with a defined AUC.
std::vector<RocCurve> roc_curves(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels,
                                 std::size_t classes);

}  // namespace chestnet
