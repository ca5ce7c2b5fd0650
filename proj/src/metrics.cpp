#include "chestnet/metrics.hpp"

#include <algorithm>
#include <numeric>

#include "chestnet/errors.hpp"

namespace chestnet {

std::vector<std::uint8_t> diagnose(const LabelVector& scores, double threshold) {
    std::vector<std::uint8_t> out(scores.size());
    for (std::size_t i = 0; i < scores.size(); ++i) out[i] = scores.values[i] > threshold ? 1 : 0;
    return out;
}

RocCurve roc_curve(std::span<const double> scores, std::span<const std::uint8_t> labels, std::size_t class_id) {
    if (scores.size() != labels.size()) {
        throw ShapeError("roc_curve: " + std::to_string(scores.size()) + " scores vs " +
                         std::to_string(labels.size()) + " labels");
    }
    const auto pos = static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), [](auto v) { return v != 0; }));
    const std::size_t neg = labels.size() - pos;
    if (pos == 0 || neg == 0) {
        throw UndefinedMetricError("ROC undefined for class " + std::to_string(class_id) + ": " +
                                   std::to_string(pos) + " positives, " + std::to_string(neg) + " negatives");
    }
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocCurve curve;
    curve.class_id = class_id;
    curve.points.push_back({0.0, 0.0});
    std::size_t tp = 0, fp = 0;
    for (std::size_t i = 0; i < order.size();) {
        const double s = scores[order[i]];
        for (; i < order.size() && scores[order[i]] == s; ++i) {
            if (labels[order[i]] != 0) ++tp; else ++fp;
        }
        curve.points.push_back({static_cast<double>(fp) / static_cast<double>(neg),
                                static_cast<double>(tp) / static_cast<double>(pos)});
    }
    return curve;
}

double area_under(const RocCurve& curve) {
    double area = 0.0;
    for (std::size_t i = 1; i < curve.points.size(); ++i) {
        const auto& a = curve.points[i - 1];
        const auto& b = curve.points[i];
        area += (b.fpr - a.fpr) * (a.tpr + b.tpr) * 0.5;
    }
    return area;
}

double auc(std::span<const double> scores, std::span<const std::uint8_t> labels, std::size_t class_id) {
    return area_under(roc_curve(scores, labels, class_id));
}

namespace {

void class_column(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels, std::size_t classes,
                  std::size_t c, std::vector<double>& s, std::vector<std::uint8_t>& l) {
    const std::size_t n = scores.size() / classes;
    s.resize(n);
    l.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        s[i] = scores[i * classes + c];
        l[i] = labels[i * classes + c];
    }
}

}  // namespace

EvalReport build_report(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels,
                        std::size_t classes, std::vector<std::string> class_names, std::string branch) {
    if (classes == 0 || scores.size() != labels.size() || scores.size() % classes != 0) {
        throw ShapeError("build_report: inconsistent score/label table");
    }
    EvalReport r;
    r.branch = std::move(branch);
    r.class_names = std::move(class_names);
    r.samples = scores.size() / classes;
    std::vector<double> s;
    std::vector<std::uint8_t> l;
    double total = 0.0;
    std::size_t included = 0;
    for (std::size_t c = 0; c < classes; ++c) {
        class_column(scores, labels, classes, c, s, l);
        const auto pos = static_cast<std::size_t>(std::count(l.begin(), l.end(), std::uint8_t{1}));
        r.positives.push_back(pos);
        r.negatives.push_back(l.size() - pos);
        if (pos == 0 || pos == l.size()) {
            r.per_class_auc.push_back(std::nullopt);
            r.excluded.push_back(c);
            continue;
        }
        const double a = auc(s, l, c);
        r.per_class_auc.push_back(a);
        total += a;
        ++included;
    }
    if (included > 0) r.average_auc = total / static_cast<double>(included);
    return r;
}

std::vector<RocCurve> roc_curves(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels,
                                 std::size_t classes) {
    std::vector<RocCurve> out;
    std::vector<double> s;
    std::vector<std::uint8_t> l;
    for (std::size_t c = 0; c < classes; ++c) {
        class_column(scores, labels, classes, c, s, l);
        try {
            out.push_back(roc_curve(s, l, c));
        } catch (const UndefinedMetricError&) {
        }
    }
    return out;
}

}  // namespace chestnet
