#include "chestnet/reports.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>

namespace chestnet {

namespace {

std::string fixed(double v, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

// Round-trip precision without locale effects.
std::string exact(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string xml_escape(const std::string& s) {
    std::string out;
    for (char ch : s) {
        switch (ch) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            default: out += ch;
        }
    }
    return out;
}

}  // namespace

nlohmann::json report_to_json(const EvalReport& report) {
    nlohmann::json classes = nlohmann::json::array();
    for (std::size_t c = 0; c < report.class_names.size(); ++c) {
        nlohmann::json entry = {{"class", report.class_names[c]},
                                {"positives", report.positives[c]},
                                {"negatives", report.negatives[c]}};
        entry["auc"] = report.per_class_auc[c] ? nlohmann::json(*report.per_class_auc[c]) : nlohmann::json(nullptr);
        classes.push_back(std::move(entry));
    }
    nlohmann::json excluded = nlohmann::json::array();
    for (std::size_t c : report.excluded) excluded.push_back(report.class_names[c]);
    nlohmann::json j = {{"branch", report.branch}, {"samples", report.samples}, {"classes", classes},
                        {"excluded", excluded}};
    j["average_auc"] = report.average_auc ? nlohmann::json(*report.average_auc) : nlohmann::json(nullptr);
    if (!report.excluded.empty()) {
        j["note"] = "classes without both positive and negative samples are left out of the average";
    }
    return j;
}

std::string report_to_text(const EvalReport& report) {
    std::size_t width = std::string("Average").size();
    for (const auto& n : report.class_names) width = std::max(width, n.size());
    auto pad = [&](const std::string& s) { return s + std::string(width - s.size() + 2, ' '); };

    std::ostringstream out;
    out << "branch: " << report.branch << "  samples: " << report.samples << '\n';
    out << pad("Class") << "   AUC    pos    neg\n";
    for (std::size_t c = 0; c < report.class_names.size(); ++c) {
        const auto& a = report.per_class_auc[c];
        char row[64];
        std::snprintf(row, sizeof row, "%6s %6zu %6zu", a ? fixed(*a, 4).c_str() : "n/a", report.positives[c],
                      report.negatives[c]);
        out << pad(report.class_names[c]) << row << '\n';
    }
    out << pad("Average") << (report.average_auc ? fixed(*report.average_auc, 4) : std::string("   n/a")) << '\n';
    if (!report.excluded.empty()) {
        out << "excluded from average:";
        for (std::size_t c : report.excluded) out << ' ' << report.class_names[c];
        out << '\n';
    }
    return out.str();
}

std::string roc_to_csv(const std::vector<RocCurve>& curves, const std::vector<std::string>& class_names) {
    std::ostringstream out;
    out << "class,fpr,tpr\n";
    for (const auto& curve : curves) {
        for (const auto& p : curve.points) {
            out << class_names.at(curve.class_id) << ',' << exact(p.fpr) << ',' << exact(p.tpr) << '\n';
        }
    }
    return out.str();
}

std::string roc_to_svg(const std::vector<RocCurve>& curves, const std::vector<std::string>& class_names) {
    constexpr double size = 400.0;
    constexpr double margin = 40.0;
    static const char* palette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                    "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
    const double total = size + 2 * margin;
    std::ostringstream out;
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << total + 160 << "\" height=\"" << total << "\">\n";
    out << "<rect x=\"" << margin << "\" y=\"" << margin << "\" width=\"" << size << "\" height=\"" << size
        << "\" fill=\"none\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << margin << "\" y1=\"" << margin + size << "\" x2=\"" << margin + size << "\" y2=\""
        << margin << "\" stroke=\"#bbbbbb\" stroke-dasharray=\"4 4\"/>\n";
    out << "<text x=\"" << margin + size / 2 - 60 << "\" y=\"" << total - 8
        << "\" font-size=\"12\">false positive rate</text>\n";
    out << "<text x=\"12\" y=\"" << margin + size / 2 + 50 << "\" font-size=\"12\" transform=\"rotate(-90 12 "
        << margin + size / 2 + 50 << ")\">true positive rate</text>\n";
    for (std::size_t i = 0; i < curves.size(); ++i) {
        const auto& curve = curves[i];
        const char* colour = palette[i % std::size(palette)];
        out << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t k = 0; k < curve.points.size(); ++k) {
            const auto& p = curve.points[k];
            if (k) out << ' ';
            out << fixed(margin + p.fpr * size, 2) << ',' << fixed(margin + (1.0 - p.tpr) * size, 2);
        }
        out << "\"/>\n";
        const double ly = margin + 14.0 * static_cast<double>(i + 1);
        out << "<text x=\"" << total + 4 << "\" y=\"" << ly << "\" font-size=\"11\" fill=\"" << colour << "\">"
            << xml_escape(class_names.at(curve.class_id)) << " (" << fixed(area_under(curve), 3) << ")</text>\n";
    }
    out << "</svg>\n";
    return out.str();
}

std::string loss_to_csv(const std::vector<LossRecord>& records) {
    std::ostringstream out;
    out << "iteration,phase,lr,loss\n";
    for (const auto& r : records) {
        out << r.iteration << ',' << r.phase << ',' << exact(r.lr) << ',' << exact(r.loss) << '\n';
    }
    return out.str();
}

}  // namespace chestnet
