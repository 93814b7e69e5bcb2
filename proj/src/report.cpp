#include "astute/report.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <map>
#include <stdexcept>

#include <json.hpp>

#include "astute/io.hpp"

namespace astute {

namespace {

std::string f2(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2f", v);
    return buf;
}

void append_polyline(std::string& svg, const RobustnessCurve& c, double lo, double hi,
                     double x0, double y0, double w, double h, const char* color,
                     bool dashed) {
    svg += "  <polyline fill=\"none\" stroke=\"";
    svg += color;
    svg += "\" stroke-width=\"2\"";
    if (dashed) svg += " stroke-dasharray=\"7 5\"";
    svg += " points=\"";
    for (std::size_t t = 0; t < c.grid.size(); ++t) {
        if (c.grid[t] < lo - 1e-12 || c.grid[t] > hi + 1e-12) continue;
        const double px = x0 + (c.grid[t] - lo) / (hi - lo) * w;
        const double py = y0 + h - c.values[t] * h;
        svg += f2(px) + "," + f2(py) + " ";
    }
    svg += "\"/>\n";
}

std::string sanitize_filename(const std::string& s) {
    std::string out;
    for (char c : s)
        out += (std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '.')
                   ? c
                   : '_';
    return out;
}

}  // namespace

std::string curve_chart_svg(const std::string& title, const RobustnessCurve* empirical,
                            const RobustnessCurve* bound, double lambda_min,
                            double lambda_max, const CurveBand* band) {
    if (!(lambda_min < lambda_max))
        throw std::invalid_argument("curve_chart_svg: degenerate lambda interval");
    const double W = 640, H = 420;
    const double x0 = 60, y0 = 40, pw = W - x0 - 20, ph = H - y0 - 50;

    std::string svg;
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"420\" "
           "viewBox=\"0 0 640 420\" font-family=\"sans-serif\" font-size=\"12\">\n";
    svg += "  <rect width=\"640\" height=\"420\" fill=\"white\"/>\n";
    svg += "  <text x=\"320\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" + title +
           "</text>\n";

    // frame and horizontal grid lines at 0, 0.25, ..., 1
    for (int t = 0; t <= 4; ++t) {
        const double frac = t / 4.0;
        const double y = y0 + ph - frac * ph;
        svg += "  <line x1=\"" + f2(x0) + "\" y1=\"" + f2(y) + "\" x2=\"" + f2(x0 + pw) +
               "\" y2=\"" + f2(y) + "\" stroke=\"#dddddd\"/>\n";
        svg += "  <text x=\"" + f2(x0 - 8) + "\" y=\"" + f2(y + 4) +
               "\" text-anchor=\"end\">" + f2(frac) + "</text>\n";
    }
    const int xticks = 5;
    for (int t = 0; t <= xticks; ++t) {
        const double v = lambda_min + (lambda_max - lambda_min) * t / xticks;
        const double x = x0 + pw * t / xticks;
        svg += "  <line x1=\"" + f2(x) + "\" y1=\"" + f2(y0 + ph) + "\" x2=\"" + f2(x) +
               "\" y2=\"" + f2(y0 + ph + 5) + "\" stroke=\"#333333\"/>\n";
        svg += "  <text x=\"" + f2(x) + "\" y=\"" + f2(y0 + ph + 20) +
               "\" text-anchor=\"middle\">" + f2(v) + "</text>\n";
    }
    svg += "  <rect x=\"" + f2(x0) + "\" y=\"" + f2(y0) + "\" width=\"" + f2(pw) +
           "\" height=\"" + f2(ph) + "\" fill=\"none\" stroke=\"#333333\"/>\n";
    svg += "  <text x=\"" + f2(x0 + pw / 2) + "\" y=\"" + f2(H - 8) +
           "\" text-anchor=\"middle\">lambda</text>\n";

    if (band) {
        // vertical min/max error bars at the grid points
        for (std::size_t t = 0; t < band->lo.grid.size(); ++t) {
            const double g = band->lo.grid[t];
            if (g < lambda_min - 1e-12 || g > lambda_max + 1e-12) continue;
            const double px = x0 + (g - lambda_min) / (lambda_max - lambda_min) * pw;
            const double ylo = y0 + ph - band->lo.values[t] * ph;
            const double yhi = y0 + ph - band->hi.values[t] * ph;
            svg += "  <line x1=\"" + f2(px) + "\" y1=\"" + f2(ylo) + "\" x2=\"" + f2(px) +
                   "\" y2=\"" + f2(yhi) + "\" stroke=\"#1f77b4\" stroke-width=\"1\"/>\n";
        }
    }
    if (empirical) append_polyline(svg, *empirical, lambda_min, lambda_max, x0, y0, pw, ph,
                                   "#1f77b4", false);
    if (bound) append_polyline(svg, *bound, lambda_min, lambda_max, x0, y0, pw, ph,
                               "#d62728", true);

    svg += "  <line x1=\"" + f2(x0 + 10) + "\" y1=\"" + f2(y0 + 12) + "\" x2=\"" +
           f2(x0 + 40) + "\" y2=\"" + f2(y0 + 12) +
           "\" stroke=\"#1f77b4\" stroke-width=\"2\"/>\n";
    svg += "  <text x=\"" + f2(x0 + 46) + "\" y=\"" + f2(y0 + 16) +
           "\">astuteness (empirical)</text>\n";
    svg += "  <line x1=\"" + f2(x0 + 10) + "\" y1=\"" + f2(y0 + 30) + "\" x2=\"" +
           f2(x0 + 40) + "\" y2=\"" + f2(y0 + 30) +
           "\" stroke=\"#d62728\" stroke-width=\"2\" stroke-dasharray=\"7 5\"/>\n";
    svg += "  <text x=\"" + f2(x0 + 46) + "\" y=\"" + f2(y0 + 34) +
           "\">predicted lower bound</text>\n";
    svg += "</svg>\n";
    return svg;
}

Report build_report(const std::vector<RobustnessCurve>& curves, double lambda_min,
                    double lambda_max) {
    if (curves.empty()) throw std::invalid_argument("build_report: no curves given");
    if (!(lambda_min < lambda_max))
        throw std::invalid_argument("build_report: degenerate lambda interval");

    std::map<std::string, std::pair<const RobustnessCurve*, const RobustnessCurve*>> by_subject;
    for (const auto& c : curves) {
        if (c.kind == CurveKind::astuteness) by_subject[c.subject_id].first = &c;
        if (c.kind == CurveKind::predicted_bound) by_subject[c.subject_id].second = &c;
    }

    Report rep;
    rep.lambda_min = lambda_min;
    rep.lambda_max = lambda_max;
    for (const auto& [subject, pair] : by_subject) {
        if (!pair.first || !pair.second) continue;
        ReportRow row;
        row.subject_id = subject;
        row.auc_emp = auc(*pair.first, lambda_min, lambda_max);
        row.auc_pred = auc(*pair.second, lambda_min, lambda_max);
        row.auc_gap = row.auc_emp - row.auc_pred;
        row.n_pairs = pair.first->n_pairs;
        rep.rows.push_back(std::move(row));
    }
    if (rep.rows.empty())
        throw std::invalid_argument(
            "build_report: no subject has both an astuteness and a predicted_bound curve");
    return rep;
}

std::string report_json(const Report& r) {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : r.rows)
        rows.push_back({{"subject_id", row.subject_id},
                        {"auc_emp", row.auc_emp},
                        {"auc_pred", row.auc_pred},
                        {"auc_gap", row.auc_gap},
                        {"n_pairs", row.n_pairs}});
    nlohmann::json j{{"lambda_min", r.lambda_min},
                     {"lambda_max", r.lambda_max},
                     {"rows", std::move(rows)}};
    return j.dump(2) + "\n";
}

std::string report_csv(const Report& r) {
    std::string body = "subject_id,auc_emp,auc_pred,auc_gap,n_pairs\n";
    for (const auto& row : r.rows)
        body += row.subject_id + "," + fmt_double(row.auc_emp) + "," +
                fmt_double(row.auc_pred) + "," + fmt_double(row.auc_gap) + "," +
                std::to_string(row.n_pairs) + "\n";
    return body;
}

void write_report_files(const Report& r, const std::vector<RobustnessCurve>& curves,
                        const std::string& out_dir,
                        const std::map<std::string, CurveBand>* bands) {
    std::filesystem::create_directories(out_dir);
    write_text_atomic(out_dir + "/report.json", report_json(r));
    write_text_atomic(out_dir + "/report.csv", report_csv(r));

    std::map<std::string, std::pair<const RobustnessCurve*, const RobustnessCurve*>> by_subject;
    for (const auto& c : curves) {
        if (c.kind == CurveKind::astuteness) by_subject[c.subject_id].first = &c;
        if (c.kind == CurveKind::predicted_bound) by_subject[c.subject_id].second = &c;
    }
    for (const auto& row : r.rows) {
        const auto& pair = by_subject[row.subject_id];
        const CurveBand* band = nullptr;
        if (bands) {
            const auto it = bands->find(row.subject_id);
            if (it != bands->end()) band = &it->second;
        }
        const std::string svg = curve_chart_svg(row.subject_id, pair.first, pair.second,
                                                r.lambda_min, r.lambda_max, band);
        write_text_atomic(out_dir + "/" + sanitize_filename(row.subject_id) + ".svg", svg);
    }
}

}  // namespace astute
