#pragma once

#include <map>
#include <string>
#include <vector>

#include "astute/robustness.hpp"

namespace astute {

// min/max envelope of a curve across seeds, drawn as error bars
struct CurveBand {
    RobustnessCurve lo;
    RobustnessCurve hi;
};

// self-contained line chart: solid empirical astuteness, dashed predicted
// lower bound, optional per-grid-point error bars; axes
// [lambda_min, lambda_max] x [0, 1]
std::string curve_chart_svg(const std::string& title, const RobustnessCurve* empirical,
                            const RobustnessCurve* bound, double lambda_min,
                            double lambda_max, const CurveBand* band = nullptr);

struct ReportRow {
    std::string subject_id;
    double auc_emp = 0.0;
    double auc_pred = 0.0;
    double auc_gap = 0.0;
    std::int64_t n_pairs = 0;
};

struct Report {
    double lambda_min = 0.0;
    double lambda_max = 0.0;
    std::vector<ReportRow> rows;
};

// Pairs astuteness curves with predicted_bound curves sharing a subject_id
// and computes the AUC gap per subject. Throws when no complete pair exists.
Report build_report(const std::vector<RobustnessCurve>& curves, double lambda_min,
                    double lambda_max);

std::string report_json(const Report& r);
std::string report_csv(const Report& r);

// report.json, report.csv and one SVG per subject under out_dir; bands, when
// given, add per-subject error bars to the empirical curves
void write_report_files(const Report& r, const std::vector<RobustnessCurve>& curves,
                        const std::string& out_dir,
                        const std::map<std::string, CurveBand>* bands = nullptr);

}  // namespace astute
