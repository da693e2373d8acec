#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pcq/stats.hpp"

namespace pcq {

// One subjective-test stimulus: identification, MOS, and objective scores.
struct StimulusRecord {
    std::string stimulus_id;
    std::string content_id;
    std::string codec;
    std::string rate_level;
    double mos = 0.0;
    std::optional<double> mos_ci95;
    std::map<std::string, double> metric_scores;
};

struct EvalStats {
    double pcc = 0.0;
    double srocc = 0.0;
    double rmse = 0.0;
    double outlier_ratio = 0.0;
};

// Input CSV: header stimulus_id,content_id,codec,rate_level,mos[,mos_ci95],
// then one column per metric. Throws MissingData on empty metric cells and
// ParseError on malformed rows.
std::vector<StimulusRecord> read_scores_csv(const std::filesystem::path& path);

// Metric column names in header order.
std::vector<std::string> metric_names(const std::vector<StimulusRecord>& records);

struct LoocvResult {
    EvalStats stats;
    std::vector<double> predictions;  // per record, original order
};

// Leave-one-content-out protocol: per content, fit the logistic on all other
// contents' (score, mos) pairs and predict the held-out stimuli; statistics
// are computed on the concatenated predictions.
LoocvResult loocv_evaluate(const std::vector<StimulusRecord>& records,
                           const std::string& metric);

struct MetricReportRow {
    std::string metric;
    EvalStats stats;
};

// Rows sorted by descending PCC (ties by name).
std::vector<MetricReportRow> evaluate_metrics(const std::vector<StimulusRecord>& records,
                                              const std::vector<std::string>& metrics);

// report CSV: method,pcc,srocc,rmse,or with 6 significant digits.
void write_report_csv(const std::vector<MetricReportRow>& rows,
                      const std::filesystem::path& path);
std::string report_to_csv(const std::vector<MetricReportRow>& rows);

// Per-stimulus CSV for scatter plots:
// stimulus_id,content_id,metric,score,prediction,mos.
void write_predictions_csv(const std::vector<StimulusRecord>& records,
                           const std::vector<std::string>& metrics,
                           const std::map<std::string, std::vector<double>>& predictions,
                           const std::filesystem::path& path);

}  // namespace pcq
