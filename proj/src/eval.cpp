#include "pcq/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "pcq/errors.hpp"

namespace pcq {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string field;
    for (const char ch : line) {
        if (ch == ',') {
            fields.push_back(field);
            field.clear();
        } else if (ch != '\r') {
            field.push_back(ch);
        }
    }
    fields.push_back(field);
    for (std::string& f : fields) {
        const auto first = f.find_first_not_of(" \t");
        const auto last = f.find_last_not_of(" \t");
        f = first == std::string::npos ? std::string() : f.substr(first, last - first + 1);
    }
    return fields;
}

double parse_number(const std::string& field, const char* what, std::size_t line_no) {
    try {
        std::size_t consumed = 0;
        const double v = std::stod(field, &consumed);
        if (consumed != field.size()) {
            throw std::invalid_argument(field);
        }
        return v;
    } catch (const std::exception&) {
        throw ParseError("malformed " + std::string(what) + " value '" + field + "'", line_no);
    }
}

// 6 significant digits, C locale.
std::string format_number(double v) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

}  // namespace

std::vector<StimulusRecord> read_scores_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open '" + path.string() + "' for reading");
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw ParseError("empty scores CSV", 1);
    }
    const std::vector<std::string> header = split_csv_line(line);
    const std::vector<std::string> fixed = {"stimulus_id", "content_id", "codec", "rate_level",
                                            "mos"};
    if (header.size() < fixed.size()) {
        throw ParseError("scores CSV header is missing required columns", 1);
    }
    for (std::size_t i = 0; i < fixed.size(); ++i) {
        if (header[i] != fixed[i]) {
            throw ParseError("expected column '" + fixed[i] + "', found '" + header[i] + "'", 1);
        }
    }
    std::size_t metric_start = fixed.size();
    bool has_ci = false;
    if (metric_start < header.size() && header[metric_start] == "mos_ci95") {
        has_ci = true;
        ++metric_start;
    }
    const std::vector<std::string> metrics(header.begin() +
                                               static_cast<std::ptrdiff_t>(metric_start),
                                           header.end());

    std::vector<StimulusRecord> records;
    std::vector<std::string> missing;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const std::vector<std::string> fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            throw ParseError("row has " + std::to_string(fields.size()) + " fields, expected " +
                                 std::to_string(header.size()),
                             line_no);
        }
        StimulusRecord rec;
        rec.stimulus_id = fields[0];
        rec.content_id = fields[1];
        rec.codec = fields[2];
        rec.rate_level = fields[3];
        rec.mos = parse_number(fields[4], "mos", line_no);
        if (rec.content_id.empty()) {
            throw ParseError("empty content_id", line_no);
        }
        if (has_ci && !fields[5].empty()) {
            rec.mos_ci95 = parse_number(fields[5], "mos_ci95", line_no);
        }
        for (std::size_t m = 0; m < metrics.size(); ++m) {
            const std::string& cell = fields[metric_start + m];
            if (cell.empty()) {
                missing.push_back(rec.stimulus_id + ":" + metrics[m]);
                continue;
            }
            rec.metric_scores[metrics[m]] = parse_number(cell, "metric", line_no);
        }
        records.push_back(std::move(rec));
    }
    if (!missing.empty()) {
        std::string msg = "missing metric scores:";
        for (const std::string& m : missing) {
            msg += " " + m;
        }
        throw MissingData(msg);
    }
    if (records.empty()) {
        throw EmptyInput("scores CSV has no data rows");
    }
    return records;
}

std::vector<std::string> metric_names(const std::vector<StimulusRecord>& records) {
    if (records.empty()) {
        throw EmptyInput("no records");
    }
    std::vector<std::string> names;
    for (const auto& [name, value] : records.front().metric_scores) {
        names.push_back(name);
    }
    return names;
}

LoocvResult loocv_evaluate(const std::vector<StimulusRecord>& records,
                           const std::string& metric) {
    if (records.empty()) {
        throw EmptyInput("no records to evaluate");
    }
    std::vector<std::string> missing;
    for (const StimulusRecord& rec : records) {
        if (rec.metric_scores.find(metric) == rec.metric_scores.end()) {
            missing.push_back(rec.stimulus_id);
        }
    }
    if (!missing.empty()) {
        std::string msg = "metric '" + metric + "' missing for stimuli:";
        for (const std::string& s : missing) {
            msg += " " + s;
        }
        throw MissingData(msg);
    }

    std::set<std::string> contents;
    for (const StimulusRecord& rec : records) {
        contents.insert(rec.content_id);
    }
    if (contents.size() < 2) {
        throw DegenerateInput("leave-one-content-out needs at least two contents");
    }

    LoocvResult result;
    result.predictions.assign(records.size(), 0.0);
    for (const std::string& held_out : contents) {
        std::vector<double> train_scores, train_mos;
        for (const StimulusRecord& rec : records) {
            if (rec.content_id != held_out) {
                train_scores.push_back(rec.metric_scores.at(metric));
                train_mos.push_back(rec.mos);
            }
        }
        const LogisticFit fit = fit_logistic(train_scores, train_mos);
        for (std::size_t i = 0; i < records.size(); ++i) {
            if (records[i].content_id == held_out) {
                result.predictions[i] = fit(records[i].metric_scores.at(metric));
            }
        }
    }

    std::vector<double> mos(records.size());
    bool all_ci = true;
    std::vector<double> ci(records.size(), 0.0);
    for (std::size_t i = 0; i < records.size(); ++i) {
        mos[i] = records[i].mos;
        if (records[i].mos_ci95.has_value()) {
            ci[i] = *records[i].mos_ci95;
        } else {
            all_ci = false;
        }
    }
    result.stats.pcc = pearson(result.predictions, mos);
    result.stats.srocc = spearman(result.predictions, mos);
    result.stats.rmse = rmse(result.predictions, mos);
    result.stats.outlier_ratio =
        outlier_ratio(result.predictions, mos, all_ci ? &ci : nullptr);
    return result;
}

std::vector<MetricReportRow> evaluate_metrics(const std::vector<StimulusRecord>& records,
                                              const std::vector<std::string>& metrics) {
    std::vector<MetricReportRow> rows;
    rows.reserve(metrics.size());
    for (const std::string& metric : metrics) {
        rows.push_back({metric, loocv_evaluate(records, metric).stats});
    }
    std::sort(rows.begin(), rows.end(), [](const MetricReportRow& a, const MetricReportRow& b) {
        return a.stats.pcc > b.stats.pcc ||
               (a.stats.pcc == b.stats.pcc && a.metric < b.metric);
    });
    return rows;
}

std::string report_to_csv(const std::vector<MetricReportRow>& rows) {
    std::string out = "method,pcc,srocc,rmse,or\n";
    for (const MetricReportRow& row : rows) {
        out += row.metric + ',' + format_number(row.stats.pcc) + ',' +
               format_number(row.stats.srocc) + ',' + format_number(row.stats.rmse) + ',' +
               format_number(row.stats.outlier_ratio) + '\n';
    }
    return out;
}

void write_report_csv(const std::vector<MetricReportRow>& rows,
                      const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    out << report_to_csv(rows);
    if (!out) {
        throw IoError("failed while writing '" + path.string() + "'");
    }
}

void write_predictions_csv(const std::vector<StimulusRecord>& records,
                           const std::vector<std::string>& metrics,
                           const std::map<std::string, std::vector<double>>& predictions,
                           const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    out << "stimulus_id,content_id,metric,score,prediction,mos\n";
    for (const std::string& metric : metrics) {
        const auto it = predictions.find(metric);
        if (it == predictions.end() || it->second.size() != records.size()) {
            throw InvalidState("prediction vector missing for metric '" + metric + "'");
        }
        for (std::size_t i = 0; i < records.size(); ++i) {
            out << records[i].stimulus_id << ',' << records[i].content_id << ',' << metric << ','
                << format_number(records[i].metric_scores.at(metric)) << ','
                << format_number(it->second[i]) << ',' << format_number(records[i].mos) << '\n';
        }
    }
    if (!out) {
        throw IoError("failed while writing '" + path.string() + "'");
    }
}

}  // namespace pcq
