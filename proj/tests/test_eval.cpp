#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "pcq/errors.hpp"
#include "pcq/eval.hpp"
#include "pcq/rng.hpp"

using namespace pcq;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("pcq_eval_" + std::to_string(std::rand()));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

// Six contents, several codecs, MOS driven by a hidden quality variable.
// "good" follows a logistic of the MOS; "noise" is independent.
std::vector<StimulusRecord> synthetic_records(std::size_t contents = 6,
                                              std::size_t per_content = 16,
                                              std::uint64_t seed = 5) {
    Rng rng(seed);
    std::vector<StimulusRecord> records;
    const char* codecs[] = {"octree", "trisoup", "video"};
    for (std::size_t c = 0; c < contents; ++c) {
        for (std::size_t s = 0; s < per_content; ++s) {
            StimulusRecord rec;
            rec.content_id = "content" + std::to_string(c);
            rec.stimulus_id = rec.content_id + "_s" + std::to_string(s);
            rec.codec = codecs[s % 3];
            rec.rate_level = "r" + std::to_string(s % 5);
            rec.mos = rng.uniform(1.0, 5.0);
            rec.mos_ci95 = 0.4;
            // Invertible monotone transform of MOS plus small noise.
            rec.metric_scores["good"] =
                1.0 / (1.0 + std::exp(-1.3 * (rec.mos - 3.0))) + rng.normal(0.0, 0.01);
            rec.metric_scores["noise"] = rng.uniform(0.0, 1.0);
            records.push_back(std::move(rec));
        }
    }
    return records;
}

}  // namespace

TEST_CASE("scores CSV round trip with optional CI column") {
    TempDir dir;
    const auto p = dir.path / "scores.csv";
    {
        std::ofstream out(p);
        out << "stimulus_id,content_id,codec,rate_level,mos,mos_ci95,d1,pl\n";
        out << "s1,c1,octree,r1,4.5,0.3,0.01,0.2\n";
        out << "s2,c1,octree,r2,3.0,0.2,0.05,0.6\n";
        out << "s3,c2,video,r1,2.0,0.25,0.50,0.9\n";
    }
    const auto records = read_scores_csv(p);
    REQUIRE(records.size() == 3);
    CHECK(records[0].stimulus_id == "s1");
    CHECK(records[0].mos == 4.5);
    CHECK(records[0].mos_ci95.value() == 0.3);
    CHECK(records[2].metric_scores.at("pl") == 0.9);
    const auto names = metric_names(records);
    CHECK(names == std::vector<std::string>{"d1", "pl"});
}

TEST_CASE("missing metric cells raise MissingData naming the stimulus") {
    TempDir dir;
    const auto p = dir.path / "missing.csv";
    {
        std::ofstream out(p);
        out << "stimulus_id,content_id,codec,rate_level,mos,d1\n";
        out << "s1,c1,octree,r1,4.5,0.01\n";
        out << "s2,c1,octree,r2,3.0,\n";
    }
    try {
        read_scores_csv(p);
        FAIL("expected MissingData");
    } catch (const MissingData& e) {
        CHECK(std::string(e.what()).find("s2") != std::string::npos);
    }
}

TEST_CASE("malformed header is rejected with its line") {
    TempDir dir;
    const auto p = dir.path / "bad.csv";
    {
        std::ofstream out(p);
        out << "stimulus,content_id,codec,rate_level,mos\n";
    }
    CHECK_THROWS_AS(read_scores_csv(p), ParseError);
}

TEST_CASE("loocv produces one split per content and perfect stats for mos-equal metric") {
    auto records = synthetic_records(6, 16, 7);
    for (StimulusRecord& rec : records) {
        rec.metric_scores["oracle"] = rec.mos;
    }
    const LoocvResult result = loocv_evaluate(records, "oracle");
    CHECK(result.stats.pcc == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(result.stats.srocc == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(result.stats.rmse == doctest::Approx(0.0).epsilon(1e-4));
    CHECK(result.stats.outlier_ratio == 0.0);
    REQUIRE(result.predictions.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(result.predictions[i] == doctest::Approx(records[i].mos).epsilon(1e-4));
    }
}

TEST_CASE("noise metric stays weakly correlated") {
    const auto records = synthetic_records(6, 15, 11);
    const LoocvResult result = loocv_evaluate(records, "noise");
    CHECK(std::abs(result.stats.pcc) < 0.5);
}

TEST_CASE("good metric recovers the MOS through cross-validated fitting") {
    const auto records = synthetic_records(6, 16, 13);
    const LoocvResult result = loocv_evaluate(records, "good");
    CHECK(result.stats.pcc > 0.95);
    CHECK(result.stats.srocc > 0.95);
}

TEST_CASE("loocv validates its preconditions") {
    auto records = synthetic_records(1, 10, 17);
    CHECK_THROWS_AS(loocv_evaluate(records, "good"), DegenerateInput);
    records = synthetic_records(3, 8, 17);
    CHECK_THROWS_AS(loocv_evaluate(records, "absent"), MissingData);
}

TEST_CASE("report ranks metrics by descending PCC with exact header") {
    const auto records = synthetic_records(6, 16, 19);
    const auto rows = evaluate_metrics(records, {"noise", "good"});
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].metric == "good");
    CHECK(rows[1].metric == "noise");

    const std::string csv = report_to_csv(rows);
    CHECK(csv.rfind("method,pcc,srocc,rmse,or\n", 0) == 0);
    CHECK(csv.find("good,") != std::string::npos);

    TempDir dir;
    write_report_csv(rows, dir.path / "report.csv");
    std::ifstream in(dir.path / "report.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "method,pcc,srocc,rmse,or");
}

TEST_CASE("predictions CSV has one row per stimulus and metric") {
    const auto records = synthetic_records(2, 8, 23);
    std::map<std::string, std::vector<double>> predictions;
    predictions["good"] = loocv_evaluate(records, "good").predictions;
    TempDir dir;
    write_predictions_csv(records, {"good"}, predictions, dir.path / "pred.csv");
    std::ifstream in(dir.path / "pred.csv");
    std::string line;
    std::getline(in, line);
    CHECK(line == "stimulus_id,content_id,metric,score,prediction,mos");
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        if (!line.empty()) ++rows;
    }
    CHECK(rows == records.size());
}
