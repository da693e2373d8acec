#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pcq/autoencoder.hpp"
#include "pcq/dataset.hpp"
#include "pcq/errors.hpp"
#include "pcq/eval.hpp"
#include "pcq/parallel.hpp"
#include "pcq/perceptual.hpp"
#include "pcq/ply_io.hpp"
#include "pcq/pointset_metrics.hpp"
#include "pcq/stats.hpp"
#include "pcq/synthetic.hpp"
#include "pcq/voxel_grid.hpp"
#include "pcq/voxel_metrics.hpp"

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Shortest round-trip formatting keeps piped values lossless.
std::string format_full(double v) {
    std::array<char, 32> buf;
    const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    return std::string(buf.data(), res.ptr);
}

struct VoxelizeOptions {
    std::string input;
    std::string out_dir;
    std::string repr = "binary";
    int block_size = 64;
    double upper_bound = 5.0;
    bool estimate_normals = false;
};

pcq::PointCloud translated_to_origin(const pcq::PointCloud& cloud) {
    pcq::Vec3 lo = cloud.points.front();
    for (const pcq::Point& p : cloud.points) {
        lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
    }
    const pcq::Vec3 shift{std::floor(lo.x), std::floor(lo.y), std::floor(lo.z)};
    pcq::PointCloud out = cloud;
    for (pcq::Point& p : out.points) {
        p = p - shift;
    }
    return out;
}

int run_voxelize(const VoxelizeOptions& opt) {
    const pcq::GridRepr repr = pcq::grid_repr_from_string(opt.repr);
    pcq::PointCloud cloud = pcq::read_ply(opt.input);
    if (repr == pcq::GridRepr::tsdf && !cloud.has_normals()) {
        if (!opt.estimate_normals) {
            throw pcq::InvalidArgument(
                "tsdf needs normals; none in file (use --estimate-normals)");
        }
        cloud = pcq::estimate_normals(cloud);
    }
    cloud = translated_to_origin(cloud);

    std::filesystem::create_directories(opt.out_dir);
    const pcq::BlockGrid blocks = pcq::partition_blocks(cloud, opt.block_size);
    const pcq::TdfConfig cfg{opt.upper_bound};
    for (const auto& [origin, local] : blocks.blocks) {
        pcq::VoxelGrid grid;
        switch (repr) {
            case pcq::GridRepr::binary:
                grid = pcq::voxelize_binary(local, opt.block_size);
                break;
            case pcq::GridRepr::tdf:
                grid = pcq::voxelize_tdf(local, opt.block_size, cfg);
                break;
            case pcq::GridRepr::tsdf:
                grid = pcq::voxelize_tsdf(local, opt.block_size, cfg);
                break;
        }
        const std::string name = "block_" + std::to_string(origin.x) + "_" +
                                 std::to_string(origin.y) + "_" + std::to_string(origin.z) +
                                 ".pcqgrid";
        pcq::write_grid(grid, std::filesystem::path(opt.out_dir) / name);
    }
    std::cout << "blocks " << blocks.blocks.size() << "\n";
    return 0;
}

struct MetricOptions {
    std::string cloud_a;
    std::string cloud_b;
    std::string metric;
    int block_size = 64;
    double upper_bound = 5.0;
    double alpha = 0.75;
    int window = 5;
    std::string aggregation;  // empty: per-metric default
    std::string weights;
    std::string feature = "all";
    double resolution = 0.0;  // 0: derive
    int bit_depth = 0;
    int normals_k = 9;
    bool reestimate_normals = false;
};

pcq::Aggregation metric_aggregation(const MetricOptions& opt) {
    if (!opt.aggregation.empty()) {
        return pcq::aggregation_from_string(opt.aggregation);
    }
    // Defaults follow the per-metric pairing: WBCE aggregates L2, the rest L1.
    return opt.metric == "bin-wbce" ? pcq::Aggregation::L2 : pcq::Aggregation::L1;
}

double resolve_resolution(const MetricOptions& opt, const pcq::PointCloud& reference) {
    if (opt.resolution > 0.0) {
        return opt.resolution;
    }
    if (opt.bit_depth > 0) {
        pcq::PointCloud tagged = reference;
        tagged.bit_depth = opt.bit_depth;
        return pcq::default_resolution(tagged);
    }
    return pcq::default_resolution(reference);
}

pcq::PointCloud with_normals(const pcq::PointCloud& cloud, const MetricOptions& opt) {
    if (cloud.has_normals() && !opt.reestimate_normals) {
        return cloud;
    }
    return pcq::estimate_normals(cloud, opt.normals_k);
}

pcq::FeatureSelector parse_feature(const std::string& text) {
    if (text == "all") {
        return pcq::FeatureSelector::all_maps();
    }
    try {
        std::size_t consumed = 0;
        const int index = std::stoi(text, &consumed);
        if (consumed != text.size() || index < 0) {
            throw std::invalid_argument(text);
        }
        return pcq::FeatureSelector::single(index);
    } catch (const std::exception&) {
        throw UsageError("--feature expects 'all' or a non-negative map index");
    }
}

double blockwise_metric(const MetricOptions& opt, pcq::GridRepr repr,
                        const pcq::PointCloud& a, const pcq::PointCloud& b) {
    const pcq::TdfConfig tdf_cfg{opt.upper_bound};
    const auto pairs = pcq::aligned_block_grids(a, b, opt.block_size, repr, tdf_cfg);
    pcq::VoxelMetricConfig cfg;
    cfg.alpha = opt.alpha;
    cfg.nabce_window = opt.window;

    std::vector<double> values;
    values.reserve(pairs.size());
    for (const auto& [ga, gb] : pairs) {
        if (opt.metric == "bin-bce") {
            values.push_back(pcq::bce(ga, gb, cfg));
        } else if (opt.metric == "bin-wbce") {
            values.push_back(pcq::wbce(ga, gb, opt.alpha, cfg));
        } else if (opt.metric == "bin-nabce") {
            values.push_back(pcq::nabce(ga, gb, cfg));
        } else {
            values.push_back(pcq::tdf_mse(ga, gb));
        }
    }
    return pcq::aggregate_blocks(values, metric_aggregation(opt));
}

double perceptual_metric(const MetricOptions& opt, pcq::GridRepr repr,
                         const pcq::PointCloud& a, const pcq::PointCloud& b) {
    if (opt.weights.empty()) {
        throw UsageError("metric '" + opt.metric + "' requires --weights");
    }
    const pcq::AutoencoderParams params = pcq::load_params(opt.weights);
    if (params.repr != repr) {
        throw pcq::ReprMismatch("checkpoint was trained for " + pcq::to_string(params.repr) +
                                ", metric needs " + pcq::to_string(repr));
    }
    pcq::PerceptualConfig cfg;
    cfg.block_size = opt.block_size;
    cfg.tdf = pcq::TdfConfig{opt.upper_bound};
    cfg.aggregation = metric_aggregation(opt);
    return pcq::perceptual_distance(a, b, params, parse_feature(opt.feature), cfg);
}

int run_metric(const MetricOptions& opt) {
    const pcq::PointCloud a = pcq::read_ply(opt.cloud_a);
    const pcq::PointCloud b = pcq::read_ply(opt.cloud_b);

    double value = 0.0;
    if (opt.metric == "d1-mse") {
        value = pcq::d1_mse(a, b);
    } else if (opt.metric == "d2-mse") {
        value = pcq::d2_mse(with_normals(a, opt), with_normals(b, opt));
    } else if (opt.metric == "d1-psnr") {
        value = pcq::geometry_psnr(pcq::d1_mse(a, b), {resolve_resolution(opt, a)});
    } else if (opt.metric == "d2-psnr") {
        value = pcq::geometry_psnr(pcq::d2_mse(with_normals(a, opt), with_normals(b, opt)),
                                   {resolve_resolution(opt, a)});
    } else if (opt.metric == "bin-bce" || opt.metric == "bin-wbce" ||
               opt.metric == "bin-nabce") {
        value = blockwise_metric(opt, pcq::GridRepr::binary, a, b);
    } else if (opt.metric == "tdf-mse") {
        value = blockwise_metric(opt, pcq::GridRepr::tdf, a, b);
    } else if (opt.metric == "bin-pl") {
        value = perceptual_metric(opt, pcq::GridRepr::binary, a, b);
    } else if (opt.metric == "tdf-pl") {
        value = perceptual_metric(opt, pcq::GridRepr::tdf, a, b);
    } else {
        throw UsageError("unknown metric '" + opt.metric + "'");
    }
    std::cout << format_full(value) << "\n";
    return 0;
}

struct TrainOptions {
    std::string data_dir;
    std::size_t synthetic = 0;
    std::string repr = "tdf";
    std::string loss;  // empty: default for repr
    std::string out;
    int block_size = 64;
    double upper_bound = 5.0;
    pcq::TrainConfig cfg;
    std::vector<int> channels;
};

int run_train(const TrainOptions& opt) {
    const pcq::GridRepr repr = pcq::grid_repr_from_string(opt.repr);
    if (repr == pcq::GridRepr::tsdf) {
        throw UsageError("training supports --repr binary or tdf");
    }
    if (opt.data_dir.empty() == (opt.synthetic == 0)) {
        throw UsageError("exactly one of --data or --synthetic is required");
    }

    pcq::TrainConfig cfg = opt.cfg;
    if (!opt.channels.empty()) {
        if (opt.channels.size() != 3) {
            throw UsageError("--channels expects three values");
        }
        cfg.channels = {opt.channels[0], opt.channels[1], opt.channels[2]};
    }
    cfg.loss = opt.loss.empty()
                   ? (repr == pcq::GridRepr::binary ? pcq::LossKind::focal
                                                    : pcq::LossKind::adaptive_mse)
                   : pcq::loss_kind_from_string(opt.loss);

    const pcq::TdfConfig tdf_cfg{opt.upper_bound};
    const std::vector<pcq::Tensor4> blocks =
        opt.data_dir.empty()
            ? pcq::synthetic_training_blocks(opt.synthetic, repr, opt.block_size, tdf_cfg,
                                             cfg.seed)
            : pcq::load_training_blocks(opt.data_dir, repr, opt.block_size, tdf_cfg);

    const pcq::TrainResult result = pcq::train(blocks, repr, cfg);
    pcq::save_params(result.params, opt.out);
    std::cout << "blocks " << blocks.size() << "\n"
              << "steps " << result.loss_history.size() << "\n"
              << "initial_loss " << format_full(result.loss_history.front()) << "\n"
              << "final_loss " << format_full(result.loss_history.back()) << "\n";
    return 0;
}

struct EvalOptions {
    std::string scores_csv;
    std::string out_dir;
    std::vector<std::string> metrics;
    std::string group_by;
};

std::string sanitize(const std::string& name) {
    std::string out;
    for (const char c : name) {
        out.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
    }
    return out;
}

void evaluate_and_write(const std::vector<pcq::StimulusRecord>& records,
                        const std::vector<std::string>& metrics,
                        const std::filesystem::path& report_path,
                        const std::filesystem::path& predictions_path, bool echo) {
    const std::vector<pcq::MetricReportRow> rows = pcq::evaluate_metrics(records, metrics);
    pcq::write_report_csv(rows, report_path);
    std::map<std::string, std::vector<double>> predictions;
    for (const std::string& metric : metrics) {
        predictions[metric] = pcq::loocv_evaluate(records, metric).predictions;
    }
    pcq::write_predictions_csv(records, metrics, predictions, predictions_path);
    if (echo) {
        std::cout << pcq::report_to_csv(rows);
    }
}

int run_eval(const EvalOptions& opt) {
    const std::vector<pcq::StimulusRecord> records = pcq::read_scores_csv(opt.scores_csv);
    std::vector<std::string> metrics =
        opt.metrics.empty() ? pcq::metric_names(records) : opt.metrics;

    std::filesystem::create_directories(opt.out_dir);
    const std::filesystem::path out_dir(opt.out_dir);
    evaluate_and_write(records, metrics, out_dir / "report.csv", out_dir / "predictions.csv",
                       true);

    if (!opt.group_by.empty()) {
        if (opt.group_by != "codec") {
            throw UsageError("--group-by supports only 'codec'");
        }
        std::map<std::string, std::vector<pcq::StimulusRecord>> groups;
        for (const pcq::StimulusRecord& rec : records) {
            groups[rec.codec].push_back(rec);
        }
        for (const auto& [codec, group_records] : groups) {
            const std::string tag = sanitize(codec);
            evaluate_and_write(group_records, metrics, out_dir / ("report_" + tag + ".csv"),
                               out_dir / ("predictions_" + tag + ".csv"), false);
        }
    }
    return 0;
}

struct FeaturesOptions {
    std::string weights;
    std::string data_dir;
    std::size_t synthetic = 0;
    int block_size = 64;
    double upper_bound = 5.0;
    std::string scores_csv;
    std::uint64_t seed = 1;
};

int run_features(const FeaturesOptions& opt) {
    const pcq::AutoencoderParams params = pcq::load_params(opt.weights);
    if (opt.data_dir.empty() && opt.synthetic == 0) {
        throw UsageError("one of --data or --synthetic is required");
    }
    const pcq::TdfConfig tdf_cfg{opt.upper_bound};
    const std::vector<pcq::Tensor4> probe =
        opt.data_dir.empty()
            ? pcq::synthetic_training_blocks(opt.synthetic, params.repr, opt.block_size,
                                             tdf_cfg, opt.seed)
            : pcq::load_training_blocks(opt.data_dir, params.repr, opt.block_size, tdf_cfg);

    const std::vector<pcq::FeatureUsage> report = pcq::detect_unused_features(params, probe);
    std::cout << "feature_maps " << report.size() << "\n";
    for (std::size_t f = 0; f < report.size(); ++f) {
        std::cout << "map " << f << (report[f].used ? " used " : " unused ")
                  << format_full(report[f].min_value) << " "
                  << format_full(report[f].max_value) << "\n";
    }

    if (!opt.scores_csv.empty()) {
        // Columns: mos, then f0..f{F-1} per-map scores.
        std::ifstream in(opt.scores_csv);
        if (!in) {
            throw pcq::IoError("cannot open '" + opt.scores_csv + "'");
        }
        std::string line;
        if (!std::getline(in, line)) {
            throw pcq::ParseError("empty per-map scores CSV", 1);
        }
        std::vector<double> mos;
        std::vector<std::vector<double>> matrix;
        std::size_t line_no = 1;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            std::istringstream ls(line);
            std::string cell;
            std::vector<double> row;
            while (std::getline(ls, cell, ',')) {
                try {
                    row.push_back(std::stod(cell));
                } catch (const std::exception&) {
                    throw pcq::ParseError("malformed number '" + cell + "'", line_no);
                }
            }
            if (row.empty()) {
                throw pcq::ParseError("empty row", line_no);
            }
            mos.push_back(row.front());
            matrix.emplace_back(row.begin() + 1, row.end());
        }
        std::cout << "best_feature " << pcq::select_best_feature(matrix, mos) << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Point cloud geometry quality assessment toolkit"};
    app.require_subcommand(1);

    int threads = 1;
    app.add_option("--threads", threads, "worker threads (results are thread-count invariant)")
        ->envname("PCQ_THREADS")
        ->check(CLI::PositiveNumber);

    VoxelizeOptions vox;
    CLI::App* cmd_vox = app.add_subcommand("voxelize", "voxelize a point cloud into block grids");
    cmd_vox->add_option("input", vox.input, "input .ply")->required();
    cmd_vox->add_option("--out", vox.out_dir, "output directory")->required();
    cmd_vox->add_option("--repr", vox.repr, "grid representation")
        ->check(CLI::IsMember({"binary", "tdf", "tsdf"}));
    cmd_vox->add_option("--block-size", vox.block_size)->check(CLI::Range(2, 1024));
    cmd_vox->add_option("--u", vox.upper_bound, "TDF upper bound distance");
    cmd_vox->add_flag("--estimate-normals", vox.estimate_normals,
                      "estimate normals when the file has none (tsdf)");

    MetricOptions met;
    CLI::App* cmd_met = app.add_subcommand("metric", "compute a quality metric between clouds");
    cmd_met->add_option("reference", met.cloud_a, "reference .ply")->required();
    cmd_met->add_option("distorted", met.cloud_b, "distorted .ply")->required();
    cmd_met->add_option("--metric", met.metric, "metric name")
        ->required()
        ->check(CLI::IsMember({"d1-mse", "d2-mse", "d1-psnr", "d2-psnr", "bin-bce", "bin-wbce",
                               "bin-nabce", "tdf-mse", "bin-pl", "tdf-pl"}));
    cmd_met->add_option("--block-size", met.block_size)->check(CLI::Range(2, 1024));
    cmd_met->add_option("--u", met.upper_bound, "TDF upper bound distance");
    cmd_met->add_option("--alpha", met.alpha, "WBCE balancing weight");
    cmd_met->add_option("--window", met.window, "naBCE window edge m");
    cmd_met->add_option("--aggregation", met.aggregation, "block aggregation")
        ->check(CLI::IsMember({"L1", "L2", "l1", "l2"}));
    cmd_met->add_option("--weights", met.weights, "autoencoder checkpoint (pl metrics)");
    cmd_met->add_option("--feature", met.feature, "'all' or a latent map index (pl metrics)");
    cmd_met->add_option("--resolution", met.resolution, "PSNR resolution override");
    cmd_met->add_option("--bit-depth", met.bit_depth, "coordinate bit depth (PSNR peak)");
    cmd_met->add_option("--normals-k", met.normals_k, "neighbors for normal estimation");
    cmd_met->add_flag("--reestimate-normals", met.reestimate_normals,
                      "ignore normals stored in the files");

    TrainOptions tr;
    CLI::App* cmd_tr = app.add_subcommand("train", "train a perceptual-loss autoencoder");
    cmd_tr->add_option("--data", tr.data_dir, "directory of training .ply files");
    cmd_tr->add_option("--synthetic", tr.synthetic, "train on N synthetic shapes instead");
    cmd_tr->add_option("--repr", tr.repr, "grid representation")
        ->check(CLI::IsMember({"binary", "tdf"}));
    cmd_tr->add_option("--loss", tr.loss, "training loss")
        ->check(CLI::IsMember({"focal", "adaptive-mse"}));
    cmd_tr->add_option("--out", tr.out, "checkpoint path")->required();
    cmd_tr->add_option("--block-size", tr.block_size)->check(CLI::Range(8, 1024));
    cmd_tr->add_option("--u", tr.upper_bound, "TDF upper bound distance");
    cmd_tr->add_option("--steps", tr.cfg.steps)->check(CLI::PositiveNumber);
    cmd_tr->add_option("--batch-size", tr.cfg.batch_size)->check(CLI::PositiveNumber);
    cmd_tr->add_option("--lr", tr.cfg.learning_rate);
    cmd_tr->add_option("--beta1", tr.cfg.beta1);
    cmd_tr->add_option("--beta2", tr.cfg.beta2);
    cmd_tr->add_option("--alpha", tr.cfg.alpha, "focal balancing weight");
    cmd_tr->add_option("--gamma", tr.cfg.gamma, "focal exponent");
    cmd_tr->add_option("--beta", tr.cfg.beta, "adaptive MSE bounding factor");
    cmd_tr->add_option("--channels", tr.channels, "analysis channel widths (three values)");
    cmd_tr->add_option("--seed", tr.cfg.seed);

    EvalOptions ev;
    CLI::App* cmd_ev = app.add_subcommand("eval", "rank metrics against subjective scores");
    cmd_ev->add_option("scores", ev.scores_csv, "scores CSV")->required();
    cmd_ev->add_option("--out", ev.out_dir, "output directory")->required();
    cmd_ev->add_option("--metrics", ev.metrics, "metric columns to evaluate")->delimiter(',');
    cmd_ev->add_option("--group-by", ev.group_by, "additionally report per codec");

    FeaturesOptions fe;
    CLI::App* cmd_fe = app.add_subcommand("features", "latent feature-map usage and selection");
    cmd_fe->add_option("--weights", fe.weights, "autoencoder checkpoint")->required();
    cmd_fe->add_option("--data", fe.data_dir, "probe .ply directory");
    cmd_fe->add_option("--synthetic", fe.synthetic, "probe with N synthetic shapes");
    cmd_fe->add_option("--block-size", fe.block_size)->check(CLI::Range(8, 1024));
    cmd_fe->add_option("--u", fe.upper_bound, "TDF upper bound distance");
    cmd_fe->add_option("--scores", fe.scores_csv, "per-map scores CSV (mos,f0,f1,...)");
    cmd_fe->add_option("--seed", fe.seed, "seed for synthetic probes");

    try {
        app.parse(argc, argv);
        pcq::set_thread_count(threads);
        if (cmd_vox->parsed()) return run_voxelize(vox);
        if (cmd_met->parsed()) return run_metric(met);
        if (cmd_tr->parsed()) return run_train(tr);
        if (cmd_ev->parsed()) return run_eval(ev);
        if (cmd_fe->parsed()) return run_features(fe);
        return 2;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const pcq::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
