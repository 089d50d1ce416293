#include "slicematch/cli.h"

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "slicematch/aggregation.h"
#include "slicematch/evaluation.h"
#include "slicematch/geometry.h"
#include "slicematch/learning.h"
#include "slicematch/matching.h"
#include "slicematch/smtf.h"
#include "slicematch/tensor.h"

namespace slicematch {
namespace {

using ordered_json = nlohmann::ordered_json;
namespace fs = std::filesystem;

ordered_json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open " + path);
    }
    try {
        return ordered_json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

void write_json_file(const std::string& path, const ordered_json& j) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("cannot write " + path);
    }
    out << j.dump(2) << "\n";
    if (!out) {
        throw std::runtime_error("write failed for " + path);
    }
}

CameraModel camera_from_json(const ordered_json& j) {
    CameraModel cam;
    cam.fov_deg = j.value("fov_deg", 360.0);
    cam.n_slices = j.value("n_slices", 1);
    if (j.contains("max_range")) {
        cam.max_range = j.at("max_range").get<double>();
    }
    validate_camera(cam);
    return cam;
}

ordered_json camera_to_json(const CameraModel& cam) {
    ordered_json j;
    j["fov_deg"] = cam.fov_deg;
    j["n_slices"] = cam.n_slices;
    if (std::isfinite(cam.max_range)) {
        j["max_range"] = cam.max_range;
    }
    return j;
}

std::optional<OrientationPrior> prior_from_json(const ordered_json& j) {
    if (!j.contains("prior")) {
        return std::nullopt;
    }
    const auto& p = j.at("prior");
    return OrientationPrior{p.at("center_deg").get<double>(),
                            p.at("half_width_deg").get<double>()};
}

// One pose object {u, v, theta_deg}; an array of them; or {"poses": [...]}.
std::vector<Pose> poses_from_json(const ordered_json& j, const std::string& what) {
    const ordered_json* arr = &j;
    if (j.is_object()) {
        if (j.contains("poses")) {
            arr = &j.at("poses");
        } else if (j.contains("u")) {
            return {make_pose(j.at("u").get<double>(), j.at("v").get<double>(),
                              j.at("theta_deg").get<double>())};
        }
    }
    if (!arr->is_array()) {
        throw std::runtime_error(what + ": expected a pose array");
    }
    std::vector<Pose> poses;
    poses.reserve(arr->size());
    for (const auto& e : *arr) {
        poses.push_back(make_pose(e.at("u").get<double>(), e.at("v").get<double>(),
                                  e.at("theta_deg").get<double>()));
    }
    return poses;
}

void ensure_parent_dir(const std::string& path) {
    const fs::path parent = fs::path(path).parent_path();
    if (!parent.empty()) {
        fs::create_directories(parent);
    }
}

void write_smtf_raw(const std::string& path, std::vector<std::uint32_t> dims,
                    std::vector<float> data) {
    SmtfTensor t;
    t.dims = std::move(dims);
    t.data = std::move(data);
    write_smtf(path, t);
}

void save_toy_params(const std::string& dir, const ToyParams& p) {
    fs::create_directories(dir);
    auto enc = [&](const std::string& stem, const ToyEncoder& e) {
        write_smtf_raw(dir + "/" + stem + "_weight.smtf",
                       {static_cast<std::uint32_t>(e.out_channels),
                        static_cast<std::uint32_t>(e.in_channels)},
                       e.weight);
        write_smtf_raw(dir + "/" + stem + "_bias.smtf",
                       {static_cast<std::uint32_t>(e.out_channels)}, e.bias);
    };
    auto mlp = [&](const std::string& stem, const AttentionMlp& m) {
        write_smtf_raw(dir + "/" + stem + "_w1.smtf",
                       {static_cast<std::uint32_t>(m.hidden_dim),
                        static_cast<std::uint32_t>(m.in_dim)},
                       m.w1);
        write_smtf_raw(dir + "/" + stem + "_b1.smtf",
                       {static_cast<std::uint32_t>(m.hidden_dim)}, m.b1);
        write_smtf_raw(dir + "/" + stem + "_w2.smtf",
                       {static_cast<std::uint32_t>(m.hidden_dim)}, m.w2);
        write_smtf_raw(dir + "/" + stem + "_b2.smtf", {1u}, {m.b2});
    };
    enc("ground_encoder", p.ground_encoder);
    enc("aerial_encoder", p.aerial_encoder);
    mlp("ground_mlp", p.ground_mlp);
    mlp("aerial_mlp", p.aerial_mlp);
}

ToyParams load_toy_params(const std::string& dir) {
    auto enc = [&](const std::string& stem) {
        SmtfTensor w = read_smtf(dir + "/" + stem + "_weight.smtf");
        SmtfTensor b = read_smtf(dir + "/" + stem + "_bias.smtf");
        if (w.dims.size() != 2 || b.dims.size() != 1 || b.dims[0] != w.dims[0]) {
            throw std::runtime_error("params: inconsistent " + stem + " tensors in " + dir);
        }
        ToyEncoder e;
        e.out_channels = static_cast<int>(w.dims[0]);
        e.in_channels = static_cast<int>(w.dims[1]);
        e.weight = std::move(w.data);
        e.bias = std::move(b.data);
        return e;
    };
    auto mlp = [&](const std::string& stem) {
        SmtfTensor w1 = read_smtf(dir + "/" + stem + "_w1.smtf");
        SmtfTensor b1 = read_smtf(dir + "/" + stem + "_b1.smtf");
        SmtfTensor w2 = read_smtf(dir + "/" + stem + "_w2.smtf");
        SmtfTensor b2 = read_smtf(dir + "/" + stem + "_b2.smtf");
        if (w1.dims.size() != 2 || b1.dims.size() != 1 || w2.dims.size() != 1 ||
            b1.dims[0] != w1.dims[0] || w2.dims[0] != w1.dims[0] || b2.data.size() != 1) {
            throw std::runtime_error("params: inconsistent " + stem + " tensors in " + dir);
        }
        AttentionMlp m;
        m.hidden_dim = static_cast<int>(w1.dims[0]);
        m.in_dim = static_cast<int>(w1.dims[1]);
        m.w1 = std::move(w1.data);
        m.b1 = std::move(b1.data);
        m.w2 = std::move(w2.data);
        m.b2 = b2.data[0];
        return m;
    };
    ToyParams p;
    p.ground_encoder = enc("ground_encoder");
    p.aerial_encoder = enc("aerial_encoder");
    p.ground_mlp = mlp("ground_mlp");
    p.aerial_mlp = mlp("aerial_mlp");
    if (p.ground_encoder.out_channels != p.aerial_encoder.out_channels ||
        p.ground_mlp.in_dim != p.ground_encoder.out_channels ||
        p.aerial_mlp.in_dim != p.aerial_encoder.out_channels + 1) {
        throw std::runtime_error("params: mismatched module dimensions in " + dir);
    }
    return p;
}

struct MasksArgs {
    double fov = 360.0;
    int slices = 4;
    int size = 16;
    int supersample = 8;
    int n_u = 4;
    int n_v = 4;
    int n_theta = 4;
    double prior_center = 0.0;
    double prior_half_width = 0.0;
    bool has_prior = false;
    double max_range = 0.0;  // <= 0 means unbounded
    int workers = 1;
    std::string out_dir;
};

void cmd_masks(const MasksArgs& a) {
    CameraModel cam;
    cam.fov_deg = a.fov;
    cam.n_slices = a.slices;
    if (a.max_range > 0.0) {
        cam.max_range = a.max_range;
    }
    validate_camera(cam);
    std::optional<OrientationPrior> prior;
    if (a.has_prior) {
        prior = OrientationPrior{a.prior_center, a.prior_half_width};
    }
    const PoseSet poses = generate_pose_grid(a.n_u, a.n_v, a.n_theta, prior);
    const MaskSet masks = precompute_masks(cam, poses, a.size, a.supersample, a.workers);

    fs::create_directories(a.out_dir);
    const std::size_t distinct = masks.distinct_rasterizations();
    std::vector<float> stacked;
    stacked.reserve(distinct * static_cast<std::size_t>(a.size) * a.size);
    for (std::size_t s = 0; s < distinct; ++s) {
        const auto& w = masks.slot_weights(static_cast<int>(s));
        stacked.insert(stacked.end(), w.begin(), w.end());
    }
    write_smtf_raw(a.out_dir + "/masks.smtf",
                   {static_cast<std::uint32_t>(distinct), static_cast<std::uint32_t>(a.size),
                    static_cast<std::uint32_t>(a.size)},
                   std::move(stacked));

    ordered_json index;
    index["camera"] = camera_to_json(cam);
    index["grid"] = {{"n_u", a.n_u}, {"n_v", a.n_v}, {"n_theta", a.n_theta}};
    if (prior) {
        index["prior"] = {{"center_deg", prior->center_deg},
                          {"half_width_deg", prior->half_width_deg}};
    }
    index["size"] = a.size;
    index["supersample"] = a.supersample;
    index["n_poses"] = poses.size();
    index["n_slices"] = cam.n_slices;
    index["distinct_rasterizations"] = distinct;
    ordered_json table = ordered_json::object();
    for (std::size_t k = 0; k < poses.size(); ++k) {
        for (int n = 1; n <= cam.n_slices; ++n) {
            table[std::to_string(k) + "," + std::to_string(n)] = masks.slot(k, n);
        }
    }
    index["index"] = std::move(table);
    write_json_file(a.out_dir + "/index.json", index);

    std::cout << "wrote " << distinct << " distinct masks for " << poses.size() << " poses to "
              << a.out_dir << "\n";
}

struct MatchArgs {
    std::string ground_path;
    std::string aerial_path;
    std::string config_path;
    std::string out_json;
    std::string out_heatmap;
    int workers = 1;
};

void cmd_match(const MatchArgs& a) {
    const ordered_json cfg = read_json_file(a.config_path);
    const CameraModel camera = camera_from_json(cfg.at("camera"));
    const auto& g = cfg.at("grid");
    const PoseSet grid = generate_pose_grid(g.at("n_u").get<int>(), g.at("n_v").get<int>(),
                                            g.at("n_theta").get<int>(), prior_from_json(cfg));
    const int supersample = cfg.value("supersample", 8);

    const FeatureMap ground = read_smtf_feature_map(a.ground_path);
    const FeatureMap aerial = read_smtf_feature_map(a.aerial_path);
    if (aerial.height != aerial.width) {
        throw std::runtime_error("aerial map must be square, got " +
                                 std::to_string(aerial.height) + "x" +
                                 std::to_string(aerial.width));
    }
    if (aerial.channels != ground.channels) {
        throw std::runtime_error("ground and aerial channel counts differ");
    }

    ToyParams params;
    if (!cfg.contains("params") || (cfg.at("params").is_string() &&
                                    cfg.at("params").get<std::string>() == "identity")) {
        params = identity_toy_params(ground.channels, ground.channels);
    } else if (cfg.at("params").is_object() && cfg.at("params").contains("dir")) {
        params = load_toy_params(cfg.at("params").at("dir").get<std::string>());
    } else {
        throw std::runtime_error("config: params must be \"identity\" or {\"dir\": path}");
    }
    if (params.ground_encoder.in_channels != ground.channels) {
        throw std::runtime_error("params expect " +
                                 std::to_string(params.ground_encoder.in_channels) +
                                 " input channels, maps have " + std::to_string(ground.channels));
    }

    const FeatureMap z_g_raw = params.ground_encoder.apply(ground);
    const FeatureMap z_a = params.aerial_encoder.apply(aerial);
    const GroundAttentionResult ground_attn = ground_self_attention(z_g_raw, params.ground_mlp);
    const GroundSliceSet slices = slice_ground(ground_attn.reweighted, camera.n_slices);
    const MaskSet masks = precompute_masks(camera, grid, aerial.height, supersample, a.workers);
    AggregateOptions opts;
    opts.n_workers = a.workers;
    const AggregateResult agg = aggregate_all(z_a, slices, grid, masks, params.aerial_mlp, opts);
    const GlobalDescriptor d_g = ground_global(slices);
    const ScoreMap scores = score_poses(d_g, agg.descriptors, grid);
    const Pose best = predict(scores);

    ordered_json out;
    out["u"] = best.u;
    out["v"] = best.v;
    out["theta_deg"] = best.theta_deg;
    out["score"] = scores.scores[static_cast<std::size_t>(scores.best_index)];
    out["k"] = grid.size();
    out["best_index"] = scores.best_index;
    if (!a.out_json.empty()) {
        ensure_parent_dir(a.out_json);
        write_json_file(a.out_json, out);
    }
    if (!a.out_heatmap.empty()) {
        ensure_parent_dir(a.out_heatmap);
        write_pgm(a.out_heatmap, heatmap_to_image(location_heatmap(scores)));
    }
    std::cout << out.dump(2) << "\n";
}

struct TrainArgs {
    std::string config_path;
    std::uint32_t seed = 0;
    std::string out_dir;
};

TrainConfig train_config_from_json(const ordered_json& j) {
    TrainConfig cfg;
    cfg.c_raw = j.value("c_raw", cfg.c_raw);
    cfg.c = j.value("c", cfg.c);
    cfg.hidden = j.value("hidden", cfg.hidden);
    cfg.world_size = j.value("world_size", cfg.world_size);
    cfg.height = j.value("height", cfg.height);
    cfg.width = j.value("width", cfg.width);
    cfg.aerial_size = j.value("aerial_size", cfg.aerial_size);
    if (j.contains("camera")) {
        cfg.camera = camera_from_json(j.at("camera"));
    }
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        cfg.grid_n_u = g.value("n_u", cfg.grid_n_u);
        cfg.grid_n_v = g.value("n_v", cfg.grid_n_v);
        cfg.grid_n_theta = g.value("n_theta", cfg.grid_n_theta);
    }
    cfg.supersample = j.value("supersample", cfg.supersample);
    cfg.steps = j.value("steps", cfg.steps);
    cfg.lr = j.value("lr", cfg.lr);
    cfg.fd_eps = j.value("fd_eps", cfg.fd_eps);
    cfg.alpha = j.value("alpha", cfg.alpha);
    cfg.tau = j.value("tau", cfg.tau);
    cfg.noise_sigma = j.value("noise_sigma", cfg.noise_sigma);
    cfg.init_scale = j.value("init_scale", cfg.init_scale);
    cfg.n_workers = j.value("n_workers", cfg.n_workers);
    return cfg;
}

void cmd_train(const TrainArgs& a) {
    TrainConfig cfg;
    if (!a.config_path.empty()) {
        cfg = train_config_from_json(read_json_file(a.config_path));
    }
    cfg.seed = a.seed;
    const TrainResult result = train_toy(cfg);

    fs::create_directories(a.out_dir);
    save_toy_params(a.out_dir, result.params);

    ordered_json curve;
    curve["loss_curve"] = result.loss_curve;
    write_json_file(a.out_dir + "/loss_curve.json", curve);

    ordered_json manifest;
    manifest["format"] = "slicematch-toy-params";
    manifest["seed"] = cfg.seed;
    manifest["steps"] = cfg.steps;
    manifest["c_raw"] = cfg.c_raw;
    manifest["c"] = cfg.c;
    manifest["hidden"] = cfg.hidden > 0 ? cfg.hidden : cfg.c;
    manifest["camera"] = camera_to_json(cfg.camera);
    manifest["grid"] = {{"n_u", cfg.grid_n_u}, {"n_v", cfg.grid_n_v},
                        {"n_theta", cfg.grid_n_theta}};
    manifest["files"] = {"ground_encoder_weight.smtf", "ground_encoder_bias.smtf",
                         "aerial_encoder_weight.smtf", "aerial_encoder_bias.smtf",
                         "ground_mlp_w1.smtf",         "ground_mlp_b1.smtf",
                         "ground_mlp_w2.smtf",         "ground_mlp_b2.smtf",
                         "aerial_mlp_w1.smtf",         "aerial_mlp_b1.smtf",
                         "aerial_mlp_w2.smtf",         "aerial_mlp_b2.smtf"};
    if (!result.loss_curve.empty()) {
        manifest["first_loss"] = result.loss_curve.front();
        manifest["final_loss"] = result.loss_curve.back();
    }
    write_json_file(a.out_dir + "/params.json", manifest);

    std::cout << "trained " << cfg.steps << " steps (seed " << cfg.seed << "); ";
    if (!result.loss_curve.empty()) {
        std::cout << "loss " << result.loss_curve.front() << " -> " << result.loss_curve.back()
                  << "; ";
    }
    std::cout << "params in " << a.out_dir << "\n";
}

struct EvalArgs {
    std::string pred_path;
    std::string gt_path;
    double extent_m = 100.0;
    std::vector<double> thresholds_m{1.0, 5.0};
    std::vector<double> thresholds_deg{1.0, 5.0};
    std::string out_path;
};

void cmd_eval(const EvalArgs& a) {
    const std::vector<Pose> pred = poses_from_json(read_json_file(a.pred_path), a.pred_path);
    const std::vector<Pose> gt = poses_from_json(read_json_file(a.gt_path), a.gt_path);
    if (pred.size() != gt.size()) {
        throw std::runtime_error("prediction and ground-truth counts differ (" +
                                 std::to_string(pred.size()) + " vs " +
                                 std::to_string(gt.size()) + ")");
    }
    std::vector<PoseError> errors;
    errors.reserve(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        errors.push_back(pose_error(pred[i], gt[i], a.extent_m));
    }
    const ErrorSummary s = summarize(errors, a.thresholds_m, a.thresholds_deg);

    ordered_json report;
    report["count"] = errors.size();
    report["aerial_extent_m"] = a.extent_m;
    report["mean_location_m"] = s.mean_location_m;
    report["median_location_m"] = s.median_location_m;
    report["mean_orientation_deg"] = s.mean_orientation_deg;
    report["median_orientation_deg"] = s.median_orientation_deg;
    report["thresholds_m"] = s.thresholds_m;
    report["thresholds_deg"] = s.thresholds_deg;
    report["recall_lateral"] = s.recall_lateral;
    report["recall_longitudinal"] = s.recall_longitudinal;
    report["recall_orientation"] = s.recall_orientation;
    if (!a.out_path.empty()) {
        ensure_parent_dir(a.out_path);
        write_json_file(a.out_path, report);
    }
    std::cout << report.dump(2) << "\n";
}

struct BenchArgs {
    std::vector<int> k_list{160, 1600, 16000};
    BenchDims dims;
    std::string out_path;
};

void cmd_bench(const BenchArgs& a) {
    const BenchReport rep = bench_scoring(a.dims, a.k_list);
    std::cout << "unit cosine " << rep.unit_cosine_ms << " ms, unit pool " << rep.unit_pool_ms
              << " ms\n";
    std::cout << "K\twall_ms\tattention_evals\tpools\tpeak_bytes\n";
    for (const auto& r : rep.rows) {
        std::cout << r.k << "\t" << r.wall_ms << "\t" << r.attention_evals << "\t"
                  << r.pools_executed << "\t" << r.peak_bytes_estimate << "\n";
    }
    if (!a.out_path.empty()) {
        ordered_json j;
        j["dims"] = {{"channels", a.dims.channels},     {"aerial_size", a.dims.aerial_size},
                     {"n_slices", a.dims.n_slices},     {"n_theta", a.dims.n_theta},
                     {"height", a.dims.height},         {"width", a.dims.width},
                     {"supersample", a.dims.supersample}, {"n_workers", a.dims.n_workers},
                     {"seed", a.dims.seed}};
        j["unit_cosine_ms"] = rep.unit_cosine_ms;
        j["unit_pool_ms"] = rep.unit_pool_ms;
        ordered_json rows = ordered_json::array();
        for (const auto& r : rep.rows) {
            rows.push_back({{"k", r.k},
                            {"wall_ms", r.wall_ms},
                            {"attention_evals", r.attention_evals},
                            {"pools_executed", r.pools_executed},
                            {"peak_bytes_estimate", r.peak_bytes_estimate}});
        }
        j["rows"] = std::move(rows);
        ensure_parent_dir(a.out_path);
        write_json_file(a.out_path, j);
    }
}

struct CalibrateArgs {
    std::string image_a;
    std::string image_b;
    double lat_a = 0.0, lon_a = 0.0, lat_b = 0.0, lon_b = 0.0;
    std::string out_path;
};

void cmd_calibrate(const CalibrateArgs& a) {
    const GrayImage img_a = read_pgm(a.image_a);
    const GrayImage img_b = read_pgm(a.image_b);
    const CalibrationResult r = calibrate_ground_resolution(img_a, img_b, {a.lat_a, a.lon_a},
                                                            {a.lat_b, a.lon_b});
    ordered_json j;
    j["dx"] = r.dx;
    j["dy"] = r.dy;
    j["peak_correlation"] = r.peak_correlation;
    j["distance_m"] = r.distance_m;
    j["ground_resolution_m_per_px"] = r.ground_resolution_m_per_px;
    if (!a.out_path.empty()) {
        ensure_parent_dir(a.out_path);
        write_json_file(a.out_path, j);
    }
    std::cout << j.dump(2) << "\n";
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
    CLI::App app{"slicematch: slice-mask cross-view pose estimation"};
    app.require_subcommand(1);

    MasksArgs masks_args;
    CLI::App* masks = app.add_subcommand("masks", "Precompute slice masks for a pose grid");
    masks->add_option("--fov", masks_args.fov, "Field of view in degrees (default 360)");
    masks->add_option("--slices", masks_args.slices, "Number of azimuth slices N");
    masks->add_option("--size", masks_args.size, "Aerial grid side length L");
    masks->add_option("--supersample", masks_args.supersample, "Subsamples per cell edge");
    masks->add_option("--grid-u", masks_args.n_u, "Grid locations along u");
    masks->add_option("--grid-v", masks_args.n_v, "Grid locations along v");
    masks->add_option("--grid-theta", masks_args.n_theta, "Grid orientations");
    CLI::Option* pc = masks->add_option("--prior-center", masks_args.prior_center,
                                        "Orientation prior center (degrees)");
    CLI::Option* pw = masks->add_option("--prior-half-width", masks_args.prior_half_width,
                                        "Orientation prior half width (degrees)");
    pc->needs(pw);
    pw->needs(pc);
    masks->add_option("--max-range", masks_args.max_range,
                      "Frustum radius in normalized units (0 = unbounded)");
    masks->add_option("--workers", masks_args.workers, "Rasterization worker threads");
    masks->add_option("--out", masks_args.out_dir, "Output directory")->required();

    MatchArgs match_args;
    CLI::App* match = app.add_subcommand("match", "Score a ground/aerial pair over a pose grid");
    match->add_option("--ground", match_args.ground_path, "Ground feature map (SMTF)")->required();
    match->add_option("--aerial", match_args.aerial_path, "Aerial feature map (SMTF)")->required();
    match->add_option("--config", match_args.config_path, "JSON config")->required();
    match->add_option("--out-json", match_args.out_json, "Prediction JSON path");
    match->add_option("--out-heatmap", match_args.out_heatmap, "Location heatmap PGM path");
    match->add_option("--workers", match_args.workers, "Worker threads");

    TrainArgs train_args;
    CLI::App* train = app.add_subcommand("train", "Train the toy pipeline on synthetic pairs");
    train->add_option("--config", train_args.config_path, "JSON training config");
    train->add_option("--seed", train_args.seed, "Random seed")->required();
    train->add_option("--out", train_args.out_dir, "Output directory")->required();

    EvalArgs eval_args;
    CLI::App* eval = app.add_subcommand("eval", "Summarize pose errors against ground truth");
    eval->add_option("--pred", eval_args.pred_path, "Predictions JSON")->required();
    eval->add_option("--gt", eval_args.gt_path, "Ground-truth JSON")->required();
    eval->add_option("--extent-m", eval_args.extent_m, "Aerial extent in meters")->required();
    eval->add_option("--threshold-m", eval_args.thresholds_m, "Meter recall thresholds")
        ->delimiter(',');
    eval->add_option("--threshold-deg", eval_args.thresholds_deg, "Degree recall thresholds")
        ->delimiter(',');
    eval->add_option("--out", eval_args.out_path, "Report JSON path");

    BenchArgs bench_args;
    CLI::App* bench = app.add_subcommand("bench", "Throughput benchmark over candidate counts");
    bench->add_option("--k-list", bench_args.k_list, "Candidate counts, comma separated")
        ->delimiter(',');
    bench->add_option("--channels", bench_args.dims.channels, "Feature channels");
    bench->add_option("--size", bench_args.dims.aerial_size, "Aerial grid side length");
    bench->add_option("--slices", bench_args.dims.n_slices, "Azimuth slices");
    bench->add_option("--grid-theta", bench_args.dims.n_theta, "Orientations per location");
    bench->add_option("--height", bench_args.dims.height, "Ground map height");
    bench->add_option("--width", bench_args.dims.width, "Ground map width");
    bench->add_option("--supersample", bench_args.dims.supersample, "Subsamples per cell edge");
    bench->add_option("--workers", bench_args.dims.n_workers, "Worker threads");
    bench->add_option("--seed", bench_args.dims.seed, "Random seed");
    bench->add_option("--out", bench_args.out_path, "Report JSON path");

    CalibrateArgs cal_args;
    CLI::App* calibrate =
        app.add_subcommand("calibrate", "Ground resolution from two overlapping aerial tiles");
    calibrate->add_option("--image-a", cal_args.image_a, "First tile (PGM)")->required();
    calibrate->add_option("--image-b", cal_args.image_b, "Second tile (PGM)")->required();
    calibrate->add_option("--lat-a", cal_args.lat_a, "Latitude of tile A center")->required();
    calibrate->add_option("--lon-a", cal_args.lon_a, "Longitude of tile A center")->required();
    calibrate->add_option("--lat-b", cal_args.lat_b, "Latitude of tile B center")->required();
    calibrate->add_option("--lon-b", cal_args.lon_b, "Longitude of tile B center")->required();
    calibrate->add_option("--out", cal_args.out_path, "Result JSON path");

    masks->callback([&] {
        masks_args.has_prior = pc->count() > 0;
        cmd_masks(masks_args);
    });
    match->callback([&] { cmd_match(match_args); });
    train->callback([&] { cmd_train(train_args); });
    eval->callback([&] { cmd_eval(eval_args); });
    bench->callback([&] { cmd_bench(bench_args); });
    calibrate->callback([&] { cmd_calibrate(cal_args); });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}

}  // namespace slicematch
