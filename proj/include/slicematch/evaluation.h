#pragma once

#include <cstdint>
#include <vector>

#include "slicematch/geometry.h"
#include "slicematch/matching.h"

namespace slicematch {

inline constexpr double kEarthRadiusM = 6371008.8;

/// Metric pose error split into components relative to the GT heading;
/// lateral is positive to the right of the heading.
struct PoseError {
    double location_m = 0.0;
    double orientation_deg = 0.0;  // in [0, 180]
    double lateral_m = 0.0;
    double longitudinal_m = 0.0;
};

PoseError pose_error(const Pose& pred, const Pose& gt, double aerial_extent_m);

/// Mean/median location and orientation errors plus recall fractions:
/// |lateral| and |longitudinal| under each meter threshold, orientation
/// under each degree threshold. Lower-median convention for even counts.
struct ErrorSummary {
    double mean_location_m = 0.0;
    double median_location_m = 0.0;
    double mean_orientation_deg = 0.0;
    double median_orientation_deg = 0.0;
    std::vector<double> thresholds_m;
    std::vector<double> thresholds_deg;
    std::vector<double> recall_lateral;
    std::vector<double> recall_longitudinal;
    std::vector<double> recall_orientation;
};

ErrorSummary summarize(const std::vector<PoseError>& errors, const std::vector<double>& thresholds_m,
                       const std::vector<double>& thresholds_deg);

struct BenchDims {
    int channels = 16;
    int aerial_size = 32;
    int n_slices = 16;
    int n_theta = 16;
    int height = 8;
    int width = 64;
    int supersample = 2;
    int n_workers = 1;
    std::uint32_t seed = 0;
};

struct BenchRow {
    int k = 0;
    double wall_ms = 0.0;
    long long attention_evals = 0;
    long long pools_executed = 0;
    double peak_bytes_estimate = 0.0;
};

struct BenchReport {
    BenchDims dims;
    std::vector<BenchRow> rows;
    double unit_cosine_ms = 0.0;  // one length-D cosine at these dims
    double unit_pool_ms = 0.0;    // one masked pool at these dims
};

/// Times aggregate_all + score_poses per K over an n_u = K / n_theta by 1
/// location grid; masks are precomputed outside the timed region. The
/// attention counter must not depend on K and the byte estimate is affine
/// in K. K = 0 produces an empty row.
BenchReport bench_scoring(const BenchDims& dims, const std::vector<int>& k_list);

struct LatLon {
    double lat_deg = 0.0;
    double lon_deg = 0.0;
};

/// Equirectangular approximation, adequate at city scale.
double equirectangular_distance_m(const LatLon& a, const LatLon& b);

struct CalibrationResult {
    int dx = 0;
    int dy = 0;
    double peak_correlation = 0.0;
    double distance_m = 0.0;
    double ground_resolution_m_per_px = 0.0;
};

/// Integer-offset zero-normalized cross-correlation between two equally
/// sized grayscale aerial tiles (overlap >= 25% of the image area), then
/// meters-per-pixel = center distance / offset norm. Errors: peak below
/// 0.5 -> "no reliable overlap"; zero best offset -> "degenerate pair".
CalibrationResult calibrate_ground_resolution(const GrayImage& img_a, const GrayImage& img_b,
                                              const LatLon& center_a, const LatLon& center_b);

}  // namespace slicematch
