#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace naers::geometry {

inline constexpr double epsilon = 1e-9;

struct Point2 {
    double x = 0.0;
    double y = 0.0;

    friend bool operator==(const Point2&, const Point2&) = default;
};

Point2 midpoint(Point2 a, Point2 b);
double distance(Point2 a, Point2 b);

enum class FaceLandmark : std::size_t {
    left_eye_outer,
    left_eye_inner,
    left_eye_top,
    left_eye_bottom,
    right_eye_outer,
    right_eye_inner,
    right_eye_top,
    right_eye_bottom,
    left_brow_center,
    right_brow_center,
    nose_tip,
    mouth_left,
    mouth_right,
    mouth_top,
    mouth_bottom,
    face_top,
    face_bottom,
    count
};

enum class PostureLandmark : std::size_t {
    head,
    neck,
    left_shoulder,
    right_shoulder,
    left_elbow,
    right_elbow,
    left_wrist,
    right_wrist,
    left_hip,
    right_hip,
    left_knee,
    right_knee,
    left_ankle,
    right_ankle,
    count
};

// Fixed-size set of named points. Index with the landmark enum.
template <typename Landmark>
struct LandmarkSet {
    static constexpr std::size_t size = static_cast<std::size_t>(Landmark::count);

    std::array<Point2, size> points{};

    Point2& operator[](Landmark l) { return points[static_cast<std::size_t>(l)]; }
    const Point2& operator[](Landmark l) const { return points[static_cast<std::size_t>(l)]; }

    friend bool operator==(const LandmarkSet&, const LandmarkSet&) = default;
};

using FaceLandmarkSet = LandmarkSet<FaceLandmark>;
using PostureLandmarkSet = LandmarkSet<PostureLandmark>;

std::span<const std::string_view> face_landmark_names();
std::span<const std::string_view> posture_landmark_names();
std::optional<FaceLandmark> face_landmark_from_name(std::string_view name);
std::optional<PostureLandmark> posture_landmark_from_name(std::string_view name);

// Feature schemas. Length features are normalized by face (or body) height,
// angles are radians.
inline constexpr std::size_t face_feature_count = 14;
inline constexpr std::size_t posture_feature_count = 16;

std::span<const std::string_view> face_feature_names();
std::span<const std::string_view> posture_feature_names();

// Index pairs (left, right) of features that swap under a horizontal mirror.
std::span<const std::array<std::size_t, 2>> face_mirror_pairs();
std::span<const std::array<std::size_t, 2>> posture_mirror_pairs();

double face_height(const FaceLandmarkSet& face);
double body_height(const PostureLandmarkSet& posture);

// Interior angle at `vertex` between the rays towards `a` and `b`, in [0, pi].
// Throws DegenerateGeometry when either ray is shorter than epsilon.
double angle_at(Point2 vertex, Point2 a, Point2 b);

std::vector<double> extract_face_features(const FaceLandmarkSet& face);
std::vector<double> extract_posture_features(const PostureLandmarkSet& posture);

// Mirror image across the vertical axis with left/right landmark names swapped.
FaceLandmarkSet mirror(const FaceLandmarkSet& face);
PostureLandmarkSet mirror(const PostureLandmarkSet& posture);

} // namespace naers::geometry
