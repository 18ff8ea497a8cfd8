#include "naers/geometry.hpp"

#include "naers/error.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace naers::geometry {

namespace {

constexpr std::array<std::string_view, FaceLandmarkSet::size> face_names{
    "left_eye_outer", "left_eye_inner", "left_eye_top", "left_eye_bottom",
    "right_eye_outer", "right_eye_inner", "right_eye_top", "right_eye_bottom",
    "left_brow_center", "right_brow_center", "nose_tip",
    "mouth_left", "mouth_right", "mouth_top", "mouth_bottom",
    "face_top", "face_bottom",
};

constexpr std::array<std::string_view, PostureLandmarkSet::size> posture_names{
    "head", "neck", "left_shoulder", "right_shoulder", "left_elbow", "right_elbow",
    "left_wrist", "right_wrist", "left_hip", "right_hip", "left_knee", "right_knee",
    "left_ankle", "right_ankle",
};

constexpr std::array<std::string_view, face_feature_count> face_features{
    "left_eye_width", "right_eye_width", "mouth_width",
    "left_eye_height", "right_eye_height", "mouth_height",
    "eye_to_eye", "eye_to_brow", "eyes_to_mouth", "eyes_to_nose", "nose_to_mouth",
    "angle_left_eye", "angle_right_eye", "angle_mouth",
};

constexpr std::array<std::string_view, posture_feature_count> posture_features{
    "angle_left_elbow", "angle_right_elbow",
    "angle_left_shoulder", "angle_right_shoulder",
    "angle_left_hip", "angle_right_hip",
    "wrist_to_wrist", "left_wrist_to_head", "right_wrist_to_head",
    "shoulder_width", "hip_width", "head_to_neck",
    "left_arm_ratio", "right_arm_ratio", "left_leg_ratio", "right_leg_ratio",
};

constexpr std::array<std::array<std::size_t, 2>, 3> face_pairs{{
    {0, 1}, {3, 4}, {11, 12},
}};

constexpr std::array<std::array<std::size_t, 2>, 6> posture_pairs{{
    {0, 1}, {2, 3}, {4, 5}, {7, 8}, {12, 13}, {14, 15},
}};

template <std::size_t N>
std::optional<std::size_t> find_name(const std::array<std::string_view, N>& names, std::string_view name)
{
    auto it = std::find(names.begin(), names.end(), name);
    if (it == names.end())
        return std::nullopt;
    return static_cast<std::size_t>(it - names.begin());
}

template <typename Set>
void require_finite(const Set& set)
{
    for (const auto& p : set.points) {
        if (!std::isfinite(p.x) || !std::isfinite(p.y))
            throw Error(ErrorCode::degenerate_geometry, "landmark coordinate is not finite");
    }
}

double ratio(double numerator, double denominator, std::string_view what)
{
    if (denominator <= epsilon)
        throw Error(ErrorCode::degenerate_geometry, std::string(what) + " has zero length");
    return numerator / denominator;
}

} // namespace

Point2 midpoint(Point2 a, Point2 b) { return {0.5 * (a.x + b.x), 0.5 * (a.y + b.y)}; }

double distance(Point2 a, Point2 b) { return std::hypot(a.x - b.x, a.y - b.y); }

std::span<const std::string_view> face_landmark_names() { return face_names; }
std::span<const std::string_view> posture_landmark_names() { return posture_names; }

std::optional<FaceLandmark> face_landmark_from_name(std::string_view name)
{
    if (auto i = find_name(face_names, name))
        return static_cast<FaceLandmark>(*i);
    return std::nullopt;
}

std::optional<PostureLandmark> posture_landmark_from_name(std::string_view name)
{
    if (auto i = find_name(posture_names, name))
        return static_cast<PostureLandmark>(*i);
    return std::nullopt;
}

std::span<const std::string_view> face_feature_names() { return face_features; }
std::span<const std::string_view> posture_feature_names() { return posture_features; }

std::span<const std::array<std::size_t, 2>> face_mirror_pairs() { return face_pairs; }

std::span<const std::array<std::size_t, 2>> posture_mirror_pairs() { return posture_pairs; }

double face_height(const FaceLandmarkSet& face)
{
    return distance(face[FaceLandmark::face_top], face[FaceLandmark::face_bottom]);
}

double body_height(const PostureLandmarkSet& posture)
{
    using enum PostureLandmark;
    return distance(posture[head], midpoint(posture[left_ankle], posture[right_ankle]));
}

double angle_at(Point2 vertex, Point2 a, Point2 b)
{
    const double ax = a.x - vertex.x, ay = a.y - vertex.y;
    const double bx = b.x - vertex.x, by = b.y - vertex.y;
    const double la = std::hypot(ax, ay);
    const double lb = std::hypot(bx, by);
    if (la <= epsilon || lb <= epsilon)
        throw Error(ErrorCode::degenerate_geometry, "angle ray shorter than epsilon");
    const double cosine = std::clamp((ax * bx + ay * by) / (la * lb), -1.0, 1.0);
    return std::acos(cosine);
}

std::vector<double> extract_face_features(const FaceLandmarkSet& face)
{
    using enum FaceLandmark;
    require_finite(face);
    const double height = face_height(face);
    if (height <= epsilon)
        throw Error(ErrorCode::degenerate_geometry, "face height is zero");

    const Point2 left_eye = midpoint(face[left_eye_outer], face[left_eye_inner]);
    const Point2 right_eye = midpoint(face[right_eye_outer], face[right_eye_inner]);
    const Point2 eyes = midpoint(left_eye, right_eye);
    const Point2 mouth = midpoint(face[mouth_top], face[mouth_bottom]);
    const double brow = 0.5 * (distance(left_eye, face[left_brow_center]) +
                               distance(right_eye, face[right_brow_center]));

    std::vector<double> out{
        distance(face[left_eye_outer], face[left_eye_inner]),
        distance(face[right_eye_outer], face[right_eye_inner]),
        distance(face[mouth_left], face[mouth_right]),
        distance(face[left_eye_top], face[left_eye_bottom]),
        distance(face[right_eye_top], face[right_eye_bottom]),
        distance(face[mouth_top], face[mouth_bottom]),
        distance(left_eye, right_eye),
        brow,
        distance(eyes, mouth),
        distance(eyes, face[nose_tip]),
        distance(face[nose_tip], mouth),
    };
    for (double& v : out)
        v /= height;

    out.push_back(angle_at(left_eye, right_eye, mouth));
    out.push_back(angle_at(right_eye, left_eye, mouth));
    out.push_back(angle_at(mouth, left_eye, right_eye));
    return out;
}

std::vector<double> extract_posture_features(const PostureLandmarkSet& p)
{
    using enum PostureLandmark;
    require_finite(p);
    const double height = body_height(p);
    if (height <= epsilon)
        throw Error(ErrorCode::degenerate_geometry, "body height is zero");

    std::vector<double> out{
        angle_at(p[left_elbow], p[left_shoulder], p[left_wrist]),
        angle_at(p[right_elbow], p[right_shoulder], p[right_wrist]),
        angle_at(p[left_shoulder], p[neck], p[left_elbow]),
        angle_at(p[right_shoulder], p[neck], p[right_elbow]),
        angle_at(p[left_hip], p[neck], p[left_knee]),
        angle_at(p[right_hip], p[neck], p[right_knee]),
        distance(p[left_wrist], p[right_wrist]) / height,
        distance(p[left_wrist], p[head]) / height,
        distance(p[right_wrist], p[head]) / height,
        distance(p[left_shoulder], p[right_shoulder]) / height,
        distance(p[left_hip], p[right_hip]) / height,
        distance(p[head], p[neck]) / height,
    };
    out.push_back(ratio(distance(p[left_shoulder], p[left_elbow]),
                        distance(p[left_elbow], p[left_wrist]), "left forearm"));
    out.push_back(ratio(distance(p[right_shoulder], p[right_elbow]),
                        distance(p[right_elbow], p[right_wrist]), "right forearm"));
    out.push_back(ratio(distance(p[left_hip], p[left_knee]),
                        distance(p[left_knee], p[left_ankle]), "left shin"));
    out.push_back(ratio(distance(p[right_hip], p[right_knee]),
                        distance(p[right_knee], p[right_ankle]), "right shin"));
    return out;
}

FaceLandmarkSet mirror(const FaceLandmarkSet& face)
{
    using enum FaceLandmark;
    constexpr std::array<std::array<FaceLandmark, 2>, 5> swaps{{
        {left_eye_outer, right_eye_outer},
        {left_eye_inner, right_eye_inner},
        {left_eye_top, right_eye_top},
        {left_eye_bottom, right_eye_bottom},
        {left_brow_center, right_brow_center},
    }};
    FaceLandmarkSet out = face;
    for (auto& p : out.points)
        p.x = -p.x;
    for (auto [l, r] : swaps)
        std::swap(out[l], out[r]);
    std::swap(out[mouth_left], out[mouth_right]);
    return out;
}

PostureLandmarkSet mirror(const PostureLandmarkSet& posture)
{
    using enum PostureLandmark;
    constexpr std::array<std::array<PostureLandmark, 2>, 6> swaps{{
        {left_shoulder, right_shoulder},
        {left_elbow, right_elbow},
        {left_wrist, right_wrist},
        {left_hip, right_hip},
        {left_knee, right_knee},
        {left_ankle, right_ankle},
    }};
    PostureLandmarkSet out = posture;
    for (auto& p : out.points)
        p.x = -p.x;
    for (auto [l, r] : swaps)
        std::swap(out[l], out[r]);
    return out;
}

} // namespace naers::geometry
