#include "naers/synth.hpp"

#include "naers/error.hpp"
#include "naers/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>

namespace naers::synth {

using geometry::FaceLandmark;
using geometry::FaceLandmarkSet;
using geometry::Point2;
using geometry::PostureLandmark;
using geometry::PostureLandmarkSet;

namespace {

constexpr std::size_t max_unseen = 3;
constexpr std::size_t neutral_index = 4;

// eye width, eye height, brow raise, mouth width, mouth height, mouth y, eye separation
using FaceParams = std::array<double, 7>;
constexpr std::array<FaceParams, 7> face_table{{
    {0.55, 0.20, 0.28, 0.90, 0.10, -1.00, 1.55}, // anger
    {0.55, 0.17, 0.33, 0.85, 0.22, -0.90, 1.60}, // disgust
    {0.62, 0.38, 0.65, 1.15, 0.32, -1.05, 1.65}, // fear
    {0.58, 0.18, 0.45, 1.45, 0.45, -0.95, 1.60}, // happiness
    {0.60, 0.25, 0.45, 1.00, 0.20, -1.00, 1.60}, // neutral
    {0.60, 0.21, 0.55, 0.88, 0.12, -1.15, 1.60}, // sadness
    {0.62, 0.45, 0.75, 0.80, 0.70, -1.10, 1.62}, // surprise
}};
constexpr FaceParams face_lo{0.45, 0.08, 0.20, 0.70, 0.05, -1.25, 1.45};
constexpr FaceParams face_hi{0.70, 0.55, 0.85, 1.90, 0.85, -0.80, 1.75};

// left/right arm raise, left/right elbow bend, torso lean, stance, knee bend, neck length
using PostureParams = std::array<double, 8>;
constexpr std::array<PostureParams, 7> posture_table{{
    {0.50, 0.50, 1.20, 1.20, 0.10, 0.18, 0.10, 1.00},   // anger
    {0.30, 0.20, 0.60, 0.30, -0.12, 0.10, 0.05, 0.90},  // disgust
    {0.20, 0.20, 2.00, 2.00, -0.05, 0.05, 0.25, 0.70},  // fear
    {1.40, 1.40, 0.30, 0.30, 0.00, 0.20, 0.00, 1.10},   // happiness
    {0.15, 0.15, 0.10, 0.10, 0.00, 0.10, 0.00, 1.00},   // neutral
    {0.05, 0.05, 0.05, 0.05, 0.25, 0.06, 0.15, 0.65},   // sadness
    {0.90, 0.90, 1.60, 1.60, -0.15, 0.14, 0.05, 1.15},  // surprise
}};
constexpr PostureParams posture_lo{0.0, 0.0, 0.0, 0.0, -0.25, 0.04, 0.0, 0.6};
constexpr PostureParams posture_hi{1.6, 1.6, 2.2, 2.2, 0.30, 0.24, 0.35, 1.2};

// Unseen class j extrapolates a known class away from neutral; the face and
// posture anchors differ so the two modalities point at different known classes.
constexpr std::array<std::size_t, max_unseen> unseen_face_anchor{3, 6, 0};
constexpr std::array<std::size_t, max_unseen> unseen_posture_anchor{0, 2, 5};
constexpr double unseen_extrapolation = 0.6;

template <std::size_t N>
std::array<double, N> random_params(Rng& rng, const std::array<double, N>& lo, const std::array<double, N>& hi)
{
    std::array<double, N> p{};
    for (std::size_t i = 0; i < N; ++i)
        p[i] = rng.uniform(lo[i], hi[i]);
    return p;
}

template <std::size_t N>
std::array<double, N> extrapolate(const std::array<double, N>& from, const std::array<double, N>& away,
                                  const std::array<double, N>& lo, const std::array<double, N>& hi)
{
    std::array<double, N> p{};
    for (std::size_t i = 0; i < N; ++i)
        p[i] = std::clamp(from[i] + unseen_extrapolation * (from[i] - away[i]), lo[i], hi[i]);
    return p;
}

FaceParams known_face_params(const SyntheticScenarioConfig& c, std::size_t k)
{
    if (c.class_count <= face_table.size())
        return face_table[k];
    if (k < face_table.size())
        return face_table[k];
    Rng rng(mix_seed(c.prototype_seed, 1000 + k));
    return random_params(rng, face_lo, face_hi);
}

PostureParams known_posture_params(const SyntheticScenarioConfig& c, std::size_t k)
{
    if (k < posture_table.size())
        return posture_table[k];
    Rng rng(mix_seed(c.prototype_seed, 2000 + k));
    return random_params(rng, posture_lo, posture_hi);
}

std::size_t anchor(std::size_t preferred, std::size_t classes) { return preferred % classes; }

std::size_t away_from(std::size_t a, std::size_t classes)
{
    const std::size_t n = neutral_index % classes;
    return a == n ? (n + 1) % classes : n;
}

FaceParams face_params(const SyntheticScenarioConfig& c, std::size_t k)
{
    if (k < c.class_count)
        return known_face_params(c, k);
    const std::size_t j = k - c.class_count;
    const std::size_t a = anchor(unseen_face_anchor[j], c.class_count);
    return extrapolate(known_face_params(c, a), known_face_params(c, away_from(a, c.class_count)), face_lo, face_hi);
}

PostureParams posture_params(const SyntheticScenarioConfig& c, std::size_t k)
{
    if (k < c.class_count)
        return known_posture_params(c, k);
    const std::size_t j = k - c.class_count;
    const std::size_t a = anchor(unseen_posture_anchor[j], c.class_count);
    return extrapolate(known_posture_params(c, a), known_posture_params(c, away_from(a, c.class_count)),
                       posture_lo, posture_hi);
}

FaceLandmarkSet build_face(const FaceParams& p)
{
    using enum FaceLandmark;
    const auto [eye_w, eye_h, brow, mouth_w, mouth_h, mouth_y, eye_sep] = p;
    const double eye_y = 0.6;
    FaceLandmarkSet f;
    const Point2 left{-eye_sep / 2, eye_y}, right{eye_sep / 2, eye_y};
    f[left_eye_outer] = {left.x - eye_w / 2, eye_y};
    f[left_eye_inner] = {left.x + eye_w / 2, eye_y};
    f[left_eye_top] = {left.x, eye_y + eye_h / 2};
    f[left_eye_bottom] = {left.x, eye_y - eye_h / 2};
    f[right_eye_outer] = {right.x + eye_w / 2, eye_y};
    f[right_eye_inner] = {right.x - eye_w / 2, eye_y};
    f[right_eye_top] = {right.x, eye_y + eye_h / 2};
    f[right_eye_bottom] = {right.x, eye_y - eye_h / 2};
    f[left_brow_center] = {left.x, eye_y + brow};
    f[right_brow_center] = {right.x, eye_y + brow};
    f[nose_tip] = {0.0, -0.2};
    f[mouth_left] = {-mouth_w / 2, mouth_y};
    f[mouth_right] = {mouth_w / 2, mouth_y};
    f[mouth_top] = {0.0, mouth_y + mouth_h / 2};
    f[mouth_bottom] = {0.0, mouth_y - mouth_h / 2};
    f[face_top] = {0.0, 2.0};
    f[face_bottom] = {0.0, -2.0};
    return f;
}

Point2 offset(Point2 from, double angle, double length)
{
    return {from.x + length * std::sin(angle), from.y - length * std::cos(angle)};
}

PostureLandmarkSet build_posture(const PostureParams& p)
{
    using enum PostureLandmark;
    const auto [arm_l, arm_r, elbow_l, elbow_r, lean, stance, knee, neck_len] = p;
    constexpr double torso = 1.0, upper_arm = 0.32, forearm = 0.28, thigh = 0.45, shin = 0.42;
    constexpr double shoulder_half = 0.2, hip_half = 0.12;

    PostureLandmarkSet s;
    const Point2 pelvis{0.0, 0.0};
    const Point2 neck_pt{torso * std::sin(lean), torso * std::cos(lean)};
    const Point2 across{std::cos(lean), -std::sin(lean)};
    s[neck] = neck_pt;
    s[head] = {neck_pt.x + 0.25 * neck_len * std::sin(lean), neck_pt.y + 0.25 * neck_len * std::cos(lean)};
    s[left_shoulder] = {neck_pt.x - shoulder_half * across.x, neck_pt.y - shoulder_half * across.y};
    s[right_shoulder] = {neck_pt.x + shoulder_half * across.x, neck_pt.y + shoulder_half * across.y};
    // Angles measured from straight down; positive swings the limb outward.
    s[left_elbow] = offset(s[left_shoulder], -arm_l, upper_arm);
    s[right_elbow] = offset(s[right_shoulder], arm_r, upper_arm);
    s[left_wrist] = offset(s[left_elbow], -arm_l + elbow_l, forearm);
    s[right_wrist] = offset(s[right_elbow], arm_r - elbow_r, forearm);
    s[left_hip] = {pelvis.x - hip_half, pelvis.y};
    s[right_hip] = {pelvis.x + hip_half, pelvis.y};
    s[left_knee] = offset(s[left_hip], -stance, thigh);
    s[right_knee] = offset(s[right_hip], stance, thigh);
    s[left_ankle] = offset(s[left_knee], -stance + knee, shin);
    s[right_ankle] = offset(s[right_knee], stance - knee, shin);
    return s;
}

struct Similarity {
    double scale = 1.0, rotation = 0.0, tx = 0.0, ty = 0.0;

    Point2 operator()(Point2 p) const
    {
        const double c = std::cos(rotation), s = std::sin(rotation);
        return {scale * (c * p.x - s * p.y) + tx, scale * (s * p.x + c * p.y) + ty};
    }
};

Similarity random_similarity(Rng& rng, double jitter)
{
    if (jitter <= 0.0)
        return {};
    Similarity t;
    t.scale = 40.0 * std::exp(0.2 * jitter * rng.normal());
    t.rotation = 0.15 * jitter * rng.normal();
    t.tx = rng.uniform(0.0, 200.0 * jitter);
    t.ty = rng.uniform(0.0, 200.0 * jitter);
    return t;
}

template <typename Set>
Set perturb(const Set& prototype, double sigma, Rng& rng, double jitter)
{
    Set out = prototype;
    for (auto& p : out.points) {
        if (sigma > 0.0) {
            p.x += sigma * rng.normal();
            p.y += sigma * rng.normal();
        }
    }
    const Similarity t = random_similarity(rng, jitter);
    for (auto& p : out.points)
        p = t(p);
    return out;
}

GrayImage noisy_image(const SyntheticScenarioConfig& c, std::size_t k, Rng& rng)
{
    GrayImage image = class_image(c, k);
    if (c.image_noise <= 0.0)
        return image;
    for (auto& px : image.pixels) {
        const double v = px / 255.0 + c.image_noise * rng.normal();
        px = static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
    }
    return image;
}

struct SceneSet {
    std::vector<std::vector<double>> means;
};

SceneSet make_scenes(const SyntheticScenarioConfig& c)
{
    Rng rng(mix_seed(c.prototype_seed, 3000));
    SceneSet s;
    for (std::size_t i = 0; i < c.background_scenes; ++i) {
        std::vector<double> m(c.background_dim);
        for (double& v : m)
            v = rng.uniform(0.15, 0.85);
        s.means.push_back(std::move(m));
    }
    return s;
}

std::vector<double> nominal_background(const SyntheticScenarioConfig& c, const SceneSet& scenes, Rng& rng)
{
    std::vector<double> b = scenes.means[rng.index(scenes.means.size())];
    for (double& v : b)
        v += c.background_spread * rng.normal();
    return b;
}

std::vector<double> shifted_background(const SyntheticScenarioConfig& c, const SceneSet& scenes, Rng& rng)
{
    std::vector<double> b = scenes.means[rng.index(scenes.means.size())];
    std::vector<double> dir(b.size());
    double norm = 0.0;
    while (norm < 1e-12) {
        norm = 0.0;
        for (double& v : dir) {
            v = rng.normal();
            norm += v * v;
        }
        norm = std::sqrt(norm);
    }
    const auto [mean, sd] = nominal_background_distance(c);
    const double radius = mean + c.background_shift_sigmas * sd;
    for (std::size_t i = 0; i < b.size(); ++i)
        b[i] += radius * dir[i] / norm;
    return b;
}

std::string default_prefix(const SyntheticScenarioConfig& c)
{
    return c.id_prefix.empty() ? "s" + std::to_string(c.seed) : c.id_prefix;
}

std::string make_id(const std::string& prefix, std::string_view split, std::size_t i)
{
    std::string n = std::to_string(i);
    return prefix + "-" + std::string(split) + "-" + std::string(n.size() < 5 ? 5 - n.size() : 0, '0') + n;
}

} // namespace

std::string_view to_string(NoveltyKind kind)
{
    switch (kind) {
    case NoveltyKind::nominal: return "nominal";
    case NoveltyKind::unseen_class: return "unseen_class";
    case NoveltyKind::modality_conflict: return "modality_conflict";
    case NoveltyKind::background_shift: return "background_shift";
    }
    return "nominal";
}

NoveltyKind novelty_kind_from_string(std::string_view name)
{
    for (auto k : {NoveltyKind::nominal, NoveltyKind::unseen_class, NoveltyKind::modality_conflict,
                   NoveltyKind::background_shift}) {
        if (to_string(k) == name)
            return k;
    }
    throw Error(ErrorCode::invalid_config, "unknown novelty kind '" + std::string(name) + "'");
}

std::string_view to_string(ConflictMode mode) { return mode == ConflictMode::swap ? "swap" : "variant"; }

ConflictMode conflict_mode_from_string(std::string_view name)
{
    if (name == "swap")
        return ConflictMode::swap;
    if (name == "variant")
        return ConflictMode::variant;
    throw Error(ErrorCode::invalid_config, "unknown conflict mode '" + std::string(name) + "'");
}

void SyntheticScenarioConfig::validate() const
{
    auto fraction = [](double f) { return f >= 0.0 && f <= 1.0; };
    if (class_count < 2)
        throw Error(ErrorCode::invalid_config, "scenario needs at least two classes");
    if (!fraction(unseen_fraction) || !fraction(conflict_fraction) || !fraction(background_shift_fraction))
        throw Error(ErrorCode::invalid_config, "injection fractions must lie in [0, 1]");
    if (unseen_fraction + conflict_fraction + background_shift_fraction > 1.0 + 1e-12)
        throw Error(ErrorCode::invalid_config, "injection fractions sum above 1");
    if (face_noise < 0.0 || posture_noise < 0.0 || image_noise < 0.0 || background_spread < 0.0 ||
        pose_jitter < 0.0)
        throw Error(ErrorCode::invalid_config, "noise levels must be non-negative");
    if (unseen_class_count == 0 || unseen_class_count > max_unseen)
        throw Error(ErrorCode::invalid_config, "unseen class count must be 1-3");
    if (background_dim == 0 || background_scenes == 0)
        throw Error(ErrorCode::invalid_config, "background dimension and scene count must be positive");
    if (image_side != 0 && image_side < 6)
        throw Error(ErrorCode::invalid_config, "image side must be 0 or at least 6");
    if (train_per_class == 0 && probe_per_class == 0)
        throw Error(ErrorCode::invalid_config, "scenario would be empty");
}

std::string class_name(const SyntheticScenarioConfig& c, std::size_t k)
{
    static constexpr std::array<std::string_view, 7> names{"anger",   "disgust", "fear",    "happiness",
                                                           "neutral", "sadness", "surprise"};
    if (k >= c.class_count)
        return "unseen_" + std::to_string(k - c.class_count);
    if (c.class_count <= names.size())
        return std::string(names[k]);
    return "class_" + std::to_string(k);
}

FaceLandmarkSet face_prototype(const SyntheticScenarioConfig& c, std::size_t k)
{
    return build_face(face_params(c, k));
}

PostureLandmarkSet posture_prototype(const SyntheticScenarioConfig& c, std::size_t k)
{
    return build_posture(posture_params(c, k));
}

PostureLandmarkSet variant_posture_prototype(const SyntheticScenarioConfig& c, std::size_t k)
{
    Rng rng(mix_seed(c.prototype_seed, 4000 + k));
    return build_posture(random_params(rng, posture_lo, posture_hi));
}

GrayImage class_image(const SyntheticScenarioConfig& c, std::size_t k)
{
    GrayImage image;
    image.side = c.image_side;
    image.pixels.resize(c.image_side * c.image_side);
    const double patterns = static_cast<double>(c.class_count + max_unseen);
    const double theta = std::numbers::pi * static_cast<double>(k) / patterns;
    const double cycles = 2.0 + static_cast<double>(k % 2);
    const double side = static_cast<double>(c.image_side);
    for (std::size_t y = 0; y < c.image_side; ++y) {
        for (std::size_t x = 0; x < c.image_side; ++x) {
            const double u = static_cast<double>(x) * std::cos(theta) + static_cast<double>(y) * std::sin(theta);
            const double v = 0.5 + 0.3 * std::cos(2.0 * std::numbers::pi * cycles * u / side);
            image.pixels[y * c.image_side + x] = static_cast<std::uint8_t>(std::lround(v * 255.0));
        }
    }
    return image;
}

std::pair<double, double> nominal_background_distance(const SyntheticScenarioConfig& c)
{
    const double d = static_cast<double>(c.background_dim);
    const double chi_mean = std::sqrt(2.0) * std::exp(std::lgamma((d + 1.0) / 2.0) - std::lgamma(d / 2.0));
    const double chi_var = std::max(d - chi_mean * chi_mean, 0.0);
    return {c.background_spread * chi_mean, c.background_spread * std::sqrt(chi_var)};
}

SyntheticScenario synth_generate(const SyntheticScenarioConfig& c)
{
    c.validate();
    SyntheticScenario out;
    for (std::size_t k = 0; k < c.class_count; ++k)
        out.registry.add(class_name(c, k));
    for (std::size_t j = 0; j < c.unseen_class_count; ++j)
        out.unseen_names.push_back(class_name(c, c.class_count + j));

    const SceneSet scenes = make_scenes(c);
    const std::string prefix = default_prefix(c);
    Rng rng(c.seed);

    auto make_sample = [&](std::string id, std::size_t face_class, std::size_t posture_class, bool variant,
                           bool shifted) {
        SampleRecord s;
        s.id = std::move(id);
        s.face = perturb(face_prototype(c, face_class), 4.0 * c.face_noise, rng, c.pose_jitter);
        const PostureLandmarkSet posture =
            variant ? variant_posture_prototype(c, posture_class) : posture_prototype(c, posture_class);
        s.posture = perturb(posture, geometry::body_height(posture) * c.posture_noise, rng, c.pose_jitter);
        if (c.image_side > 0)
            s.image = noisy_image(c, face_class, rng);
        s.background = shifted ? shifted_background(c, scenes, rng) : nominal_background(c, scenes, rng);
        if (face_class < c.class_count)
            s.label = face_class;
        return s;
    };

    std::size_t index = 0;
    for (std::size_t k = 0; k < c.class_count; ++k) {
        for (std::size_t i = 0; i < c.train_per_class; ++i)
            out.train.push_back(make_sample(make_id(prefix, "train", index++), k, k, false, false));
    }

    const std::size_t total = c.class_count * c.probe_per_class;
    auto count_of = [&](double f) { return static_cast<std::size_t>(std::llround(f * static_cast<double>(total))); };
    const std::size_t n_conflict = count_of(c.conflict_fraction);
    const std::size_t n_unseen = count_of(c.unseen_fraction);
    const std::size_t n_shift = count_of(c.background_shift_fraction);
    if (n_conflict + n_unseen + n_shift > total)
        throw Error(ErrorCode::invalid_config, "injections exceed probe size");

    std::vector<NoveltyKind> kinds(total, NoveltyKind::nominal);
    {
        std::vector<std::size_t> slots(total);
        std::iota(slots.begin(), slots.end(), std::size_t{0});
        rng.shuffle(std::span(slots));
        std::size_t s = 0;
        for (std::size_t i = 0; i < n_conflict; ++i)
            kinds[slots[s++]] = NoveltyKind::modality_conflict;
        for (std::size_t i = 0; i < n_unseen; ++i)
            kinds[slots[s++]] = NoveltyKind::unseen_class;
        for (std::size_t i = 0; i < n_shift; ++i)
            kinds[slots[s++]] = NoveltyKind::background_shift;
    }

    std::size_t unseen_seen = 0;
    for (std::size_t i = 0; i < total; ++i) {
        std::size_t cls = i / c.probe_per_class;
        Annotation a;
        a.id = make_id(prefix, "probe", i);
        a.kind = kinds[i];
        std::size_t posture_cls = cls;
        bool variant = false;
        switch (a.kind) {
        case NoveltyKind::unseen_class:
            cls = c.class_count + unseen_seen++ % c.unseen_class_count;
            posture_cls = cls;
            break;
        case NoveltyKind::modality_conflict:
            if (c.conflict_mode == ConflictMode::swap) {
                posture_cls = (cls + 1 + rng.index(c.class_count - 1)) % c.class_count;
                a.posture_class = posture_cls;
            } else {
                variant = true;
            }
            break;
        default:
            break;
        }
        a.true_class = cls;
        a.true_name = class_name(c, cls);
        out.probe.push_back(
            make_sample(a.id, cls, posture_cls, variant, a.kind == NoveltyKind::background_shift));
        out.annotations.push_back(std::move(a));
    }
    return out;
}

} // namespace naers::synth
