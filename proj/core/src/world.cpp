#include "uniloc/scenegen/world.hpp"

#include "uniloc/errors.hpp"
#include "uniloc/numcore/rng.hpp"
#include "uniloc/scenegen/camera.hpp"
#include "uniloc/scenegen/hints.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace uniloc::scenegen {

namespace {

using numcore::Rng;

constexpr double kTrackStep = 2.0;
constexpr double kTrackMargin = 60.0;
constexpr double kMaxHeading = 0.7;
constexpr double kCameraHeight = 1.7;
// Kept fraction of an object's points inside the submap radius required to keep the object.
constexpr double kMinKeptFraction = 2.0 / 3.0;

struct TrackPoint {
    double x, y, heading, arc;
};

struct WorldObject {
    double arc = 0.0;
    Instance3D instance;
};

struct CategorySpec {
    Category category;
    double weight;
    int minPoints;
    int maxPoints;
    double minOffset; // lateral distance from the road centerline
    double maxOffset;
    // Relative frequency of each kColorAnchors entry:
    // black, white, red, green, blue, yellow, gray, brown.
    std::array<double, 8> palette;
};

constexpr std::array<CategorySpec, 8> kCategorySpecs{{
    {Category::building, 0.22, 64, 128, 12.0, 26.0, {0.5, 2, 1.5, 0.5, 1, 1, 2, 2}},
    {Category::pole, 0.16, 12, 24, 3.0, 6.0, {2, 1, 0.5, 0.5, 0.5, 1, 3, 0.5}},
    {Category::trafficLight, 0.06, 16, 32, 3.0, 5.5, {2, 0.5, 1, 0.5, 0.5, 2, 1, 0.2}},
    {Category::fence, 0.12, 24, 48, 5.0, 9.0, {1, 1.5, 0.5, 1.5, 0.5, 0.5, 2, 2}},
    {Category::garage, 0.07, 40, 80, 9.0, 18.0, {0.5, 2, 1, 0.5, 1.5, 0.5, 2, 1}},
    {Category::tree, 0.18, 40, 80, 4.0, 12.0, {0.2, 0.2, 0.5, 4, 0.1, 1, 0.2, 2}},
    {Category::lamp, 0.11, 16, 32, 3.0, 5.0, {2, 1, 0.2, 1, 0.5, 0.5, 3, 0.5}},
    {Category::trashBin, 0.08, 12, 20, 3.0, 6.0, {1, 0.5, 1, 2, 2, 1, 1.5, 0.5}},
}};

const CategorySpec& pick_category(Rng& rng) {
    double total = 0.0;
    for (const auto& s : kCategorySpecs) total += s.weight;
    double r = rng.uniform() * total;
    for (const auto& s : kCategorySpecs) {
        if (r < s.weight) return s;
        r -= s.weight;
    }
    return kCategorySpecs.back();
}

// Points on the side and top faces of an axis-aligned box centred on the origin footprint.
void box_surface(Rng& rng, std::vector<Vec3>& out, int n, double lx, double ly, double h, double z0 = 0.0) {
    const double areas[] = {lx * h, lx * h, ly * h, ly * h, lx * ly};
    const double total = areas[0] + areas[1] + areas[2] + areas[3] + areas[4];
    for (int i = 0; i < n; ++i) {
        double r = rng.uniform() * total;
        int face = 0;
        while (face < 4 && r >= areas[face]) r -= areas[face++];
        const double a = rng.uniform(-0.5, 0.5);
        const double b = rng.uniform(0.0, 1.0);
        switch (face) {
        case 0: out.push_back({a * lx, -ly / 2, z0 + b * h}); break;
        case 1: out.push_back({a * lx, ly / 2, z0 + b * h}); break;
        case 2: out.push_back({-lx / 2, a * ly, z0 + b * h}); break;
        case 3: out.push_back({lx / 2, a * ly, z0 + b * h}); break;
        default: out.push_back({a * lx, (b - 0.5) * ly, z0 + h}); break;
        }
    }
}

void vertical_line(Rng& rng, std::vector<Vec3>& out, int n, double radius, double h, double z0 = 0.0) {
    for (int i = 0; i < n; ++i) {
        const double t = rng.uniform(0.0, 2.0 * std::numbers::pi);
        out.push_back({radius * std::cos(t), radius * std::sin(t), z0 + rng.uniform(0.0, h)});
    }
}

// Local shape: x along the road, y toward the road (objects face the road), z up.
std::vector<Vec3> object_shape(Rng& rng, Category cat, int n, double& footprintDepth) {
    std::vector<Vec3> pts;
    pts.reserve(static_cast<std::size_t>(n));
    footprintDepth = 0.5;
    switch (cat) {
    case Category::building: {
        const double lx = rng.uniform(8, 20), ly = rng.uniform(6, 14), h = rng.uniform(6, 18);
        footprintDepth = ly;
        box_surface(rng, pts, n, lx, ly, h);
        break;
    }
    case Category::garage: {
        const double lx = rng.uniform(3, 6), ly = rng.uniform(5, 7), h = rng.uniform(2.5, 3.5);
        footprintDepth = ly;
        box_surface(rng, pts, n, lx, ly, h);
        break;
    }
    case Category::pole: vertical_line(rng, pts, n, 0.12, rng.uniform(4, 8)); break;
    case Category::trafficLight: {
        const double h = rng.uniform(3, 4.5);
        const int head = n / 3;
        vertical_line(rng, pts, n - head, 0.1, h);
        box_surface(rng, pts, head, 0.4, 0.4, 1.0, h);
        break;
    }
    case Category::fence: {
        const double len = rng.uniform(4, 12), h = rng.uniform(1, 2);
        for (int i = 0; i < n; ++i) pts.push_back({rng.uniform(-len / 2, len / 2), 0.0, rng.uniform(0, h)});
        break;
    }
    case Category::tree: {
        const double trunk = rng.uniform(2, 3), r = rng.uniform(1.5, 3);
        const int nTrunk = n / 5;
        vertical_line(rng, pts, nTrunk, 0.2, trunk);
        for (int i = nTrunk; i < n; ++i) {
            double x, y, z;
            do {
                x = rng.uniform(-1, 1);
                y = rng.uniform(-1, 1);
                z = rng.uniform(-1, 1);
            } while (x * x + y * y + z * z > 1.0);
            pts.push_back({r * x, r * y, trunk + r + r * z});
        }
        footprintDepth = 2 * r;
        break;
    }
    case Category::lamp: {
        const double h = rng.uniform(5, 8), arm = 1.5;
        const int nArm = n / 4;
        vertical_line(rng, pts, n - nArm, 0.1, h);
        for (int i = 0; i < nArm; ++i) pts.push_back({0.0, rng.uniform(0, arm), h + rng.uniform(-0.05, 0.05)});
        break;
    }
    case Category::trashBin: box_surface(rng, pts, n, 0.6, 0.6, 1.0); break;
    }
    return pts;
}

std::array<double, 3> object_color(Rng& rng, const CategorySpec& spec) {
    double total = 0.0;
    for (double w : spec.palette) total += w;
    double r = rng.uniform() * total;
    std::size_t idx = 0;
    while (idx + 1 < spec.palette.size() && r >= spec.palette[idx]) r -= spec.palette[idx++];
    std::array<double, 3> rgb = kColorAnchors[idx].rgb;
    for (double& c : rgb) c = std::clamp(c + rng.uniform(-0.06, 0.06), 0.0, 1.0);
    return rgb;
}

std::vector<TrackPoint> build_track(const WorldConfig& cfg, Rng& rng, double neededArc) {
    std::vector<TrackPoint> track;
    const double mid = cfg.areaExtent / 2.0;
    TrackPoint p{std::min(kTrackMargin, cfg.areaExtent / 4), mid, 0.0, 0.0};
    track.push_back(p);
    while (p.arc < neededArc && p.x < cfg.areaExtent - kTrackMargin) {
        p.heading += rng.normal() * 0.03;
        if (std::abs(p.y - mid) > cfg.areaExtent * 0.35) p.heading -= std::copysign(0.02, p.y - mid);
        p.heading = std::clamp(p.heading, -kMaxHeading, kMaxHeading);
        p.x += kTrackStep * std::cos(p.heading);
        p.y += kTrackStep * std::sin(p.heading);
        p.arc += kTrackStep;
        track.push_back(p);
    }
    return track;
}

TrackPoint track_at(const std::vector<TrackPoint>& track, double arc) {
    const auto i = std::min(track.size() - 1, static_cast<std::size_t>(std::max(0.0, arc / kTrackStep)));
    const TrackPoint& a = track[i];
    if (i + 1 >= track.size()) return a;
    const TrackPoint& b = track[i + 1];
    const double t = (arc - a.arc) / kTrackStep;
    return {a.x + t * (b.x - a.x), a.y + t * (b.y - a.y), a.heading + t * (b.heading - a.heading), arc};
}

std::vector<WorldObject> build_object_pool(const WorldConfig& cfg, Rng& rng,
                                           const std::vector<TrackPoint>& track) {
    std::vector<WorldObject> pool;
    const double length = track.back().arc;
    double arc = 0.0;
    std::uint64_t nextId = 0;
    while (true) {
        arc += -std::log(1.0 - rng.uniform()) / cfg.objectDensity;
        if (arc > length) break;
        const CategorySpec& spec = pick_category(rng);
        const int n = static_cast<int>(rng.uniform_int(spec.minPoints, spec.maxPoints));
        double depth = 0.0;
        std::vector<Vec3> local = object_shape(rng, spec.category, n, depth);
        const double side = rng.bernoulli(0.5) ? 1.0 : -1.0;
        const double offset = rng.uniform(spec.minOffset, spec.maxOffset) + depth / 2.0;
        const TrackPoint tp = track_at(track, arc);
        const double nx = -std::sin(tp.heading), ny = std::cos(tp.heading);
        const double cxw = tp.x + side * offset * nx, cyw = tp.y + side * offset * ny;
        const double yaw = tp.heading + rng.normal() * 0.05;
        const double c = std::cos(yaw), s = std::sin(yaw);
        // Local +y points toward the road.
        const double flip = -side;

        WorldObject obj;
        obj.arc = arc;
        obj.instance.instanceId = nextId++;
        obj.instance.category = spec.category;
        obj.instance.colorRGB = object_color(rng, spec);
        obj.instance.points.reserve(local.size());
        for (const Vec3& q : local) {
            const double ly = flip * q.y;
            obj.instance.points.push_back({cxw + c * q.x - s * ly, cyw + s * q.x + c * ly, q.z});
        }
        pool.push_back(std::move(obj));
    }
    return pool;
}

} // namespace

void validate(const WorldConfig& cfg) {
    auto bad = [](const std::string& msg) { raise(ErrorKind::config, msg); };
    if (!(cfg.areaExtent > 0.0)) bad("areaExtent must be positive");
    if (!(cfg.submapRadius > 0.0)) bad("submapRadius must be positive");
    if (cfg.minInstances == 0 || cfg.minInstances > cfg.maxInstances) bad("instancesPerSceneRange must satisfy 1 <= min <= max");
    if (cfg.maxInstances > kMaxInstancesPerScene) bad("instancesPerSceneRange max exceeds 12");
    if (!(cfg.minSeparation >= 0.0)) bad("minSeparation must be non-negative");
    if (!(cfg.sceneSpacing > 0.0)) bad("sceneSpacing must be positive");
    if (cfg.stubDim == 0) bad("stubDim must be positive");
    if (!(cfg.objectDensity > 0.0)) bad("objectDensity must be positive");
    double sum = 0.0;
    for (double f : cfg.splitFractions) {
        if (!(f >= 0.0)) bad("splitFractions must be non-negative");
        sum += f;
    }
    if (std::abs(sum - 1.0) > 1e-9) bad("splitFractions must sum to 1");
}

std::array<std::size_t, 3> split_counts(const WorldConfig& cfg) {
    const double n = static_cast<double>(cfg.numScenes);
    const auto train = static_cast<std::size_t>(std::llround(n * cfg.splitFractions[0]));
    const auto val = std::min(cfg.numScenes - std::min(train, cfg.numScenes),
                              static_cast<std::size_t>(std::llround(n * cfg.splitFractions[1])));
    const std::size_t trainC = std::min(train, cfg.numScenes);
    return {trainC, val, cfg.numScenes - trainC - val};
}

std::vector<SceneTriplet> generate_world(const WorldConfig& cfg) {
    validate(cfg);
    std::vector<SceneTriplet> scenes;
    if (cfg.numScenes == 0) return scenes;

    Rng worldRng(numcore::mix_seed(cfg.seed, 0x776f726c64ULL));
    const double lookAhead = cfg.submapRadius + 10.0;
    const double neededArc = static_cast<double>(cfg.numScenes) * cfg.sceneSpacing * 1.6 + 2 * lookAhead;
    const auto track = build_track(cfg, worldRng, neededArc);
    const auto pool = build_object_pool(cfg, worldRng, track);
    const double trackLength = track.back().arc;

    Rng placeRng(numcore::mix_seed(cfg.seed, 0x706c616365ULL));
    double arc = 10.0;
    std::uint64_t candidate = 0;
    const double maxReach = cfg.submapRadius + 40.0;

    while (scenes.size() < cfg.numScenes) {
        arc += std::max(cfg.minSeparation, cfg.sceneSpacing * placeRng.uniform(0.75, 1.25));
        if (arc > trackLength - lookAhead) break;
        Rng sceneRng(numcore::mix_seed(cfg.seed, ++candidate));

        const TrackPoint tp = track_at(track, arc);
        const double lateral = sceneRng.uniform(-1.0, 1.0);
        const Vec3 camPos{tp.x - std::sin(tp.heading) * lateral, tp.y + std::cos(tp.heading) * lateral, kCameraHeight};
        const double yaw = tp.heading + sceneRng.normal() * 0.03;

        bool tooClose = false;
        for (std::size_t k = scenes.size() >= 3 ? scenes.size() - 3 : 0; k < scenes.size(); ++k)
            tooClose = tooClose || std::hypot(scenes[k].location[0] - camPos.x,
                                              scenes[k].location[1] - camPos.y) < cfg.minSeparation;
        if (tooClose) continue;

        SceneTriplet scene;
        scene.location = {camPos.x, camPos.y};
        scene.camera = make_street_camera(camPos, yaw);

        auto lo = std::lower_bound(pool.begin(), pool.end(), arc - maxReach,
                                   [](const WorldObject& o, double a) { return o.arc < a; });
        for (auto it = lo; it != pool.end() && it->arc <= arc + maxReach; ++it) {
            const Instance3D& obj = it->instance;
            Instance3D kept{obj.instanceId, obj.category, {}, obj.colorRGB};
            for (const Vec3& p : obj.points)
                if (std::hypot(p.x - camPos.x, p.y - camPos.y) <= cfg.submapRadius) kept.points.push_back(p);
            if (kept.points.empty() ||
                static_cast<double>(kept.points.size()) < kMinKeptFraction * static_cast<double>(obj.points.size()))
                continue;
            const UvStats uv = instance_uv_stats(kept, scene.camera);
            if (uv.visibleCount < cfg.minVisiblePoints) continue;
            InstanceRecord rec;
            rec.instance3d = std::move(kept);
            rec.meanUV = uv.meanUV;
            rec.pixelCount = uv.visibleCount;
            scene.instances.push_back(std::move(rec));
        }
        if (scene.instances.size() < cfg.minInstances) continue;
        if (scene.instances.size() > cfg.maxInstances) {
            sceneRng.shuffle(scene.instances);
            scene.instances.resize(cfg.maxInstances);
            std::sort(scene.instances.begin(), scene.instances.end(), [](const auto& a, const auto& b) {
                return a.instance3d.instanceId < b.instance3d.instanceId;
            });
        }
        for (auto& rec : scene.instances) {
            rec.hint = make_hint(rec);
            rec.stubTextVec = stub_embed(tokenize(rec.hint), EmbedSpace::textSpace, cfg.stubDim);
            rec.stubImageVec = stub_embed(image_tokens(rec.instance3d), EmbedSpace::imageSpace, cfg.stubDim);
        }
        scene.sceneId = scenes.size();
        scenes.push_back(std::move(scene));
    }

    if (scenes.size() < cfg.numScenes)
        raise(ErrorKind::generation, "infeasible packing: placed " + std::to_string(scenes.size()) + " of " +
                                         std::to_string(cfg.numScenes) + " scenes within extent " +
                                         std::to_string(cfg.areaExtent) + " m");

    const auto counts = split_counts(cfg);
    for (std::size_t i = 0; i < scenes.size(); ++i)
        scenes[i].split = i < counts[0] ? Split::train : (i < counts[0] + counts[1] ? Split::val : Split::test);
    return scenes;
}

} // namespace uniloc::scenegen
