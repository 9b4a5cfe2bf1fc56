#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace uniloc::scenegen {

enum class Category : std::uint8_t { building, pole, trafficLight, fence, garage, tree, lamp, trashBin };

inline constexpr std::array<Category, 8> kAllCategories{
    Category::building, Category::pole, Category::trafficLight, Category::fence,
    Category::garage,   Category::tree, Category::lamp,         Category::trashBin};

// Serialization key ("trafficLight") and the words used in hints ("traffic light").
std::string_view category_key(Category c) noexcept;
std::string_view category_words(Category c) noexcept;
Category category_from_key(std::string_view key);

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;
    friend bool operator==(const Vec3&, const Vec3&) = default;
};

struct Instance3D {
    std::uint64_t instanceId = 0;
    Category category = Category::building;
    std::vector<Vec3> points; // world frame, meters
    std::array<double, 3> colorRGB{};
    friend bool operator==(const Instance3D&, const Instance3D&) = default;
};

// Pinhole camera. pose maps world coordinates to camera coordinates (row-major 4x4);
// camera frame is x right, y down, z forward.
struct CameraModel {
    std::array<double, 16> pose{1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 1};
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;
    std::uint32_t width = 1;
    std::uint32_t height = 1;
    friend bool operator==(const CameraModel&, const CameraModel&) = default;
};

struct InstanceRecord {
    Instance3D instance3d;
    std::array<double, 2> meanUV{}; // normalized to [0,1]^2
    std::uint64_t pixelCount = 0;   // visible projected points
    std::string hint;
    std::vector<double> stubTextVec;
    std::vector<double> stubImageVec;
    friend bool operator==(const InstanceRecord&, const InstanceRecord&) = default;
};

enum class Split : std::uint8_t { train, val, test };
std::string_view split_key(Split s) noexcept;
Split split_from_key(std::string_view key);

struct SceneTriplet {
    std::uint64_t sceneId = 0;
    std::array<double, 2> location{};
    CameraModel camera;
    std::vector<InstanceRecord> instances;
    Split split = Split::train;
    friend bool operator==(const SceneTriplet&, const SceneTriplet&) = default;
};

inline constexpr std::size_t kMaxInstancesPerScene = 12;
inline constexpr std::size_t kMinInstancesPerScene = 6;

struct WorldConfig {
    std::size_t numScenes = 768;
    double areaExtent = 12000.0;
    std::size_t minInstances = kMinInstancesPerScene;
    std::size_t maxInstances = kMaxInstancesPerScene;
    double submapRadius = 40.0;
    std::uint64_t seed = 42;
    std::array<double, 3> splitFractions{2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0};
    double minSeparation = 1.0;
    // Mean distance between consecutive scene locations along the trajectory.
    double sceneSpacing = 5.0;
    // Stand-in for the "valid pixel" minimum: visible projected points required per instance.
    std::size_t minVisiblePoints = 5;
    std::size_t stubDim = 64;
    // Mean number of roadside objects per meter of trajectory.
    double objectDensity = 0.25;
};

void validate(const WorldConfig& cfg);

} // namespace uniloc::scenegen
