#pragma once

#include "uniloc/scenegen/types.hpp"

#include <array>
#include <cstddef>
#include <optional>

namespace uniloc::scenegen {

struct PixelUV {
    double u = 0.0;
    double v = 0.0;
};

// Pinhole projection; std::nullopt marks a point at or behind the image plane (z_cam <= 0).
std::optional<PixelUV> project_point(const Vec3& p, const CameraModel& cam);

struct UvStats {
    std::array<double, 2> meanUV{}; // normalized by (width, height); zero when nothing is visible
    std::size_t visibleCount = 0;
};

// Mean normalized UV over points that land inside the image with positive depth.
UvStats instance_uv_stats(const Instance3D& inst, const CameraModel& cam);

// Camera at `position` (world, meters) looking along `yaw` (radians from +x) with a level horizon.
CameraModel make_camera(const Vec3& position, double yaw, double fx, double fy, double cx, double cy,
                        std::uint32_t width, std::uint32_t height);

// Default street-camera intrinsics (1408 x 376 image).
CameraModel make_street_camera(const Vec3& position, double yaw);

// Determinant of the rotation block; +1 for a valid pose.
double rotation_determinant(const CameraModel& cam);

} // namespace uniloc::scenegen
