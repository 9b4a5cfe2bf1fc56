#include "uniloc/scenegen/camera.hpp"

#include <cmath>

namespace uniloc::scenegen {

std::optional<PixelUV> project_point(const Vec3& p, const CameraModel& cam) {
    const auto& m = cam.pose;
    const double xc = m[0] * p.x + m[1] * p.y + m[2] * p.z + m[3];
    const double yc = m[4] * p.x + m[5] * p.y + m[6] * p.z + m[7];
    const double zc = m[8] * p.x + m[9] * p.y + m[10] * p.z + m[11];
    if (zc <= 0.0) return std::nullopt;
    return PixelUV{cam.fx * xc / zc + cam.cx, cam.fy * yc / zc + cam.cy};
}

UvStats instance_uv_stats(const Instance3D& inst, const CameraModel& cam) {
    UvStats stats;
    double su = 0.0, sv = 0.0;
    const double w = cam.width;
    const double h = cam.height;
    for (const Vec3& p : inst.points) {
        const auto px = project_point(p, cam);
        if (!px || px->u < 0.0 || px->u > w || px->v < 0.0 || px->v > h) continue;
        su += px->u;
        sv += px->v;
        ++stats.visibleCount;
    }
    if (stats.visibleCount > 0) {
        const double n = static_cast<double>(stats.visibleCount);
        stats.meanUV = {su / n / w, sv / n / h};
    }
    return stats;
}

CameraModel make_camera(const Vec3& position, double yaw, double fx, double fy, double cx, double cy,
                        std::uint32_t width, std::uint32_t height) {
    const double c = std::cos(yaw);
    const double s = std::sin(yaw);
    // Rows: right, down, forward.
    const std::array<Vec3, 3> rows{Vec3{s, -c, 0.0}, Vec3{0.0, 0.0, -1.0}, Vec3{c, s, 0.0}};
    CameraModel cam;
    for (int r = 0; r < 3; ++r) {
        const Vec3& a = rows[static_cast<std::size_t>(r)];
        cam.pose[static_cast<std::size_t>(4 * r + 0)] = a.x;
        cam.pose[static_cast<std::size_t>(4 * r + 1)] = a.y;
        cam.pose[static_cast<std::size_t>(4 * r + 2)] = a.z;
        cam.pose[static_cast<std::size_t>(4 * r + 3)] = -(a.x * position.x + a.y * position.y + a.z * position.z);
    }
    cam.pose[12] = 0.0;
    cam.pose[13] = 0.0;
    cam.pose[14] = 0.0;
    cam.pose[15] = 1.0;
    cam.fx = fx;
    cam.fy = fy;
    cam.cx = cx;
    cam.cy = cy;
    cam.width = width;
    cam.height = height;
    return cam;
}

CameraModel make_street_camera(const Vec3& position, double yaw) {
    return make_camera(position, yaw, 552.55, 552.55, 704.0, 188.0, 1408, 376);
}

double rotation_determinant(const CameraModel& cam) {
    const auto& m = cam.pose;
    return m[0] * (m[5] * m[10] - m[6] * m[9]) - m[1] * (m[4] * m[10] - m[6] * m[8]) +
           m[2] * (m[4] * m[9] - m[5] * m[8]);
}

} // namespace uniloc::scenegen
