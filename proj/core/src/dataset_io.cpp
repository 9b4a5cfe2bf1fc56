#include "uniloc/scenegen/dataset_io.hpp"

#include "uniloc/errors.hpp"

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <sstream>

namespace uniloc::scenegen {

namespace {

using nlohmann::json;

void put_double(std::string& s, double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    s += buf;
}

void put_string(std::string& s, std::string_view text) {
    s += '"';
    for (char ch : text) {
        switch (ch) {
        case '"': s += "\\\""; break;
        case '\\': s += "\\\\"; break;
        case '\n': s += "\\n"; break;
        case '\t': s += "\\t"; break;
        default:
            if (static_cast<unsigned char>(ch) < 0x20) {
                char buf[8];
                std::snprintf(buf, sizeof buf, "\\u%04x", static_cast<unsigned>(ch));
                s += buf;
            } else {
                s += ch;
            }
        }
    }
    s += '"';
}

template <typename Range>
void put_doubles(std::string& s, const Range& values) {
    s += '[';
    bool first = true;
    for (double v : values) {
        if (!first) s += ',';
        first = false;
        put_double(s, v);
    }
    s += ']';
}

void put_key(std::string& s, const char* key) {
    s += '"';
    s += key;
    s += "\":";
}

template <std::size_t N>
std::array<double, N> get_array(const json& j, const char* key) {
    const auto& a = j.at(key);
    if (!a.is_array() || a.size() != N)
        raise(ErrorKind::parse, std::string("field '") + key + "' must have " + std::to_string(N) + " numbers");
    std::array<double, N> out{};
    for (std::size_t i = 0; i < N; ++i) out[i] = a[i].get<double>();
    return out;
}

SceneTriplet scene_from_json(const json& j) {
    SceneTriplet s;
    s.sceneId = j.at("sceneId").get<std::uint64_t>();
    s.location = get_array<2>(j, "location");
    s.split = split_from_key(j.at("split").get<std::string>());
    const json& c = j.at("camera");
    s.camera.pose = get_array<16>(c, "pose");
    s.camera.fx = c.at("fx").get<double>();
    s.camera.fy = c.at("fy").get<double>();
    s.camera.cx = c.at("cx").get<double>();
    s.camera.cy = c.at("cy").get<double>();
    s.camera.width = c.at("width").get<std::uint32_t>();
    s.camera.height = c.at("height").get<std::uint32_t>();
    for (const json& ji : j.at("instances")) {
        InstanceRecord r;
        r.instance3d.instanceId = ji.at("instanceId").get<std::uint64_t>();
        r.instance3d.category = category_from_key(ji.at("category").get<std::string>());
        r.instance3d.colorRGB = get_array<3>(ji, "color");
        for (const json& p : ji.at("points")) {
            if (!p.is_array() || p.size() != 3) raise(ErrorKind::parse, "point must have 3 coordinates");
            r.instance3d.points.push_back({p[0].get<double>(), p[1].get<double>(), p[2].get<double>()});
        }
        r.meanUV = get_array<2>(ji, "meanUV");
        r.pixelCount = ji.at("pixelCount").get<std::uint64_t>();
        r.hint = ji.at("hint").get<std::string>();
        r.stubTextVec = ji.at("stubTextVec").get<std::vector<double>>();
        r.stubImageVec = ji.at("stubImageVec").get<std::vector<double>>();
        s.instances.push_back(std::move(r));
    }
    return s;
}

} // namespace

std::string scene_to_json_line(const SceneTriplet& scene) {
    std::string s;
    s.reserve(4096);
    s += '{';
    put_key(s, "sceneId");
    s += std::to_string(scene.sceneId);
    s += ',';
    put_key(s, "location");
    put_doubles(s, scene.location);
    s += ',';
    put_key(s, "split");
    put_string(s, split_key(scene.split));
    s += ',';
    put_key(s, "camera");
    s += '{';
    put_key(s, "pose");
    put_doubles(s, scene.camera.pose);
    const std::pair<const char*, double> intr[] = {
        {"fx", scene.camera.fx}, {"fy", scene.camera.fy}, {"cx", scene.camera.cx}, {"cy", scene.camera.cy}};
    for (const auto& [k, v] : intr) {
        s += ',';
        put_key(s, k);
        put_double(s, v);
    }
    s += ',';
    put_key(s, "width");
    s += std::to_string(scene.camera.width);
    s += ',';
    put_key(s, "height");
    s += std::to_string(scene.camera.height);
    s += "},";
    put_key(s, "instances");
    s += '[';
    for (std::size_t i = 0; i < scene.instances.size(); ++i) {
        const InstanceRecord& r = scene.instances[i];
        if (i) s += ',';
        s += '{';
        put_key(s, "instanceId");
        s += std::to_string(r.instance3d.instanceId);
        s += ',';
        put_key(s, "category");
        put_string(s, category_key(r.instance3d.category));
        s += ',';
        put_key(s, "color");
        put_doubles(s, r.instance3d.colorRGB);
        s += ',';
        put_key(s, "points");
        s += '[';
        for (std::size_t k = 0; k < r.instance3d.points.size(); ++k) {
            const Vec3& p = r.instance3d.points[k];
            if (k) s += ',';
            put_doubles(s, std::array<double, 3>{p.x, p.y, p.z});
        }
        s += "],";
        put_key(s, "meanUV");
        put_doubles(s, r.meanUV);
        s += ',';
        put_key(s, "pixelCount");
        s += std::to_string(r.pixelCount);
        s += ',';
        put_key(s, "hint");
        put_string(s, r.hint);
        s += ',';
        put_key(s, "stubTextVec");
        put_doubles(s, r.stubTextVec);
        s += ',';
        put_key(s, "stubImageVec");
        put_doubles(s, r.stubImageVec);
        s += '}';
    }
    s += "]}";
    return s;
}

void write_dataset(const std::vector<SceneTriplet>& scenes, std::ostream& out) {
    for (const auto& scene : scenes) out << scene_to_json_line(scene) << '\n';
    if (!out) raise(ErrorKind::io, "failed writing dataset");
}

void write_dataset(const std::vector<SceneTriplet>& scenes, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) raise(ErrorKind::io, "cannot open '" + path.string() + "' for writing");
    write_dataset(scenes, out);
}

std::vector<SceneTriplet> read_dataset(std::istream& in) {
    std::vector<SceneTriplet> scenes;
    std::string line;
    std::size_t lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            scenes.push_back(scene_from_json(json::parse(line)));
        } catch (const json::exception& e) {
            raise(ErrorKind::parse, "dataset line " + std::to_string(lineNo) + ": " + e.what());
        } catch (const Error& e) {
            raise(ErrorKind::parse, "dataset line " + std::to_string(lineNo) + ": " + e.what());
        }
    }
    return scenes;
}

std::vector<SceneTriplet> read_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) raise(ErrorKind::io, "cannot open dataset '" + path.string() + "'");
    return read_dataset(in);
}

} // namespace uniloc::scenegen
