#pragma once

#include "uniloc/scenegen/types.hpp"

#include <filesystem>
#include <iosfwd>
#include <vector>

namespace uniloc::scenegen {

// JSONL, one scene per line. Doubles are written with 17 significant digits so a
// write/read cycle reproduces every value exactly.
//
// {"sceneId":0,"location":[x,y],"split":"train",
//  "camera":{"pose":[16],"fx":..,"fy":..,"cx":..,"cy":..,"width":..,"height":..},
//  "instances":[{"instanceId":..,"category":"trafficLight","color":[r,g,b],
//                "points":[[x,y,z],...],"meanUV":[u,v],"pixelCount":..,"hint":"...",
//                "stubTextVec":[...],"stubImageVec":[...]}]}
void write_dataset(const std::vector<SceneTriplet>& scenes, std::ostream& out);
void write_dataset(const std::vector<SceneTriplet>& scenes, const std::filesystem::path& path);

// Malformed lines raise ErrorKind::parse with the 1-based line number.
std::vector<SceneTriplet> read_dataset(std::istream& in);
std::vector<SceneTriplet> read_dataset(const std::filesystem::path& path);

// One scene as a single JSON line (no trailing newline).
std::string scene_to_json_line(const SceneTriplet& scene);

} // namespace uniloc::scenegen
