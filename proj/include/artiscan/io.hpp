#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "artiscan/geometry.hpp"

namespace artiscan {

/// Wavefront OBJ, vertices and faces only (polygons are fan-triangulated).
TriMesh read_obj(const std::filesystem::path& path);
void write_obj(const std::filesystem::path& path, const TriMesh& mesh);

/// ASCII PLY with x y z nx ny nz and an optional integer `label` property.
void write_ply(const std::filesystem::path& path, const PointCloud& cloud);
PointCloud read_ply(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

/// Shortest round-trip decimal form; keeps emitted files bit-stable.
std::string format_double(double v);

}  // namespace artiscan
