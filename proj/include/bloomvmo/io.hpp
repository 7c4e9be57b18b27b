#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "bloomvmo/grid.hpp"
#include "bloomvmo/oscillation.hpp"

namespace bloomvmo {

inline constexpr const char* kGridSchema = "bloomvmo.grid/1";

/// One JSON header line {schema, n, L, role} followed by 2^(nL) little-endian float64 values.
void write_grid_binary(const std::filesystem::path& path, const GridFunction& f);
GridFunction read_grid_binary(const std::filesystem::path& path);

/// CSV with header i,x,value (n = 1) or i,j,x,y,value (n = 2); x, y are cell midpoints.
void write_grid_csv(const std::filesystem::path& path, const GridFunction& f);
GridFunction read_grid_csv(const std::filesystem::path& path, int dim, int depth);

/// Reads either format, chosen by extension (.csv or anything else as binary).
GridFunction read_grid(const std::filesystem::path& path, int dim = 1, int depth = -1);

/// Curve CSV: level,scale,value,empty.
void write_curve_csv(const std::filesystem::path& path, const std::vector<ScalePoint>& curve);

nlohmann::json read_json(const std::filesystem::path& path);
/// Pretty-printed, keys sorted, trailing newline.
void write_json(const std::filesystem::path& path, const nlohmann::json& j);

/// Shortest round-trip representation of a double.
std::string format_double(double v);

}  // namespace bloomvmo
