#include "bloomvmo/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <sstream>

#include "bloomvmo/errors.hpp"

namespace bloomvmo {

namespace fs = std::filesystem;

namespace {

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream os(path, mode);
  if (!os) throw PreconditionError("cannot write " + path.string());
  return os;
}

std::ifstream open_in(const fs::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream is(path, mode);
  if (!is) throw PreconditionError("cannot read " + path.string());
  return is;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

void write_grid_binary(const fs::path& path, const GridFunction& f) {
  static_assert(std::endian::native == std::endian::little, "binary grid format is little-endian");
  std::ofstream os = open_out(path, std::ios::out | std::ios::binary);
  const nlohmann::json header = {
      {"schema", kGridSchema}, {"n", f.grid().dim()}, {"L", f.grid().depth()}, {"role", f.role()}};
  os << header.dump() << '\n';
  os.write(reinterpret_cast<const char*>(f.values().data()),
           static_cast<std::streamsize>(f.size() * sizeof(double)));
}

GridFunction read_grid_binary(const fs::path& path) {
  std::ifstream is = open_in(path, std::ios::in | std::ios::binary);
  std::string line;
  std::getline(is, line);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    throw PreconditionError("grid file has no JSON header: " + path.string());
  }
  if (header.value("schema", std::string{}) != kGridSchema) throw PreconditionError("unsupported grid schema");
  const Grid g(header.at("n").get<int>(), header.at("L").get<int>());
  std::vector<double> v(g.cell_count());
  is.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
  if (static_cast<std::size_t>(is.gcount()) != v.size() * sizeof(double))
    throw PreconditionError("grid file is truncated: " + path.string());
  return GridFunction(g, std::move(v), header.value("role", std::string{}));
}

void write_grid_csv(const fs::path& path, const GridFunction& f) {
  std::ofstream os = open_out(path);
  const Grid& g = f.grid();
  os << (g.dim() == 1 ? "i,x,value\n" : "i,j,x,y,value\n");
  for (std::size_t c = 0; c < f.size(); ++c) {
    const Coord k = g.coords(c);
    const auto m = g.midpoint(c);
    if (g.dim() == 1) {
      os << k[0] << ',' << format_double(m[0]) << ',' << format_double(f[c]) << '\n';
    } else {
      os << k[0] << ',' << k[1] << ',' << format_double(m[0]) << ',' << format_double(m[1]) << ','
         << format_double(f[c]) << '\n';
    }
  }
}

GridFunction read_grid_csv(const fs::path& path, int dim, int depth) {
  std::ifstream is = open_in(path);
  std::string line;
  std::getline(is, line);
  struct Row {
    Index i, j;
    double value;
  };
  std::vector<Row> rows;
  Index max_index = 0;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) fields.push_back(tok);
    if (fields.size() != static_cast<std::size_t>(dim == 1 ? 3 : 5)) throw PreconditionError("bad CSV row: " + line);
    const Row r{std::stoll(fields[0]), dim == 2 ? std::stoll(fields[1]) : 0, std::stod(fields.back())};
    max_index = std::max({max_index, r.i, r.j});
    rows.push_back(r);
  }
  if (depth < 0) {
    depth = 0;
    while ((Index{1} << depth) <= max_index) ++depth;
  }
  const Grid g(dim, depth);
  if (rows.size() != g.cell_count()) throw PreconditionError("CSV row count does not match the grid");
  std::vector<double> v(g.cell_count(), 0.0);
  for (const Row& r : rows) {
    if (r.i < 0 || r.j < 0 || r.i >= g.per_axis() || r.j >= (dim == 2 ? g.per_axis() : 1))
      throw PreconditionError("CSV cell index out of range");
    v[g.linear({r.i, r.j})] = r.value;
  }
  return GridFunction(g, std::move(v));
}

GridFunction read_grid(const fs::path& path, int dim, int depth) {
  if (path.extension() == ".csv") return read_grid_csv(path, dim, depth);
  return read_grid_binary(path);
}

void write_curve_csv(const fs::path& path, const std::vector<ScalePoint>& curve) {
  std::ofstream os = open_out(path);
  os << "level,scale,value,empty\n";
  for (const ScalePoint& pt : curve) {
    os << pt.level << ',' << format_double(pt.scale) << ',' << format_double(pt.value) << ',' << (pt.empty ? 1 : 0)
       << '\n';
  }
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream is = open_in(path);
  try {
    return nlohmann::json::parse(is);
  } catch (const nlohmann::json::exception& e) {
    throw PreconditionError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream os = open_out(path);
  os << j.dump(2) << '\n';
}

}  // namespace bloomvmo
