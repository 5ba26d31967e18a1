#include "artiscan/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "artiscan/error.hpp"

namespace artiscan {

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) return "nan";
  return std::string(buf, end);
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path.string());
  out << text;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TriMesh read_obj(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  TriMesh mesh;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      Vec3 v;
      if (!(ls >> v.x() >> v.y() >> v.z()))
        throw Error(ErrorCode::Parse, path.string() + ":" + std::to_string(lineno) + ": bad vertex");
      mesh.vertices.push_back(v);
    } else if (tag == "f") {
      std::vector<int> face;
      std::string tok;
      while (ls >> tok) {
        // "i", "i/t", "i//n", "i/t/n"; negative indices are relative.
        const int idx = std::stoi(tok.substr(0, tok.find('/')));
        face.push_back(idx < 0 ? static_cast<int>(mesh.vertices.size()) + idx : idx - 1);
      }
      if (face.size() < 3)
        throw Error(ErrorCode::Parse, path.string() + ":" + std::to_string(lineno) + ": bad face");
      for (std::size_t k = 1; k + 1 < face.size(); ++k)
        mesh.triangles.push_back({face[0], face[k], face[k + 1]});
    }
  }
  return mesh;
}

void write_obj(const std::filesystem::path& path, const TriMesh& mesh) {
  std::ostringstream out;
  for (const auto& v : mesh.vertices)
    out << "v " << format_double(v.x()) << ' ' << format_double(v.y()) << ' '
        << format_double(v.z()) << '\n';
  for (const auto& t : mesh.triangles)
    out << "f " << t[0] + 1 << ' ' << t[1] + 1 << ' ' << t[2] + 1 << '\n';
  write_text(path, out.str());
}

void write_ply(const std::filesystem::path& path, const PointCloud& cloud) {
  std::ostringstream out;
  out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size() << '\n'
      << "property float64 x\nproperty float64 y\nproperty float64 z\n"
      << "property float64 nx\nproperty float64 ny\nproperty float64 nz\n";
  if (cloud.has_labels()) out << "property int32 label\n";
  out << "end_header\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& p = cloud.points[i];
    const auto& n = cloud.normals[i];
    out << format_double(p.x()) << ' ' << format_double(p.y()) << ' ' << format_double(p.z())
        << ' ' << format_double(n.x()) << ' ' << format_double(n.y()) << ' '
        << format_double(n.z());
    if (cloud.has_labels()) out << ' ' << cloud.labels[i];
    out << '\n';
  }
  write_text(path, out.str());
}

PointCloud read_ply(const std::filesystem::path& path) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line) || line != "ply") throw Error(ErrorCode::Parse, "not a PLY file");
  std::size_t count = 0;
  std::vector<std::string> props;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt != "ascii") throw Error(ErrorCode::Parse, "only ASCII PLY is supported");
    } else if (tag == "element") {
      std::string name;
      ls >> name >> count;
      if (name != "vertex") throw Error(ErrorCode::Parse, "unexpected element " + name);
    } else if (tag == "property") {
      std::string type, name;
      ls >> type >> name;
      props.push_back(name);
    } else if (tag == "end_header") {
      break;
    }
  }
  auto col = [&](const std::string& name) -> int {
    for (std::size_t i = 0; i < props.size(); ++i)
      if (props[i] == name) return static_cast<int>(i);
    return -1;
  };
  const int cx = col("x"), cy = col("y"), cz = col("z");
  const int cnx = col("nx"), cny = col("ny"), cnz = col("nz"), cl = col("label");
  if (cx < 0 || cy < 0 || cz < 0) throw Error(ErrorCode::Parse, "PLY lacks x/y/z");
  PointCloud cloud;
  std::vector<double> row(props.size());
  for (std::size_t i = 0; i < count; ++i) {
    for (auto& r : row)
      if (!(in >> r)) throw Error(ErrorCode::Parse, "truncated PLY body");
    cloud.points.emplace_back(row[cx], row[cy], row[cz]);
    if (cnx >= 0 && cny >= 0 && cnz >= 0)
      cloud.normals.emplace_back(row[cnx], row[cny], row[cnz]);
    else
      cloud.normals.push_back(Vec3::UnitZ());
    if (cl >= 0) cloud.labels.push_back(static_cast<int>(row[cl]));
  }
  return cloud;
}

}  // namespace artiscan
