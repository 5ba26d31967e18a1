#include "artiscan/model.hpp"

#include <algorithm>
#include <cmath>
#include <json.hpp>

#include "artiscan/error.hpp"
#include "artiscan/io.hpp"

namespace artiscan {

using nlohmann::json;

const char* to_string(JointKind kind) {
  switch (kind) {
    case JointKind::Revolute: return "revolute";
    case JointKind::Prismatic: return "prismatic";
    case JointKind::Fixed: return "fixed";
  }
  return "fixed";
}

const char* to_string(MotionKind kind) {
  return kind == MotionKind::Rotation ? "rotation" : "translation";
}

Rigid Joint::motion(double delta) const {
  switch (kind) {
    case JointKind::Revolute: return rotation_about(origin, direction, delta);
    case JointKind::Prismatic: return translation_along(direction, delta);
    case JointKind::Fixed: break;
  }
  return Rigid::Identity();
}

Rigid MotionParams::transform(double amount) const {
  return kind == MotionKind::Rotation ? rotation_about(axis_point, axis_dir, amount)
                                      : translation_along(axis_dir, amount);
}

ArticulatedObject::ArticulatedObject(std::string name, std::vector<Part> parts)
    : name_(std::move(name)), parts_(std::move(parts)) {
  const int n = static_cast<int>(parts_.size());
  if (n == 0) throw Error(ErrorCode::Structure, "object has no parts");
  int roots = 0;
  for (const auto& p : parts_) {
    if (p.parent == kRootParent) ++roots;
    if (p.parent != kRootParent && (p.parent < 0 || p.parent >= n))
      throw Error(ErrorCode::Structure, "part '" + p.id + "' has an invalid parent");
    if (!p.mesh) throw Error(ErrorCode::Structure, "part '" + p.id + "' has no mesh");
    if (p.joint.kind != JointKind::Fixed &&
        std::abs(p.joint.direction.norm() - 1.0) > 1e-9)
      throw Error(ErrorCode::Structure, "part '" + p.id + "' joint direction is not unit length");
    if (p.joint.lo > p.joint.rest || p.joint.rest > p.joint.hi)
      throw Error(ErrorCode::Range, "part '" + p.id + "' rest value outside its range");
  }
  if (roots != 1) throw Error(ErrorCode::Structure, "expected exactly one root part");
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (parts_[i].id == parts_[j].id)
        throw Error(ErrorCode::Structure, "duplicate part id '" + parts_[i].id + "'");

  // Topological order; anything left unvisited sits on a cycle.
  std::vector<int> state(n, 0);
  for (int i = 0; i < n; ++i) {
    std::vector<int> chain;
    int cur = i;
    while (cur != kRootParent && state[cur] == 0) {
      state[cur] = 1;
      chain.push_back(cur);
      cur = parts_[cur].parent;
    }
    if (cur != kRootParent && state[cur] == 1)
      throw Error(ErrorCode::Structure, "cyclic parent graph at part '" + parts_[cur].id + "'");
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
      state[*it] = 2;
      order_.push_back(*it);
    }
  }
  const int root = static_cast<int>(
      std::find_if(parts_.begin(), parts_.end(),
                   [](const Part& p) { return p.parent == kRootParent; }) -
      parts_.begin());
  if (parts_[root].joint.kind != JointKind::Fixed)
    throw Error(ErrorCode::Structure, "root part '" + parts_[root].id + "' must be fixed");
  values_.reserve(n);
  for (const auto& p : parts_) values_.push_back(p.joint.rest);
}

std::optional<std::size_t> ArticulatedObject::find(const std::string& id) const {
  for (std::size_t i = 0; i < parts_.size(); ++i)
    if (parts_[i].id == id) return i;
  return std::nullopt;
}

std::size_t ArticulatedObject::index_of(const std::string& id) const {
  if (auto i = find(id)) return *i;
  throw Error(ErrorCode::Lookup, "unknown part '" + id + "'");
}

std::map<std::string, double> ArticulatedObject::state() const {
  std::map<std::string, double> s;
  for (std::size_t i = 0; i < parts_.size(); ++i) s[parts_[i].id] = values_[i];
  return s;
}

ArticulatedObject ArticulatedObject::with_state(const std::string& id, double value) const {
  return with_state(index_of(id), value);
}

ArticulatedObject ArticulatedObject::with_state(std::size_t part, double value) const {
  if (part >= parts_.size()) throw Error(ErrorCode::Lookup, "part index out of range");
  const Joint& j = parts_[part].joint;
  if (!(value >= j.lo && value <= j.hi))
    throw Error(ErrorCode::Range, "value " + format_double(value) + " outside range of part '" +
                                      parts_[part].id + "'");
  ArticulatedObject out = *this;
  out.values_[part] = value;
  return out;
}

ArticulatedObject ArticulatedObject::at_rest() const {
  ArticulatedObject out = *this;
  for (std::size_t i = 0; i < parts_.size(); ++i) out.values_[i] = parts_[i].joint.rest;
  return out;
}

Rigid ArticulatedObject::part_transform(std::size_t part) const {
  Rigid tf = Rigid::Identity();
  // Walk to the root: T = T_root * ... * M_parent * M_part.
  for (int cur = static_cast<int>(part); cur != kRootParent; cur = parts_[cur].parent) {
    const Joint& j = parts_[cur].joint;
    tf = j.motion(values_[cur] - j.rest) * tf;
  }
  return tf;
}

TriMesh ArticulatedObject::posed_mesh(std::size_t part) const {
  return parts_.at(part).mesh->transformed(part_transform(part));
}

TriMesh ArticulatedObject::posed_mesh() const {
  TriMesh all;
  for (std::size_t i = 0; i < parts_.size(); ++i) all.append(posed_mesh(i));
  return all;
}

Aabb ArticulatedObject::bounds() const {
  Aabb box;
  for (std::size_t i = 0; i < parts_.size(); ++i) box.extend(posed_mesh(i).bounds());
  return box;
}

MotionParams ArticulatedObject::joint_motion(std::size_t part) const {
  const Part& p = parts_.at(part);
  if (!p.joint.movable()) throw Error(ErrorCode::Immovable, "part '" + p.id + "' is fixed");
  Rigid parent_tf = Rigid::Identity();
  if (p.parent != kRootParent) parent_tf = part_transform(p.parent);
  MotionParams m;
  m.kind = p.joint.kind == JointKind::Revolute ? MotionKind::Rotation : MotionKind::Translation;
  m.axis_dir = p.joint.opening_sign() * (parent_tf.linear() * p.joint.direction);
  m.axis_point = parent_tf * p.joint.origin;
  m.range = std::abs(p.joint.open_limit() - p.joint.rest);
  return m;
}

std::vector<std::size_t> ArticulatedObject::movable_parts() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < parts_.size(); ++i)
    if (parts_[i].joint.movable()) out.push_back(i);
  return out;
}

namespace {

Vec3 read_vec3(const json& j, const std::string& field) {
  if (!j.is_array() || j.size() != 3) throw Error(ErrorCode::Parse, "field '" + field + "' must be [x,y,z]");
  Vec3 v;
  for (int k = 0; k < 3; ++k) {
    if (!j[k].is_number()) throw Error(ErrorCode::Parse, "field '" + field + "' must be numeric");
    v[k] = j[k].get<double>();
  }
  return v;
}

const json& require(const json& obj, const char* key, const std::string& ctx) {
  if (!obj.is_object() || !obj.contains(key))
    throw Error(ErrorCode::Parse, "missing field '" + ctx + key + "'");
  return obj.at(key);
}

JointKind parse_kind(const json& j, const std::string& ctx) {
  if (!j.is_string()) throw Error(ErrorCode::Parse, "field '" + ctx + "' must be a string");
  const auto s = j.get<std::string>();
  if (s == "revolute") return JointKind::Revolute;
  if (s == "prismatic") return JointKind::Prismatic;
  if (s == "fixed") return JointKind::Fixed;
  throw Error(ErrorCode::Parse, "field '" + ctx + "': unsupported joint kind '" + s + "'");
}

TriMesh parse_mesh(const json& j, const std::string& ctx, const std::filesystem::path& base_dir) {
  if (j.contains("obj_path")) {
    const auto& path = j.at("obj_path");
    if (!path.is_string()) throw Error(ErrorCode::Parse, "field '" + ctx + "obj_path' must be a string");
    std::filesystem::path p = path.get<std::string>();
    if (p.is_relative()) p = base_dir / p;
    return read_obj(p);
  }
  TriMesh mesh;
  const auto& verts = require(j, "vertices", ctx);
  const auto& tris = require(j, "triangles", ctx);
  if (!verts.is_array()) throw Error(ErrorCode::Parse, "field '" + ctx + "vertices' must be an array");
  if (!tris.is_array()) throw Error(ErrorCode::Parse, "field '" + ctx + "triangles' must be an array");
  for (const auto& v : verts) mesh.vertices.push_back(read_vec3(v, ctx + "vertices"));
  for (const auto& t : tris) {
    if (!t.is_array() || t.size() != 3)
      throw Error(ErrorCode::Parse, "field '" + ctx + "triangles' entries must be [i,j,k]");
    std::array<int, 3> tri{};
    for (int k = 0; k < 3; ++k) {
      if (!t[k].is_number_integer())
        throw Error(ErrorCode::Parse, "field '" + ctx + "triangles' indices must be integers");
      tri[k] = t[k].get<int>();
      if (tri[k] < 0 || tri[k] >= static_cast<int>(mesh.vertices.size()))
        throw Error(ErrorCode::Parse, "field '" + ctx + "triangles' index out of range");
    }
    mesh.triangles.push_back(tri);
  }
  return mesh;
}

}  // namespace

ArticulatedObject parse_object(const std::string& json_text, const std::filesystem::path& base_dir) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::Parse, std::string("invalid JSON: ") + e.what());
  }
  const auto& name = require(doc, "name", "");
  if (!name.is_string()) throw Error(ErrorCode::Parse, "field 'name' must be a string");
  const auto& parts_json = require(doc, "parts", "");
  if (!parts_json.is_array() || parts_json.empty())
    throw Error(ErrorCode::Parse, "field 'parts' must be a non-empty array");

  std::vector<Part> parts;
  std::vector<std::string> parent_ids;
  for (std::size_t i = 0; i < parts_json.size(); ++i) {
    const auto& pj = parts_json[i];
    const std::string ctx = "parts[" + std::to_string(i) + "].";
    Part part;
    const auto& id = require(pj, "id", ctx);
    if (!id.is_string()) throw Error(ErrorCode::Parse, "field '" + ctx + "id' must be a string");
    part.id = id.get<std::string>();
    const auto& parent = require(pj, "parent", ctx);
    if (!parent.is_string()) throw Error(ErrorCode::Parse, "field '" + ctx + "parent' must be a string");
    parent_ids.push_back(parent.get<std::string>());

    TriMesh mesh = parse_mesh(require(pj, "mesh", ctx), ctx + "mesh.", base_dir);
    mesh.cleanup();
    part.mesh = std::make_shared<const TriMesh>(std::move(mesh));

    const auto& jj = require(pj, "joint", ctx);
    const std::string jctx = ctx + "joint.";
    part.joint.kind = parse_kind(require(jj, "kind", jctx), jctx + "kind");
    if (jj.contains("dof") && jj.at("dof") != 1)
      throw Error(ErrorCode::Parse, "field '" + jctx + "dof': only 1-DoF joints are supported");
    if (part.joint.kind != JointKind::Fixed) {
      part.joint.origin = read_vec3(require(jj, "origin", jctx), jctx + "origin");
      const Vec3 dir = read_vec3(require(jj, "direction", jctx), jctx + "direction");
      if (dir.norm() < 1e-12) throw Error(ErrorCode::Parse, "field '" + jctx + "direction' is zero");
      part.joint.direction = dir.normalized();
      const auto& range = require(jj, "range", jctx);
      if (!range.is_array() || range.size() != 2 || !range[0].is_number() || !range[1].is_number())
        throw Error(ErrorCode::Parse, "field '" + jctx + "range' must be [lo,hi]");
      part.joint.lo = range[0].get<double>();
      part.joint.hi = range[1].get<double>();
      if (part.joint.lo > part.joint.hi)
        throw Error(ErrorCode::Parse, "field '" + jctx + "range' has lo > hi");
      part.joint.rest = part.joint.lo;
      if (jj.contains("rest")) {
        if (!jj.at("rest").is_number()) throw Error(ErrorCode::Parse, "field '" + jctx + "rest' must be numeric");
        part.joint.rest = jj.at("rest").get<double>();
      }
    } else {
      if (jj.contains("origin")) part.joint.origin = read_vec3(jj.at("origin"), jctx + "origin");
    }
    parts.push_back(std::move(part));
  }
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (parent_ids[i] == "root") continue;
    auto it = std::find_if(parts.begin(), parts.end(),
                           [&](const Part& p) { return p.id == parent_ids[i]; });
    if (it == parts.end())
      throw Error(ErrorCode::Structure, "part '" + parts[i].id + "' has unknown parent '" + parent_ids[i] + "'");
    parts[i].parent = static_cast<int>(it - parts.begin());
  }
  return ArticulatedObject(name.get<std::string>(), std::move(parts));
}

ArticulatedObject load_object(const std::filesystem::path& path) {
  return normalize(parse_object(read_text(path), path.parent_path()));
}

ArticulatedObject normalize(const ArticulatedObject& obj) {
  const Aabb box = obj.at_rest().bounds();
  const double extent = box.extent().maxCoeff();
  if (!(extent > 0.0)) throw Error(ErrorCode::Degenerate, "object has zero extent");
  const double scale = 1.0 / extent;
  const Vec3 shift = Vec3::Constant(0.5) - scale * box.center();
  auto map = [&](const Vec3& p) -> Vec3 { return scale * p + shift; };

  std::vector<Part> parts = obj.parts();
  for (auto& p : parts) {
    TriMesh m = *p.mesh;
    for (auto& v : m.vertices) v = map(v);
    p.mesh = std::make_shared<const TriMesh>(std::move(m));
    p.joint.origin = map(p.joint.origin);
    if (p.joint.kind == JointKind::Prismatic) {
      p.joint.lo *= scale;
      p.joint.hi *= scale;
      p.joint.rest *= scale;
    }
  }
  return ArticulatedObject(obj.name(), std::move(parts));
}

std::string object_to_json(const ArticulatedObject& obj) {
  json doc;
  doc["name"] = obj.name();
  doc["parts"] = json::array();
  auto vec = [](const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); };
  for (const auto& p : obj.parts()) {
    json pj;
    pj["id"] = p.id;
    pj["parent"] = p.parent == kRootParent ? std::string("root") : obj.part(p.parent).id;
    json verts = json::array(), tris = json::array();
    for (const auto& v : p.mesh->vertices) verts.push_back(vec(v));
    for (const auto& t : p.mesh->triangles) tris.push_back(json::array({t[0], t[1], t[2]}));
    pj["mesh"] = {{"vertices", verts}, {"triangles", tris}};
    pj["joint"] = {{"kind", to_string(p.joint.kind)},
                   {"origin", vec(p.joint.origin)},
                   {"direction", vec(p.joint.direction)},
                   {"range", json::array({p.joint.lo, p.joint.hi})},
                   {"rest", p.joint.rest}};
    doc["parts"].push_back(pj);
  }
  return doc.dump(1);
}

ArticulatedObject set_state(const ArticulatedObject& obj, const std::string& part, double value) {
  return obj.with_state(part, value);
}

Vec3 surface_velocity(const ArticulatedObject& obj, const std::string& part, const Vec3& point) {
  return surface_velocity(obj, obj.index_of(part), point);
}

Vec3 surface_velocity(const ArticulatedObject& obj, std::size_t part, const Vec3& point) {
  const Part& p = obj.part(part);
  if (!p.joint.movable()) throw Error(ErrorCode::Immovable, "part '" + p.id + "' is fixed");
  Rigid parent_tf = Rigid::Identity();
  if (p.parent != kRootParent) parent_tf = obj.part_transform(p.parent);
  const Vec3 dir = parent_tf.linear() * p.joint.direction;
  if (p.joint.kind == JointKind::Prismatic) return dir;
  const Vec3 v = dir.cross(point - parent_tf * p.joint.origin);
  if (v.norm() < 1e-12)
    throw Error(ErrorCode::Degenerate, "point lies on the hinge line of part '" + p.id + "'");
  return v.normalized();
}

double distance_to_part(const ArticulatedObject& obj, std::size_t part, const Vec3& p) {
  // Transform the query into the rest frame instead of posing the mesh.
  const Vec3 q = obj.part_transform(part).inverse() * p;
  const TriMesh& m = *obj.part(part).mesh;
  double best = kInf;
  for (const auto& t : m.triangles) {
    const Vec3 c = closest_point_on_triangle(q, m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]]);
    best = std::min(best, (c - q).squaredNorm());
  }
  return std::sqrt(best);
}

LabelDetails gt_label_details(const ArticulatedObject& obj, const PointCloud& cloud, double tolerance) {
  const std::size_t np = obj.part_count();
  std::vector<Rigid> inv(np);
  std::vector<Aabb> boxes(np);
  for (std::size_t i = 0; i < np; ++i) {
    inv[i] = obj.part_transform(i).inverse();
    boxes[i] = obj.part(i).mesh->bounds();
  }
  LabelDetails out;
  out.labels.assign(cloud.size(), kUnlabeled);
  out.ambiguous.assign(cloud.size(), false);
  for (std::size_t k = 0; k < cloud.size(); ++k) {
    double best = kInf;
    int within = 0;
    for (std::size_t i = 0; i < np; ++i) {
      const Vec3 q = inv[i] * cloud.points[k];
      if (boxes[i].distance(q) > tolerance) continue;
      const TriMesh& m = *obj.part(i).mesh;
      double d2 = kInf;
      for (const auto& t : m.triangles) {
        const Vec3 c = closest_point_on_triangle(q, m.vertices[t[0]], m.vertices[t[1]], m.vertices[t[2]]);
        d2 = std::min(d2, (c - q).squaredNorm());
      }
      const double d = std::sqrt(d2);
      if (d <= tolerance) ++within;
      if (d < best) {
        best = d;
        if (d <= tolerance) out.labels[k] = static_cast<int>(i);
      }
    }
    out.ambiguous[k] = within > 1;
  }
  return out;
}

std::vector<int> gt_labels(const ArticulatedObject& obj, const PointCloud& cloud, double tolerance) {
  return gt_label_details(obj, cloud, tolerance).labels;
}

}  // namespace artiscan
