#include "artiscan/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <exception>
#include <json.hpp>
#include <map>
#include <random>
#include <thread>

#include "artiscan/error.hpp"
#include "artiscan/io.hpp"

namespace artiscan {

namespace {

constexpr double kGap = 0.005;    // clearance around moving parts
constexpr double kPanel = 0.02;   // door and drawer front thickness
constexpr double kSheet = 0.01;   // drawer tray sheet thickness

class Rand {
 public:
  explicit Rand(std::uint64_t seed) : rng_(seed) {}
  double uniform(double a, double b) { return a + (b - a) * unit_double(rng_); }
  int integer(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(unit_double(rng_) * (hi - lo + 1) * (1.0 - 1e-12));
  }
  bool coin() { return unit_double(rng_) < 0.5; }

 private:
  std::mt19937_64 rng_;
};

void add_box(TriMesh& mesh, const Vec3& lo, const Vec3& hi) { mesh.append(make_box(lo, hi)); }

Part fixed_part(const std::string& id, TriMesh mesh) {
  Part p;
  p.id = id;
  p.mesh = std::make_shared<const TriMesh>(std::move(mesh));
  return p;
}

Part moving_part(const std::string& id, TriMesh mesh, JointKind kind, const Vec3& origin, const Vec3& dir,
                 double hi) {
  Part p = fixed_part(id, std::move(mesh));
  p.parent = 0;
  p.joint.kind = kind;
  p.joint.origin = origin;
  p.joint.direction = dir;
  p.joint.lo = 0.0;
  p.joint.hi = hi;
  p.joint.rest = 0.0;
  return p;
}

/// Box shell with an open front at x = d.
TriMesh open_shell(double d, double w, double h, double t) {
  TriMesh m;
  add_box(m, {0, 0, 0}, {t, w, h});
  add_box(m, {t, 0, 0}, {d, t, h});
  add_box(m, {t, w - t, 0}, {d, w, h});
  add_box(m, {t, t, 0}, {d, w - t, t});
  add_box(m, {t, t, h - t}, {d, w - t, h});
  return m;
}

/// Drawer filling the opening [yl, yh] x [zl, zh] of a cavity of depth
/// (d - back); front flush with x = d.
Part drawer(const std::string& id, double d, double back, double yl, double yh, double zl, double zh) {
  const double y0 = yl + kGap, y1 = yh - kGap, z0 = zl + kGap, z1 = zh - kGap;
  const double len = d - kPanel - back - 0.02;
  const double x0 = d - kPanel - len;
  const double side_h = 0.6 * (z1 - z0);
  TriMesh m;
  add_box(m, {d - kPanel, y0, z0}, {d, y1, z1});
  add_box(m, {x0, y0, z0}, {d - kPanel, y1, z0 + kSheet});
  add_box(m, {x0, y0, z0 + kSheet}, {d - kPanel, y0 + kSheet, z0 + side_h});
  add_box(m, {x0, y1 - kSheet, z0 + kSheet}, {d - kPanel, y1, z0 + side_h});
  add_box(m, {x0, y0 + kSheet, z0 + kSheet}, {x0 + kSheet, y1 - kSheet, z0 + side_h});
  return moving_part(id, std::move(m), JointKind::Prismatic, {d, 0.5 * (y0 + y1), 0.5 * (z0 + z1)},
                     Vec3::UnitX(), 0.85 * len);
}

/// Door panel over [yl, yh] x [zl, zh], flush with x = d, hinged on a
/// vertical front edge.
Part side_door(const std::string& id, double d, double yl, double yh, double zl, double zh, bool hinge_high,
               double angle) {
  const double y0 = yl + kGap, y1 = yh - kGap, z0 = zl + kGap, z1 = zh - kGap;
  TriMesh m;
  add_box(m, {d - kPanel, y0, z0}, {d, y1, z1});
  const Vec3 origin(d, hinge_high ? y1 : y0, 0.5 * (z0 + z1));
  const Vec3 dir = hinge_high ? Vec3::UnitZ() : Vec3(-Vec3::UnitZ());
  return moving_part(id, std::move(m), JointKind::Revolute, origin, dir, angle);
}

/// Door panel hinged on its top (flap) or bottom edge.
Part flap_door(const std::string& id, double d, double yl, double yh, double zl, double zh, bool hinge_top,
               double angle) {
  const double y0 = yl + kGap, y1 = yh - kGap, z0 = zl + kGap, z1 = zh - kGap;
  TriMesh m;
  add_box(m, {d - kPanel, y0, z0}, {d, y1, z1});
  const Vec3 origin(d, 0.5 * (y0 + y1), hinge_top ? z1 : z0);
  const Vec3 dir = hinge_top ? Vec3(-Vec3::UnitY()) : Vec3::UnitY();
  return moving_part(id, std::move(m), JointKind::Revolute, origin, dir, angle);
}

ArticulatedObject cabinet_drawer(Rand& r) {
  const double h = 1.0, w = r.uniform(0.5, 0.9), d = r.uniform(0.45, 0.65), t = r.uniform(0.03, 0.04);
  TriMesh body = open_shell(d, w, h, t);
  // Drawer in the top section over a shelf; the cupboard below is closed.
  const double slot = r.uniform(0.2, 0.3);
  const double zl = h - t - slot;
  add_box(body, {t, t, zl - t}, {d, w - t, zl});
  add_box(body, {d - kPanel, t, t}, {d, w - t, zl - t});
  std::vector<Part> parts{fixed_part("body", std::move(body)), drawer("drawer_0", d, t, t, w - t, zl, h - t)};
  return ArticulatedObject("cabinet-drawer", std::move(parts));
}

ArticulatedObject cabinet_door(Rand& r) {
  const double h = 1.0, w = r.uniform(0.45, 0.7), d = r.uniform(0.4, 0.6), t = r.uniform(0.03, 0.04);
  TriMesh body = open_shell(d, w, h, t);
  const double shelf = r.uniform(0.4, 0.6);
  add_box(body, {t, t, shelf}, {d - kPanel - 0.03, w - t, shelf + t});
  const bool high = r.coin();
  std::vector<Part> parts{fixed_part("body", std::move(body)),
                          side_door("door_0", d, t, w - t, t, h - t, high, r.uniform(0.5, 0.65) * kPi)};
  return ArticulatedObject("cabinet-door", std::move(parts));
}

ArticulatedObject double_door(Rand& r) {
  const double h = 1.0, w = r.uniform(0.7, 0.95), d = r.uniform(0.45, 0.65), t = r.uniform(0.03, 0.04);
  TriMesh body = open_shell(d, w, h, t);
  const double shelf = r.uniform(0.35, 0.65);
  add_box(body, {t, t, shelf}, {d - kPanel - 0.03, w - t, shelf + t});
  const double mid = 0.5 * w;
  std::vector<Part> parts{fixed_part("body", std::move(body)),
                          side_door("door_left", d, t, mid, t, h - t, false, r.uniform(0.5, 0.65) * kPi),
                          side_door("door_right", d, mid, w - t, t, h - t, true, r.uniform(0.5, 0.65) * kPi)};
  return ArticulatedObject("double-door", std::move(parts));
}

ArticulatedObject microwave(Rand& r) {
  const double w = 1.0, h = r.uniform(0.5, 0.65), d = r.uniform(0.55, 0.7), t = r.uniform(0.03, 0.04);
  TriMesh body = open_shell(d, w, h, t);
  const double split = r.uniform(0.65, 0.75) * w;
  add_box(body, {t, split, t}, {d, split + t, h - t});
  add_box(body, {d - kPanel, split + t, t}, {d, w - t, h - t});
  std::vector<Part> parts{fixed_part("body", std::move(body)),
                          side_door("door_0", d, t, split, t, h - t, false, r.uniform(0.5, 0.6) * kPi)};
  return ArticulatedObject("microwave", std::move(parts));
}

ArticulatedObject trashcan_lid(Rand& r) {
  const double h = 1.0, w = r.uniform(0.5, 0.7), d = r.uniform(0.5, 0.7), t = r.uniform(0.03, 0.04);
  TriMesh body = open_shell(d, w, h, t);
  const double split = r.uniform(0.45, 0.6) * h;
  add_box(body, {d - kPanel, t, t}, {d, w - t, split});
  std::vector<Part> parts{fixed_part("body", std::move(body)),
                          flap_door("lid", d, t, w - t, split, h - t, true, r.uniform(0.4, 0.5) * kPi)};
  return ArticulatedObject("trashcan-lid", std::move(parts));
}

ArticulatedObject dishwasher(Rand& r) {
  const double h = 1.0, w = r.uniform(0.65, 0.8), d = r.uniform(0.6, 0.75), t = r.uniform(0.03, 0.04);
  TriMesh body = open_shell(d, w, h, t);
  const double top = r.uniform(0.82, 0.88) * h;
  add_box(body, {d - kPanel, t, top}, {d, w - t, h - t});
  add_box(body, {t, t, top - t}, {d - kPanel, w - t, top});
  const double rack = r.uniform(0.4, 0.5) * h;
  add_box(body, {t + 0.05, t, rack}, {d - kPanel - 0.08, w - t, rack + kSheet});
  std::vector<Part> parts{fixed_part("body", std::move(body)),
                          flap_door("door_0", d, t, w - t, t, top - t, false, r.uniform(0.4, 0.5) * kPi)};
  return ArticulatedObject("dishwasher", std::move(parts));
}

ArticulatedObject table_drawers(Rand& r) {
  const double w = 1.0, d = r.uniform(0.5, 0.7), h = r.uniform(0.6, 0.8), t = r.uniform(0.03, 0.04);
  const double slab = 0.04, leg = 0.05;
  TriMesh body;
  add_box(body, {0, 0, h - slab}, {d, w, h});
  for (double x : {0.0, d - leg})
    for (double y : {0.0, w - leg}) add_box(body, {x, y, 0}, {x + leg, y + leg, h - slab});
  const double hz = r.uniform(0.15, 0.2);
  const double z0 = h - slab - hz;
  const double y0 = leg, y1 = w - leg;
  add_box(body, {leg, y0, z0}, {leg + t, y1, h - slab});  // back
  add_box(body, {leg + t, y0, z0}, {d, y1, z0 + t});      // bottom
  add_box(body, {leg + t, y0, z0 + t}, {d, y0 + t, h - slab});
  add_box(body, {leg + t, y1 - t, z0 + t}, {d, y1, h - slab});
  const int n = r.integer(1, 2);
  const double inner = (y1 - y0 - 2 * t - (n - 1) * t) / n;
  std::vector<Part> parts;
  for (int k = 0; k < n; ++k) {
    const double yl = y0 + t + k * (inner + t);
    if (k > 0) add_box(body, {leg + t, yl - t, z0 + t}, {d, yl, h - slab});
    parts.push_back(drawer("drawer_" + std::to_string(k), d, leg + t, yl, yl + inner, z0 + t, h - slab));
  }
  parts.insert(parts.begin(), fixed_part("body", std::move(body)));
  return ArticulatedObject("table-drawers", std::move(parts));
}

using Maker = ArticulatedObject (*)(Rand&);
const std::map<std::string, Maker>& makers() {
  static const std::map<std::string, Maker> m{
      {"cabinet-drawer", cabinet_drawer}, {"cabinet-door", cabinet_door}, {"double-door", double_door},
      {"microwave", microwave},           {"trashcan-lid", trashcan_lid}, {"table-drawers", table_drawers},
      {"dishwasher", dishwasher},
  };
  return m;
}

std::uint64_t mix(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  // splitmix64 finalizer over the combined key
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (a + 1) + 0xBF58476D1CE4E5B9ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

const std::vector<std::string>& template_names() {
  static const std::vector<std::string> names{"cabinet-drawer", "cabinet-door", "double-door", "microwave",
                                              "trashcan-lid",   "table-drawers", "dishwasher"};
  return names;
}

ArticulatedObject make_template(const std::string& name, std::uint64_t seed) {
  const auto it = makers().find(name);
  if (it == makers().end()) throw Error(ErrorCode::UnknownTemplate, "unknown template '" + name + "'");
  Rand r(seed);
  return normalize(it->second(r));
}

std::vector<DatasetEntry> gen_dataset(const DatasetSpec& spec, std::uint64_t seed, const std::filesystem::path& dir) {
  const std::vector<std::string> names = spec.templates.empty() ? template_names() : spec.templates;
  for (const auto& n : names)
    if (!makers().count(n)) throw Error(ErrorCode::UnknownTemplate, "unknown template '" + n + "'");
  if (spec.count < 1) throw Error(ErrorCode::Range, "object count must be at least 1");
  std::vector<DatasetEntry> entries;
  nlohmann::ordered_json index = nlohmann::ordered_json::array();
  for (const auto& name : names) {
    const auto t = static_cast<std::uint64_t>(
        std::find(template_names().begin(), template_names().end(), name) - template_names().begin());
    for (int k = 0; k < spec.count; ++k) {
      const ArticulatedObject raw = make_template(name, mix(seed, t, static_cast<std::uint64_t>(k)));
      const std::string id = name + "_" + std::to_string(k);
      const ArticulatedObject obj(id, raw.parts());
      const std::string file = id + ".json";
      write_text(dir / file, object_to_json(obj) + "\n");
      entries.push_back({file, name});
      index.push_back({{"file", file}, {"category", name}});
    }
  }
  write_text(dir / "dataset.json", index.dump(2) + "\n");
  return entries;
}

std::vector<DatasetEntry> read_dataset_index(const std::filesystem::path& dir) {
  const auto path = dir / "dataset.json";
  std::vector<DatasetEntry> out;
  if (std::filesystem::exists(path)) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_text(path));
      for (const auto& e : j) out.push_back({e.at("file").get<std::string>(), e.at("category").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::Parse, "dataset index: " + std::string(e.what()));
    }
    return out;
  }
  if (!std::filesystem::is_directory(dir)) throw Error(ErrorCode::Io, "dataset directory not found: " + dir.string());
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.path().extension() != ".json") continue;
    const std::string stem = entry.path().stem().string();
    const auto cut = stem.rfind('_');
    out.push_back({entry.path().filename().string(), cut == std::string::npos ? stem : stem.substr(0, cut)});
  }
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.file < b.file; });
  return out;
}

ControllerConfig seeded(const ControllerConfig& cfg, std::uint64_t seed) {
  ControllerConfig out = cfg;
  out.scanner.seed = seed;
  out.score.seed = seed;
  return out;
}

std::string config_to_json(const ExperimentConfig& cfg) {
  const ControllerConfig& c = cfg.controller;
  nlohmann::ordered_json j;
  j["dataset"] = cfg.dataset.generic_string();
  j["output"] = cfg.output.generic_string();
  j["seed"] = cfg.seed;
  j["mu"] = c.score.mu;
  j["directions"] = c.score.directions;
  j["rotation_reading"] = c.score.reading == RotationReading::NormalDrives ? "normal" : "tangential";
  j["T_a"] = c.score_threshold;
  j["T_c"] = c.count_threshold;
  j["r"] = c.failure_radius;
  j["tau_s"] = c.seg.tau_static;
  j["tau_m"] = c.seg.tau_moving;
  j["nearest_hypothesis"] = c.seg.nearest_hypothesis;
  j["free_space"] = c.free_space;
  j["free_margin"] = c.seg.free_margin;
  j["T_r"] = c.fit.radius_threshold;
  j["fit_samples"] = c.fit.samples;
  j["fit_alpha"] = c.fit.bend_alpha;
  j["cd_converge"] = c.manip.converge_cd;
  j["suction_cone"] = c.manip.suction_cone;
  j["ticks_per_range"] = c.manip.ticks_per_range;
  j["arm_reach"] = c.manip.arm_reach;
  j["retry_budget"] = c.retry_budget;
  j["mask_radius"] = c.mask_radius;
  j["grid_res"] = c.grid_res;
  j["metric_samples"] = c.metric_samples;
  j["compute_emd"] = c.compute_emd;
  j["scanner"] = {{"width", c.scanner.width},     {"height", c.scanner.height},
                  {"fov_y", c.scanner.fov_y},     {"standoff", c.scanner.standoff},
                  {"side_angle", c.scanner.side_angle}, {"depth_noise", c.scanner.depth_noise},
                  {"budget", c.scanner.budget}};
  return j.dump(2);
}

ExperimentConfig config_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("config: ") + e.what());
  }
  ExperimentConfig cfg;
  ControllerConfig& c = cfg.controller;
  auto get = [&](const nlohmann::json& src, const char* key, auto& field) {
    if (!src.contains(key)) return;
    try {
      field = src.at(key).get<std::remove_reference_t<decltype(field)>>();
    } catch (const nlohmann::json::exception&) {
      throw Error(ErrorCode::Parse, std::string("config field '") + key + "' has the wrong type");
    }
  };
  std::string dataset, output, reading;
  get(j, "dataset", dataset);
  get(j, "output", output);
  if (!dataset.empty()) cfg.dataset = dataset;
  if (!output.empty()) cfg.output = output;
  get(j, "seed", cfg.seed);
  get(j, "mu", c.score.mu);
  get(j, "directions", c.score.directions);
  get(j, "rotation_reading", reading);
  if (reading == "tangential") c.score.reading = RotationReading::TangentialDrives;
  get(j, "T_a", c.score_threshold);
  get(j, "T_c", c.count_threshold);
  get(j, "r", c.failure_radius);
  get(j, "tau_s", c.seg.tau_static);
  get(j, "tau_m", c.seg.tau_moving);
  get(j, "nearest_hypothesis", c.seg.nearest_hypothesis);
  get(j, "free_space", c.free_space);
  get(j, "free_margin", c.seg.free_margin);
  get(j, "T_r", c.fit.radius_threshold);
  get(j, "fit_samples", c.fit.samples);
  get(j, "fit_alpha", c.fit.bend_alpha);
  get(j, "cd_converge", c.manip.converge_cd);
  get(j, "suction_cone", c.manip.suction_cone);
  get(j, "ticks_per_range", c.manip.ticks_per_range);
  get(j, "arm_reach", c.manip.arm_reach);
  get(j, "retry_budget", c.retry_budget);
  get(j, "mask_radius", c.mask_radius);
  get(j, "grid_res", c.grid_res);
  get(j, "metric_samples", c.metric_samples);
  get(j, "compute_emd", c.compute_emd);
  if (j.contains("scanner")) {
    const auto& s = j.at("scanner");
    get(s, "width", c.scanner.width);
    get(s, "height", c.scanner.height);
    get(s, "fov_y", c.scanner.fov_y);
    get(s, "standoff", c.scanner.standoff);
    get(s, "side_angle", c.scanner.side_angle);
    get(s, "depth_noise", c.scanner.depth_noise);
    get(s, "budget", c.scanner.budget);
  }
  validate(cfg);
  return cfg;
}

void validate(const ExperimentConfig& cfg) {
  const ControllerConfig& c = cfg.controller;
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw Error(ErrorCode::Range, std::string(name) + " must be positive");
  };
  positive(c.score_threshold, "T_a");
  positive(c.count_threshold, "T_c");
  positive(c.failure_radius, "r");
  positive(c.seg.tau_static, "tau_s");
  positive(c.seg.tau_moving, "tau_m");
  positive(c.fit.radius_threshold, "T_r");
  if (c.fit.samples < 0 || c.fit.samples == 1 || c.fit.samples == 2)
    throw Error(ErrorCode::Range, "fit_samples must be 0 or at least 3");
  if (!(c.fit.bend_alpha >= 0.0 && c.fit.bend_alpha < 1.0)) throw Error(ErrorCode::Range, "fit_alpha must lie in [0, 1)");
  positive(c.manip.converge_cd, "cd_converge");
  positive(c.manip.suction_cone, "suction_cone");
  positive(c.manip.ticks_per_range, "ticks_per_range");
  positive(c.score.directions, "directions");
  positive(c.retry_budget, "retry_budget");
  positive(static_cast<double>(c.metric_samples), "metric_samples");
  positive(static_cast<double>(c.scanner.budget), "scanner budget");
  if (c.score.mu < 0.0) throw Error(ErrorCode::Range, "mu must be non-negative");
  if (c.manip.arm_reach < 0.0) throw Error(ErrorCode::Range, "arm_reach must be non-negative");
  if (c.grid_res < 16 || c.grid_res > 256) throw Error(ErrorCode::Range, "grid_res must lie in [16, 256]");
}

BatchReport run_batch(const ExperimentConfig& cfg) {
  validate(cfg);
  const std::vector<DatasetEntry> entries = read_dataset_index(cfg.dataset);
  const ControllerConfig ctrl = seeded(cfg.controller, cfg.seed);
  const std::size_t n = entries.size();
  std::vector<std::optional<EpisodeResult>> results(n);
  std::vector<std::string> names(n);
  std::vector<std::exception_ptr> errors(n);

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        const ArticulatedObject obj = load_object(cfg.dataset / entries[i].file);
        names[i] = obj.name();
        EpisodeResult ep = run_episode(obj, ctrl);
        const auto dir = cfg.output / obj.name();
        write_text(dir / "episode.json", episode_to_json(ep, ctrl.record_timings) + "\n");
        write_text(dir / "metrics.json", metrics_to_json(ep.metrics) + "\n");
        write_result(dir / "result", ep.result);
        results[i] = std::move(ep);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t threads = std::min<std::size_t>(cfg.threads > 0 ? cfg.threads : hw, std::max<std::size_t>(n, 1));
  {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);

  BatchReport report;
  std::map<std::string, std::vector<EpisodeMetrics>> by_category;
  std::vector<std::string> order;
  nlohmann::ordered_json manifest;
  manifest["config"] = nlohmann::ordered_json::parse(config_to_json(cfg));
  // The manifest sits in the output directory; recording it would make
  // otherwise identical runs differ by location.
  manifest["config"].erase("output");
  manifest["objects"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < n; ++i) {
    const EpisodeResult& ep = *results[i];
    report.objects.push_back(names[i]);
    report.metrics.push_back(ep.metrics);
    report.incomplete.push_back(ep.incomplete);
    if (!by_category.count(entries[i].category)) order.push_back(entries[i].category);
    by_category[entries[i].category].push_back(ep.metrics);
    manifest["objects"].push_back({{"name", names[i]},
                                   {"category", entries[i].category},
                                   {"source", entries[i].file},
                                   {"episode", names[i] + "/episode.json"},
                                   {"metrics", names[i] + "/metrics.json"},
                                   {"result", names[i] + "/result/result.json"},
                                   {"attempts", ep.state.attempts.size()},
                                   {"moved_parts", ep.state.iteration},
                                   {"incomplete", ep.incomplete}});
  }
  std::string csv = std::string(kMetricsCsvHeader) + "\n";
  for (const auto& cat : order) csv += metrics_csv_row(cat, average(by_category[cat])) + "\n";
  csv += metrics_csv_row("average", average(report.metrics)) + "\n";
  report.csv = csv;
  manifest["metrics_csv"] = "metrics.csv";
  write_text(cfg.output / "metrics.csv", csv);
  write_text(cfg.output / "manifest.json", manifest.dump(2) + "\n");
  return report;
}

std::filesystem::path default_output_dir() {
  if (const char* env = std::getenv("ARTISCAN_OUT"); env && *env) return env;
  return "artiscan_out";
}

}  // namespace artiscan
