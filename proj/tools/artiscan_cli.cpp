// Command-line front end: dataset generation, scanning, single episodes,
// batches and mesh evaluation.
#include <CLI11.hpp>
#include <cstring>
#include <iostream>
#include <json.hpp>

#include "artiscan/controller.hpp"
#include "artiscan/error.hpp"
#include "artiscan/harness.hpp"
#include "artiscan/io.hpp"
#include "artiscan/metrics.hpp"
#include "artiscan/scanner.hpp"

using namespace artiscan;

namespace {

// Values from --config become the defaults that explicit flags override.
ExperimentConfig preload_config(int argc, char** argv) {
  for (int i = 1; i + 1 < argc; ++i)
    if (std::strcmp(argv[i], "--config") == 0) return config_from_json(read_text(argv[i + 1]));
  return {};
}

void add_experiment_flags(CLI::App* app, ExperimentConfig& cfg, std::string& config_path) {
  ControllerConfig& c = cfg.controller;
  app->add_option("--config", config_path, "JSON config file (flags override it)");
  app->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
  app->add_option("--mu", c.score.mu, "Friction coefficient")->capture_default_str();
  app->add_option("--directions", c.score.directions, "Sampled force directions K")->capture_default_str();
  app->add_option("--T-a", c.score_threshold, "Action score threshold")->capture_default_str();
  app->add_option("--T-c", c.count_threshold, "Minimum count of high-score points")->capture_default_str();
  app->add_option("--radius", c.failure_radius, "Failure exclusion radius r")->capture_default_str();
  app->add_option("--tau-s", c.seg.tau_static, "Static-match tolerance")->capture_default_str();
  app->add_option("--tau-m", c.seg.tau_moving, "Moving-match tolerance")->capture_default_str();
  app->add_option("--T-r", c.fit.radius_threshold, "Rotation/translation radius threshold")
      ->capture_default_str();
  app->add_option("--fit-samples", c.fit.samples, "Trajectory positions used for fitting (0 = all)")
      ->capture_default_str();
  app->add_option("--fit-alpha", c.fit.bend_alpha, "Circle-versus-line significance level (0 = radius only)")
      ->capture_default_str();
  app->add_option("--cd-converge", c.manip.converge_cd, "Inter-poll Chamfer stop threshold")
      ->capture_default_str();
  app->add_option("--arm-reach", c.manip.arm_reach, "Max gripper displacement (0 = off)")
      ->capture_default_str();
  app->add_option("--grid", c.grid_res, "SDF grid resolution")->capture_default_str();
  app->add_option("--depth-noise", c.scanner.depth_noise, "Range noise sigma")->capture_default_str();
  app->add_option("--budget", c.scanner.budget, "Points per mobile scan")->capture_default_str();
  app->add_flag("--nearest-hypothesis", c.seg.nearest_hypothesis, "Resolve ambiguous points by distance");
  app->add_flag("!--no-free-space", c.free_space, "Disable free-space reasoning in segmentation");
  app->add_flag("!--no-emd", c.compute_emd, "Skip the EMD metric");
  app->add_flag("--timings", c.record_timings, "Include wall-clock timings in episode logs");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active reconstruction of articulated objects in simulation"};
  app.require_subcommand(1);

  ExperimentConfig cfg;
  try {
    cfg = preload_config(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  std::string config_path;
  std::string out_dir = default_output_dir().string();

  // gen-dataset
  auto* gen = app.add_subcommand("gen-dataset", "Generate procedural articulated objects");
  std::vector<std::string> templates;
  int count = 5;
  std::uint64_t gen_seed = 0;
  gen->add_option("--templates", templates, "Template names (default: all)")->delimiter(',');
  gen->add_option("--count", count, "Objects per template")->capture_default_str();
  gen->add_option("--seed", gen_seed, "Random seed")->capture_default_str();
  gen->add_option("--out", out_dir, "Output directory")->capture_default_str();

  // scan
  auto* scan = app.add_subcommand("scan", "Mobile scan of one object to PLY");
  std::string object_path, scan_out = "scan.ply";
  std::vector<std::string> states;
  bool scan_labels = false;
  scan->add_option("--object", object_path, "Object JSON")->required();
  scan->add_option("--state", states, "Joint values as part=value");
  scan->add_option("--out", scan_out, "Output PLY")->capture_default_str();
  scan->add_option("--seed", cfg.controller.scanner.seed, "Noise seed");
  scan->add_option("--depth-noise", cfg.controller.scanner.depth_noise, "Range noise sigma");
  scan->add_option("--budget", cfg.controller.scanner.budget, "Point budget");
  scan->add_flag("--labels", scan_labels, "Attach ground-truth part labels");

  // episode
  auto* episode = app.add_subcommand("episode", "Run one active reconstruction episode");
  episode->add_option("--object", object_path, "Object JSON")->required();
  episode->add_option("--out", out_dir, "Output directory")->capture_default_str();
  add_experiment_flags(episode, cfg, config_path);

  // batch
  auto* batch = app.add_subcommand("batch", "Run episodes over a dataset and report metrics");
  std::string dataset;
  int threads = 0;
  batch->add_option("--dataset", dataset, "Dataset directory")->required();
  batch->add_option("--out", out_dir, "Output directory")->capture_default_str();
  batch->add_option("--threads", threads, "Worker threads (0 = all cores)")->capture_default_str();
  add_experiment_flags(batch, cfg, config_path);

  // eval
  auto* eval = app.add_subcommand("eval", "Compare a predicted mesh with a reference mesh");
  std::string pred_path, gt_path, map_path;
  std::size_t samples = 2048;
  std::uint64_t eval_seed = 0;
  eval->add_option("--pred", pred_path, "Predicted OBJ")->required();
  eval->add_option("--gt", gt_path, "Reference OBJ")->required();
  eval->add_option("--samples", samples, "Surface samples per mesh")->capture_default_str();
  eval->add_option("--seed", eval_seed, "Sampling seed")->capture_default_str();
  eval->add_option("--map", map_path, "Write per-vertex Hausdorff CSV here");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      DatasetSpec spec{templates, count};
      const auto entries = gen_dataset(spec, gen_seed, out_dir);
      std::cout << "wrote " << entries.size() << " objects to " << out_dir << "\n";
    } else if (*scan) {
      ArticulatedObject obj = load_object(object_path);
      for (const auto& s : states) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw Error(ErrorCode::Parse, "state must be part=value: " + s);
        obj = obj.with_state(s.substr(0, eq), std::stod(s.substr(eq + 1)));
      }
      MobileScan ms = mobile_scan(obj, cfg.controller.scanner);
      if (scan_labels) ms.cloud.labels = gt_labels(obj, ms.cloud);
      write_ply(scan_out, ms.cloud);
      std::cout << "wrote " << ms.cloud.size() << " points (" << ms.raw_points << " raw) to " << scan_out << "\n";
    } else if (*episode) {
      validate(cfg);
      const ArticulatedObject obj = load_object(object_path);
      const ControllerConfig ctrl = seeded(cfg.controller, cfg.seed);
      const EpisodeResult ep = run_episode(obj, ctrl);
      const std::filesystem::path dir = out_dir;
      write_text(dir / "episode.json", episode_to_json(ep, ctrl.record_timings) + "\n");
      write_text(dir / "metrics.json", metrics_to_json(ep.metrics) + "\n");
      write_text(dir / "map.csv", map_to_csv(ep.state.map));
      write_result(dir / "result", ep.result);
      std::cout << "episode " << obj.name() << ": " << ep.state.attempts.size() << " attempts, "
                << ep.state.iteration << " parts moved, stop: " << ep.stop_reason
                << (ep.incomplete ? " (incomplete)" : "") << "\n";
    } else if (*batch) {
      cfg.dataset = dataset;
      cfg.output = out_dir;
      cfg.threads = threads;
      const BatchReport report = run_batch(cfg);
      std::cout << report.csv;
    } else if (*eval) {
      const TriMesh pred = read_obj(pred_path), gt = read_obj(gt_path);
      const PointCloud sp = sample_surface(pred, samples, eval_seed);
      const PointCloud sg = sample_surface(gt, samples, eval_seed);
      const HausdorffResult h = hausdorff_map(pred, gt, samples, eval_seed);
      nlohmann::ordered_json j{{"chamfer", chamfer(sp, sg)},
                               {"emd", emd(sp, sg)},
                               {"hausdorff_max", h.max},
                               {"hausdorff_mean", h.mean}};
      if (!map_path.empty()) write_text(map_path, hausdorff_to_csv(gt, h));
      std::cout << j.dump(2) << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
