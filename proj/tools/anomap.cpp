// anomap command line: phantom generation, anomaly scoring, evaluation,
// and scale sweeps over MVOL volumes. Diagnostics go to stderr; data goes
// to files. Exit codes: 0 success, 1 invalid input or config, 2 I/O.

#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "anomap/anomap.hpp"

namespace {

using namespace anomap;

std::string g6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

RunConfig config_or_default(const std::string& path) {
  if (path.empty()) return RunConfig{};
  return load_run_config(path);
}

void write_text(const std::string& path, const std::string& text) {
  detail::write_file(path, std::vector<unsigned char>(text.begin(), text.end()));
}

void ensure_directory(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw io_error("cannot create directory " + dir + ": " + ec.message());
}

int cmd_phantom(const std::string& config_path, const std::string& out_dir) {
  const RunConfig rc = config_or_default(config_path);
  const PhantomSpec spec = rc.phantom_spec();
  ensure_directory(out_dir);
  const std::filesystem::path dir(out_dir);

  const auto emit = [&](const PhantomSpec& sub, const std::string& prefix) {
    HealthyPhantom healthy = generate_healthy(sub);
    UnhealthyPhantom unhealthy = inject_lesions(healthy.volume, sub);
    const Volume3D rec = pseudo_reconstruct(healthy.volume, sub);
    write_volume(healthy.volume, (dir / (prefix + "healthy.mvol")).string());
    write_volume(unhealthy.volume, (dir / (prefix + "unhealthy.mvol")).string());
    write_mask(unhealthy.ground_truth, (dir / (prefix + "gt.mvol")).string(),
               sub.spacing);
    write_mask(healthy.brain, (dir / (prefix + "brain.mvol")).string(),
               sub.spacing);
    write_volume(rec, (dir / (prefix + "rec.mvol")).string());
  };

  if (rc.num_volumes == 1) {
    emit(spec, "");
    std::fprintf(stderr, "wrote 5 files to %s\n", out_dir.c_str());
    return 0;
  }

  std::vector<ManifestEntry> entries;
  for (std::size_t v = 0; v < rc.num_volumes; ++v) {
    char prefix[32];
    std::snprintf(prefix, sizeof prefix, "vol%03zu_", v);
    emit(family_member(spec, v), prefix);
    ManifestEntry e;
    e.is_validation = v < rc.num_val;
    e.x = std::string(prefix) + "unhealthy.mvol";
    e.rec = std::string(prefix) + "rec.mvol";
    e.gt = std::string(prefix) + "gt.mvol";
    e.brain = std::string(prefix) + "brain.mvol";
    entries.push_back(std::move(e));
  }
  save_manifest((dir / "manifest.tsv").string(), entries);
  std::fprintf(stderr, "wrote %zu volumes and manifest.tsv to %s\n",
               rc.num_volumes, out_dir.c_str());
  return 0;
}

int cmd_score(const std::string& x_path, const std::string& rec_path,
              const std::string& brain_path, const std::string& method_text,
              const std::string& config_path, const std::string& out_path) {
  const RunConfig rc = config_or_default(config_path);
  const ScoreConfig cfg = rc.score_config();
  const ScoreMethod method = parse_method(method_text);

  const Volume3D x = read_volume(x_path);
  const Volume3D rec = read_volume(rec_path);
  const Mask3D brain = read_mask(brain_path);
  require_same_dims(x, rec, "score");
  require_same_dims(brain, x, "score");

  const AnomalyMap map = masked(
      compute_anomaly_map(x, rec, method, cfg.sigmas, cfg.constants,
                          cfg.weight_mode),
      brain);
  write_volume(map, out_path);
  write_text(out_path + ".meta", "method=" + method_text + "\n");
  return 0;
}

/// Shared by evaluate and sweep: load, score every method, pick thresholds
/// on the validation split, measure the test split.
EvalReport run_report(const std::string& manifest_path,
                      const std::string& config_path) {
  const RunConfig rc = config_or_default(config_path);
  const ScoreConfig cfg = rc.score_config();
  const std::vector<VolumeRecord> records = load_dataset(manifest_path);
  return sigma_sweep(records, cfg);
}

int cmd_evaluate(const std::string& manifest_path,
                 const std::string& config_path, const std::string& out_path) {
  const EvalReport report = run_report(manifest_path, config_path);
  std::string csv = "method,sigma,threshold,dataset_dice,volume_id,volume_dice\n";
  for (const MethodResult& m : report.methods) {
    const std::string sigma = std::isnan(m.sigma) ? "" : g6(m.sigma);
    for (const auto& [id, d] : m.per_volume_dice) {
      csv += m.method + "," + sigma + "," + g6(m.threshold) + "," +
             g6(m.dataset_dice) + "," + id + "," +
             (std::isnan(d) ? "" : g6(d)) + "\n";
    }
  }
  write_text(out_path, csv);
  return 0;
}

int cmd_sweep(const std::string& dataset_dir, const std::string& config_path,
              const std::string& out_path) {
  const std::string manifest =
      (std::filesystem::path(dataset_dir) / "manifest.tsv").string();
  const EvalReport report = run_report(manifest, config_path);
  std::string csv = "method,sigma,dataset_dice,threshold\n";
  for (const MethodResult& m : report.methods) {
    const std::string sigma = std::isnan(m.sigma) ? "" : g6(m.sigma);
    csv += m.method + "," + sigma + "," + g6(m.dataset_dice) + "," +
           g6(m.threshold) + "\n";
  }
  write_text(out_path, csv);
  return 0;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"anomap: volumetric anomaly scoring over MVOL volumes"};
  app.require_subcommand(1);

  std::string config_path;

  auto* phantom = app.add_subcommand(
      "phantom", "Generate a deterministic synthetic dataset");
  std::string phantom_out;
  phantom->add_option("--config", config_path, "run config file");
  phantom->add_option("--out", phantom_out, "output directory")->required();

  auto* score =
      app.add_subcommand("score", "Compute an anomaly map for one volume");
  std::string x_path, rec_path, brain_path, out_path;
  std::string method_text = "ssim-ens";
  score->add_option("--x", x_path, "input volume (MVOL)")->required();
  score->add_option("--rec", rec_path, "reconstruction volume (MVOL)")->required();
  score->add_option("--brain", brain_path, "brain mask (MVOL)")->required();
  score->add_option("--method", method_text, "l1 | ssim:<sigma> | ssim-ens");
  score->add_option("--config", config_path, "run config file");
  score->add_option("--out", out_path, "output anomaly map (MVOL)")->required();

  auto* evaluate = app.add_subcommand(
      "evaluate", "Threshold on the validation split, report test Dice");
  std::string manifest_path;
  evaluate->add_option("--manifest", manifest_path, "dataset manifest (TSV)")
      ->required();
  evaluate->add_option("--config", config_path, "run config file");
  evaluate->add_option("--out", out_path, "output CSV")->required();

  auto* sweep = app.add_subcommand(
      "sweep", "Dice across the sigma set plus ensemble and l1 rows");
  std::string dataset_dir;
  sweep->add_option("--dataset", dataset_dir, "directory with manifest.tsv")
      ->required();
  sweep->add_option("--config", config_path, "run config file");
  sweep->add_option("--out", out_path, "output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (phantom->parsed()) return cmd_phantom(config_path, phantom_out);
    if (score->parsed())
      return cmd_score(x_path, rec_path, brain_path, method_text, config_path,
                       out_path);
    if (evaluate->parsed())
      return cmd_evaluate(manifest_path, config_path, out_path);
    if (sweep->parsed()) return cmd_sweep(dataset_dir, config_path, out_path);
  } catch (const anomap::io_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
