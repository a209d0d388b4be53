// ddrecon: synthesize data, train, reconstruct and evaluate the dual-domain
// cascade from the command line.

#include "ddrecon/error.hpp"
#include "ddrecon/pipeline.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <optional>

namespace {

struct GlobalOptions {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
};

ddrecon::ExperimentConfig load_config(const GlobalOptions& g) {
  ddrecon::ExperimentConfig config =
      g.config_path.empty() ? ddrecon::ExperimentConfig{} : ddrecon::ExperimentConfig::load(g.config_path);
  if (g.seed) {
    config.dataset.seed = *g.seed;
    config.train.seed = *g.seed;
  }
  if (!g.out_dir.empty()) {
    config.output_dir = g.out_dir;
  }
  config.finalize();
  return config;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw ddrecon::Error(ddrecon::ErrorCode::io, "cannot write " + path.string());
  }
  out << text;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual-domain cross-iteration SE cascade for undersampled multi-coil MRI"};
  app.require_subcommand(1);

  GlobalOptions global;
  app.add_option("--config", global.config_path, "Experiment config (key=value lines)")->check(CLI::ExistingFile);
  app.add_option("--seed", global.seed, "Overrides dataset.seed and train.seed");
  app.add_option("--out", global.out_dir, "Overrides paths.output_dir");

  auto* simulate = app.add_subcommand("simulate", "Write a synthetic multi-coil dataset and split manifest");

  auto* train = app.add_subcommand("train", "Train the cascade; writes checkpoints and history");
  bool resume = false;
  train->add_flag("--resume", resume, "Continue from checkpoints/latest.ddrk");

  auto* reconstruct = app.add_subcommand("reconstruct", "Export reconstructions as 16-bit PGM");
  std::string recon_checkpoint;
  std::vector<std::string> slice_ids;
  std::string recon_dir;
  reconstruct->add_option("--checkpoint", recon_checkpoint, "Checkpoint (default: checkpoints/best.ddrk)");
  reconstruct->add_option("--slice", slice_ids, "Slice ids (default: the test split)");
  reconstruct->add_option("--images", recon_dir, "Output directory (default: <out>/images)");

  auto* evaluate = app.add_subcommand("evaluate", "Image and k-space quality reports");
  std::string eval_checkpoint;
  std::string split_name = "test";
  evaluate->add_option("--checkpoint", eval_checkpoint, "Checkpoint (default: checkpoints/best.ddrk)");
  evaluate->add_option("--split", split_name, "train, val or test")->check(CLI::IsMember({"train", "val", "test"}));

  auto* show_config = app.add_subcommand("config", "Print the effective configuration");

  CLI11_PARSE(app, argc, argv);

  try {
    auto config = load_config(global);
    const auto default_checkpoint = config.resolved_checkpoint_dir() / ddrecon::best_checkpoint_name;

    if (*simulate) {
      std::filesystem::create_directories(config.output_dir);
      const auto result = ddrecon::cmd_simulate(config);
      std::cout << "wrote " << result.slices << " slices to " << result.dataset.string() << "\n"
                << "split manifest " << result.manifest.string() << "\n";
    } else if (*train) {
      config.train.resume = resume;
      std::filesystem::create_directories(config.output_dir);
      write_text(config.output_dir / "config.txt", config.to_text());
      const auto result = ddrecon::cmd_train(config, [](const ddrecon::EpochRecord& r) {
        std::cout << ddrecon::format_history_line(r) << std::endl;
      });
      std::cout << "best epoch " << result.best_epoch << " val NMSE% " << result.best_val_nmse << "\n";
    } else if (*reconstruct) {
      if (slice_ids.empty()) {
        slice_ids = ddrecon::read_split_manifest(config.split_manifest_path()).test;
      }
      const auto dir = recon_dir.empty() ? config.output_dir / "images" : std::filesystem::path(recon_dir);
      const auto written = ddrecon::cmd_reconstruct(
          config, recon_checkpoint.empty() ? default_checkpoint : std::filesystem::path(recon_checkpoint), slice_ids,
          dir);
      std::cout << "wrote " << written.size() << " images to " << dir.string() << "\n";
    } else if (*evaluate) {
      const auto reports = ddrecon::cmd_evaluate(
          config, eval_checkpoint.empty() ? default_checkpoint : std::filesystem::path(eval_checkpoint), split_name);
      std::filesystem::create_directories(config.output_dir);
      write_text(config.output_dir / "report_image.tsv", reports.image_text);
      write_text(config.output_dir / "report_kspace.tsv", reports.kspace_text);
      std::cout << reports.kspace_text << "\n" << reports.image_text;
    } else if (*show_config) {
      std::cout << config.to_text();
    }
  } catch (const ddrecon::Error& e) {
    std::cerr << e.one_line() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
