// eegf0: command-line front end for the EEG -> F0 decoding pipeline.
//
// Exit codes: 0 success, 1 usage error, 2 data/model error.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "eegf0/eegf0.hpp"

namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;

  std::string data;
  std::string model;
  std::string activations;
  std::string f0;
  std::optional<std::size_t> n_samples;
  std::optional<double> snr_db;
  std::optional<std::size_t> steps;
  double theta0_deg = 0.0;
  double omega0_degps = 0.0;
};

struct Context {
  eegf0::PipelineConfig cfg;
  fs::path out_dir;
  fs::path model_path;
};

Context make_context(const Options& opt) {
  Context ctx;
  if (!opt.config.empty()) ctx.cfg = eegf0::load_pipeline_config(opt.config);
  if (opt.seed) ctx.cfg.set_seed(*opt.seed);
  ctx.out_dir = opt.out.empty() ? fs::path(ctx.cfg.paths.out_dir) : fs::path(opt.out);
  ctx.model_path = opt.model.empty() ? ctx.out_dir / ctx.cfg.paths.model : fs::path(opt.model);
  fs::create_directories(ctx.out_dir);
  return ctx;
}

std::string data_path(const Options& opt, const Context& ctx, const char* fallback) {
  return opt.data.empty() ? (ctx.out_dir / fallback).string() : opt.data;
}

int cmd_gen_data(const Options& opt) {
  auto ctx = make_context(opt);
  auto& data = ctx.cfg.data;
  if (opt.n_samples) data.synth.n_samples = *opt.n_samples;
  if (opt.snr_db) data.synth.snr_db = *opt.snr_db;
  if (opt.steps) data.movement_steps = *opt.steps;

  const auto ds = eegf0::generate_dataset(data.synth);
  const auto dataset_csv = (ctx.out_dir / "dataset.csv").string();
  eegf0::write_recording_csv(eegf0::dataset_to_recording(ds, ctx.cfg.arm), dataset_csv);

  const auto movement = eegf0::generate_movement(data.synth, data.movement_steps, ctx.cfg.arm);
  const auto movement_csv = (ctx.out_dir / "movement.csv").string();
  eegf0::write_recording_csv(movement.recording, movement_csv);

  std::cout << "wrote " << dataset_csv << " (" << ds.size() << " frames) and " << movement_csv
            << " (" << data.movement_steps << " steps)\n";
  return 0;
}

struct SplitData {
  eegf0::EegRecording rec;
  eegf0::LabeledDataset train;
  eegf0::LabeledDataset test;
};

SplitData load_split(const Options& opt, const Context& ctx) {
  auto rec = eegf0::load_recording_csv(data_path(opt, ctx, "dataset.csv"));
  const auto ds = eegf0::dataset_from_recording(rec, ctx.cfg.arm);
  auto [train, test] = eegf0::split_dataset(ds, ctx.cfg.split.train_fraction, ctx.cfg.split.seed);
  return {std::move(rec), std::move(train), std::move(test)};
}

int cmd_train(const Options& opt) {
  const auto ctx = make_context(opt);
  const auto [rec, train_set, test_set] = load_split(opt, ctx);
  const auto model = eegf0::train(train_set, ctx.cfg.forest);
  eegf0::save_model(model, ctx.model_path.string());
  std::cout << "trained " << model.trees().size() << " trees on " << train_set.size()
            << " frames (" << test_set.size() << " held out); model: " << ctx.model_path.string()
            << "\n";
  return 0;
}

// Per-frame evaluation on the held-out split. Frames are independent, so the
// angle stage uses the static equilibrium angle of the predicted class.
int cmd_eval(const Options& opt) {
  const auto ctx = make_context(opt);
  const auto [rec, train_set, test_set] = load_split(opt, ctx);
  if (test_set.empty()) throw eegf0::DataError("test split is empty");
  const auto model = eegf0::load_model(ctx.model_path.string());

  const auto pred = eegf0::predict_trajectory(model, test_set.frames);
  eegf0::AngleTrajectory pred_angles, true_angles;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    pred_angles.angles_deg.push_back(eegf0::equilibrium_angle(ctx.cfg.arm, pred[i].level()));
    true_angles.angles_deg.push_back((*rec.kinematics())[test_set.frames[i].index()]);
  }
  const auto metrics = eegf0::stage_metrics(
      ctx.cfg.arm, pred, test_set.labels, pred_angles, true_angles,
      eegf0::map_trajectory(ctx.cfg.mapping, pred_angles),
      eegf0::map_trajectory(ctx.cfg.mapping, true_angles));
  const auto path = (ctx.out_dir / "metrics.json").string();
  const auto json = eegf0::metrics_to_json(metrics);
  eegf0::csv::write_file(path, json);
  std::cout << json;
  return 0;
}

int cmd_simulate(const Options& opt) {
  const auto ctx = make_context(opt);
  const auto act = eegf0::read_activation_csv(opt.activations);
  const auto angles =
      eegf0::forward_dynamics(ctx.cfg.arm, act, opt.theta0_deg, opt.omega0_degps, ctx.cfg.sub_dt_s);
  const auto path = (ctx.out_dir / "angles.csv").string();
  eegf0::write_trajectory_csv(act, angles, path);
  std::cout << "wrote " << path << " (" << angles.size() << " steps)\n";
  return 0;
}

int cmd_decode(const Options& opt) {
  const auto ctx = make_context(opt);
  const auto rec = eegf0::load_recording_csv(data_path(opt, ctx, "movement.csv"));
  const auto model = eegf0::load_model(ctx.model_path.string());
  const auto classes = eegf0::predict_trajectory(model, eegf0::window_frames(rec));
  const auto act = eegf0::ActivationTrajectory::from_classes(classes);
  const double theta0 = std::max(0.0, ctx.cfg.arm.angle_min_deg);
  const auto angles = eegf0::forward_dynamics(ctx.cfg.arm, act, theta0, 0.0, ctx.cfg.sub_dt_s);
  eegf0::write_trajectory_csv(act, angles, (ctx.out_dir / "angles.csv").string());
  eegf0::write_f0_csv(eegf0::map_trajectory(ctx.cfg.mapping, angles),
                      (ctx.out_dir / "f0.csv").string());
  std::cout << "decoded " << classes.size() << " frames into " << ctx.out_dir.string() << "\n";
  return 0;
}

int cmd_synth(const Options& opt) {
  const auto ctx = make_context(opt);
  const auto f0 = eegf0::read_f0_csv(opt.f0);
  const auto audio = eegf0::synthesize(f0, ctx.cfg.synth.sample_rate_hz, ctx.cfg.synth.amplitude);
  const auto path = (ctx.out_dir / "out.wav").string();
  eegf0::write_wav(audio, path);
  std::cout << "wrote " << path << " (" << audio.samples.size() << " samples)\n";
  return 0;
}

int cmd_pipeline(const Options& opt) {
  const auto ctx = make_context(opt);
  const auto rec = eegf0::load_recording_csv(data_path(opt, ctx, "movement.csv"));
  const auto model = eegf0::load_model(ctx.model_path.string());
  const auto result = eegf0::run_pipeline(ctx.cfg, rec, model);
  eegf0::write_pipeline_outputs(result, ctx.out_dir.string());
  if (!result.metrics.has_metrics()) {
    std::cerr << "warning: recording has no kinematics; metrics are absent\n";
  }
  std::cout << eegf0::metrics_to_json(result.metrics);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EEG to fundamental-frequency decoding pipeline"};
  app.require_subcommand(1);
  app.fallthrough();

  Options opt;
  app.add_option("--config", opt.config, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--seed", opt.seed, "Override every seed in the config");
  app.add_option("--out", opt.out, "Output directory");

  auto* gen = app.add_subcommand("gen-data", "Write synthetic dataset.csv and movement.csv");
  gen->add_option("--n-samples", opt.n_samples, "Labeled frames in dataset.csv");
  gen->add_option("--snr-db", opt.snr_db, "Signal-to-noise ratio in dB");
  gen->add_option("--steps", opt.steps, "Control steps in movement.csv");

  auto* train = app.add_subcommand("train", "Train the forest on the training split");
  train->add_option("--data", opt.data, "Recording CSV with angle_deg (default <out>/dataset.csv)");
  train->add_option("--model", opt.model, "Model file (default <out>/model.nf0f)");

  auto* eval = app.add_subcommand("eval", "Evaluate on the held-out split; writes metrics.json");
  eval->add_option("--data", opt.data, "Recording CSV with angle_deg (default <out>/dataset.csv)");
  eval->add_option("--model", opt.model, "Model file (default <out>/model.nf0f)");

  auto* simulate = app.add_subcommand("simulate", "Forward-simulate an activation CSV");
  simulate->add_option("--activations", opt.activations, "CSV with an activation column")
      ->required();
  simulate->add_option("--theta0", opt.theta0_deg, "Initial angle (deg)");
  simulate->add_option("--omega0", opt.omega0_degps, "Initial angular velocity (deg/s)");

  auto* decode = app.add_subcommand("decode", "Decode a recording to angles.csv and f0.csv");
  decode->add_option("--data", opt.data, "Recording CSV (default <out>/movement.csv)");
  decode->add_option("--model", opt.model, "Model file (default <out>/model.nf0f)");

  auto* synth = app.add_subcommand("synth", "Render an F0 CSV (t_s,f0_hz) to out.wav");
  synth->add_option("--f0", opt.f0, "F0 CSV")->required();

  auto* pipeline = app.add_subcommand("pipeline", "Full decode with metrics and audio");
  pipeline->add_option("--data", opt.data, "Recording CSV (default <out>/movement.csv)");
  pipeline->add_option("--model", opt.model, "Model file (default <out>/model.nf0f)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (*gen) return cmd_gen_data(opt);
    if (*train) return cmd_train(opt);
    if (*eval) return cmd_eval(opt);
    if (*simulate) return cmd_simulate(opt);
    if (*decode) return cmd_decode(opt);
    if (*synth) return cmd_synth(opt);
    if (*pipeline) return cmd_pipeline(opt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
