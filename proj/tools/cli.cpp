#include "cli.hpp"

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "motionseq/baselines.hpp"
#include "motionseq/dataio.hpp"
#include "motionseq/errors.hpp"
#include "motionseq/evalharness.hpp"
#include "motionseq/seq2seq.hpp"
#include "motionseq/synthetic.hpp"

namespace motionseq::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Flag combinations CLI11 cannot reject on its own.
class UsageError : public Error {
 public:
  using Error::Error;
};

constexpr const char* kDataRootEnv = "MOTIONSEQ_DATA_ROOT";
const std::vector<std::string> kDefaultEvalActions = {"walking", "eating", "smoking", "discussion"};

struct DataFlags {
  std::string data_root;
  int downsample = kDefaultDownsample;
  int test_subject = 5;
};

struct RunFlags {
  std::string out_dir = "runs";
  std::string name;
  std::uint64_t seed = 1;
};

struct TrainFlags {
  std::string action;
  std::vector<std::string> actions;
  bool supervised = false;
  bool residual = true;
  bool sampling = true;
  bool tied = true;
  bool truncate_feedback = false;
  double lr = 0.0;
  int batch = 16;
  int iterations = 10000;
  int seq_in = 50;
  int seq_out = 10;
  double max_grad_norm = 5.0;
  int hidden = 1024;
  int log_every = 100;
};

struct EvalFlags {
  std::string checkpoint;
  std::vector<std::string> baselines;
  std::vector<std::string> actions;
  std::string metric_space = "euler";
  std::vector<int> horizons = kShortTermHorizonsMs;
  int clips = 8;
  int seq_in = 50;
  int seq_out = 0;
  std::string average_mode = "constant";
};

struct PredictFlags {
  std::string checkpoint;
  std::string input;
  std::string output;
  std::string action;
  long offset = -1;
  int seq_out = 0;
};

struct SynthFlags {
  std::vector<std::string> actions = {"walking"};
  int frames = 800;
  int trials = 2;
};

void add_data_flags(CLI::App* cmd, DataFlags& f) {
  cmd->add_option("--data-root", f.data_root, "Dataset root containing S<subject>/ directories")
      ->envname(kDataRootEnv);
  cmd->add_option("--downsample", f.downsample, "Keep every n-th raw frame")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  cmd->add_option("--test-subject", f.test_subject, "Subject held out for testing")
      ->capture_default_str();
}

void add_run_flags(CLI::App* cmd, RunFlags& f) {
  cmd->add_option("--out-dir", f.out_dir, "Directory receiving run directories")->capture_default_str();
  cmd->add_option("--name", f.name, "Run directory name (default: <command>-<config hash>-s<seed>)");
  cmd->add_option("--seed", f.seed, "Seed for every random choice")->capture_default_str();
}

std::vector<std::string> resolve_actions(const std::string& single, const std::vector<std::string>& list,
                                         const std::vector<std::string>& fallback) {
  std::vector<std::string> out;
  if (!single.empty()) out.push_back(single);
  out.insert(out.end(), list.begin(), list.end());
  if (out.empty()) out = fallback;
  if (std::find(out.begin(), out.end(), "all") != out.end()) {
    if (out.size() != 1) throw UsageError("'all' cannot be combined with other actions");
    return {kActions.begin(), kActions.end()};
  }
  for (const std::string& a : out) {
    try {
      action_index(a);
    } catch (const InvalidInput& e) {
      throw UsageError(e.what());
    }
  }
  return out;
}

fs::path require_data_root(const DataFlags& f) {
  if (f.data_root.empty()) {
    throw UsageError(std::string("--data-root is required (or set ") + kDataRootEnv + ")");
  }
  return f.data_root;
}

DatasetSplit load_data(const DataFlags& f, const std::vector<std::string>& actions) {
  SplitOptions opts;
  opts.downsample_factor = f.downsample;
  opts.test_subject = f.test_subject;
  return load_split(require_data_root(f), actions, opts);
}

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

// FNV-1a; stable across platforms.
std::uint64_t fnv1a(std::string_view text) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

fs::path make_run_dir(const std::string& command, const RunFlags& run, const json& config) {
  std::string name = run.name;
  if (name.empty()) {
    name = command + "-" + hex64(fnv1a(config.dump())).substr(0, 8) + "-s" + std::to_string(run.seed);
  }
  const fs::path dir = fs::path(run.out_dir) / name;
  fs::create_directories(dir);
  std::ofstream(dir / "config.json") << config.dump(2) << '\n';
  return dir;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

int cmd_train(const DataFlags& data, const RunFlags& run, const TrainFlags& f, std::ostream& out) {
  const auto actions = resolve_actions(f.action, f.actions, {});
  if (actions.empty()) throw UsageError("train needs --action or --actions");

  ModelConfig config;
  config.hidden = f.hidden;
  config.num_actions = f.supervised ? kNumActions : 0;
  config.residual = f.residual;
  config.tied = f.tied;
  config.sample_feedback = f.sampling;
  config.truncate_feedback_gradient = f.truncate_feedback;
  config.seq_in = f.seq_in;
  config.seq_out = f.seq_out;
  config.lr = f.lr > 0.0 ? f.lr : (actions.size() > 1 ? 0.005 : 0.05);
  config.batch = f.batch;
  config.max_grad_norm = f.max_grad_norm;
  config.iterations = f.iterations;
  config.seed = run.seed;

  const DatasetSplit split = load_data(data, actions);
  const NormalizationStats stats = compute_normalization(split.train);
  config.joint_width = static_cast<int>(stats.used_count());
  config.validate();

  json resolved{{"command", "train"},
                {"data_root", data.data_root},
                {"downsample", data.downsample},
                {"test_subject", data.test_subject},
                {"actions", actions},
                {"model", json::parse(config.to_json())}};
  const fs::path dir = make_run_dir("train", run, resolved);

  std::ofstream loss_file(dir / "loss.csv");
  loss_file << "iteration,loss\n" << std::setprecision(17);
  const TrainedModel model = train(config, split, stats, [&](int it, double loss) {
    loss_file << it << ',' << loss << '\n';
    if (f.log_every > 0 && (it % f.log_every == 0 || it + 1 == config.iterations)) {
      out << "iteration " << it << " loss " << loss << '\n';
    }
  });
  save_model(dir / "model.ckpt", model);
  out << "checkpoint: " << (dir / "model.ckpt").string() << '\n';
  return kExitOk;
}

Predictor baseline_predictor(const std::string& name, const NormalizationStats& stats,
                             baselines::AverageMode mode) {
  int k = 0;
  if (name == "zero-velocity") {
    k = 1;
  } else if (name == "running-avg-2") {
    k = 2;
  } else if (name == "running-avg-4") {
    k = 4;
  } else {
    throw UsageError("unknown baseline '" + name +
                     "' (expected zero-velocity, running-avg-2 or running-avg-4)");
  }
  return [k, mode, &stats](const PredictionTask& task) {
    const Tensor2 seed = denormalize(task.seed.leftCols(task.joint_width()), stats);
    return baselines::running_average(seed, k, static_cast<int>(task.target.rows()), mode);
  };
}

int cmd_eval(const std::string& command, const DataFlags& data, const RunFlags& run, EvalFlags f,
             std::ostream& out) {
  if (command == "baseline" && f.baselines.empty()) {
    f.baselines = {"zero-velocity", "running-avg-2", "running-avg-4"};
  }
  if (f.checkpoint.empty() && f.baselines.empty()) {
    throw UsageError("eval needs --checkpoint and/or --baseline");
  }
  const auto actions = resolve_actions("", f.actions, kDefaultEvalActions);

  MetricSpace space;
  try {
    space = parse_metric_space(f.metric_space);
  } catch (const InvalidInput& e) {
    throw UsageError(e.what());
  }
  baselines::AverageMode mode;
  if (f.average_mode == "constant") {
    mode = baselines::AverageMode::kConstant;
  } else if (f.average_mode == "autoregressive") {
    mode = baselines::AverageMode::kAutoregressive;
  } else {
    throw UsageError("--average-mode must be constant or autoregressive");
  }

  std::optional<TrainedModel> model;
  if (!f.checkpoint.empty()) {
    if (!fs::exists(f.checkpoint)) throw Error("checkpoint " + f.checkpoint + " not found");
    model = load_model(f.checkpoint);
  }

  const DatasetSplit split = load_data(data, actions);
  const double interval = split.test.empty() ? split.train.front().frame_interval
                                             : split.test.front().frame_interval;
  int max_frame = 1;
  for (const int ms : f.horizons) max_frame = std::max(max_frame, horizon_frame(ms, interval));

  TaskOptions opts;
  opts.seq_in = model ? model->config.seq_in : f.seq_in;
  opts.seq_out = std::max(f.seq_out, max_frame);
  opts.clips_per_action = f.clips;
  opts.one_hot = model && model->config.supervised();
  const NormalizationStats stats = model ? model->stats : compute_normalization(split.train);

  json resolved{{"command", command},
                {"data_root", data.data_root},
                {"downsample", data.downsample},
                {"test_subject", data.test_subject},
                {"actions", actions},
                {"checkpoint", f.checkpoint},
                {"baselines", f.baselines},
                {"average_mode", f.average_mode},
                {"metric_space", std::string(to_string(space))},
                {"horizons_ms", f.horizons},
                {"clips_per_action", f.clips},
                {"seq_in", opts.seq_in},
                {"seq_out", opts.seq_out},
                {"seed", run.seed}};

  const TestClips clips = select_test_clips(run.seed, split, stats, actions, opts);
  EvalOptions eopts;
  eopts.horizons_ms = f.horizons;
  eopts.frame_interval = interval;
  eopts.space = space;

  EvalReport report;
  report.space = space;
  report.clip_seed = run.seed;
  if (model) {
    const std::string method = fs::path(f.checkpoint).stem().string();
    report.merge(evaluate(method, [&](const PredictionTask& t) {
      return predict(*model, t, static_cast<int>(t.target.rows()));
    }, clips, stats, eopts));
  }
  for (const std::string& b : f.baselines) {
    report.merge(evaluate(b, baseline_predictor(b, stats, mode), clips, stats, eopts));
  }

  const fs::path dir = make_run_dir(command, run, resolved);
  write_text(dir / "report.csv", render_csv(report));
  const std::string md = render_markdown(report);
  write_text(dir / "report.md", md);
  out << md << "report: " << (dir / "report.csv").string() << '\n';
  return kExitOk;
}

int cmd_predict(const DataFlags& data, const RunFlags& run, const PredictFlags& f, std::ostream& out) {
  if (!fs::exists(f.checkpoint)) throw Error("checkpoint " + f.checkpoint + " not found");
  const TrainedModel model = load_model(f.checkpoint);

  std::string action = f.action;
  if (action.empty()) {
    // H3.6M file names are <action>_<trial>.txt.
    const std::string stem = fs::path(f.input).stem().string();
    const std::string guess = stem.substr(0, stem.find('_'));
    if (std::find(kActions.begin(), kActions.end(), guess) != kActions.end()) action = guess;
  }
  if (model.config.supervised() && action.empty()) {
    throw UsageError("supervised model needs --action");
  }

  PoseSequence seq = downsample(load_sequence_file(f.input, {action, 0, 0}), data.downsample);
  const int seq_in = model.config.seq_in;
  if (seq.length() < seq_in) {
    throw ConfigError("input has " + std::to_string(seq.length()) + " frames after downsampling, need " +
                      std::to_string(seq_in));
  }
  const Eigen::Index offset = f.offset >= 0 ? f.offset : seq.length() - seq_in;
  if (offset + seq_in > seq.length()) throw UsageError("--offset leaves fewer than seq-in frames");
  PredictionTask task = make_task(seq, offset, model.stats, seq_in, 0, false);
  if (model.config.supervised()) task = append_action_onehot(std::move(task), action_index(action));

  const int steps = f.seq_out > 0 ? f.seq_out : model.config.seq_out;
  const Tensor2 frames = predict(model, task, steps);

  fs::path target = f.output;
  if (target.empty()) {
    json resolved{{"command", "predict"}, {"checkpoint", f.checkpoint}, {"input", f.input},
                  {"offset", offset}, {"seq_out", steps}, {"downsample", data.downsample}};
    target = make_run_dir("predict", run, resolved) / "prediction.txt";
  } else if (target.has_parent_path()) {
    fs::create_directories(target.parent_path());
  }
  write_sequence_file(target, frames);
  out << "prediction: " << target.string() << " (" << frames.rows() << " frames)\n";
  return kExitOk;
}

int cmd_synth(const RunFlags& run, const SynthFlags& f, std::ostream& out) {
  synthetic::SinusoidOptions opts;
  opts.actions = resolve_actions("", f.actions, {"walking"});
  opts.frames = f.frames;
  opts.trials = f.trials;
  opts.frame_interval = kRawFrameInterval;
  opts.seed = run.seed;
  const DatasetSplit split = synthetic::make_sinusoid_split(opts);
  synthetic::write_dataset(run.out_dir, split);
  out << "wrote " << split.train.size() + split.test.size() << " sequences under " << run.out_dir << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Residual sequence-to-sequence GRU for short-term human motion prediction"};
  app.name(args.empty() ? "motionseq" : fs::path(args.front()).filename().string());
  app.require_subcommand(1);

  DataFlags data;
  RunFlags run_flags;
  TrainFlags train_flags;
  EvalFlags eval_flags;
  PredictFlags predict_flags;
  SynthFlags synth_flags;

  auto* train_cmd = app.add_subcommand("train", "Train a model and write a checkpoint");
  add_data_flags(train_cmd, data);
  add_run_flags(train_cmd, run_flags);
  train_cmd->add_option("--action", train_flags.action, "Single action, or 'all'");
  train_cmd->add_option("--actions", train_flags.actions, "Comma-separated actions")->delimiter(',');
  train_cmd->add_flag("--supervised", train_flags.supervised, "Append a 15-way action one-hot to inputs");
  train_cmd->add_flag("--residual,!--no-residual", train_flags.residual, "Residual decoder (default on)");
  train_cmd->add_flag("--sampling-loss,!--teacher-forcing", train_flags.sampling,
                      "Feed predictions back during training (default on)");
  train_cmd->add_flag("--tied,!--untied", train_flags.tied, "Share encoder and decoder weights (default on)");
  train_cmd->add_flag("--truncate-feedback-grad", train_flags.truncate_feedback,
                      "Stop gradients through fed-back predictions");
  train_cmd->add_option("--lr", train_flags.lr, "Learning rate (default 0.05 single action, 0.005 multi-action)")
      ->check(CLI::PositiveNumber);
  train_cmd->add_option("--batch", train_flags.batch)->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--iterations", train_flags.iterations)->check(CLI::NonNegativeNumber)->capture_default_str();
  train_cmd->add_option("--seq-in", train_flags.seq_in)->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--seq-out", train_flags.seq_out)->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--max-grad-norm", train_flags.max_grad_norm)->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--hidden", train_flags.hidden, "GRU units")->check(CLI::PositiveNumber)->capture_default_str();
  train_cmd->add_option("--log-every", train_flags.log_every)->capture_default_str();

  auto add_eval_flags = [&](CLI::App* cmd) {
    add_data_flags(cmd, data);
    add_run_flags(cmd, run_flags);
    cmd->add_option("--actions,--action", eval_flags.actions, "Comma-separated actions, or 'all'")->delimiter(',');
    cmd->add_option("--metric-space", eval_flags.metric_space, "euler or expmap")->capture_default_str();
    cmd->add_option("--horizons", eval_flags.horizons, "Horizons in ms")->delimiter(',');
    cmd->add_option("--clips", eval_flags.clips, "Test clips per action")->check(CLI::PositiveNumber)->capture_default_str();
    cmd->add_option("--seq-in", eval_flags.seq_in, "Conditioning frames (baselines only)")->check(CLI::PositiveNumber);
    cmd->add_option("--seq-out", eval_flags.seq_out, "Predicted frames (at least the longest horizon)");
    cmd->add_option("--average-mode", eval_flags.average_mode, "constant or autoregressive")->capture_default_str();
  };
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint and/or baselines on seeded test clips");
  add_eval_flags(eval_cmd);
  eval_cmd->add_option("--checkpoint", eval_flags.checkpoint, "Model checkpoint");
  eval_cmd->add_option("--baseline", eval_flags.baselines,
                       "zero-velocity, running-avg-2, running-avg-4 (comma-separated)")->delimiter(',');
  auto* baseline_cmd = app.add_subcommand("baseline", "Evaluate the three non-learned baselines");
  add_eval_flags(baseline_cmd);
  baseline_cmd->add_option("--baseline", eval_flags.baselines, "Subset of baselines")->delimiter(',');

  auto* predict_cmd = app.add_subcommand("predict", "Write predicted frames for one input clip");
  add_data_flags(predict_cmd, data);
  add_run_flags(predict_cmd, run_flags);
  predict_cmd->add_option("--checkpoint", predict_flags.checkpoint)->required();
  predict_cmd->add_option("--input", predict_flags.input, "Raw sequence file")->required();
  predict_cmd->add_option("--output", predict_flags.output, "Output file (default: run directory)");
  predict_cmd->add_option("--action", predict_flags.action, "Action label (supervised models)");
  predict_cmd->add_option("--offset", predict_flags.offset, "First conditioning frame (default: last seq-in frames)");
  predict_cmd->add_option("--seq-out", predict_flags.seq_out, "Frames to predict (default: model's)")
      ->check(CLI::PositiveNumber);

  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic multi-sinusoid dataset");
  add_run_flags(synth_cmd, run_flags);
  synth_cmd->add_option("--actions", synth_flags.actions)->delimiter(',');
  synth_cmd->add_option("--frames", synth_flags.frames, "Frames per sequence at 50 fps")
      ->check(CLI::PositiveNumber)->capture_default_str();
  synth_cmd->add_option("--trials", synth_flags.trials)->check(CLI::PositiveNumber)->capture_default_str();

  std::vector<std::string> argv_rest(args.begin() + (args.empty() ? 0 : 1), args.end());
  std::reverse(argv_rest.begin(), argv_rest.end());
  try {
    app.parse(argv_rest);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(data, run_flags, train_flags, out);
    if (eval_cmd->parsed()) return cmd_eval("eval", data, run_flags, eval_flags, out);
    if (baseline_cmd->parsed()) return cmd_eval("baseline", data, run_flags, eval_flags, out);
    if (predict_cmd->parsed()) return cmd_predict(data, run_flags, predict_flags, out);
    if (synth_cmd->parsed()) return cmd_synth(run_flags, synth_flags, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace motionseq::cli
