#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ddk/audio.h"
#include "ddk/checkpoint.h"
#include "ddk/metrics.h"
#include "ddk/optim.h"
#include "ddk/postproc.h"
#include "ddk/synth.h"
#include "ddk/train.h"

namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kUsage = 1, kData = 2, kInternal = 3 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SynthArgs {
  std::string out;
  int trials = 100;
  std::vector<double> split = {0.6, 0.2, 0.2};
  int sample_rate = 16000;
  int min_syllables = 8;
  int max_syllables = 12;
};

struct TrainArgs {
  std::string manifest;
  std::string out;
  std::string log;
  std::string arch = "lstm";
  std::string model_config;
  int epochs = 50;
  int patience = 5;
  double min_delta = 0.002;
  int batch_size = 32;
  double lr = 1e-4;
  bool no_augment = false;
  bool no_shift = false;
};

struct SegmentArgs {
  std::string model;
  std::string out;
  std::vector<std::string> inputs;
  bool textgrid = false;
};

struct RateArgs {
  std::vector<std::string> inputs;
  std::string out;
  std::vector<double> window;
  bool vot_only = false;
};

struct EvalArgs {
  std::string manifest;
  std::string split = "test";
  std::string pred_dir;
  std::vector<std::string> pred;
  std::vector<std::string> target;
  std::string windows;
  std::string out;
};

std::ostream& log_stream(int verbosity) {
  static std::ostream null_stream(nullptr);
  return verbosity > 0 ? std::cerr : null_stream;
}

int cmd_synth(const SynthArgs& a, std::uint64_t seed) {
  if (a.split.size() != 3) throw UsageError("--split needs three ratios");
  ddk::CorpusSpec spec;
  spec.trials = a.trials;
  spec.train_ratio = a.split[0];
  spec.val_ratio = a.split[1];
  spec.test_ratio = a.split[2];
  spec.sample_rate_hz = a.sample_rate;
  spec.seed = seed;
  spec.trial.min_syllables = a.min_syllables;
  spec.trial.max_syllables = a.max_syllables;
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto entries = ddk::generate_corpus(a.out, spec);
  std::cout << "wrote " << entries.size() << " trials to " << a.out << "\n";
  return kOk;
}

int cmd_train(const TrainArgs& a, std::uint64_t seed, int verbosity) {
  ddk::ModelConfig model_cfg;
  try {
    model_cfg = ddk::parse_architecture(a.arch) == ddk::Architecture::Cnn
                    ? ddk::ModelConfig::default_cnn()
                    : ddk::ModelConfig::default_lstm();
    if (!a.model_config.empty()) {
      std::ifstream in(a.model_config);
      if (!in) throw ddk::DataError("cannot open model config " + a.model_config);
      std::stringstream ss;
      ss << in.rdbuf();
      model_cfg = ddk::config_from_json(ss.str());
    }
    model_cfg.validate();
  } catch (const ddk::ConfigError& e) {
    throw UsageError(e.what());
  }
  ddk::TrainConfig cfg;
  cfg.max_epochs = a.epochs;
  cfg.patience = std::min(a.patience, a.epochs);
  cfg.min_delta = a.min_delta;
  cfg.batch_size = a.batch_size;
  cfg.lr = a.lr;
  cfg.seed = seed;
  cfg.augment.enabled = !a.no_augment;
  cfg.random_shift = !a.no_shift;
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const auto manifest = ddk::read_manifest(a.manifest);
  const auto train_set = ddk::load_split(manifest, "train");
  const auto val_set = ddk::load_split(manifest, "val");
  auto& log = log_stream(verbosity);
  log << "training " << ddk::architecture_name(model_cfg.architecture) << " on "
      << train_set.size() << " recordings, validating on " << val_set.size() << "\n";
  auto result = ddk::train(train_set, val_set, cfg, model_cfg, [&](const ddk::EpochLog& e) {
    log << "epoch " << e.epoch << " train_loss " << e.train_loss << " val_loss " << e.val_loss
        << " val_frame_acc " << e.val_frame_acc << std::endl;
  });
  if (!fs::path(a.out).parent_path().empty()) fs::create_directories(fs::path(a.out).parent_path());
  ddk::save_checkpoint(a.out, result.model);
  ddk::write_training_log(a.log.empty() ? a.out + ".log.csv" : a.log, result.log);
  std::cout << "best epoch " << result.best_epoch << " val_frame_acc " << result.best_val_acc
            << "\n";
  return kOk;
}

int cmd_segment(const SegmentArgs& a) {
  auto model = ddk::load_checkpoint(a.model);
  std::vector<std::string> inputs = a.inputs;
  std::sort(inputs.begin(), inputs.end());
  fs::create_directories(a.out);
  for (const auto& path : inputs) {
    const ddk::Waveform w = ddk::read_wav(path);
    const auto frames = ddk::predict_file(model, w);
    const auto segs = ddk::postprocess(frames.labels);
    const std::string stem = fs::path(path).stem().string();
    ddk::write_segments_csv((fs::path(a.out) / (stem + ".csv")).string(), ddk::without_other(segs));
    if (a.textgrid) {
      std::ofstream tg(fs::path(a.out) / (stem + ".TextGrid"));
      ddk::write_textgrid(tg, segs, static_cast<std::int64_t>(frames.size()));
    }
  }
  std::cout << "segmented " << inputs.size() << " files into " << a.out << "\n";
  return kOk;
}

int cmd_rate(const RateArgs& a) {
  std::optional<ddk::TimeWindow> window;
  if (!a.window.empty()) {
    if (a.window.size() != 2 || !(a.window[1] > a.window[0])) {
      throw UsageError("--window needs start,end seconds with end > start");
    }
    window = ddk::TimeWindow{a.window[0], a.window[1]};
  }
  if (a.vot_only && !window) throw UsageError("--vot-only needs --window");
  std::vector<std::string> inputs = a.inputs;
  std::sort(inputs.begin(), inputs.end());
  std::ofstream file;
  if (!a.out.empty()) {
    file.open(a.out);
    if (!file) throw ddk::DataError("cannot write " + a.out);
  }
  std::ostream& out = a.out.empty() ? std::cout : file;
  out << "file,rate,syllables,corrections,articulation_s\n";
  out << std::setprecision(9);
  for (const auto& path : inputs) {
    const auto segs = ddk::read_segments_csv(path);
    const auto r = a.vot_only ? ddk::ddk_rate_vot_only(segs, *window) : ddk::ddk_rate(segs, window);
    out << path << ',';
    if (r) {
      out << r->rate << ',' << r->count.raw_count << ',' << r->count.corrections.size() << ','
          << r->articulation_s << '\n';
    } else {
      out << "undefined,,,\n";
    }
  }
  return kOk;
}

// trial,start_s,end_s rows; trial is the manifest trial_id or the --pred path.
std::map<std::string, ddk::TimeWindow> read_windows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ddk::DataError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "trial,start_s,end_s") {
    throw ddk::DataError(path + ": expected header trial,start_s,end_s");
  }
  std::map<std::string, ddk::TimeWindow> out;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string name, a, b;
    std::getline(ss, name, ',');
    std::getline(ss, a, ',');
    std::getline(ss, b);
    try {
      const double s = std::stod(a), e = std::stod(b);
      if (!(e > s)) throw std::invalid_argument("empty window");
      out[name] = {s, e};
    } catch (const std::exception&) {
      throw ddk::DataError(path + ":" + std::to_string(row) + ": bad window row");
    }
  }
  return out;
}

int cmd_eval(const EvalArgs& a) {
  std::vector<ddk::TrialInput> trials;
  if (!a.manifest.empty()) {
    if (a.pred_dir.empty()) throw UsageError("--manifest needs --pred-dir");
    for (const auto& e : ddk::read_manifest(a.manifest)) {
      if (e.split != a.split) continue;
      trials.push_back({e.trial_id,
                        ddk::read_segments_csv((fs::path(a.pred_dir) / (e.trial_id + ".csv")).string()),
                        ddk::read_segments_csv(e.labels_path), std::nullopt});
    }
  } else {
    if (a.pred.size() != a.target.size() || a.pred.empty()) {
      throw UsageError("give matching numbers of --pred and --target files, or --manifest");
    }
    for (std::size_t i = 0; i < a.pred.size(); ++i) {
      trials.push_back({a.pred[i], ddk::read_segments_csv(a.pred[i]),
                        ddk::read_segments_csv(a.target[i]), std::nullopt});
    }
  }
  if (!a.windows.empty()) {
    const auto windows = read_windows(a.windows);
    for (auto& t : trials) {
      if (auto it = windows.find(t.name); it != windows.end()) t.window = it->second;
    }
  }
  std::sort(trials.begin(), trials.end(),
            [](const auto& x, const auto& y) { return x.name < y.name; });
  const ddk::EvalReport report = ddk::evaluate(trials);
  ddk::print_report(std::cout, report);
  if (!a.out.empty()) {
    fs::create_directories(a.out);
    std::ofstream csv(fs::path(a.out) / "report.csv");
    ddk::write_report_csv(csv, report);
    std::ofstream rates(fs::path(a.out) / "rates.csv");
    rates << "trial,pred_rate,target_rate\n" << std::setprecision(9);
    for (const auto& r : report.rates) {
      rates << r.name << ',';
      if (r.pred_rate) rates << *r.pred_rate;
      else rates << "NA";
      rates << ',';
      if (r.target_rate) rates << *r.target_rate;
      else rates << "NA";
      rates << '\n';
    }
    if (!csv || !rates) throw ddk::DataError("failed writing report to " + a.out);
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DDK speech segmentation: synthetic data, training, segmentation, rates, evaluation"};
  app.require_subcommand(1);
  app.set_config("--config", "", "TOML/INI file with option values (flags override it)");
  app.allow_config_extras(false);
  std::uint64_t seed = 0;
  int verbosity = 1;
  app.add_option("--seed", seed, "Seed for every random choice")->capture_default_str();
  app.add_flag("-v,--verbose", [&](std::int64_t n) { verbosity = 1 + static_cast<int>(n); },
               "More progress output");
  app.add_flag("-q,--quiet", [&](std::int64_t) { verbosity = 0; }, "Only print results");

  SynthArgs synth;
  auto* s = app.add_subcommand("synth", "Generate a labeled synthetic corpus");
  s->add_option("--out", synth.out, "Output directory")->required();
  s->add_option("--trials", synth.trials, "Number of trials")->capture_default_str();
  s->add_option("--split", synth.split, "train,val,test ratios")->delimiter(',')->expected(3);
  s->add_option("--sample-rate", synth.sample_rate, "Sample rate of written WAVs")->capture_default_str();
  s->add_option("--min-syllables", synth.min_syllables)->capture_default_str();
  s->add_option("--max-syllables", synth.max_syllables)->capture_default_str();

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train a frame classifier");
  t->add_option("--manifest", train.manifest, "Corpus manifest CSV")->required();
  t->add_option("--out", train.out, "Checkpoint path")->required();
  t->add_option("--log", train.log, "Training log CSV (default <out>.log.csv)");
  t->add_option("--arch", train.arch, "lstm or cnn")
      ->check(CLI::IsMember({"lstm", "cnn"}))
      ->capture_default_str();
  t->add_option("--model-config", train.model_config, "JSON model configuration");
  t->add_option("--epochs", train.epochs)->capture_default_str();
  t->add_option("--patience", train.patience)->capture_default_str();
  t->add_option("--min-delta", train.min_delta, "Validation accuracy gain that resets patience")
      ->capture_default_str();
  t->add_option("--batch-size", train.batch_size)->capture_default_str();
  t->add_option("--lr", train.lr)->capture_default_str();
  t->add_flag("--no-augment", train.no_augment, "Disable noise and band-reject augmentation");
  t->add_flag("--no-shift", train.no_shift, "Disable random start shifts");

  SegmentArgs segment;
  auto* g = app.add_subcommand("segment", "Write VOT/vowel segment CSVs for WAV files");
  g->add_option("--model", segment.model, "Checkpoint")->required();
  g->add_option("--out", segment.out, "Output directory")->required();
  g->add_option("inputs", segment.inputs, "WAV files")->required();
  g->add_flag("--textgrid", segment.textgrid, "Also write Praat TextGrids");

  RateArgs rate;
  auto* r = app.add_subcommand("rate", "DDK rate per segment CSV");
  r->add_option("inputs", rate.inputs, "Segment CSVs")->required();
  r->add_option("--out", rate.out, "Output CSV (default stdout)");
  r->add_option("--window", rate.window, "start,end in seconds")->delimiter(',')->expected(2);
  r->add_flag("--vot-only", rate.vot_only, "Count VOTs and long gaps over --window");

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Compare predicted and reference segments");
  e->add_option("--manifest", eval.manifest, "Corpus manifest (references)");
  e->add_option("--split", eval.split, "Manifest split to evaluate")->capture_default_str();
  e->add_option("--pred-dir", eval.pred_dir, "Directory of <trial_id>.csv predictions");
  e->add_option("--pred", eval.pred, "Predicted segment CSVs");
  e->add_option("--target", eval.target, "Reference segment CSVs, paired with --pred");
  e->add_option("--windows", eval.windows, "CSV trial,start_s,end_s of rate windows");
  e->add_option("--out", eval.out, "Directory for report.csv and rates.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::CallForAllHelp& ex) {
    return app.exit(ex);
  } catch (const CLI::ParseError& ex) {
    app.exit(ex);
    return kUsage;
  }

  try {
    if (*s) return cmd_synth(synth, seed);
    if (*t) return cmd_train(train, seed, verbosity);
    if (*g) return cmd_segment(segment);
    if (*r) return cmd_rate(rate);
    if (*e) return cmd_eval(eval);
  } catch (const UsageError& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kUsage;
  } catch (const ddk::DataError& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kData;
  } catch (const ddk::WavError& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kData;
  } catch (const fs::filesystem_error& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kData;
  } catch (const std::exception& ex) {
    std::cerr << "internal error: " << ex.what() << "\n";
    return kInternal;
  }
  return kInternal;
}
