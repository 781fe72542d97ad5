/* Copyright 2026 The dusq Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

// dusq: corpus generation, training, evaluation and live classification.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "dusq/error.hpp"
#include "dusq/nn/weights_io.hpp"
#include "dusq/rng.hpp"
#include "dusq/service/classifier.hpp"
#include "dusq/service/events.hpp"
#include "dusq/service/pipeline.hpp"
#include "dusq/synth.hpp"
#include "dusq/train/folds.hpp"
#include "dusq/train/report.hpp"
#include "dusq/train/trainer.hpp"

namespace fs = std::filesystem;
using namespace dusq;

namespace {

enum ExitCode : int { kOk = 0, kUsage = 1, kData = 2, kNumeric = 3 };

struct TrainFlags {
  std::string arch = "cga";
  std::uint64_t seed = 0;
  std::size_t epochs = 30;
  double lr = 0.01;
  std::size_t batch = 128;
  std::size_t patience = 5;
  std::size_t steps = 0;
  std::size_t val_windows = 0;
  std::string precision = "f64";
};

void add_train_flags(CLI::App* sub, TrainFlags& f) {
  sub->add_option("--arch", f.arch, "Model variant")
      ->check(CLI::IsMember({"cga", "ca", "ga"}))
      ->capture_default_str();
  sub->add_option("--seed", f.seed, "Master seed")->capture_default_str();
  sub->add_option("--epochs", f.epochs, "Maximum epochs")->check(CLI::PositiveNumber)->capture_default_str();
  sub->add_option("--lr", f.lr, "SGD learning rate")->check(CLI::NonNegativeNumber)->capture_default_str();
  sub->add_option("--batch", f.batch, "Batch size")->check(CLI::PositiveNumber)->capture_default_str();
  sub->add_option("--patience", f.patience, "Early-stopping patience in epochs")->capture_default_str();
  sub->add_option("--steps", f.steps, "Cap on steps per epoch (0: full balanced pool)")->capture_default_str();
  sub->add_option("--val-windows", f.val_windows, "Cap on validation windows per epoch (0: all)")
      ->capture_default_str();
  sub->add_option("--precision", f.precision, "Training arithmetic")
      ->check(CLI::IsMember({"f64", "f32"}))
      ->capture_default_str();
}

nn::ModelConfig model_config(const TrainFlags& f) {
  nn::ModelConfig m;
  m.arch = *nn::parse_architecture(f.arch);
  return m;
}

train::TrainConfig train_config(const TrainFlags& f) {
  train::TrainConfig c;
  c.seed = f.seed;
  c.epochs = f.epochs;
  c.learning_rate = f.lr;
  c.batch_size = f.batch;
  c.patience = f.patience;
  c.max_steps_per_epoch = f.steps;
  c.max_validation_windows = f.val_windows;
  c.precision = f.precision == "f32" ? train::Precision::kFloat32 : train::Precision::kFloat64;
  c.validate();
  return c;
}

void print_epoch(const train::EpochRecord& r) {
  std::string line = fmt::format("  epoch {:>3}  steps {:>4}  train_loss {:.5f}", r.epoch, r.steps, r.train_loss);
  if (r.val_loss) line += fmt::format("  val_loss {:.5f}", *r.val_loss);
  if (r.val_macro_f1) line += fmt::format("  val_macro_f1 {:.4f}", *r.val_macro_f1);
  std::cerr << line << '\n';
}

train::WindowDataset load(const fs::path& corpus) {
  std::cerr << "loading " << corpus.string() << '\n';
  return train::load_corpus(corpus, [](std::size_t done, std::size_t total, const std::string& id) {
    std::cerr << fmt::format("\r  {:>4}/{:<4} {}", done, total, id) << std::flush;
    if (done == total) std::cerr << '\n';
  });
}

int cmd_gen_data(const fs::path& corpus, std::uint64_t seed, std::size_t n) {
  const auto manifest = synth::gen_corpus(n, seed, corpus, {}, [](std::size_t done, std::size_t total) {
    std::cerr << fmt::format("\r  {:>4}/{:<4}", done, total) << std::flush;
    if (done == total) std::cerr << '\n';
  });
  std::cerr << fmt::format("wrote {} recordings to {}\n", manifest.recordings.size(), corpus.string());
  const auto counts = manifest.window_counts();
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    std::cerr << fmt::format("  {:<13}{:>6} windows\n", to_token(static_cast<QualityClass>(c)),
                             counts[c]);
  }
  return kOk;
}

int cmd_train(const fs::path& corpus, const fs::path& weights_path, const std::optional<fs::path>& report,
              const TrainFlags& flags) {
  const auto model = model_config(flags);
  const auto config = train_config(flags);
  const auto data = load(corpus);
  const auto summaries = train::summarize_recordings(data);
  const auto [train_ids, val_ids] =
      train::split_validation(summaries, config.validation_fraction, derive_seed(config.seed, 100));
  const auto train_rows = data.rows_of(train_ids);
  const auto val_rows = data.rows_of(val_ids);
  std::cerr << fmt::format("training {} on {} windows ({} recordings), validating on {} windows\n",
                           flags.arch, train_rows.size(), train_ids.size(), val_rows.size());
  const auto result = train::train_fold(data, train_rows, val_rows, model, config, print_epoch);
  nn::write_weights_file(weights_path, model, result.weights);
  std::cerr << fmt::format("best epoch {}; weights written to {}\n", result.best_epoch, weights_path.string());
  if (report) {
    nlohmann::json doc;
    doc["arch"] = flags.arch;
    doc["training"] = train::to_json(result);
    doc["train_recordings"] = train_ids;
    doc["validation_recordings"] = val_ids;
    std::string text = fmt::format("arch {}\nbest epoch {}\n", flags.arch, result.best_epoch);
    if (!val_rows.empty()) {
      const auto metrics = train::evaluate(data, val_rows, model, result.weights);
      doc["validation"] = train::to_json(metrics);
      text += train::format_text(metrics);
    }
    train::write_report(*report, doc, text);
  }
  return kOk;
}

int cmd_cv(const fs::path& corpus, const fs::path& report, const TrainFlags& flags, std::size_t folds) {
  const auto model = model_config(flags);
  const auto config = train_config(flags);
  const auto data = load(corpus);
  train::CrossValidationCallbacks cb;
  cb.on_epoch = [](std::size_t fold, const train::EpochRecord& r) {
    if (r.epoch == 1) std::cerr << fmt::format("fold {}\n", fold);
    print_epoch(r);
  };
  cb.on_fold = [](const train::FoldOutcome& o) {
    std::cerr << fmt::format("  fold {} test macro F1 {:.4f}\n", o.fold, o.report.macro_f1);
  };
  const auto cv = train::cross_validate(data, model, config, folds, cb);
  auto doc = train::to_json(cv);
  doc["arch"] = flags.arch;
  train::write_report(report, doc, train::format_text(cv));
  std::cout << train::format_text(cv);
  return kOk;
}

int cmd_eval(const fs::path& corpus, const fs::path& weights_path, const std::optional<fs::path>& report) {
  const auto loaded = nn::read_weights_file(weights_path);
  const auto data = load(corpus);
  const auto rows = data.all_rows();
  const auto metrics = train::evaluate(data, rows, loaded.config, loaded.weights);
  if (report) train::write_report(*report, train::to_json(metrics), train::format_text(metrics));
  std::cout << train::format_text(metrics);
  return kOk;
}

int cmd_classify(const fs::path& weights_path, const fs::path& wav, const std::optional<fs::path>& out) {
  const auto classifier = service::WindowClassifier::from_file(weights_path);
  const auto rows = service::classify_recording(classifier, audio::read_wav(wav));
  if (out) {
    std::ofstream f(*out);
    if (!f) throw DataError("cannot write " + out->string());
    service::write_classification_csv(f, rows);
  } else {
    service::write_classification_csv(std::cout, rows);
  }
  return kOk;
}

struct StreamFlags {
  std::optional<fs::path> wav;
  bool stdin_frames = false;
  int rate = audio::kAcquisitionRateHz;
  std::uint16_t port = 8765;
  bool fast = false;
  fs::path feedback_log = "feedback.jsonl";
  std::size_t wait_clients = 0;
  double wait_timeout_s = 10.0;
  double linger_s = 0.0;
  bool quiet = false;
};

int cmd_stream(const fs::path& weights_path, const StreamFlags& f) {
  const auto classifier = service::WindowClassifier::from_file(weights_path);
  std::unique_ptr<service::AudioSource> source;
  if (f.wav) {
    source = std::make_unique<service::WavFileSource>(*f.wav, !f.fast);
  } else {
    source = std::make_unique<service::FrameSource>(std::cin, f.rate);
  }
  service::StreamServiceOptions opt;
  opt.port = f.port;
  opt.feedback_log = f.feedback_log;
  opt.wait_for_clients = f.wait_clients;
  opt.wait_timeout = std::chrono::milliseconds(static_cast<long long>(f.wait_timeout_s * 1000.0));
  opt.linger = std::chrono::milliseconds(static_cast<long long>(f.linger_s * 1000.0));
  opt.on_listening = [](std::uint16_t port) {
    std::cerr << fmt::format("listening on ws://127.0.0.1:{}\n", port) << std::flush;
  };
  if (!f.quiet) {
    opt.on_event = [](const service::StreamEvent& e) { std::cout << service::encode_event(e) << '\n' << std::flush; };
  }
  const auto stats = service::run_stream_service(*source, classifier, opt);
  std::cerr << fmt::format(
      "{} windows, {:.1f} s audio in {:.2f} s; latency mean {:.1f} ms, max {:.1f} ms\n", stats.windows,
      stats.audio_seconds, stats.wall_seconds, stats.mean_latency_ms, stats.max_latency_ms);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Doppler ultrasound signal-quality engine"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "dusq 0.1.0");

  fs::path corpus, weights, report_path;
  std::optional<fs::path> report, out;
  std::uint64_t gen_seed = 7;
  std::size_t n_recordings = 40, folds = 5;
  TrainFlags tf;
  StreamFlags sf;
  fs::path wav;

  auto* gen = app.add_subcommand("gen-data", "Generate a labeled synthetic corpus");
  gen->add_option("--corpus", corpus, "Output directory")->required();
  gen->add_option("--seed", gen_seed, "Corpus seed")->capture_default_str();
  gen->add_option("--n", n_recordings, "Number of recordings")->check(CLI::Range(5, 100000))->capture_default_str();

  auto* trn = app.add_subcommand("train", "Train on a corpus and write weights");
  trn->add_option("--corpus", corpus, "Corpus directory")->required();
  trn->add_option("--weights", weights, "Output weights file")->required();
  trn->add_option("--report", report, "Report path stem (.json and .txt)");
  add_train_flags(trn, tf);

  auto* cv = app.add_subcommand("cv", "Recording-stratified k-fold cross-validation");
  cv->add_option("--corpus", corpus, "Corpus directory")->required();
  cv->add_option("--report", report_path, "Report path stem (.json and .txt)")->required();
  cv->add_option("--folds", folds, "Number of folds")->check(CLI::Range(2, 100))->capture_default_str();
  add_train_flags(cv, tf);

  auto* ev = app.add_subcommand("eval", "Score trained weights on every window of a corpus");
  ev->add_option("--corpus", corpus, "Corpus directory")->required();
  ev->add_option("--weights", weights, "Weights file")->required();
  ev->add_option("--report", report, "Report path stem (.json and .txt)");

  auto* cls = app.add_subcommand("classify", "Per-window CSV for a WAV file");
  cls->add_option("--weights", weights, "Weights file")->required();
  cls->add_option("--wav", wav, "Input WAV (44.1 kHz or 4 kHz, 16-bit mono)")->required();
  cls->add_option("--out", out, "Output CSV (default: stdout)");

  auto* str = app.add_subcommand("stream", "Live classification service over WebSocket");
  str->add_option("--weights", weights, "Weights file")->required();
  auto* wav_opt = str->add_option("--wav", sf.wav, "Stream a WAV file");
  auto* frames_opt = str->add_flag("--stdin-frames", sf.stdin_frames, "Read length-prefixed PCM frames from stdin");
  wav_opt->excludes(frames_opt);
  str->add_option("--rate", sf.rate, "Sample rate of stdin frames")
      ->check(CLI::IsMember({audio::kAcquisitionRateHz, audio::kAnalysisRateHz}))
      ->capture_default_str();
  str->add_option("--port", sf.port, "WebSocket port on localhost (0: any free port)")->capture_default_str();
  str->add_flag("--fast", sf.fast, "Do not pace file input to the wall clock");
  str->add_option("--feedback-log", sf.feedback_log, "Feedback JSON-lines log")->capture_default_str();
  str->add_option("--wait-client", sf.wait_clients, "Wait for this many clients before streaming")
      ->capture_default_str();
  str->add_option("--wait-timeout", sf.wait_timeout_s, "Seconds to wait for clients")->capture_default_str();
  str->add_option("--linger", sf.linger_s, "Seconds to keep serving feedback after the audio ends")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  str->add_flag("--quiet", sf.quiet, "Do not echo events to stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }
  if (*str && !sf.wav && !sf.stdin_frames) {
    std::cerr << "stream: one of --wav or --stdin-frames is required\n";
    return kUsage;
  }

  try {
    if (*gen) return cmd_gen_data(corpus, gen_seed, n_recordings);
    if (*trn) return cmd_train(corpus, weights, report, tf);
    if (*cv) return cmd_cv(corpus, report_path, tf, folds);
    if (*ev) return cmd_eval(corpus, weights, report);
    if (*cls) return cmd_classify(weights, wav, out);
    if (*str) return cmd_stream(weights, sf);
  } catch (const NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kNumeric;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kUsage;
  }
  return kUsage;
}
