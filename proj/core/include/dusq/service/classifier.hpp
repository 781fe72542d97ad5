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

#ifndef DUSQ_SERVICE_CLASSIFIER_HPP_
#define DUSQ_SERVICE_CLASSIFIER_HPP_

#include <array>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <vector>

#include "dusq/audio_io.hpp"
#include "dusq/dsp.hpp"
#include "dusq/nn/config.hpp"
#include "dusq/nn/weights.hpp"
#include "dusq/quality_class.hpp"

namespace dusq::service {

using Probabilities = std::array<double, kNumClasses>;

/// Feature extraction plus one-window inference over shared, immutable
/// weights; safe to call concurrently. Scalograms are rounded to f32 exactly
/// as in the training corpus cache, and every window runs as a batch of one,
/// so offline and streaming results agree bit for bit.
class WindowClassifier {
 public:
  WindowClassifier(nn::ModelConfig config, nn::ModelWeights<double> weights);
  static WindowClassifier from_file(const std::filesystem::path& weights_path);

  /// 15000 samples at 4 kHz.
  std::vector<float> features(std::span<const double> window) const;
  Probabilities infer(std::span<const float> features) const;
  Probabilities classify(std::span<const double> window) const { return infer(features(window)); }

  const nn::ModelConfig& config() const { return config_; }

 private:
  nn::ModelConfig config_;
  nn::ModelWeights<double> weights_;
  dsp::FeatureExtractor extract_;
};

struct ClassifiedWindow {
  std::size_t window_index = 0;
  double t_start_s = 0.0;
  Probabilities probs{};
  QualityClass label = QualityClass::kGood;
};

/// Every complete window of a 44.1 kHz or 4 kHz recording.
std::vector<ClassifiedWindow> classify_recording(const WindowClassifier& classifier,
                                                 const audio::Recording& recording);

/// `window,t0,good,poor,interference,talking,silent,label` with a header row.
void write_classification_csv(std::ostream& out, std::span<const ClassifiedWindow> rows);

}  // namespace dusq::service

#endif  // DUSQ_SERVICE_CLASSIFIER_HPP_
