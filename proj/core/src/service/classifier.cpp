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

#include "dusq/service/classifier.hpp"

#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

#include "dusq/nn/model.hpp"
#include "dusq/nn/weights_io.hpp"

namespace dusq::service {

WindowClassifier::WindowClassifier(nn::ModelConfig config, nn::ModelWeights<double> weights)
    : config_(std::move(config)), weights_(std::move(weights)) {
  nn::check_weights(config_, weights_);
  if (config_.input_time != dsp::kScalogramFrames || config_.input_freq != dsp::kScalogramBins ||
      config_.num_classes != kNumClasses) {
    throw std::invalid_argument("WindowClassifier: model must take 250 x 40 scalograms and emit 5 classes");
  }
}

WindowClassifier WindowClassifier::from_file(const std::filesystem::path& weights_path) {
  auto loaded = nn::read_weights_file(weights_path);
  return WindowClassifier(std::move(loaded.config), std::move(loaded.weights));
}

std::vector<float> WindowClassifier::features(std::span<const double> window) const {
  const auto s = extract_(window);
  return {s.values().begin(), s.values().end()};
}

Probabilities WindowClassifier::infer(std::span<const float> features) const {
  nn::Tensor<double> x({1, config_.input_time, config_.input_freq});
  if (features.size() != x.size()) throw std::invalid_argument("WindowClassifier: feature size mismatch");
  std::copy(features.begin(), features.end(), x.data());
  const auto probs = nn::model_forward(x, config_, weights_, nn::ForwardOptions{});
  Probabilities p{};
  std::copy(probs.data(), probs.data() + kNumClasses, p.begin());
  return p;
}

std::vector<ClassifiedWindow> classify_recording(const WindowClassifier& classifier,
                                                 const audio::Recording& recording) {
  std::vector<ClassifiedWindow> out;
  for (const auto& w : audio::windows_from_recording(recording)) {
    ClassifiedWindow c;
    c.window_index = w.start_segment_index;
    c.t_start_s = w.start_seconds();
    c.probs = classifier.classify(w.samples);
    c.label = nn::predict_class(std::span<const double>(c.probs));
    out.push_back(c);
  }
  return out;
}

void write_classification_csv(std::ostream& out, std::span<const ClassifiedWindow> rows) {
  out << "window,t0";
  for (QualityClass c : kAllClasses) out << ',' << to_token(c);
  out << ",label\n";
  for (const auto& r : rows) {
    out << fmt::format("{},{:.2f}", r.window_index, r.t_start_s);
    for (double p : r.probs) out << fmt::format(",{:.6f}", p);
    out << ',' << to_token(r.label) << '\n';
  }
}

}  // namespace dusq::service
