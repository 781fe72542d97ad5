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

#ifndef DUSQ_TESTS_SUPPORT_ORACLES_HPP_
#define DUSQ_TESTS_SUPPORT_ORACLES_HPP_

// Independent scalar references used by unit tests and the acceptance run.
// Nothing here calls into the library's numeric kernels.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dusq/annotations.hpp"
#include "dusq/nn/config.hpp"
#include "dusq/nn/layers.hpp"
#include "dusq/nn/model.hpp"
#include "dusq/nn/weights.hpp"
#include "dusq/quality_class.hpp"
#include "dusq/rng.hpp"

namespace dusq::testing {

using Vec = std::vector<double>;
using Mat = std::vector<Vec>;  // row-major [rows][cols]

struct GruRef {
  Mat w_z, u_z, w_r, u_r, w_h, u_h;  // W: [U][D], U: [U][U]
  Vec b_z, b_r, b_h;
};

/// Hidden states [T][U] for one sequence x [T][D], h_0 = 0.
Mat scalar_gru(const Mat& x, const GruRef& p);

struct AttentionRef {
  Mat w;  // [A][D]
  Vec b;  // [A]
  Vec u;  // [A]
};

struct AttentionRefOut {
  Vec context;  // [D]
  Vec alphas;   // [T]
};

AttentionRefOut scalar_attention(const Mat& h, const AttentionRef& p);

Mat random_matrix(Rng& rng, std::size_t rows, std::size_t cols, double scale);
Vec random_vector(Rng& rng, std::size_t n, double scale);

/// Packs row-major matrices/vectors into library tensors.
nn::Tensor<double> to_tensor(const Mat& m);
nn::Tensor<double> to_tensor(const Vec& v);

/// Rule table written out case by case.
std::optional<QualityClass> reference_consensus(annotations::Label a, annotations::Label b,
                                                annotations::Label c);

/// Windows by sliding a 5-segment frame and testing every member, with no
/// notion of runs.
std::vector<annotations::LabeledWindow> enumerate_windows(
    const std::string& recording_id, const std::vector<std::optional<QualityClass>>& labels);

// --- Gradient checking ---------------------------------------------------------

/// 16x8 input, conv filters [2, 3], GRU 4, dense 4, attention 4.
nn::ModelConfig tiny_config(nn::Architecture arch = nn::Architecture::kCnnGruAttention);

struct TensorCheck {
  std::string name;
  std::size_t elements = 0;
  double max_relative_error = 0.0;
  double max_abs_analytic = 0.0;
};

struct GradientCheckReport {
  std::vector<TensorCheck> tensors;
  double worst() const;
};

/// Central differences of the mean cross-entropy for every trainable element
/// against model_backward, with dropout masks frozen from one train forward.
/// Relative error is |a - n| / max(|a|, |n|, floor).
GradientCheckReport check_gradients(const nn::ModelConfig& config, std::uint64_t seed,
                                    std::size_t batch, double epsilon = 1e-5,
                                    double floor = 1e-6);

// --- Files -------------------------------------------------------------------

class TempDir {
 public:
  explicit TempDir(const std::string& prefix = "dusq-test");
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

/// Runs a shell command, capturing stdout. Returns the exit status.
int run_command(const std::string& command, std::string* out = nullptr);

}  // namespace dusq::testing

#endif  // DUSQ_TESTS_SUPPORT_ORACLES_HPP_
