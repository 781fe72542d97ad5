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

#include "dusq/train/report.hpp"

#include <fstream>

#include <fmt/format.h>

#include "dusq/error.hpp"

namespace dusq::train {
namespace {

nlohmann::json ids(const std::vector<std::string>& v) { return nlohmann::json(v); }

nlohmann::json mean_std_json(const MeanStd& m) { return {{"mean", m.mean}, {"std", m.std}}; }

void append_matrix(std::string& out, const ConfusionMatrix& cm) {
  out += "confusion matrix (rows actual, columns estimated)\n";
  out += fmt::format("{:<14}", "");
  for (QualityClass c : kAllClasses) out += fmt::format("{:>14}", display_name(c));
  out += '\n';
  for (QualityClass a : kAllClasses) {
    out += fmt::format("{:<14}", display_name(a));
    for (QualityClass e : kAllClasses) out += fmt::format("{:>14}", cm.at(a, e));
    out += '\n';
  }
}

}  // namespace

nlohmann::json to_json(const ConfusionMatrix& cm) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : cm.counts()) rows.push_back(row);
  nlohmann::json labels = nlohmann::json::array();
  for (QualityClass c : kAllClasses) labels.push_back(to_token(c));
  return {{"rows", "actual"}, {"columns", "estimated"}, {"labels", labels}, {"counts", rows}};
}

nlohmann::json to_json(const MetricsReport& report) {
  nlohmann::json per_class = nlohmann::json::object();
  for (QualityClass c : kAllClasses) {
    const auto& m = report[c];
    nlohmann::json undefined = nlohmann::json::array();
    if (m.precision_undefined) undefined.push_back("precision");
    if (m.recall_undefined) undefined.push_back("recall");
    if (m.f1_undefined) undefined.push_back("f1");
    per_class[std::string(to_token(c))] = {{"precision", m.precision},
                                           {"recall", m.recall},
                                           {"f1", m.f1},
                                           {"support", m.support},
                                           {"undefined", undefined}};
  }
  return {{"provenance", report.provenance},
          {"per_class", per_class},
          {"micro", {{"precision", report.micro_precision},
                     {"recall", report.micro_recall},
                     {"f1", report.micro_f1}}},
          {"macro_f1", report.macro_f1},
          {"confusion", to_json(report.confusion)}};
}

nlohmann::json to_json(const TrainResult& result) {
  nlohmann::json history = nlohmann::json::array();
  for (const auto& e : result.history) {
    nlohmann::json h = {{"epoch", e.epoch}, {"steps", e.steps}, {"train_loss", e.train_loss}};
    h["val_loss"] = e.val_loss ? nlohmann::json(*e.val_loss) : nlohmann::json(nullptr);
    h["val_macro_f1"] = e.val_macro_f1 ? nlohmann::json(*e.val_macro_f1) : nlohmann::json(nullptr);
    history.push_back(h);
  }
  return {{"best_epoch", result.best_epoch},
          {"stopped_early", result.stopped_early},
          {"history", history}};
}

nlohmann::json to_json(const CrossValidationResult& cv) {
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& f : cv.folds) {
    folds.push_back({{"fold", f.fold + 1},
                     {"train_recordings", ids(f.train_recordings)},
                     {"validation_recordings", ids(f.validation_recordings)},
                     {"test_recordings", ids(f.test_recordings)},
                     {"training", to_json(f.training)},
                     {"metrics", to_json(f.report)}});
  }
  nlohmann::json per_class = nlohmann::json::object();
  for (QualityClass c : kAllClasses) {
    const auto i = index_of(c);
    per_class[std::string(to_token(c))] = {{"precision", mean_std_json(cv.precision[i])},
                                           {"recall", mean_std_json(cv.recall[i])},
                                           {"f1", mean_std_json(cv.f1[i])}};
  }
  return {{"k", cv.plan.k},
          {"folds", folds},
          {"summary", {{"micro_f1", mean_std_json(cv.micro_f1)},
                       {"macro_f1", mean_std_json(cv.macro_f1)},
                       {"per_class", per_class}}},
          {"cumulative", to_json(cv.cumulative)}};
}

std::string format_text(const MetricsReport& report) {
  std::string out;
  if (!report.provenance.empty()) out += report.provenance + "\n";
  out += fmt::format("{:<14}{:>10}{:>10}{:>10}{:>10}\n", "class", "precision", "recall", "f1",
                     "support");
  for (QualityClass c : kAllClasses) {
    const auto& m = report[c];
    out += fmt::format("{:<14}{:>10.4f}{:>10.4f}{:>10.4f}{:>10}{}\n", display_name(c), m.precision,
                       m.recall, m.f1, m.support,
                       (m.precision_undefined || m.recall_undefined) ? "  (undefined -> 0)" : "");
  }
  out += fmt::format("micro F1 {:.5f}   macro F1 {:.5f}\n", report.micro_f1, report.macro_f1);
  append_matrix(out, report.confusion);
  return out;
}

std::string format_text(const CrossValidationResult& cv) {
  std::string out = fmt::format("{}-fold recording-stratified cross-validation\n\n", cv.plan.k);
  out += fmt::format("{:<8}{:>10}{:>10}{:>8}{:>10}\n", "fold", "micro F1", "macro F1", "epoch",
                     "windows");
  for (const auto& f : cv.folds) {
    out += fmt::format("{:<8}{:>10.4f}{:>10.4f}{:>8}{:>10}\n", f.fold + 1, f.report.micro_f1,
                       f.report.macro_f1, f.training.best_epoch, f.report.confusion.total());
  }
  out += fmt::format("\nmicro F1 {:.4f} +/- {:.4f}   macro F1 {:.4f} +/- {:.4f}\n\n",
                     cv.micro_f1.mean, cv.micro_f1.std, cv.macro_f1.mean, cv.macro_f1.std);
  out += fmt::format("{:<14}{:>18}{:>18}{:>18}\n", "class", "precision", "recall", "f1");
  for (QualityClass c : kAllClasses) {
    const auto i = index_of(c);
    out += fmt::format("{:<14}{:>10.4f} +/-{:>5.3f}{:>10.4f} +/-{:>5.3f}{:>10.4f} +/-{:>5.3f}\n",
                       display_name(c), cv.precision[i].mean, cv.precision[i].std,
                       cv.recall[i].mean, cv.recall[i].std, cv.f1[i].mean, cv.f1[i].std);
  }
  out += "\ncumulative\n";
  out += format_text(cv.cumulative);
  return out;
}

void write_report(const std::filesystem::path& stem, const nlohmann::json& doc,
                  const std::string& text) {
  if (stem.has_parent_path()) std::filesystem::create_directories(stem.parent_path());
  auto write = [](const std::filesystem::path& p, const std::string& body) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw DataError("cannot write report " + p.string());
    f << body;
    if (!f) throw DataError("write failed for report " + p.string());
  };
  write(std::filesystem::path(stem.string() + ".json"), doc.dump(2) + "\n");
  write(std::filesystem::path(stem.string() + ".txt"), text);
}

}  // namespace dusq::train
