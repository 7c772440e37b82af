#pragma once

// End-to-end orchestration: select K, cluster at the chosen (K, seed), pick the annotation set,
// build the balanced schedule. Each stage is also exposed on its own so that running the stages
// one by one over intermediate files reproduces the pipeline's artifacts exactly.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "osal/error.hpp"
#include "osal/features.hpp"
#include "osal/io.hpp"
#include "osal/k_selection.hpp"
#include "osal/kmeans.hpp"
#include "osal/report.hpp"
#include "osal/sampling.hpp"
#include "osal/scheduling.hpp"
#include "osal/version.hpp"

namespace osal {

struct PipelineConfig {
  std::filesystem::path input;
  FeatureFormat format = FeatureFormat::osf1;
  int k_min = 4;
  int k_max = 20;
  int n_seeds = 100;
  int top_t = 2;
  int budget = 56;
  int epochs = 1000;
  std::uint64_t master_seed = kDefaultMasterSeed;
  bool normalize = false;
  KMeansOptions kmeans{};
  unsigned threads = 0;
};

// Artifact file names inside the output directory.
namespace files {
inline constexpr std::string_view k_selection = "k_selection.json";
inline constexpr std::string_view sweep_log = "sweep_log.json";
inline constexpr std::string_view assignment = "assignment.json";
inline constexpr std::string_view labels = "labels.csv";
inline constexpr std::string_view selection = "selection.json";
inline constexpr std::string_view schedule = "schedule.json";
inline constexpr std::string_view manifest = "manifest.json";
}  // namespace files

struct Artifact {
  std::string name;
  std::string text;
};

// Runs fn and prefixes any library error with the stage name, preserving its type.
template <typename Fn>
auto run_stage(std::string_view stage, Fn&& fn) {
  const std::string prefix = "stage '" + std::string(stage) + "': ";
  try {
    return fn();
  } catch (const cluster_too_small_error&) {
    throw;
  } catch (const divisibility_error& e) {
    throw divisibility_error(prefix + e.what());
  } catch (const data_error& e) {
    throw data_error(prefix + e.what());
  } catch (const invalid_argument& e) {
    throw invalid_argument(prefix + e.what());
  } catch (const numerical_error& e) {
    throw numerical_error(prefix + e.what());
  } catch (const error& e) {
    throw error(prefix + e.what());
  }
}

inline FeatureMatrix prepare_features(const FeatureMatrix& f, bool normalize) {
  return normalize ? l2_normalize(f) : f;
}

inline std::string features_digest(const FeatureMatrix& f) {
  std::string bytes = encode_osf1(f);
  for (const auto& id : f.ids()) bytes += id + '\n';
  return sha256_hex(bytes);
}

// Stage artifacts; each returns the canonical text of its document(s).
inline std::vector<Artifact> k_selection_artifacts(const KSelectionReport& r) {
  return {{std::string(files::k_selection), to_text(k_selection_to_json(r))},
          {std::string(files::sweep_log), to_text(sweep_log_to_json(r))}};
}

inline std::vector<Artifact> assignment_artifacts(const ClusterAssignment& ca, const FeatureMatrix& f) {
  return {{std::string(files::assignment), to_text(assignment_to_json(ca, f.ids()))},
          {std::string(files::labels), encode_labels(f.ids(), ca.labels)}};
}

inline Artifact selection_artifact(const AnnotationSelection& sel) {
  return {std::string(files::selection), to_text(selection_to_json(sel))};
}

inline Artifact schedule_artifact(const BatchSchedule& s, std::string_view selection_text) {
  return {std::string(files::schedule), to_text(schedule_to_json(s, sha256_hex(selection_text)))};
}

inline json config_to_json(const PipelineConfig& c) {
  return {{"input", c.input.string()},
          {"format", c.format == FeatureFormat::csv ? "csv" : "osf1"},
          {"k_min", c.k_min},
          {"k_max", c.k_max},
          {"n_seeds", c.n_seeds},
          {"top_t", c.top_t},
          {"budget", c.budget},
          {"epochs", c.epochs},
          {"master_seed", c.master_seed},
          {"normalize", c.normalize},
          {"kmeans_max_iters", c.kmeans.max_iters},
          {"kmeans_tol", c.kmeans.tol}};
}

inline Artifact manifest_artifact(const PipelineConfig& cfg, const FeatureMatrix& f, const KSelectionReport& r,
                                  const std::vector<Artifact>& artifacts) {
  json listed = json::array();
  for (const auto& a : artifacts)
    listed.push_back({{"file", a.name}, {"sha256", sha256_hex(a.text)}, {"bytes", a.text.size()}});
  json doc = {{"schema", kManifestSchema},
              {"tool", "osal"},
              {"version", kVersion},
              {"config", config_to_json(cfg)},
              {"input", {{"n", f.n()}, {"d", f.d()}, {"features_sha256", features_digest(f)}}},
              {"chosen", {{"k", r.chosen_k}, {"seed", r.chosen_seed}}},
              {"artifacts", std::move(listed)}};
  return {std::string(files::manifest), to_text(doc)};
}

struct PipelineResult {
  KSelectionReport report;
  ClusterAssignment assignment;
  AnnotationSelection selection;
  BatchSchedule schedule;
  std::vector<Artifact> artifacts;  // manifest last
};

inline void validate(const PipelineConfig& c) {
  if (c.k_min < 2) throw invalid_argument("--k-min must be >= 2");
  if (c.k_min > c.k_max) throw invalid_argument("--k-min exceeds --k-max");
  if (c.n_seeds < 2) throw invalid_argument("--n-seeds must be >= 2");
  if (c.top_t < 1 || c.top_t > c.k_max - c.k_min + 1) throw invalid_argument("--top-t must lie in [1, k_max - k_min + 1]");
  if (c.budget < 1) throw invalid_argument("--budget must be >= 1");
  if (c.epochs < 1) throw invalid_argument("--epochs must be >= 1");
}

// `features` must already be prepared (normalized if requested).
inline PipelineResult run_pipeline(const FeatureMatrix& features, const PipelineConfig& cfg,
                                   const std::function<void(std::string_view)>& progress = {}) {
  validate(cfg);
  auto note = [&](std::string_view msg) {
    if (progress) progress(msg);
  };
  PipelineResult out;

  note("computing pairwise distances");
  const DistanceMatrix dm = run_stage("distances", [&] { return pairwise_distances(features, cfg.threads); });

  note("selecting K");
  SelectKOptions sk;
  sk.k_min = cfg.k_min;
  sk.k_max = cfg.k_max;
  sk.n_seeds = cfg.n_seeds;
  sk.top_t = cfg.top_t;
  sk.master_seed = cfg.master_seed;
  sk.kmeans = cfg.kmeans;
  sk.threads = cfg.threads;
  out.report = run_stage("select-k", [&] { return select_k(features, dm, sk); });

  // Reject an indivisible budget before the final clustering is produced.
  if (cfg.budget % out.report.chosen_k != 0)
    throw divisibility_error("stage 'sample': budget " + std::to_string(cfg.budget) + " is not divisible by chosen K=" +
                             std::to_string(out.report.chosen_k));

  note("clustering at the chosen K");
  out.assignment = run_stage("cluster", [&] { return kmeans(features, out.report.chosen_k, out.report.chosen_seed, cfg.kmeans); });

  note("selecting the annotation set");
  out.selection = run_stage("sample", [&] { return select_annotation_set(dm, out.assignment, cfg.budget, features.ids()); });

  note("building the batch schedule");
  out.schedule = run_stage("schedule", [&] { return balanced_schedule(out.selection, cfg.epochs, cfg.master_seed, cfg.threads); });

  out.artifacts = k_selection_artifacts(out.report);
  for (auto& a : assignment_artifacts(out.assignment, features)) out.artifacts.push_back(std::move(a));
  out.artifacts.push_back(selection_artifact(out.selection));
  out.artifacts.push_back(schedule_artifact(out.schedule, out.artifacts.back().text));
  out.artifacts.push_back(manifest_artifact(cfg, features, out.report, out.artifacts));
  return out;
}

// Writes all artifacts; if any write fails, files written so far are removed.
inline void write_artifacts(const std::filesystem::path& dir, const std::vector<Artifact>& artifacts) {
  std::vector<std::filesystem::path> written;
  try {
    std::filesystem::create_directories(dir);
    for (const auto& a : artifacts) {
      write_file(dir / a.name, a.text);
      written.push_back(dir / a.name);
    }
  } catch (...) {
    std::error_code ec;
    for (const auto& p : written) std::filesystem::remove(p, ec);
    throw;
  }
}

}  // namespace osal
