// osal: command-line front end for the sample-selection pipeline.
//
// Exit codes: 0 success, 2 usage, 3 data validation, 4 numerical/stage failure.

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "CLI11.hpp"
#include "osal/osal.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitStage = 4;

struct CommonOptions {
  fs::path input;
  std::string format;
  fs::path out_dir = ".";
  std::uint64_t master_seed = osal::kDefaultMasterSeed;
  unsigned threads = 0;
  bool normalize = false;
  bool progress = false;
};

struct Progress {
  bool enabled = false;
  std::mutex mutex;
  void operator()(std::string_view msg) {
    if (!enabled) return;
    std::lock_guard lock(mutex);
    std::cerr << "[osal] " << msg << std::endl;
  }
};

osal::FeatureFormat resolve_format(const CommonOptions& c) {
  return c.format.empty() ? osal::format_from_path(c.input) : osal::format_from_name(c.format);
}

osal::FeatureMatrix load_input(const CommonOptions& c) {
  return osal::run_stage("load", [&] {
    return osal::prepare_features(osal::load_features(c.input, resolve_format(c)), c.normalize);
  });
}

void add_input_options(CLI::App* cmd, CommonOptions& c) {
  cmd->add_option("--input", c.input, "Feature file (OSF1 or CSV)")->required();
  cmd->add_option("--format", c.format, "Feature format; inferred from the extension when omitted")
      ->check(CLI::IsMember({"osf1", "binary", "csv"}));
  cmd->add_flag("--normalize", c.normalize, "L2-normalize every feature row before use");
}

void add_run_options(CLI::App* cmd, CommonOptions& c) {
  cmd->add_option("--out-dir", c.out_dir, "Directory receiving the output files");
  cmd->add_option("--master-seed", c.master_seed, "Seed governing every random stream");
  cmd->add_option("--threads", c.threads, "Worker threads (default: $OSAL_THREADS, else all cores)");
  cmd->add_flag("--progress", c.progress, "Report progress on standard error");
}

void add_kmeans_options(CLI::App* cmd, osal::KMeansOptions& km) {
  cmd->add_option("--max-iters", km.max_iters, "Lloyd iteration cap")->check(CLI::PositiveNumber);
  cmd->add_option("--tol", km.tol, "Convergence tolerance relative to the bounding-box diagonal")
      ->check(CLI::NonNegativeNumber);
}

unsigned threads_of(const CommonOptions& c) { return osal::resolve_threads(c.threads); }

void emit(const osal::json& j) { std::cout << j.dump() << std::endl; }

// Reorders `labels` so that they follow `reference` ids. Both id sets must match.
std::vector<int> align_labels(const std::vector<std::string>& reference, const osal::LabelFile& file,
                              const std::string& what) {
  if (file.ids.size() != reference.size())
    throw osal::invalid_argument(what + ": " + std::to_string(file.ids.size()) + " labels for " +
                                 std::to_string(reference.size()) + " samples");
  if (file.ids == reference) return file.labels;
  std::unordered_map<std::string, int> by_id;
  for (std::size_t i = 0; i < file.ids.size(); ++i) by_id.emplace(file.ids[i], file.labels[i]);
  std::vector<int> out;
  out.reserve(reference.size());
  for (const auto& id : reference) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw osal::data_error(what + ": no label for id '" + id + "'");
    out.push_back(it->second);
  }
  return out;
}

// --- subcommands -------------------------------------------------------------------------------

struct SynthArgs {
  osal::SyntheticParams params;
  bool separation_set = false;
  fs::path out_dir = ".";
  std::string name = "features";
};

int run_synth(SynthArgs& a) {
  if (!a.separation_set) a.params.separation = 10.0 * a.params.spread;
  const auto gt = osal::generate_synthetic(a.params);
  const fs::path osf1 = a.out_dir / (a.name + ".osf1");
  const fs::path csv = a.out_dir / (a.name + ".csv");
  const fs::path truth = a.out_dir / (a.name + ".truth.csv");
  osal::save_features(gt.features, osf1, osal::FeatureFormat::osf1);
  osal::save_features(gt.features, csv, osal::FeatureFormat::csv);
  osal::write_file(truth, osal::encode_labels(gt.features.ids(), gt.true_labels));
  emit({{"n", gt.features.n()},
        {"d", gt.features.d()},
        {"k_true", gt.k_true},
        {"osf1", osf1.string()},
        {"csv", csv.string()},
        {"truth", truth.string()}});
  return 0;
}

struct SelectArgs {
  CommonOptions common;
  osal::SelectKOptions opt;
};

int run_select_k(SelectArgs& a, Progress& progress) {
  const auto f = load_input(a.common);
  a.opt.master_seed = a.common.master_seed;
  a.opt.threads = threads_of(a.common);
  if (a.common.progress) a.opt.on_k_done = [&](int k) { progress("finished K=" + std::to_string(k)); };
  const auto dm = osal::pairwise_distances(f, a.opt.threads);
  const auto report = osal::run_stage("select-k", [&] { return osal::select_k(f, dm, a.opt); });
  osal::write_artifacts(a.common.out_dir, osal::k_selection_artifacts(report));
  emit({{"chosen_k", report.chosen_k}, {"chosen_seed", report.chosen_seed}});
  return 0;
}

struct ClusterArgs {
  CommonOptions common;
  fs::path report;
  int k = 0;
  std::uint64_t seed = 0;
  osal::KMeansOptions kmeans;
};

int run_cluster(ClusterArgs& a) {
  int k = a.k;
  std::uint64_t seed = a.seed;
  if (!a.report.empty()) {
    const auto choice = osal::k_choice_from_text(osal::detail::read_file(a.report), a.report.string());
    k = choice.k;
    seed = choice.seed;
  } else if (k == 0) {
    throw osal::invalid_argument("either --report or --k is required");
  }
  const auto f = load_input(a.common);
  const auto ca = osal::run_stage("cluster", [&] { return osal::kmeans(f, k, seed, a.kmeans); });
  osal::write_artifacts(a.common.out_dir, osal::assignment_artifacts(ca, f));
  emit({{"k", ca.k}, {"seed", ca.seed}, {"inertia", ca.inertia}, {"iterations", ca.iterations}});
  return 0;
}

struct SampleArgs {
  CommonOptions common;
  fs::path assignment;
  int budget = 56;
};

int run_sample(SampleArgs& a) {
  const auto stored = osal::assignment_from_text(osal::detail::read_file(a.assignment), a.assignment.string());
  const auto f = load_input(a.common);
  if (stored.ids != f.ids())
    throw osal::data_error(a.assignment.string() + ": sample ids do not match " + a.common.input.string());
  const auto dm = osal::pairwise_distances(f, threads_of(a.common));
  const auto sel = osal::run_stage("sample", [&] {
    return osal::select_annotation_set(dm, stored.assignment, a.budget, f.ids());
  });
  osal::write_artifacts(a.common.out_dir, {osal::selection_artifact(sel)});
  emit({{"budget", sel.budget}, {"k", sel.k}, {"per_cluster", sel.per_cluster_count()}});
  return 0;
}

struct ScheduleArgs {
  CommonOptions common;
  fs::path selection;
  int epochs = 1000;
};

int run_schedule(ScheduleArgs& a) {
  const std::string text = osal::detail::read_file(a.selection);
  const auto sel = osal::selection_from_text(text, a.selection.string());
  const auto sched = osal::run_stage("schedule", [&] {
    return osal::balanced_schedule(sel, a.epochs, a.common.master_seed, threads_of(a.common));
  });
  osal::write_artifacts(a.common.out_dir, {osal::schedule_artifact(sched, text)});
  emit({{"epochs", sched.epochs}, {"batch_size", sched.batch_size}, {"batches_per_epoch", sched.batches_per_epoch()}});
  return 0;
}

struct MetricsArgs {
  CommonOptions common;
  fs::path labels_a;
  fs::path labels_b;
  bool silhouette = false;
};

int run_metrics(MetricsArgs& a) {
  if (a.labels_b.empty() && !a.silhouette)
    throw osal::invalid_argument("nothing to compute: give --labels-b and/or --silhouette");
  if (a.silhouette && a.common.input.empty()) throw osal::invalid_argument("--silhouette requires --input");

  const auto la = osal::load_labels(a.labels_a);
  osal::json out = {{"schema", osal::kMetricsSchema}, {"n", la.labels.size()}};
  if (!a.labels_b.empty()) {
    const auto lb = osal::load_labels(a.labels_b);
    const auto b = align_labels(la.ids, lb, a.labels_b.string());
    out["rand_index"] = osal::rand_index(la.labels, b);
    out["adjusted_rand_index"] = osal::adjusted_rand_index(la.labels, b);
  }
  if (a.silhouette) {
    const auto f = load_input(a.common);
    const auto labels = align_labels(f.ids(), la, a.labels_a.string());
    const auto dm = osal::pairwise_distances(f, threads_of(a.common));
    out["silhouette"] = osal::silhouette(dm, labels);
  }
  emit(out);
  return 0;
}

struct PipelineArgs {
  CommonOptions common;
  osal::PipelineConfig cfg;
};

int run_pipeline(PipelineArgs& a, Progress& progress) {
  auto& cfg = a.cfg;
  cfg.input = a.common.input;
  cfg.format = resolve_format(a.common);
  cfg.master_seed = a.common.master_seed;
  cfg.normalize = a.common.normalize;
  cfg.threads = threads_of(a.common);
  osal::validate(cfg);
  const auto f = load_input(a.common);
  const auto result = osal::run_pipeline(f, cfg, [&](std::string_view msg) { progress(msg); });
  osal::write_artifacts(a.common.out_dir, result.artifacts);
  emit({{"chosen_k", result.report.chosen_k},
        {"chosen_seed", result.report.chosen_seed},
        {"budget", result.selection.budget},
        {"batch_size", result.schedule.batch_size},
        {"batches_per_epoch", result.schedule.batches_per_epoch()},
        {"manifest", (a.common.out_dir / osal::files::manifest).string()}});
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"One-shot active-learning sample selection"};
  app.set_version_flag("--version", std::string(osal::kVersion));
  app.require_subcommand(1);
  Progress progress;

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic Gaussian-mixture feature file");
  synth_cmd->add_option("--k", synth.params.k_true, "Number of components")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--n-per-cluster", synth.params.n_per_cluster, "Samples per component")
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--dim", synth.params.d, "Embedding dimension")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--spread", synth.params.spread, "Per-component standard deviation")
      ->check(CLI::PositiveNumber);
  synth_cmd->add_option("--separation", synth.params.separation, "Minimum center distance (default 10 x spread)")
      ->check(CLI::PositiveNumber)
      ->each([&](const std::string&) { synth.separation_set = true; });
  synth_cmd->add_option("--seed", synth.params.seed, "Generator seed");
  synth_cmd->add_option("--out-dir", synth.out_dir, "Output directory");
  synth_cmd->add_option("--name", synth.name, "Base file name");

  SelectArgs sel;
  auto* select_cmd = app.add_subcommand("select-k", "Choose K by multi-seed ARI stability and silhouette");
  add_input_options(select_cmd, sel.common);
  add_run_options(select_cmd, sel.common);
  add_kmeans_options(select_cmd, sel.opt.kmeans);
  select_cmd->add_option("--k-min", sel.opt.k_min, "Smallest candidate K");
  select_cmd->add_option("--k-max", sel.opt.k_max, "Largest candidate K");
  select_cmd->add_option("--n-seeds", sel.opt.n_seeds, "K-means runs per candidate");
  select_cmd->add_option("--top-t", sel.opt.top_t, "Stability-ranked candidates refined by silhouette");

  ClusterArgs cl;
  auto* cluster_cmd = app.add_subcommand("cluster", "Run K-means at a given or selected (K, seed)");
  add_input_options(cluster_cmd, cl.common);
  add_run_options(cluster_cmd, cl.common);
  add_kmeans_options(cluster_cmd, cl.kmeans);
  cluster_cmd->add_option("--report", cl.report, "k_selection.json providing K and seed");
  cluster_cmd->add_option("--k", cl.k, "Cluster count");
  cluster_cmd->add_option("--seed", cl.seed, "K-means seed");

  SampleArgs sa;
  auto* sample_cmd = app.add_subcommand("sample", "Pick the annotation set by per-cluster farthest-point sampling");
  add_input_options(sample_cmd, sa.common);
  add_run_options(sample_cmd, sa.common);
  sample_cmd->add_option("--assignment", sa.assignment, "assignment.json from `cluster`")->required();
  sample_cmd->add_option("--budget", sa.budget, "Annotation budget (divisible by K)");

  ScheduleArgs sc;
  auto* schedule_cmd = app.add_subcommand("schedule", "Build the cluster-balanced batch schedule");
  add_run_options(schedule_cmd, sc.common);
  schedule_cmd->add_option("--selection", sc.selection, "selection.json from `sample`")->required();
  schedule_cmd->add_option("--epochs", sc.epochs, "Number of epochs");

  MetricsArgs me;
  auto* metrics_cmd = app.add_subcommand("metrics", "Rand index, ARI and silhouette for label files");
  metrics_cmd->add_option("--labels-a", me.labels_a, "Label file (id,label)")->required();
  metrics_cmd->add_option("--labels-b", me.labels_b, "Second label file to compare against");
  metrics_cmd->add_option("--input", me.common.input, "Feature file, needed for --silhouette");
  metrics_cmd->add_option("--format", me.common.format, "Feature format")->check(CLI::IsMember({"osf1", "binary", "csv"}));
  metrics_cmd->add_flag("--normalize", me.common.normalize, "L2-normalize features");
  metrics_cmd->add_flag("--silhouette", me.silhouette, "Also compute the silhouette of --labels-a");
  metrics_cmd->add_option("--threads", me.common.threads, "Worker threads");

  PipelineArgs pl;
  auto* pipeline_cmd = app.add_subcommand("pipeline", "select-k, cluster, sample and schedule in one run");
  add_input_options(pipeline_cmd, pl.common);
  add_run_options(pipeline_cmd, pl.common);
  add_kmeans_options(pipeline_cmd, pl.cfg.kmeans);
  pipeline_cmd->add_option("--k-min", pl.cfg.k_min, "Smallest candidate K");
  pipeline_cmd->add_option("--k-max", pl.cfg.k_max, "Largest candidate K");
  pipeline_cmd->add_option("--n-seeds", pl.cfg.n_seeds, "K-means runs per candidate");
  pipeline_cmd->add_option("--top-t", pl.cfg.top_t, "Stability-ranked candidates refined by silhouette");
  pipeline_cmd->add_option("--budget", pl.cfg.budget, "Annotation budget (divisible by the chosen K)");
  pipeline_cmd->add_option("--epochs", pl.cfg.epochs, "Schedule epochs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  const char* stage = app.get_subcommands().front()->get_name().c_str();
  try {
    if (*synth_cmd) return run_synth(synth);
    if (*select_cmd) {
      progress.enabled = sel.common.progress;
      return run_select_k(sel, progress);
    }
    if (*cluster_cmd) return run_cluster(cl);
    if (*sample_cmd) return run_sample(sa);
    if (*schedule_cmd) return run_schedule(sc);
    if (*metrics_cmd) return run_metrics(me);
    if (*pipeline_cmd) {
      progress.enabled = pl.common.progress;
      return run_pipeline(pl, progress);
    }
  } catch (const osal::invalid_argument& e) {
    std::cerr << "osal " << stage << ": usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const osal::data_error& e) {
    std::cerr << "osal " << stage << ": data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "osal " << stage << ": failed: " << e.what() << "\n";
    return kExitStage;
  }
  return kExitUsage;
}
