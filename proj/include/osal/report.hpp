#pragma once

// JSON documents exchanged between subcommands and with external tooling. Every document
// carries a "schema" tag of the form "osal.<kind>/<version>".

#include <openssl/evp.h>

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

#include "json.hpp"

#include "osal/error.hpp"
#include "osal/k_selection.hpp"
#include "osal/kmeans.hpp"
#include "osal/sampling.hpp"
#include "osal/scheduling.hpp"

namespace osal {

using json = nlohmann::ordered_json;

inline constexpr std::string_view kKSelectionSchema = "osal.k_selection/1";
inline constexpr std::string_view kSweepLogSchema = "osal.sweep_log/1";
inline constexpr std::string_view kAssignmentSchema = "osal.assignment/1";
inline constexpr std::string_view kSelectionSchema = "osal.selection/1";
inline constexpr std::string_view kScheduleSchema = "osal.schedule/1";
inline constexpr std::string_view kManifestSchema = "osal.manifest/1";
inline constexpr std::string_view kMetricsSchema = "osal.metrics/1";

inline std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1)
    throw error("SHA-256 computation failed");
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

// Canonical on-disk text of a document.
inline std::string to_text(const json& doc) { return doc.dump(2) + "\n"; }

inline json parse_document(std::string_view text, std::string_view expected_schema, std::string_view origin) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw data_error(std::string(origin) + ": invalid JSON: " + e.what());
  }
  if (!doc.is_object() || !doc.contains("schema") || doc["schema"] != expected_schema)
    throw data_error(std::string(origin) + ": expected a document with schema '" + std::string(expected_schema) + "'");
  return doc;
}

// Wraps JSON access errors of a typed reader into data_error.
template <typename Fn>
auto read_document(std::string_view text, std::string_view schema, std::string_view origin, Fn&& fn) {
  const json doc = parse_document(text, schema, origin);
  try {
    return fn(doc);
  } catch (const json::exception& e) {
    throw data_error(std::string(origin) + ": malformed document: " + e.what());
  }
}

// --- k selection -----------------------------------------------------------------------------

inline json k_selection_to_json(const KSelectionReport& r) {
  json stats = json::array();
  for (const auto& s : r.stats)
    stats.push_back({{"k", s.k},
                     {"avg_ari", s.avg_ari},
                     {"hi_seed", s.hi_seed},
                     {"hi_score", s.hi_score},
                     {"ari_samples", s.ari_samples}});
  return {{"schema", kKSelectionSchema},
          {"chosen_k", r.chosen_k},
          {"chosen_seed", r.chosen_seed},
          {"top_t", r.top_t},
          {"n_seeds", r.n_seeds},
          {"master_seed", r.master_seed},
          {"ranking", r.ranking},
          {"stats", std::move(stats)}};
}

inline json sweep_log_to_json(const KSelectionReport& r) {
  json runs = json::array();
  for (const auto& rec : r.runs) {
    json j = {{"k", rec.k}, {"seed_index", rec.seed_index}, {"seed", rec.seed}, {"silhouette", rec.silhouette}};
    j["ari_to_previous"] = rec.ari_to_previous ? json(*rec.ari_to_previous) : json(nullptr);
    j["inertia"] = rec.inertia;
    j["iterations"] = rec.iterations;
    runs.push_back(std::move(j));
  }
  return {{"schema", kSweepLogSchema}, {"master_seed", r.master_seed}, {"n_seeds", r.n_seeds}, {"runs", std::move(runs)}};
}

inline std::vector<SweepRecord> sweep_log_from_text(std::string_view text, std::string_view origin = "sweep log") {
  return read_document(text, kSweepLogSchema, origin, [](const json& doc) {
    std::vector<SweepRecord> runs;
    for (const auto& j : doc.at("runs")) {
      SweepRecord rec;
      rec.k = j.at("k").get<int>();
      rec.seed_index = j.at("seed_index").get<int>();
      rec.seed = j.at("seed").get<std::uint64_t>();
      rec.silhouette = j.at("silhouette").get<double>();
      if (!j.at("ari_to_previous").is_null()) rec.ari_to_previous = j.at("ari_to_previous").get<double>();
      rec.inertia = j.at("inertia").get<double>();
      rec.iterations = j.at("iterations").get<int>();
      runs.push_back(rec);
    }
    return runs;
  });
}

struct KChoice {
  int k = 0;
  std::uint64_t seed = 0;
};

inline KChoice k_choice_from_text(std::string_view text, std::string_view origin = "k selection report") {
  return read_document(text, kKSelectionSchema, origin, [](const json& doc) {
    return KChoice{doc.at("chosen_k").get<int>(), doc.at("chosen_seed").get<std::uint64_t>()};
  });
}

// --- cluster assignment ----------------------------------------------------------------------

inline json assignment_to_json(const ClusterAssignment& ca, const std::vector<std::string>& ids) {
  json centroids = json::array();
  for (int c = 0; c < ca.k; ++c) {
    const auto row = ca.centroid(c);
    centroids.push_back(std::vector<double>(row.begin(), row.end()));
  }
  return {{"schema", kAssignmentSchema},
          {"k", ca.k},
          {"seed", ca.seed},
          {"n", ca.labels.size()},
          {"d", ca.d},
          {"inertia", ca.inertia},
          {"iterations", ca.iterations},
          {"cluster_sizes", ca.cluster_sizes()},
          {"ids", ids},
          {"labels", ca.labels},
          {"centroids", std::move(centroids)}};
}

struct StoredAssignment {
  ClusterAssignment assignment;
  std::vector<std::string> ids;
};

inline StoredAssignment assignment_from_text(std::string_view text, std::string_view origin = "assignment") {
  return read_document(text, kAssignmentSchema, origin, [&](const json& doc) {
    StoredAssignment out;
    auto& ca = out.assignment;
    ca.k = doc.at("k").get<int>();
    ca.seed = doc.at("seed").get<std::uint64_t>();
    ca.d = doc.at("d").get<std::size_t>();
    ca.inertia = doc.at("inertia").get<double>();
    ca.iterations = doc.at("iterations").get<int>();
    ca.labels = doc.at("labels").get<std::vector<int>>();
    for (const auto& row : doc.at("centroids"))
      for (const auto& v : row) ca.centroids.push_back(v.get<double>());
    out.ids = doc.at("ids").get<std::vector<std::string>>();
    if (out.ids.size() != ca.labels.size() || ca.centroids.size() != static_cast<std::size_t>(ca.k) * ca.d)
      throw data_error(std::string(origin) + ": inconsistent assignment sizes");
    for (int l : ca.labels)
      if (l < 0 || l >= ca.k) throw data_error(std::string(origin) + ": label " + std::to_string(l) + " outside [0, k)");
    return out;
  });
}

// --- annotation selection --------------------------------------------------------------------

inline json selection_to_json(const AnnotationSelection& sel) {
  json clusters = json::array();
  for (std::size_t c = 0; c < sel.per_cluster_ids.size(); ++c)
    clusters.push_back({{"cluster", c}, {"ids", sel.per_cluster_ids[c]}, {"indices", sel.per_cluster_indices[c]}});
  return {{"schema", kSelectionSchema},
          {"budget", sel.budget},
          {"k", sel.k},
          {"per_cluster", sel.per_cluster_count()},
          {"assignment", {{"k", sel.k}, {"seed", sel.assignment_seed}}},
          {"clusters", std::move(clusters)}};
}

inline AnnotationSelection selection_from_text(std::string_view text, std::string_view origin = "selection") {
  return read_document(text, kSelectionSchema, origin, [&](const json& doc) {
    AnnotationSelection sel;
    sel.budget = doc.at("budget").get<int>();
    sel.k = doc.at("k").get<int>();
    sel.assignment_seed = doc.at("assignment").at("seed").get<std::uint64_t>();
    for (const auto& c : doc.at("clusters")) {
      sel.per_cluster_ids.push_back(c.at("ids").get<std::vector<std::string>>());
      sel.per_cluster_indices.push_back(c.at("indices").get<std::vector<std::size_t>>());
    }
    if (sel.per_cluster_ids.size() != static_cast<std::size_t>(sel.k))
      throw data_error(std::string(origin) + ": cluster count does not match k");
    return sel;
  });
}

// --- batch schedule --------------------------------------------------------------------------

// `selection_sha256` is the SHA-256 of the selection document's canonical text.
inline json schedule_to_json(const BatchSchedule& s, std::string_view selection_sha256) {
  return {{"schema", kScheduleSchema},
          {"epochs", s.epochs},
          {"batch_size", s.batch_size},
          {"k", s.k},
          {"batches_per_epoch", s.batches_per_epoch()},
          {"seed", s.seed},
          {"selection_sha256", selection_sha256},
          {"schedule", s.batches}};
}

struct StoredSchedule {
  BatchSchedule schedule;
  std::string selection_sha256;
};

inline StoredSchedule schedule_from_text(std::string_view text, std::string_view origin = "schedule") {
  return read_document(text, kScheduleSchema, origin, [](const json& doc) {
    StoredSchedule out;
    out.schedule.epochs = doc.at("epochs").get<int>();
    out.schedule.batch_size = doc.at("batch_size").get<int>();
    out.schedule.k = doc.at("k").get<int>();
    out.schedule.seed = doc.at("seed").get<std::uint64_t>();
    out.schedule.batches = doc.at("schedule").get<std::vector<std::vector<Batch>>>();
    out.selection_sha256 = doc.at("selection_sha256").get<std::string>();
    return out;
  });
}

}  // namespace osal
