#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "exalt/labeling.hpp"
#include "exalt/robustness.hpp"
#include "exalt/shap.hpp"
#include "exalt/surrogate.hpp"
#include "exalt/tuning.hpp"
#include "exalt/validation.hpp"

namespace exalt {

// The report is a pure serialization surface: every number in it was
// computed by some module and copied in verbatim.

struct DatasetSummary {
    std::size_t n = 0;
    std::size_t d = 0;
    std::vector<std::string> feature_names;
    bool standardized = false;
    std::string source; // file path or synth family

    bool operator==(const DatasetSummary&) const = default;
};

struct AlgorithmSummary {
    std::string algorithm; // kmeans | dbscan | gmm
    std::size_t k = 0;
    std::size_t max_iter = 0;
    std::size_t restarts = 0;
    double tol = 0;
    double eps = 0;
    std::size_t min_pts = 0;
    std::string metric;
    std::optional<std::size_t> dtw_band;
    std::uint64_t seed = 0; // master seed

    bool operator==(const AlgorithmSummary&) const = default;
};

struct TuningSummary {
    std::optional<TuningCurve> elbow;
    std::optional<TuningCurve> silhouette;
    std::optional<std::vector<double>> kdist;
    std::string binding; // which scan picked the final parameter, or "none"

    bool operator==(const TuningSummary&) const = default;
};

struct StabilitySummary {
    double global_stability = 0;
    std::size_t runs = 0;
    double noise_scale = 0;
    double fragile_threshold = 0;
    double mean_per_point = 0;
    std::vector<std::size_t> fragile_points;
    std::string per_point_file; // stability.csv

    bool operator==(const StabilitySummary&) const = default;
};

struct AlternativeRow {
    double quality = 0;
    double diversity = 0;
    std::size_t n_clusters = 0;
    std::string provenance;

    bool operator==(const AlternativeRow&) const = default;
};

struct AlternativesSummary {
    std::vector<AlternativeRow> rows;
    bool empty_pool = false;

    bool operator==(const AlternativesSummary&) const = default;
};

struct SurrogateSummary {
    RuleList rules;
    std::vector<std::string> rule_text; // rendered with feature names
    double fidelity = 0;
    std::size_t depth = 0;
    std::size_t leaves = 0;
    std::size_t max_depth = 0;
    std::size_t min_leaf = 0;

    bool operator==(const SurrogateSummary&) const = default;
};

struct ClusterTopFeatures {
    int cluster = 0;
    std::vector<std::size_t> features; // top-3 by mean |phi|

    bool operator==(const ClusterTopFeatures&) const = default;
};

struct ImportanceSummary {
    GlobalImportance global;
    std::vector<ClusterTopFeatures> per_cluster;
    std::string method;        // kernel | tree
    std::string explains;      // what the phi values explain
    std::string per_row_file;  // shap.csv

    bool operator==(const ImportanceSummary&) const = default;
};

struct EmbeddingSummary {
    std::string method;
    std::string params;
    double quality = 0; // trustworthiness
    std::string file;   // embedding.csv

    bool operator==(const EmbeddingSummary&) const = default;
};

struct Provenance {
    std::string tool_version;
    std::string config_hash;
    std::string timestamp; // the one field excluded from determinism checks

    bool operator==(const Provenance&) const = default;
};

struct Report {
    DatasetSummary dataset;
    AlgorithmSummary algorithm;
    std::map<int, std::size_t> cluster_sizes; // from the labeling; -1 = noise
    ValidationScores validation;
    std::optional<TuningSummary> tuning;
    std::optional<StabilitySummary> stability;
    std::optional<AlternativesSummary> alternatives;
    std::optional<SurrogateSummary> surrogate;
    std::optional<ImportanceSummary> importance;
    std::optional<EmbeddingSummary> embedding;
    Provenance provenance;

    bool operator==(const Report&) const = default;
};

// Everything the pipeline may have produced. labels and validation are
// mandatory; absent sections render as "not run".
struct ReportInputs {
    DatasetSummary dataset;
    AlgorithmSummary algorithm;
    std::optional<Labeling> labels;
    std::optional<ValidationScores> validation;
    std::optional<TuningSummary> tuning;
    std::optional<StabilityReport> stability;
    std::optional<AlternativeSet> alternatives;
    std::optional<SurrogateTree> surrogate_tree;
    std::optional<double> surrogate_fidelity;
    std::optional<ImportanceSummary> importance;
    std::optional<EmbeddingSummary> embedding;
    std::string config_hash;
    std::string timestamp;
};

Report build_report(const ReportInputs& inputs);

enum class ReportFormat { json, markdown };

// Throws ConfigError on anything but "json" / "markdown".
ReportFormat report_format_from_string(const std::string& name);

std::string render(const Report& report, ReportFormat format);

// Inverse of render(report, json).
Report parse_report(const std::string& json_text);

// FNV-1a 64-bit hex digest; used for the config provenance hash.
std::string fnv1a_hex(const std::string& bytes);

inline constexpr const char* kToolVersion = "exalt 1.0.0";

} // namespace exalt
