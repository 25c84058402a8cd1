#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "exalt/clustering.hpp"
#include "exalt/dataset.hpp"
#include "exalt/labeling.hpp"
#include "exalt/report.hpp"
#include "exalt/shap.hpp"

namespace exalt {

// Config sub-blocks. A block being present in the config switches its
// stage on; every field has a default so blocks can be given sparsely.

struct SynthSpec {
    std::string family; // blobs | event_sequences | multistage
    std::size_t k = 3;
    std::size_t per_cluster = 100;
    std::size_t d = 2;
    double separation = 6.0;
    std::size_t base_len = 40;
    double noise = 0.1;
    std::size_t stages = 3;
};

struct TuningSpec {
    std::size_t k_min = 2;
    std::size_t k_max = 10;
    std::string binding; // elbow | silhouette | kdist | none; resolved at parse
};

struct StabilitySpec {
    std::size_t runs = 20;
    double noise_scale = 0.05;
    double fragile_threshold = 0.5;
};

struct SurrogateSpec {
    std::size_t max_depth = 4;
    std::size_t min_leaf = 0; // 0 = max(5, n/100)
};

struct ShapSpec {
    std::string method = "tree"; // tree | kernel
    std::size_t nsamples = 2048; // kernel only
    std::size_t background = 100; // kernel only: background sample size
};

struct EmbeddingSpec {
    std::string method = "tsne"; // tsne | pca
    double perplexity = 30.0;
    std::size_t iters = 1000;
};

struct PipelineConfig {
    std::optional<std::string> input; // CSV path; exactly one of input/synth
    std::optional<SynthSpec> synth;
    std::optional<std::string> label_column; // truth column in the input CSV
    bool standardize = true;
    ClusterAlgoConfig algo;
    std::optional<TuningSpec> tuning;
    std::optional<StabilitySpec> stability;
    std::optional<std::size_t> alternatives;
    std::optional<SurrogateSpec> surrogate;
    std::optional<ShapSpec> shap;
    std::optional<EmbeddingSpec> embedding;
    std::uint64_t seed = 42;
    std::string out_dir = ".";
    std::string format = "both"; // json | markdown | both
    std::optional<unsigned> threads;

    // explain mode: labels come from this column of the input instead of a
    // clustering fit; tune/fit/stability/alternatives are skipped. Set by
    // the CLI, not by the JSON schema.
    std::optional<std::string> labels_column;
};

// Parses and validates the JSON config. Unknown keys anywhere are
// ConfigErrors naming the key; so are out-of-range values.
PipelineConfig parse_config(const std::string& json_text);

// The config re-serialized with every default filled in, keys sorted.
// Presentation-only settings (out_dir, format, threads) are excluded, so
// the provenance hash covers exactly what influences the numbers.
std::string canonical_config(const PipelineConfig& cfg);

struct PipelineArtifacts {
    Dataset data; // as analyzed (post-standardization)
    Labeling labels;
    Report report;
    std::optional<Matrix> embedding_coords; // n x 2
    std::optional<std::vector<ShapExplanation>> shap_rows;
    std::optional<std::vector<double>> stability_per_point;
    std::optional<std::vector<std::size_t>> fragile_points;
    double fragile_threshold = 0.5;
};

// The synth stage alone: generates the configured family with the stage
// seed derived from `master_seed` exactly as `run` derives it.
Dataset synth_dataset(const SynthSpec& spec, std::uint64_t master_seed);

// Runs the enabled stages in fixed order: load/synth, standardize, tune,
// fit, validate, stability, alternatives, surrogate, shap, embed, report.
// Throws ConfigError for config-level problems and StageError (naming the
// stage) for runtime failures. Does not write files.
PipelineArtifacts run_pipeline(const PipelineConfig& cfg);

// Writes report.json / report.md per `format` plus embedding.csv, shap.csv
// and stability.csv for whichever artifacts are present.
void write_outputs(const PipelineArtifacts& artifacts, const std::string& out_dir,
                   const std::string& format);

// ISO 8601 UTC, second resolution.
std::string timestamp_utc_now();

} // namespace exalt
