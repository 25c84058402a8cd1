#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "exalt/dataset.hpp"
#include "exalt/distance.hpp"
#include "exalt/error.hpp"
#include "exalt/log.hpp"
#include "exalt/pipeline.hpp"
#include "exalt/validation.hpp"

namespace {

struct CommonFlags {
    std::string out_dir;
    std::uint64_t seed = 0;
    unsigned threads = 0;
    std::string format;
    CLI::Option* out_opt = nullptr;
    CLI::Option* seed_opt = nullptr;
    CLI::Option* threads_opt = nullptr;
    CLI::Option* format_opt = nullptr;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool with_format = true) {
    f.out_opt = cmd->add_option("-o,--out-dir", f.out_dir, "Output directory");
    f.seed_opt = cmd->add_option("--seed", f.seed, "Master seed");
    f.threads_opt = cmd->add_option("--threads", f.threads, "Worker thread cap");
    if (with_format)
        f.format_opt = cmd->add_option("--format", f.format, "json, markdown or both");
}

void apply_common(exalt::PipelineConfig& cfg, const CommonFlags& f) {
    if (f.out_opt->count()) cfg.out_dir = f.out_dir;
    if (f.seed_opt->count()) cfg.seed = f.seed;
    if (f.threads_opt->count()) {
        if (f.threads == 0) throw exalt::ConfigError("--threads must be >= 1");
        cfg.threads = f.threads;
    }
    if (f.format_opt && f.format_opt->count()) {
        if (f.format != "json" && f.format != "markdown" && f.format != "both")
            throw exalt::ConfigError("unknown format '" + f.format +
                                     "' (valid: json, markdown, both)");
        cfg.format = f.format;
    }
}

std::string slurp(const std::string& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw exalt::ConfigError(std::string("cannot open ") + what + " '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

int do_run(const std::string& config_path, const CommonFlags& flags) {
    exalt::PipelineConfig cfg = exalt::parse_config(slurp(config_path, "config file"));
    apply_common(cfg, flags);
    auto artifacts = exalt::run_pipeline(cfg);
    exalt::write_outputs(artifacts, cfg.out_dir, cfg.format);
    exalt::log_info("wrote outputs to '" + cfg.out_dir + "'");
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    exalt::init_log_from_env();

    CLI::App app{"exalt: explainable clustering toolkit"};
    app.require_subcommand(1);

    auto* run_cmd = app.add_subcommand("run", "Run the configured pipeline");
    std::string config_path;
    run_cmd->add_option("config", config_path, "JSON config file")->required();
    CommonFlags run_flags;
    add_common(run_cmd, run_flags);

    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset CSV");
    std::string family;
    synth_cmd->add_option("family", family, "blobs, event_sequences or multistage")->required();
    exalt::SynthSpec synth_defaults;
    std::size_t sy_k = synth_defaults.k, sy_per = synth_defaults.per_cluster,
                sy_d = synth_defaults.d, sy_len = synth_defaults.base_len,
                sy_stages = synth_defaults.stages;
    double sy_sep = synth_defaults.separation, sy_noise = synth_defaults.noise;
    std::string synth_out;
    auto* k_opt = synth_cmd->add_option("--k", sy_k, "Number of clusters");
    auto* per_opt = synth_cmd->add_option("--per-cluster", sy_per, "Rows per cluster");
    auto* d_opt = synth_cmd->add_option("--d", sy_d, "Feature count (blobs)");
    auto* sep_opt = synth_cmd->add_option("--separation", sy_sep, "Center separation (blobs)");
    auto* len_opt = synth_cmd->add_option("--base-len", sy_len, "Base length (event_sequences)");
    auto* noise_opt = synth_cmd->add_option("--noise", sy_noise, "Noise scale (event_sequences)");
    auto* stages_opt = synth_cmd->add_option("--stages", sy_stages, "Stage count (multistage)");
    synth_cmd->add_option("-o,--out", synth_out, "Output CSV path")->required();
    std::uint64_t synth_seed = 42;
    synth_cmd->add_option("--seed", synth_seed, "Master seed");

    auto* explain_cmd =
        app.add_subcommand("explain", "Fit surrogate rules and SHAP for given labels");
    std::string explain_csv, explain_labels, explain_truth, shap_method = "tree";
    std::size_t ex_depth = 4, ex_min_leaf = 0, ex_nsamples = 2048, ex_background = 100;
    bool ex_raw = false;
    explain_cmd->add_option("csv", explain_csv, "Input CSV")->required();
    explain_cmd->add_option("--labels", explain_labels, "Cluster label column")->required();
    auto* truth_opt = explain_cmd->add_option("--truth", explain_truth, "Ground truth column");
    explain_cmd->add_option("--max-depth", ex_depth, "Surrogate tree depth cap");
    explain_cmd->add_option("--min-leaf", ex_min_leaf, "Minimum rows per leaf (0 = auto)");
    explain_cmd->add_option("--method", shap_method, "SHAP method: tree or kernel");
    explain_cmd->add_option("--nsamples", ex_nsamples, "Kernel SHAP coalition budget");
    explain_cmd->add_option("--background", ex_background, "Kernel SHAP background size");
    explain_cmd->add_flag("--no-standardize", ex_raw, "Skip feature standardization");
    CommonFlags explain_flags;
    add_common(explain_cmd, explain_flags);

    auto* validate_cmd = app.add_subcommand("validate", "Score a labeling against ground truth");
    std::string val_csv, val_labels, val_truth;
    bool val_raw = false;
    validate_cmd->add_option("csv", val_csv, "Input CSV")->required();
    validate_cmd->add_option("--labels", val_labels, "Cluster label column")->required();
    validate_cmd->add_option("--truth", val_truth, "Ground truth column")->required();
    validate_cmd->add_flag("--no-standardize", val_raw, "Skip feature standardization");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (run_cmd->parsed()) return do_run(config_path, run_flags);

        if (synth_cmd->parsed()) {
            exalt::SynthSpec spec;
            spec.family = family;
            if (family != "blobs" && family != "event_sequences" && family != "multistage")
                throw exalt::ConfigError("unknown synth family '" + family +
                                         "' (valid: blobs, event_sequences, multistage)");
            auto applies = [&](CLI::Option* opt, const char* name, const char* fam) {
                if (opt->count() && family != fam)
                    throw exalt::ConfigError(std::string("--") + name +
                                             " does not apply to family '" + family + "'");
            };
            applies(d_opt, "d", "blobs");
            applies(sep_opt, "separation", "blobs");
            applies(len_opt, "base-len", "event_sequences");
            applies(noise_opt, "noise", "event_sequences");
            applies(stages_opt, "stages", "multistage");
            if (k_opt->count()) spec.k = sy_k;
            if (per_opt->count()) spec.per_cluster = sy_per;
            spec.d = sy_d;
            spec.separation = sy_sep;
            spec.base_len = sy_len;
            spec.noise = sy_noise;
            spec.stages = sy_stages;
            if (spec.k < 1 || spec.per_cluster < 1)
                throw exalt::ConfigError("--k and --per-cluster must be >= 1");

            exalt::Dataset ds = exalt::synth_dataset(spec, synth_seed);
            std::ofstream out(synth_out);
            if (!out) throw exalt::StageError("report", "cannot write '" + synth_out + "'");
            exalt::write_csv(ds, out);
            exalt::log_info("wrote " + std::to_string(ds.n()) + " rows to '" + synth_out + "'");
            return 0;
        }

        if (explain_cmd->parsed()) {
            if (shap_method != "tree" && shap_method != "kernel")
                throw exalt::ConfigError("unknown shap method '" + shap_method +
                                         "' (valid: tree, kernel)");
            if (ex_depth < 1) throw exalt::ConfigError("--max-depth must be >= 1");
            if (ex_nsamples < 2) throw exalt::ConfigError("--nsamples must be >= 2");
            if (ex_background < 1) throw exalt::ConfigError("--background must be >= 1");
            exalt::PipelineConfig cfg;
            cfg.input = explain_csv;
            cfg.labels_column = explain_labels;
            if (truth_opt->count()) cfg.label_column = explain_truth;
            cfg.standardize = !ex_raw;
            cfg.surrogate = exalt::SurrogateSpec{ex_depth, ex_min_leaf};
            cfg.shap = exalt::ShapSpec{shap_method, ex_nsamples, ex_background};
            apply_common(cfg, explain_flags);
            auto artifacts = exalt::run_pipeline(cfg);
            exalt::write_outputs(artifacts, cfg.out_dir, cfg.format);
            exalt::log_info("wrote outputs to '" + cfg.out_dir + "'");
            return 0;
        }

        if (validate_cmd->parsed()) {
            std::istringstream in(slurp(val_csv, "input file"));
            exalt::Dataset ds = exalt::load_csv(in);
            auto [ds1, labels] = exalt::take_label_column(ds, val_labels);
            auto [ds2, truth] = exalt::take_label_column(ds1, val_truth);
            if (!val_raw) ds2 = exalt::standardize(ds2).first;
            auto dm = exalt::pairwise(ds2, exalt::Metric::euclidean);
            auto scores = exalt::compute_scores(ds2, dm, labels, truth);
            nlohmann::json j;
            j["silhouette"] = scores.silhouette;
            j["davies_bouldin"] = scores.davies_bouldin;
            j["calinski_harabasz"] = scores.calinski_harabasz;
            j["ari"] = scores.ari ? nlohmann::json(*scores.ari) : nlohmann::json(nullptr);
            j["nmi"] = scores.nmi ? nlohmann::json(*scores.nmi) : nlohmann::json(nullptr);
            j["n_noise_excluded"] = scores.n_noise_excluded;
            std::cout << j.dump(2) << "\n";
            return 0;
        }
    } catch (const exalt::ConfigError& e) {
        exalt::log_error(e.what());
        return 1;
    } catch (const exalt::StageError& e) {
        exalt::log_error(e.what());
        return 2;
    } catch (const std::exception& e) {
        exalt::log_error(e.what());
        return 2;
    }
    return 0;
}
