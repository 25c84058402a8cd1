#include "exalt/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <utility>

#include "json.hpp"

#include "exalt/embedding.hpp"
#include "exalt/error.hpp"
#include "exalt/log.hpp"
#include "exalt/parallel.hpp"
#include "exalt/rng.hpp"
#include "exalt/robustness.hpp"
#include "exalt/tuning.hpp"
#include "exalt/validation.hpp"

namespace exalt {

using nlohmann::json;

namespace {

// Fixed stage offsets: enabling or disabling one stage never shifts the
// randomness another stage sees.
constexpr std::uint64_t kSeedSynth = 1;
constexpr std::uint64_t kSeedTune = 2;
constexpr std::uint64_t kSeedFit = 3;
constexpr std::uint64_t kSeedStability = 4;
constexpr std::uint64_t kSeedAlternatives = 5;
constexpr std::uint64_t kSeedShap = 6;
constexpr std::uint64_t kSeedEmbed = 7;

// Exact tsne is quadratic in rows; larger inputs should use pca.
constexpr std::size_t kTsneMaxRows = 5000;

template <typename F>
auto stage(const char* name, F&& fn) -> decltype(fn()) {
    log_debug(std::string("stage ") + name);
    try {
        return fn();
    } catch (const StageError&) {
        throw;
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw StageError(name, e.what());
    }
}

[[noreturn]] void bad_key(const std::string& scope, const std::string& key) {
    throw ConfigError("unknown config key '" + (scope.empty() ? key : scope + "." + key) + "'");
}

std::size_t get_count(const json& v, const std::string& key, std::size_t min_value) {
    if (!v.is_number_integer() || (v.is_number_integer() && v.get<long long>() < 0))
        throw ConfigError("config key '" + key + "' must be a non-negative integer");
    auto n = static_cast<std::size_t>(v.get<long long>());
    if (n < min_value)
        throw ConfigError("config key '" + key + "' must be >= " + std::to_string(min_value));
    return n;
}

double get_real(const json& v, const std::string& key) {
    if (!v.is_number()) throw ConfigError("config key '" + key + "' must be a number");
    return v.get<double>();
}

std::string get_string(const json& v, const std::string& key) {
    if (!v.is_string()) throw ConfigError("config key '" + key + "' must be a string");
    return v.get<std::string>();
}

bool get_bool(const json& v, const std::string& key) {
    if (!v.is_boolean()) throw ConfigError("config key '" + key + "' must be a boolean");
    return v.get<bool>();
}

SynthSpec parse_synth(const json& j) {
    if (!j.is_object()) throw ConfigError("config key 'synth' must be an object");
    if (!j.contains("family")) throw ConfigError("synth block needs a 'family' key");
    SynthSpec s;
    s.family = get_string(j.at("family"), "synth.family");
    if (s.family != "blobs" && s.family != "event_sequences" && s.family != "multistage")
        throw ConfigError("unknown synth family '" + s.family +
                          "' (valid: blobs, event_sequences, multistage)");
    for (const auto& [key, val] : j.items()) {
        if (key == "family") continue;
        bool ok = key == "k" || key == "per_cluster";
        if (s.family == "blobs") ok = ok || key == "d" || key == "separation";
        if (s.family == "event_sequences") ok = ok || key == "base_len" || key == "noise";
        if (s.family == "multistage") ok = ok || key == "stages";
        if (!ok)
            throw ConfigError("synth key '" + key + "' does not apply to family '" + s.family +
                              "'");
        if (key == "k") s.k = get_count(val, "synth.k", 1);
        else if (key == "per_cluster") s.per_cluster = get_count(val, "synth.per_cluster", 1);
        else if (key == "d") s.d = get_count(val, "synth.d", 1);
        else if (key == "separation") {
            s.separation = get_real(val, "synth.separation");
            if (s.separation < 0) throw ConfigError("synth.separation must be >= 0");
        } else if (key == "base_len") s.base_len = get_count(val, "synth.base_len", 4);
        else if (key == "noise") {
            s.noise = get_real(val, "synth.noise");
            if (s.noise < 0) throw ConfigError("synth.noise must be >= 0");
        } else if (key == "stages") s.stages = get_count(val, "synth.stages", 2);
    }
    return s;
}

TuningSpec parse_tuning(const json& j) {
    if (!j.is_object()) throw ConfigError("config key 'tuning' must be an object");
    TuningSpec t;
    for (const auto& [key, val] : j.items()) {
        if (key == "k_min") t.k_min = get_count(val, "tuning.k_min", 1);
        else if (key == "k_max") t.k_max = get_count(val, "tuning.k_max", 2);
        else if (key == "binding") t.binding = get_string(val, "tuning.binding");
        else bad_key("tuning", key);
    }
    if (t.k_min >= t.k_max) throw ConfigError("tuning needs k_min < k_max");
    return t;
}

StabilitySpec parse_stability(const json& j) {
    if (!j.is_object()) throw ConfigError("config key 'stability' must be an object");
    StabilitySpec s;
    for (const auto& [key, val] : j.items()) {
        if (key == "runs") s.runs = get_count(val, "stability.runs", 2);
        else if (key == "noise_scale") {
            s.noise_scale = get_real(val, "stability.noise_scale");
            if (s.noise_scale < 0) throw ConfigError("stability.noise_scale must be >= 0");
        } else if (key == "fragile_threshold") {
            s.fragile_threshold = get_real(val, "stability.fragile_threshold");
            if (s.fragile_threshold < 0 || s.fragile_threshold > 1)
                throw ConfigError("stability.fragile_threshold must be in [0, 1]");
        } else bad_key("stability", key);
    }
    return s;
}

SurrogateSpec parse_surrogate(const json& j) {
    if (!j.is_object()) throw ConfigError("config key 'surrogate' must be an object");
    SurrogateSpec s;
    for (const auto& [key, val] : j.items()) {
        if (key == "max_depth") s.max_depth = get_count(val, "surrogate.max_depth", 1);
        else if (key == "min_leaf") s.min_leaf = get_count(val, "surrogate.min_leaf", 0);
        else bad_key("surrogate", key);
    }
    return s;
}

ShapSpec parse_shap(const json& j) {
    if (!j.is_object()) throw ConfigError("config key 'shap' must be an object");
    ShapSpec s;
    for (const auto& [key, val] : j.items()) {
        if (key == "method") {
            s.method = get_string(val, "shap.method");
            if (s.method != "tree" && s.method != "kernel")
                throw ConfigError("unknown shap method '" + s.method + "' (valid: tree, kernel)");
        } else if (key == "nsamples") s.nsamples = get_count(val, "shap.nsamples", 2);
        else if (key == "background") s.background = get_count(val, "shap.background", 1);
        else bad_key("shap", key);
    }
    return s;
}

EmbeddingSpec parse_embedding(const json& j) {
    if (!j.is_object()) throw ConfigError("config key 'embedding' must be an object");
    EmbeddingSpec e;
    for (const auto& [key, val] : j.items()) {
        if (key == "method") {
            e.method = get_string(val, "embedding.method");
            if (e.method != "tsne" && e.method != "pca")
                throw ConfigError("unknown embedding method '" + e.method +
                                  "' (valid: tsne, pca)");
        } else if (key == "perplexity") {
            e.perplexity = get_real(val, "embedding.perplexity");
            if (e.perplexity < 1) throw ConfigError("embedding.perplexity must be >= 1");
        } else if (key == "iters") e.iters = get_count(val, "embedding.iters", 1);
        else bad_key("embedding", key);
    }
    return e;
}

} // namespace

PipelineConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config root must be a JSON object");

    PipelineConfig cfg;
    if (j.contains("algorithm")) {
        cfg.algo.algorithm = get_string(j.at("algorithm"), "algorithm");
        if (cfg.algo.algorithm != "kmeans" && cfg.algo.algorithm != "dbscan" &&
            cfg.algo.algorithm != "gmm")
            throw ConfigError("unknown algorithm '" + cfg.algo.algorithm +
                              "' (valid: kmeans, dbscan, gmm)");
    }
    const std::string& algo = cfg.algo.algorithm;

    for (const auto& [key, val] : j.items()) {
        if (key == "algorithm") continue;
        if (key == "input") cfg.input = get_string(val, "input");
        else if (key == "synth") cfg.synth = parse_synth(val);
        else if (key == "label_column") cfg.label_column = get_string(val, "label_column");
        else if (key == "standardize") cfg.standardize = get_bool(val, "standardize");
        else if (key == "k") {
            if (algo == "dbscan") throw ConfigError("config key 'k' does not apply to dbscan");
            cfg.algo.k = get_count(val, "k", 1);
        } else if (key == "max_iter") {
            if (algo == "dbscan")
                throw ConfigError("config key 'max_iter' does not apply to dbscan");
            cfg.algo.max_iter = get_count(val, "max_iter", 1);
        } else if (key == "restarts") {
            if (algo != "kmeans") throw ConfigError("config key 'restarts' applies to kmeans only");
            cfg.algo.restarts = get_count(val, "restarts", 1);
        } else if (key == "tol") {
            if (algo != "gmm") throw ConfigError("config key 'tol' applies to gmm only");
            cfg.algo.tol = get_real(val, "tol");
            if (cfg.algo.tol <= 0) throw ConfigError("tol must be > 0");
        } else if (key == "eps") {
            if (algo != "dbscan") throw ConfigError("config key 'eps' applies to dbscan only");
            cfg.algo.dbscan.eps = get_real(val, "eps");
            if (cfg.algo.dbscan.eps <= 0) throw ConfigError("eps must be > 0");
        } else if (key == "min_pts") {
            if (algo != "dbscan") throw ConfigError("config key 'min_pts' applies to dbscan only");
            cfg.algo.dbscan.min_pts = get_count(val, "min_pts", 1);
        } else if (key == "metric") {
            std::string m = get_string(val, "metric");
            try {
                cfg.algo.metric = metric_from_string(m);
            } catch (const std::exception& e) {
                throw ConfigError(e.what());
            }
        } else if (key == "dtw_band") cfg.algo.dtw_band = get_count(val, "dtw_band", 0);
        else if (key == "tuning") cfg.tuning = parse_tuning(val);
        else if (key == "stability") cfg.stability = parse_stability(val);
        else if (key == "alternatives") cfg.alternatives = get_count(val, "alternatives", 1);
        else if (key == "surrogate") cfg.surrogate = parse_surrogate(val);
        else if (key == "shap") cfg.shap = parse_shap(val);
        else if (key == "embedding") cfg.embedding = parse_embedding(val);
        else if (key == "seed") {
            if (!val.is_number_integer() || val.get<long long>() < 0)
                throw ConfigError("config key 'seed' must be a non-negative integer");
            cfg.seed = val.get<std::uint64_t>();
        } else if (key == "out_dir") cfg.out_dir = get_string(val, "out_dir");
        else if (key == "format") {
            cfg.format = get_string(val, "format");
            if (cfg.format != "json" && cfg.format != "markdown" && cfg.format != "both")
                throw ConfigError("unknown format '" + cfg.format +
                                  "' (valid: json, markdown, both)");
        } else if (key == "threads") cfg.threads = static_cast<unsigned>(get_count(val, "threads", 1));
        else bad_key("", key);
    }

    if (cfg.input.has_value() == cfg.synth.has_value())
        throw ConfigError("config needs exactly one of 'input' and 'synth'");
    if (cfg.label_column && !cfg.input)
        throw ConfigError("'label_column' requires 'input'");
    if (cfg.algo.dtw_band && cfg.algo.metric != Metric::dtw)
        throw ConfigError("'dtw_band' requires metric 'dtw'");
    if (cfg.algo.metric == Metric::dtw && !(cfg.synth && cfg.synth->family == "event_sequences"))
        throw ConfigError("metric 'dtw' needs a sequence dataset (synth family event_sequences)");

    if (cfg.tuning) {
        TuningSpec& t = *cfg.tuning;
        if (t.binding.empty()) t.binding = algo == "dbscan" ? "kdist" : "elbow";
        if (t.binding != "none" && t.binding != "elbow" && t.binding != "silhouette" &&
            t.binding != "kdist")
            throw ConfigError("unknown tuning binding '" + t.binding +
                              "' (valid: elbow, silhouette, kdist, none)");
        if (t.binding == "kdist" && algo != "dbscan")
            throw ConfigError("tuning binding 'kdist' applies to dbscan only");
        if ((t.binding == "elbow" || t.binding == "silhouette") && algo == "dbscan")
            throw ConfigError("tuning binding '" + t.binding + "' applies to kmeans or gmm only");
        if (t.binding == "silhouette" && t.k_min < 2)
            throw ConfigError("tuning.k_min must be >= 2 when binding is 'silhouette'");
    }
    return cfg;
}

std::string canonical_config(const PipelineConfig& cfg) {
    json j;
    if (cfg.input) {
        j["input"] = *cfg.input;
        if (cfg.label_column) j["label_column"] = *cfg.label_column;
    } else if (cfg.synth) {
        json s;
        s["family"] = cfg.synth->family;
        s["k"] = cfg.synth->k;
        s["per_cluster"] = cfg.synth->per_cluster;
        if (cfg.synth->family == "blobs") {
            s["d"] = cfg.synth->d;
            s["separation"] = cfg.synth->separation;
        } else if (cfg.synth->family == "event_sequences") {
            s["base_len"] = cfg.synth->base_len;
            s["noise"] = cfg.synth->noise;
        } else {
            s["stages"] = cfg.synth->stages;
        }
        j["synth"] = s;
    }
    if (cfg.labels_column) j["labels_from"] = *cfg.labels_column;
    j["standardize"] = cfg.standardize;
    j["algorithm"] = cfg.algo.algorithm;
    if (cfg.algo.algorithm == "dbscan") {
        j["eps"] = cfg.algo.dbscan.eps;
        j["min_pts"] = cfg.algo.dbscan.min_pts;
    } else {
        j["k"] = cfg.algo.k;
        j["max_iter"] = cfg.algo.max_iter;
        if (cfg.algo.algorithm == "kmeans") j["restarts"] = cfg.algo.restarts;
        if (cfg.algo.algorithm == "gmm") j["tol"] = cfg.algo.tol;
    }
    j["metric"] = to_string(cfg.algo.metric);
    if (cfg.algo.dtw_band) j["dtw_band"] = *cfg.algo.dtw_band;
    if (cfg.tuning)
        j["tuning"] = {{"k_min", cfg.tuning->k_min},
                       {"k_max", cfg.tuning->k_max},
                       {"binding", cfg.tuning->binding}};
    if (cfg.stability)
        j["stability"] = {{"runs", cfg.stability->runs},
                          {"noise_scale", cfg.stability->noise_scale},
                          {"fragile_threshold", cfg.stability->fragile_threshold}};
    if (cfg.alternatives) j["alternatives"] = *cfg.alternatives;
    if (cfg.surrogate)
        j["surrogate"] = {{"max_depth", cfg.surrogate->max_depth},
                          {"min_leaf", cfg.surrogate->min_leaf}};
    if (cfg.shap)
        j["shap"] = {{"method", cfg.shap->method},
                     {"nsamples", cfg.shap->nsamples},
                     {"background", cfg.shap->background}};
    if (cfg.embedding)
        j["embedding"] = {{"method", cfg.embedding->method},
                          {"perplexity", cfg.embedding->perplexity},
                          {"iters", cfg.embedding->iters}};
    j["seed"] = cfg.seed;
    return j.dump();
}

namespace {

Dataset load_or_synth(const PipelineConfig& cfg) {
    if (cfg.input) {
        std::ifstream in(*cfg.input);
        if (!in) throw std::runtime_error("cannot open input file '" + *cfg.input + "'");
        return load_csv(in, cfg.label_column);
    }
    return synth_dataset(*cfg.synth, cfg.seed);
}

std::string fmt_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

Dataset synth_dataset(const SynthSpec& spec, std::uint64_t master_seed) {
    std::uint64_t seed = derive_seed(master_seed, kSeedSynth);
    if (spec.family == "blobs")
        return gen_blobs(spec.k, spec.per_cluster, spec.d, spec.separation, seed);
    if (spec.family == "event_sequences")
        return gen_event_sequences(spec.k, spec.per_cluster, spec.base_len, spec.noise, seed);
    if (spec.family == "multistage")
        return gen_multistage(spec.k, spec.per_cluster, spec.stages, seed);
    throw ConfigError("unknown synth family '" + spec.family +
                      "' (valid: blobs, event_sequences, multistage)");
}

PipelineArtifacts run_pipeline(const PipelineConfig& cfg) {
    if (cfg.threads) set_thread_cap(*cfg.threads);
    ClusterAlgoConfig algo = cfg.algo;

    Dataset ds = stage("load", [&] { return load_or_synth(cfg); });
    std::string source = cfg.input ? *cfg.input : "synth " + cfg.synth->family;
    log_info("loaded " + std::to_string(ds.n()) + " rows, " + std::to_string(ds.dim()) +
             " features from " + source);

    std::optional<Labeling> given;
    if (cfg.labels_column) {
        stage("load", [&] {
            auto [rest, labels] = take_label_column(ds, *cfg.labels_column);
            ds = std::move(rest);
            given = std::move(labels);
            return 0;
        });
    }

    if (cfg.standardize)
        ds = stage("standardize", [&] { return standardize(ds).first; });

    std::optional<DistanceMatrix> dm_cache;
    auto the_dm = [&]() -> const DistanceMatrix& {
        if (!dm_cache) dm_cache = pairwise(ds, algo.metric, algo.dtw_band);
        return *dm_cache;
    };

    std::optional<TuningSummary> tuning;
    if (cfg.tuning && !given) {
        tuning = stage("tune", [&] {
            const TuningSpec& ts = *cfg.tuning;
            TuningSummary t;
            t.binding = ts.binding;
            std::uint64_t tseed = derive_seed(cfg.seed, kSeedTune);
            if (algo.algorithm == "dbscan") {
                t.kdist = kdist_curve(the_dm(), algo.dbscan.min_pts);
                if (ts.binding == "kdist") {
                    const auto& kd = *t.kdist;
                    std::vector<double> xs(kd.size());
                    for (std::size_t i = 0; i < xs.size(); ++i)
                        xs[i] = static_cast<double>(i);
                    double eps = kd[knee_index(xs, kd)];
                    if (eps <= 0)
                        throw std::runtime_error(
                            "k-distance knee gives eps = 0; set eps explicitly");
                    algo.dbscan.eps = eps;
                    log_info("tune: kdist knee set eps = " + fmt_full(eps));
                }
            } else {
                std::size_t k_max = std::min(ts.k_max, ds.n());
                if (k_max < ts.k_max)
                    log_info("tune: k_max clipped to n = " + std::to_string(k_max));
                if (ts.k_min < k_max)
                    t.elbow = elbow_scan(ds, ts.k_min, k_max, tseed);
                std::size_t sk_min = std::max<std::size_t>(2, ts.k_min);
                std::size_t sk_max = std::min(ts.k_max, ds.n() - 1);
                if (sk_min < sk_max)
                    t.silhouette = silhouette_scan(ds, sk_min, sk_max, tseed);
                if (ts.binding == "elbow") {
                    if (!t.elbow) throw std::runtime_error("elbow scan range is empty");
                    algo.k = static_cast<std::size_t>(t.elbow->values[t.elbow->selected]);
                } else if (ts.binding == "silhouette") {
                    if (!t.silhouette)
                        throw std::runtime_error("silhouette scan range is empty");
                    algo.k =
                        static_cast<std::size_t>(t.silhouette->values[t.silhouette->selected]);
                }
                if (ts.binding != "none")
                    log_info("tune: " + ts.binding + " selected k = " + std::to_string(algo.k));
            }
            return t;
        });
    }

    Labeling labels;
    ClusterResult fit;
    if (given) {
        labels = *given;
        int lo = *std::min_element(labels.begin(), labels.end());
        if (lo < kNoise)
            throw StageError("fit", "label column has value " + std::to_string(lo) +
                                        "; clusters are >= 0 with -1 reserved for noise");
    } else {
        fit = stage("fit", [&] {
            return run_clustering(ds, the_dm(), algo, derive_seed(cfg.seed, kSeedFit));
        });
        labels = fit.labels;
        log_info("fit: " + std::to_string(num_clusters(labels)) + " clusters, " +
                 std::to_string(count_noise(labels)) + " noise points");
    }

    ValidationScores scores = stage("validate", [&] {
        return compute_scores(ds, the_dm(), labels, ds.truth);
    });

    std::optional<StabilityReport> stability;
    if (cfg.stability && !given) {
        stability = stage("stability", [&] {
            return stability_analysis(ds, algo, cfg.stability->runs, cfg.stability->noise_scale,
                                      derive_seed(cfg.seed, kSeedStability),
                                      cfg.stability->fragile_threshold);
        });
    }

    std::optional<AlternativeSet> alts;
    if (cfg.alternatives && !given) {
        alts = stage("alternatives", [&] {
            return alternatives(ds, labels, algo, *cfg.alternatives,
                                derive_seed(cfg.seed, kSeedAlternatives));
        });
    }

    // NOISE becomes one extra surrogate class so every row is explainable.
    std::optional<SurrogateTree> tree;
    std::optional<double> fidelity;
    Labeling tree_labels;
    SurrogateSpec sspec = cfg.surrogate.value_or(SurrogateSpec{});
    if (cfg.surrogate || cfg.shap) {
        stage("surrogate", [&] {
            tree_labels = labels;
            int noise_class = static_cast<int>(num_clusters(labels));
            for (int& l : tree_labels)
                if (l == kNoise) l = noise_class;
            tree = tree_fit(ds, tree_labels, sspec.max_depth, sspec.min_leaf);
            fidelity = tree_fidelity(*tree, ds, tree_labels);
            return 0;
        });
        log_info("surrogate: fidelity " + fmt_full(*fidelity));
    }

    std::optional<std::vector<ShapExplanation>> shap_rows;
    std::optional<ImportanceSummary> importance;
    if (cfg.shap) {
        const ShapSpec& sh = *cfg.shap;
        std::uint64_t shap_seed = derive_seed(cfg.seed, kSeedShap);
        shap_rows = stage("shap", [&] {
            std::vector<ShapExplanation> rows(ds.n());
            if (sh.method == "tree") {
                parallel_for(ds.n(), [&](std::size_t i) {
                    rows[i] = tree_shap(*tree, ds.features.row(i), tree_labels[i]);
                });
            } else {
                std::size_t bgn = std::min(sh.background, ds.n());
                std::vector<std::size_t> idx(ds.n());
                for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
                Rng rng(shap_seed);
                for (std::size_t i = 0; i < bgn; ++i)
                    std::swap(idx[i], idx[i + rng.uniform_int(idx.size() - i)]);
                idx.resize(bgn);
                std::sort(idx.begin(), idx.end());
                Matrix background(bgn, ds.dim());
                for (std::size_t r = 0; r < bgn; ++r)
                    for (std::size_t c = 0; c < ds.dim(); ++c)
                        background(r, c) = ds.features(idx[r], c);
                parallel_for(ds.n(), [&](std::size_t i) {
                    int cls = tree_labels[i];
                    PredictFn predict = [&, cls](std::span<const double> x) {
                        return tree_predict_proba1(*tree, x, cls);
                    };
                    rows[i] = kernel_shap(predict, background, ds.features.row(i), sh.nsamples,
                                          derive_seed(shap_seed, i));
                    rows[i].explained_class = cls;
                });
            }
            return rows;
        });

        importance = stage("shap", [&] {
            ImportanceSummary im;
            im.global = global_importance(*shap_rows);
            std::map<int, std::vector<std::size_t>> by_cluster;
            for (std::size_t i = 0; i < labels.size(); ++i)
                by_cluster[labels[i]].push_back(i);
            for (const auto& [cluster, members] : by_cluster) {
                std::vector<double> mean(ds.dim(), 0.0);
                for (std::size_t i : members)
                    for (std::size_t f = 0; f < ds.dim(); ++f)
                        mean[f] += std::abs((*shap_rows)[i].phi[f]);
                std::vector<std::size_t> order(ds.dim());
                for (std::size_t f = 0; f < order.size(); ++f) order[f] = f;
                std::stable_sort(order.begin(), order.end(),
                                 [&](std::size_t a, std::size_t b) { return mean[a] > mean[b]; });
                order.resize(std::min<std::size_t>(3, order.size()));
                im.per_cluster.push_back({cluster, std::move(order)});
            }
            im.method = sh.method;
            im.explains = "probability of the row's own cluster under the surrogate tree";
            im.per_row_file = "shap.csv";
            return im;
        });
    }

    std::optional<Matrix> coords;
    std::optional<EmbeddingSummary> emb_summary;
    if (cfg.embedding) {
        Embedding2D emb = stage("embed", [&] {
            const EmbeddingSpec& es = *cfg.embedding;
            if (es.method == "pca") return pca2d(ds);
            if (ds.n() > kTsneMaxRows)
                throw std::invalid_argument("tsne supports at most " +
                                            std::to_string(kTsneMaxRows) + " rows, got " +
                                            std::to_string(ds.n()) +
                                            " (use embedding.method \"pca\")");
            double perp = es.perplexity;
            double max_perp = (static_cast<double>(ds.n()) - 1.0) / 3.0;
            if (ds.n() >= 10 && perp > max_perp) {
                log_info("embed: perplexity clipped to " + fmt_full(max_perp));
                perp = max_perp;
            }
            return tsne(ds, perp, es.iters, derive_seed(cfg.seed, kSeedEmbed));
        });
        coords = emb.coords;
        emb_summary = EmbeddingSummary{emb.method, emb.params, emb.quality, "embedding.csv"};
        log_info("embed: trustworthiness " + fmt_full(emb.quality));
    }

    Report report = stage("report", [&] {
        ReportInputs in;
        in.dataset = {ds.n(), ds.dim(), ds.feature_names, cfg.standardize, source};
        AlgorithmSummary a;
        a.algorithm = given ? "given" : algo.algorithm;
        a.k = (given || algo.algorithm == "dbscan") ? num_clusters(labels) : algo.k;
        a.max_iter = algo.max_iter;
        a.restarts = algo.restarts;
        a.tol = algo.tol;
        a.eps = algo.dbscan.eps;
        a.min_pts = algo.dbscan.min_pts;
        a.metric = to_string(algo.metric);
        a.dtw_band = algo.dtw_band;
        a.seed = cfg.seed;
        in.algorithm = a;
        in.labels = labels;
        in.validation = scores;
        in.tuning = tuning;
        in.stability = stability;
        in.alternatives = alts;
        in.surrogate_tree = tree;
        in.surrogate_fidelity = fidelity;
        in.importance = importance;
        in.embedding = emb_summary;
        in.config_hash = fnv1a_hex(canonical_config(cfg));
        in.timestamp = timestamp_utc_now();
        return build_report(in);
    });

    PipelineArtifacts out;
    out.data = std::move(ds);
    out.labels = std::move(labels);
    out.report = std::move(report);
    out.embedding_coords = std::move(coords);
    out.shap_rows = std::move(shap_rows);
    if (stability) {
        out.stability_per_point = stability->per_point;
        out.fragile_points = stability->fragile_points;
        out.fragile_threshold = stability->fragile_threshold;
    }
    return out;
}

void write_outputs(const PipelineArtifacts& artifacts, const std::string& out_dir,
                   const std::string& format) {
    namespace fs = std::filesystem;
    stage("report", [&] {
        fs::path dir = out_dir.empty() ? fs::path(".") : fs::path(out_dir);
        fs::create_directories(dir);
        auto open = [&](const char* name) {
            std::ofstream out(dir / name);
            if (!out) throw std::runtime_error(std::string("cannot write ") + name);
            return out;
        };

        if (format == "json" || format == "both") {
            auto out = open("report.json");
            out << render(artifacts.report, ReportFormat::json);
        }
        if (format == "markdown" || format == "both") {
            auto out = open("report.md");
            out << render(artifacts.report, ReportFormat::markdown);
        }

        if (artifacts.embedding_coords) {
            auto out = open("embedding.csv");
            out << "id,x,y,cluster,truth\n";
            const Matrix& c = *artifacts.embedding_coords;
            const auto& truth = artifacts.data.truth;
            for (std::size_t i = 0; i < c.rows(); ++i) {
                out << i << ',' << fmt_full(c(i, 0)) << ',' << fmt_full(c(i, 1)) << ','
                    << artifacts.labels[i] << ',';
                if (truth) out << (*truth)[i];
                out << '\n';
            }
        }

        if (artifacts.shap_rows) {
            auto out = open("shap.csv");
            out << "id,feature,value\n";
            for (std::size_t i = 0; i < artifacts.shap_rows->size(); ++i) {
                const auto& phi = (*artifacts.shap_rows)[i].phi;
                for (std::size_t f = 0; f < phi.size(); ++f)
                    out << i << ',' << artifacts.data.feature_names[f] << ','
                        << fmt_full(phi[f]) << '\n';
            }
        }

        if (artifacts.stability_per_point) {
            auto out = open("stability.csv");
            out << "id,stability,fragile\n";
            const auto& pp = *artifacts.stability_per_point;
            for (std::size_t i = 0; i < pp.size(); ++i)
                out << i << ',' << fmt_full(pp[i]) << ','
                    << (pp[i] < artifacts.fragile_threshold ? 1 : 0) << '\n';
        }
        return 0;
    });
}

std::string timestamp_utc_now() {
    std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

} // namespace exalt
