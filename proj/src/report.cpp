#include "exalt/report.hpp"

#include <algorithm>
#include <cstdio>
#include <stdexcept>
#include <utility>

#include "json.hpp"

#include "exalt/error.hpp"

namespace exalt {

using nlohmann::json;

namespace {

json opt_num(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::optional<double> num_opt(const json& j) {
    if (j.is_null()) return std::nullopt;
    return j.get<double>();
}

json to_json(const DatasetSummary& d) {
    return {{"n", d.n},
            {"d", d.d},
            {"feature_names", d.feature_names},
            {"standardized", d.standardized},
            {"source", d.source}};
}

DatasetSummary dataset_from(const json& j) {
    DatasetSummary d;
    d.n = j.at("n").get<std::size_t>();
    d.d = j.at("d").get<std::size_t>();
    d.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    d.standardized = j.at("standardized").get<bool>();
    d.source = j.at("source").get<std::string>();
    return d;
}

json to_json(const AlgorithmSummary& a) {
    return {{"algorithm", a.algorithm},
            {"k", a.k},
            {"max_iter", a.max_iter},
            {"restarts", a.restarts},
            {"tol", a.tol},
            {"eps", a.eps},
            {"min_pts", a.min_pts},
            {"metric", a.metric},
            {"dtw_band", a.dtw_band ? json(*a.dtw_band) : json(nullptr)},
            {"seed", a.seed}};
}

AlgorithmSummary algorithm_from(const json& j) {
    AlgorithmSummary a;
    a.algorithm = j.at("algorithm").get<std::string>();
    a.k = j.at("k").get<std::size_t>();
    a.max_iter = j.at("max_iter").get<std::size_t>();
    a.restarts = j.at("restarts").get<std::size_t>();
    a.tol = j.at("tol").get<double>();
    a.eps = j.at("eps").get<double>();
    a.min_pts = j.at("min_pts").get<std::size_t>();
    a.metric = j.at("metric").get<std::string>();
    if (!j.at("dtw_band").is_null()) a.dtw_band = j.at("dtw_band").get<std::size_t>();
    a.seed = j.at("seed").get<std::uint64_t>();
    return a;
}

json to_json(const ValidationScores& v) {
    return {{"silhouette", v.silhouette},
            {"davies_bouldin", v.davies_bouldin},
            {"calinski_harabasz", v.calinski_harabasz},
            {"ari", opt_num(v.ari)},
            {"nmi", opt_num(v.nmi)},
            {"n_noise_excluded", v.n_noise_excluded}};
}

ValidationScores validation_from(const json& j) {
    ValidationScores v;
    v.silhouette = j.at("silhouette").get<double>();
    v.davies_bouldin = j.at("davies_bouldin").get<double>();
    v.calinski_harabasz = j.at("calinski_harabasz").get<double>();
    v.ari = num_opt(j.at("ari"));
    v.nmi = num_opt(j.at("nmi"));
    v.n_noise_excluded = j.at("n_noise_excluded").get<std::size_t>();
    return v;
}

json to_json(const TuningCurve& c) {
    return {{"values", c.values}, {"scores", c.scores}, {"selected", c.selected}};
}

TuningCurve curve_from(const json& j) {
    TuningCurve c;
    c.values = j.at("values").get<std::vector<double>>();
    c.scores = j.at("scores").get<std::vector<double>>();
    c.selected = j.at("selected").get<std::size_t>();
    return c;
}

json to_json(const TuningSummary& t) {
    return {{"elbow", t.elbow ? to_json(*t.elbow) : json(nullptr)},
            {"silhouette", t.silhouette ? to_json(*t.silhouette) : json(nullptr)},
            {"kdist", t.kdist ? json(*t.kdist) : json(nullptr)},
            {"binding", t.binding}};
}

TuningSummary tuning_from(const json& j) {
    TuningSummary t;
    if (!j.at("elbow").is_null()) t.elbow = curve_from(j.at("elbow"));
    if (!j.at("silhouette").is_null()) t.silhouette = curve_from(j.at("silhouette"));
    if (!j.at("kdist").is_null()) t.kdist = j.at("kdist").get<std::vector<double>>();
    t.binding = j.at("binding").get<std::string>();
    return t;
}

json to_json(const StabilitySummary& s) {
    return {{"global_stability", s.global_stability},
            {"runs", s.runs},
            {"noise_scale", s.noise_scale},
            {"fragile_threshold", s.fragile_threshold},
            {"mean_per_point", s.mean_per_point},
            {"fragile_points", s.fragile_points},
            {"per_point_file", s.per_point_file}};
}

StabilitySummary stability_from(const json& j) {
    StabilitySummary s;
    s.global_stability = j.at("global_stability").get<double>();
    s.runs = j.at("runs").get<std::size_t>();
    s.noise_scale = j.at("noise_scale").get<double>();
    s.fragile_threshold = j.at("fragile_threshold").get<double>();
    s.mean_per_point = j.at("mean_per_point").get<double>();
    s.fragile_points = j.at("fragile_points").get<std::vector<std::size_t>>();
    s.per_point_file = j.at("per_point_file").get<std::string>();
    return s;
}

json to_json(const AlternativesSummary& a) {
    json rows = json::array();
    for (const auto& r : a.rows)
        rows.push_back({{"quality", r.quality},
                        {"diversity", r.diversity},
                        {"n_clusters", r.n_clusters},
                        {"provenance", r.provenance}});
    return {{"rows", rows}, {"empty_pool", a.empty_pool}};
}

AlternativesSummary alternatives_from(const json& j) {
    AlternativesSummary a;
    for (const auto& rj : j.at("rows")) {
        AlternativeRow r;
        r.quality = rj.at("quality").get<double>();
        r.diversity = rj.at("diversity").get<double>();
        r.n_clusters = rj.at("n_clusters").get<std::size_t>();
        r.provenance = rj.at("provenance").get<std::string>();
        a.rows.push_back(std::move(r));
    }
    a.empty_pool = j.at("empty_pool").get<bool>();
    return a;
}

json to_json(const Rule& r) {
    json conds = json::array();
    for (const auto& c : r.conditions)
        conds.push_back({{"feature", c.feature},
                         {"lower", opt_num(c.lower)},
                         {"upper", opt_num(c.upper)}});
    return {{"conditions", conds},
            {"label", r.label},
            {"confidence", r.confidence},
            {"cover", r.cover}};
}

Rule rule_from(const json& j) {
    Rule r;
    for (const auto& cj : j.at("conditions")) {
        RuleCondition c;
        c.feature = cj.at("feature").get<std::size_t>();
        c.lower = num_opt(cj.at("lower"));
        c.upper = num_opt(cj.at("upper"));
        r.conditions.push_back(c);
    }
    r.label = j.at("label").get<int>();
    r.confidence = j.at("confidence").get<double>();
    r.cover = j.at("cover").get<std::size_t>();
    return r;
}

json to_json(const SurrogateSummary& s) {
    json rules = json::array();
    for (const auto& r : s.rules) rules.push_back(to_json(r));
    return {{"rules", rules},
            {"rule_text", s.rule_text},
            {"fidelity", s.fidelity},
            {"depth", s.depth},
            {"leaves", s.leaves},
            {"max_depth", s.max_depth},
            {"min_leaf", s.min_leaf}};
}

SurrogateSummary surrogate_from(const json& j) {
    SurrogateSummary s;
    for (const auto& rj : j.at("rules")) s.rules.push_back(rule_from(rj));
    s.rule_text = j.at("rule_text").get<std::vector<std::string>>();
    s.fidelity = j.at("fidelity").get<double>();
    s.depth = j.at("depth").get<std::size_t>();
    s.leaves = j.at("leaves").get<std::size_t>();
    s.max_depth = j.at("max_depth").get<std::size_t>();
    s.min_leaf = j.at("min_leaf").get<std::size_t>();
    return s;
}

json to_json(const ImportanceSummary& im) {
    json pc = json::array();
    for (const auto& c : im.per_cluster)
        pc.push_back({{"cluster", c.cluster}, {"features", c.features}});
    return {{"mean_abs_phi", im.global.mean_abs_phi},
            {"ranking", im.global.ranking},
            {"per_cluster", pc},
            {"method", im.method},
            {"explains", im.explains},
            {"per_row_file", im.per_row_file}};
}

ImportanceSummary importance_from(const json& j) {
    ImportanceSummary im;
    im.global.mean_abs_phi = j.at("mean_abs_phi").get<std::vector<double>>();
    im.global.ranking = j.at("ranking").get<std::vector<std::size_t>>();
    for (const auto& cj : j.at("per_cluster")) {
        ClusterTopFeatures c;
        c.cluster = cj.at("cluster").get<int>();
        c.features = cj.at("features").get<std::vector<std::size_t>>();
        im.per_cluster.push_back(std::move(c));
    }
    im.method = j.at("method").get<std::string>();
    im.explains = j.at("explains").get<std::string>();
    im.per_row_file = j.at("per_row_file").get<std::string>();
    return im;
}

json to_json(const EmbeddingSummary& e) {
    return {{"method", e.method}, {"params", e.params}, {"quality", e.quality}, {"file", e.file}};
}

EmbeddingSummary embedding_from(const json& j) {
    EmbeddingSummary e;
    e.method = j.at("method").get<std::string>();
    e.params = j.at("params").get<std::string>();
    e.quality = j.at("quality").get<double>();
    e.file = j.at("file").get<std::string>();
    return e;
}

constexpr const char* kNotRun = "not run";

template <typename T, typename Fn>
json section(const std::optional<T>& opt, Fn&& serialize) {
    return opt ? serialize(*opt) : json(kNotRun);
}

} // namespace

Report build_report(const ReportInputs& inputs) {
    if (!inputs.labels) throw std::invalid_argument("build_report: labeling missing");
    if (!inputs.validation) throw std::invalid_argument("build_report: validation scores missing");

    Report report;
    report.dataset = inputs.dataset;
    report.algorithm = inputs.algorithm;
    for (int label : *inputs.labels) ++report.cluster_sizes[label];
    report.validation = *inputs.validation;
    report.tuning = inputs.tuning;

    if (inputs.stability) {
        StabilitySummary s;
        s.global_stability = inputs.stability->global_stability;
        s.runs = inputs.stability->runs;
        s.noise_scale = inputs.stability->noise_scale;
        s.fragile_threshold = inputs.stability->fragile_threshold;
        double mean = 0.0;
        for (double v : inputs.stability->per_point) mean += v;
        if (!inputs.stability->per_point.empty())
            mean /= static_cast<double>(inputs.stability->per_point.size());
        s.mean_per_point = mean;
        s.fragile_points = inputs.stability->fragile_points;
        s.per_point_file = "stability.csv";
        report.stability = std::move(s);
    }

    if (inputs.alternatives) {
        AlternativesSummary a;
        a.empty_pool = inputs.alternatives->empty_pool;
        for (const auto& e : inputs.alternatives->entries) {
            AlternativeRow row;
            row.quality = e.quality;
            row.diversity = e.diversity;
            row.n_clusters = num_clusters(e.labels);
            row.provenance = e.provenance;
            a.rows.push_back(std::move(row));
        }
        report.alternatives = std::move(a);
    }

    if (inputs.surrogate_tree) {
        SurrogateSummary s;
        s.rules = tree_rules(*inputs.surrogate_tree);
        for (const auto& rule : s.rules)
            s.rule_text.push_back(rule_to_string(rule, inputs.dataset.feature_names));
        s.fidelity = inputs.surrogate_fidelity.value_or(0.0);
        s.depth = inputs.surrogate_tree->depth();
        s.leaves = inputs.surrogate_tree->leaf_count();
        s.max_depth = inputs.surrogate_tree->max_depth;
        s.min_leaf = inputs.surrogate_tree->min_leaf;
        report.surrogate = std::move(s);
    }

    report.importance = inputs.importance;
    report.embedding = inputs.embedding;
    report.provenance = {kToolVersion, inputs.config_hash, inputs.timestamp};
    return report;
}

ReportFormat report_format_from_string(const std::string& name) {
    if (name == "json") return ReportFormat::json;
    if (name == "markdown") return ReportFormat::markdown;
    throw ConfigError("unknown report format '" + name + "' (valid: json, markdown)");
}

namespace {

json report_to_json(const Report& r) {
    json sizes = json::object();
    for (const auto& [label, count] : r.cluster_sizes) sizes[std::to_string(label)] = count;
    json j;
    j["dataset"] = to_json(r.dataset);
    j["algorithm"] = to_json(r.algorithm);
    j["cluster_sizes"] = sizes;
    j["validation"] = to_json(r.validation);
    j["tuning"] = section(r.tuning, [](const TuningSummary& t) { return to_json(t); });
    j["stability"] = section(r.stability, [](const StabilitySummary& s) { return to_json(s); });
    j["alternatives"] =
        section(r.alternatives, [](const AlternativesSummary& a) { return to_json(a); });
    j["surrogate"] = section(r.surrogate, [](const SurrogateSummary& s) { return to_json(s); });
    j["importance"] = section(r.importance, [](const ImportanceSummary& i) { return to_json(i); });
    j["embedding"] = section(r.embedding, [](const EmbeddingSummary& e) { return to_json(e); });
    j["provenance"] = {{"tool_version", r.provenance.tool_version},
                       {"config_hash", r.provenance.config_hash},
                       {"timestamp", r.provenance.timestamp}};
    return j;
}

std::string fmt4(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

std::string render_markdown(const Report& r) {
    std::string md;
    auto line = [&md](const std::string& s) {
        md += s;
        md += '\n';
    };

    line("# Clustering explanation report");
    line("");
    line("## Summary");
    line("");
    line("- source: " + r.dataset.source);
    line("- rows: " + std::to_string(r.dataset.n) + ", features: " + std::to_string(r.dataset.d) +
         (r.dataset.standardized ? " (standardized)" : " (raw scale)"));
    {
        std::string algo = "- algorithm: " + r.algorithm.algorithm;
        if (r.algorithm.algorithm == "dbscan")
            algo += " (eps " + fmt4(r.algorithm.eps) + ", min_pts " +
                    std::to_string(r.algorithm.min_pts) + ")";
        else
            algo += " (k " + std::to_string(r.algorithm.k) + ")";
        algo += ", metric " + r.algorithm.metric + ", seed " + std::to_string(r.algorithm.seed);
        line(algo);
    }
    {
        std::string sizes = "- cluster sizes:";
        for (const auto& [label, count] : r.cluster_sizes) {
            sizes += label == kNoise ? " noise=" : " " + std::to_string(label) + "=";
            sizes += std::to_string(count);
        }
        line(sizes);
    }
    line("");
    line("## Validity scores");
    line("");
    line("| score | value |");
    line("|---|---|");
    line("| silhouette | " + fmt4(r.validation.silhouette) + " |");
    line("| davies_bouldin | " + fmt4(r.validation.davies_bouldin) + " |");
    line("| calinski_harabasz | " + fmt4(r.validation.calinski_harabasz) + " |");
    if (r.validation.ari) line("| ari | " + fmt4(*r.validation.ari) + " |");
    if (r.validation.nmi) line("| nmi | " + fmt4(*r.validation.nmi) + " |");
    line("| noise points excluded | " + std::to_string(r.validation.n_noise_excluded) + " |");
    line("");

    line("## Surrogate rules");
    line("");
    if (r.surrogate) {
        line("Fidelity " + fmt4(r.surrogate->fidelity) + ", depth " +
             std::to_string(r.surrogate->depth) + ", " + std::to_string(r.surrogate->leaves) +
             " leaves (max_depth " + std::to_string(r.surrogate->max_depth) + ", min_leaf " +
             std::to_string(r.surrogate->min_leaf) + ").");
        line("");
        for (const auto& text : r.surrogate->rule_text) line("- " + text);
    } else {
        line("not run");
    }
    line("");

    line("## Feature importances");
    line("");
    if (r.importance) {
        line("Method: " + r.importance->method + " (explains " + r.importance->explains + ").");
        line("");
        line("| rank | feature | mean abs phi |");
        line("|---|---|---|");
        for (std::size_t pos = 0; pos < r.importance->global.ranking.size(); ++pos) {
            std::size_t f = r.importance->global.ranking[pos];
            std::string name = f < r.dataset.feature_names.size() ? r.dataset.feature_names[f]
                                                                  : "f" + std::to_string(f);
            line("| " + std::to_string(pos + 1) + " | " + name + " | " +
                 fmt4(r.importance->global.mean_abs_phi[f]) + " |");
        }
        line("");
        for (const auto& pc : r.importance->per_cluster) {
            std::string row = "- cluster " + std::to_string(pc.cluster) + " top features:";
            for (std::size_t f : pc.features) {
                row += ' ';
                row += f < r.dataset.feature_names.size() ? r.dataset.feature_names[f]
                                                          : "f" + std::to_string(f);
            }
            line(row);
        }
    } else {
        line("not run");
    }
    line("");

    line("## Stability");
    line("");
    if (r.stability) {
        // ARI-based score can dip below zero; the stored value keeps the raw
        // mean, the rendered one clips at 0.
        line("Global stability " + fmt4(std::max(0.0, r.stability->global_stability)) + " over " +
             std::to_string(r.stability->runs) + " runs at noise scale " +
             fmt4(r.stability->noise_scale) + "; mean per-point " +
             fmt4(r.stability->mean_per_point) + ".");
        line("Fragile points (score < " + fmt4(r.stability->fragile_threshold) +
             "): " + std::to_string(r.stability->fragile_points.size()) + " (see " +
             r.stability->per_point_file + ").");
    } else {
        line("not run");
    }
    line("");

    line("## Alternatives");
    line("");
    if (r.alternatives) {
        if (r.alternatives->rows.empty()) {
            line(r.alternatives->empty_pool ? "candidate pool empty after deduplication"
                                            : "no alternatives kept");
        } else {
            line("| quality | diversity | clusters | provenance |");
            line("|---|---|---|---|");
            for (const auto& row : r.alternatives->rows)
                line("| " + fmt4(row.quality) + " | " + fmt4(row.diversity) + " | " +
                     std::to_string(row.n_clusters) + " | " + row.provenance + " |");
        }
    } else {
        line("not run");
    }
    line("");

    line("## Tuning");
    line("");
    if (r.tuning) {
        auto curve_line = [&](const char* name, const TuningCurve& c) {
            std::string s = std::string("- ") + name + ":";
            for (std::size_t i = 0; i < c.values.size(); ++i) {
                s += " " + fmt4(c.values[i]) + "->" + fmt4(c.scores[i]);
                if (i == c.selected) s += "*";
            }
            line(s);
        };
        if (r.tuning->elbow) curve_line("elbow (inertia)", *r.tuning->elbow);
        if (r.tuning->silhouette) curve_line("silhouette scan", *r.tuning->silhouette);
        if (r.tuning->kdist && !r.tuning->kdist->empty())
            line("- k-distance curve: " + std::to_string(r.tuning->kdist->size()) +
                 " points, max " + fmt4(r.tuning->kdist->back()));
        line("- binding: " + r.tuning->binding);
    } else {
        line("not run");
    }
    line("");

    line("## Embedding");
    line("");
    if (r.embedding) {
        line("Method " + r.embedding->method + " (" + r.embedding->params + "), trustworthiness " +
             fmt4(r.embedding->quality) + "; coordinates in " + r.embedding->file + ".");
    } else {
        line("not run");
    }
    line("");

    line("## Provenance");
    line("");
    line("- tool: " + r.provenance.tool_version);
    line("- config hash: " + r.provenance.config_hash);
    line("- generated: " + r.provenance.timestamp);
    return md;
}

} // namespace

std::string render(const Report& report, ReportFormat format) {
    if (format == ReportFormat::json) return report_to_json(report).dump(2) + "\n";
    return render_markdown(report);
}

Report parse_report(const std::string& json_text) {
    json j = json::parse(json_text);
    Report r;
    r.dataset = dataset_from(j.at("dataset"));
    r.algorithm = algorithm_from(j.at("algorithm"));
    for (const auto& [key, value] : j.at("cluster_sizes").items())
        r.cluster_sizes[std::stoi(key)] = value.get<std::size_t>();
    r.validation = validation_from(j.at("validation"));
    if (!j.at("tuning").is_string()) r.tuning = tuning_from(j.at("tuning"));
    if (!j.at("stability").is_string()) r.stability = stability_from(j.at("stability"));
    if (!j.at("alternatives").is_string())
        r.alternatives = alternatives_from(j.at("alternatives"));
    if (!j.at("surrogate").is_string()) r.surrogate = surrogate_from(j.at("surrogate"));
    if (!j.at("importance").is_string()) r.importance = importance_from(j.at("importance"));
    if (!j.at("embedding").is_string()) r.embedding = embedding_from(j.at("embedding"));
    const auto& p = j.at("provenance");
    r.provenance = {p.at("tool_version").get<std::string>(),
                    p.at("config_hash").get<std::string>(),
                    p.at("timestamp").get<std::string>()};
    return r;
}

std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t hash = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
    return buf;
}

} // namespace exalt
