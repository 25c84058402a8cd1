#include "exalt/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <set>
#include <stdexcept>

#include "exalt/rng.hpp"

namespace exalt {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            cells.push_back(line.substr(start));
            break;
        }
        cells.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return cells;
}

bool parse_double(const std::string& cell, double& out) {
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last && std::isfinite(out);
}

bool parse_int(const std::string& cell, long& out) {
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc{} && ptr == last;
}

std::string fmt_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

} // namespace

Dataset load_csv(std::istream& in, const std::optional<std::string>& label_column) {
    std::string line;
    if (!std::getline(in, line)) throw std::invalid_argument("load_csv: empty file");
    if (!line.empty() && line.back() == '\r') line.pop_back();

    std::vector<std::string> header = split_line(line);
    std::set<std::string> seen;
    for (const auto& name : header) {
        if (name.empty()) throw std::invalid_argument("load_csv: empty column name in header");
        if (!seen.insert(name).second)
            throw std::invalid_argument("load_csv: duplicate column name '" + name + "'");
    }

    long label_idx = -1;
    if (label_column) {
        auto it = std::find(header.begin(), header.end(), *label_column);
        if (it == header.end())
            throw std::invalid_argument("load_csv: label column '" + *label_column +
                                        "' not found in header");
        label_idx = it - header.begin();
    }

    Dataset ds;
    for (std::size_t c = 0; c < header.size(); ++c)
        if (static_cast<long>(c) != label_idx) ds.feature_names.push_back(header[c]);

    std::vector<std::vector<double>> rows;
    std::vector<int> truth;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue; // tolerate a trailing blank line
        std::vector<std::string> cells = split_line(line);
        if (cells.size() != header.size())
            throw std::invalid_argument("load_csv: row " + std::to_string(line_no) + " has " +
                                        std::to_string(cells.size()) + " cells, expected " +
                                        std::to_string(header.size()));
        std::vector<double> row;
        row.reserve(header.size());
        for (std::size_t c = 0; c < cells.size(); ++c) {
            if (static_cast<long>(c) == label_idx) {
                long lab = 0;
                if (!parse_int(cells[c], lab))
                    throw std::invalid_argument("load_csv: cannot parse label '" + cells[c] +
                                                "' at row " + std::to_string(line_no) +
                                                ", column '" + header[c] + "'");
                truth.push_back(static_cast<int>(lab));
            } else {
                double v = 0.0;
                if (!parse_double(cells[c], v))
                    throw std::invalid_argument("load_csv: cannot parse value '" + cells[c] +
                                                "' at row " + std::to_string(line_no) +
                                                ", column '" + header[c] + "'");
                row.push_back(v);
            }
        }
        rows.push_back(std::move(row));
    }

    ds.features = Matrix::from_rows(rows);
    if (rows.empty()) ds.features = Matrix(0, ds.feature_names.size());
    if (label_column) ds.truth = std::move(truth);
    return ds;
}

void write_csv(const Dataset& ds, std::ostream& out) {
    for (std::size_t j = 0; j < ds.feature_names.size(); ++j) {
        if (j) out << ',';
        out << ds.feature_names[j];
    }
    if (ds.truth) out << (ds.feature_names.empty() ? "" : ",") << "cluster";
    out << '\n';
    for (std::size_t i = 0; i < ds.n(); ++i) {
        for (std::size_t j = 0; j < ds.dim(); ++j) {
            if (j) out << ',';
            out << fmt_full(ds.features(i, j));
        }
        if (ds.truth) out << (ds.dim() ? "," : "") << (*ds.truth)[i];
        out << '\n';
    }
}

std::pair<Dataset, std::vector<int>> take_label_column(const Dataset& ds, const std::string& name) {
    auto it = std::find(ds.feature_names.begin(), ds.feature_names.end(), name);
    if (it == ds.feature_names.end())
        throw std::invalid_argument("take_label_column: column '" + name + "' not found");
    std::size_t idx = it - ds.feature_names.begin();

    Dataset out;
    out.truth = ds.truth;
    out.sequences = ds.sequences;
    for (std::size_t j = 0; j < ds.dim(); ++j)
        if (j != idx) out.feature_names.push_back(ds.feature_names[j]);
    out.features = Matrix(ds.n(), ds.dim() - 1);

    std::vector<int> labels(ds.n());
    for (std::size_t i = 0; i < ds.n(); ++i) {
        std::size_t jj = 0;
        for (std::size_t j = 0; j < ds.dim(); ++j) {
            double v = ds.features(i, j);
            if (j == idx) {
                double r = std::round(v);
                if (std::abs(v - r) > 1e-9)
                    throw std::invalid_argument("take_label_column: non-integer label " +
                                                std::to_string(v) + " in column '" + name + "'");
                labels[i] = static_cast<int>(r);
            } else {
                out.features(i, jj++) = v;
            }
        }
    }
    return {std::move(out), std::move(labels)};
}

std::pair<Dataset, ScalingParams> standardize(const Dataset& ds) {
    const std::size_t n = ds.n(), d = ds.dim();
    if (n < 2) throw std::invalid_argument("standardize: need at least 2 rows");

    ScalingParams params;
    params.mean.assign(d, 0.0);
    params.stddev.assign(d, 1.0);

    Dataset out = ds;
    for (std::size_t j = 0; j < d; ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += ds.features(i, j);
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double dv = ds.features(i, j) - mean;
            var += dv * dv;
        }
        var /= static_cast<double>(n);
        double sd = std::sqrt(var);
        if (sd == 0.0) continue; // constant feature passes through, sigma stays 1
        params.mean[j] = mean;
        params.stddev[j] = sd;
        for (std::size_t i = 0; i < n; ++i)
            out.features(i, j) = (ds.features(i, j) - mean) / sd;
    }
    return {std::move(out), std::move(params)};
}

namespace {

// Centers with minimum pairwise distance exactly `separation`: scaled
// standard basis vectors when k <= d (all pairs at distance separation),
// otherwise the first k points of an integer lattice scaled by separation.
std::vector<std::vector<double>> blob_centers(std::size_t k, std::size_t d, double separation) {
    std::vector<std::vector<double>> centers(k, std::vector<double>(d, 0.0));
    if (k <= d) {
        double scale = separation / std::sqrt(2.0);
        for (std::size_t c = 0; c < k; ++c) centers[c][c] = scale;
        return centers;
    }
    std::size_t side = 1;
    while (std::pow(static_cast<double>(side), static_cast<double>(d)) < static_cast<double>(k))
        ++side;
    for (std::size_t c = 0; c < k; ++c) {
        std::size_t m = c;
        for (std::size_t j = 0; j < d; ++j) {
            centers[c][j] = separation * static_cast<double>(m % side);
            m /= side;
        }
    }
    return centers;
}

} // namespace

Dataset gen_blobs(std::size_t k, std::size_t per_cluster, std::size_t d,
                  double separation, std::uint64_t seed) {
    if (k < 1 || per_cluster < 1 || d < 1)
        throw std::invalid_argument("gen_blobs: k, per_cluster and d must be >= 1");
    if (separation < 0.0) throw std::invalid_argument("gen_blobs: separation must be >= 0");

    auto centers = blob_centers(k, d, separation);
    Rng rng(seed);

    Dataset ds;
    ds.features = Matrix(k * per_cluster, d);
    ds.truth = std::vector<int>(k * per_cluster);
    for (std::size_t j = 0; j < d; ++j) ds.feature_names.push_back("f" + std::to_string(j));

    std::size_t row = 0;
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t i = 0; i < per_cluster; ++i, ++row) {
            for (std::size_t j = 0; j < d; ++j)
                ds.features(row, j) = centers[c][j] + rng.normal();
            (*ds.truth)[row] = static_cast<int>(c);
        }
    }
    return ds;
}

Dataset gen_event_sequences(std::size_t k, std::size_t per_cluster, std::size_t base_len,
                            double noise, std::uint64_t seed, double warp_frac) {
    if (k < 1 || per_cluster < 1) throw std::invalid_argument("gen_event_sequences: k and per_cluster must be >= 1");
    if (base_len < 2) throw std::invalid_argument("gen_event_sequences: base_len must be >= 2");
    if (noise < 0.0) throw std::invalid_argument("gen_event_sequences: noise must be >= 0");
    if (warp_frac < 0.0 || warp_frac >= 1.0)
        throw std::invalid_argument("gen_event_sequences: warp_frac must be in [0, 1)");

    const double two_pi = 2.0 * 3.14159265358979323846;
    Rng rng(seed);

    Dataset ds;
    ds.feature_names = {"seq_mean", "seq_std", "seq_min", "seq_max"};
    ds.features = Matrix(k * per_cluster, 4);
    ds.truth = std::vector<int>(k * per_cluster);
    ds.sequences = std::vector<std::vector<double>>();
    ds.sequences->reserve(k * per_cluster);

    std::size_t row = 0;
    for (std::size_t c = 0; c < k; ++c) {
        double freq = static_cast<double>(c + 1);
        for (std::size_t i = 0; i < per_cluster; ++i, ++row) {
            double u = rng.uniform(-1.0, 1.0);
            auto len = static_cast<std::size_t>(
                std::llround(static_cast<double>(base_len) * (1.0 + warp_frac * u)));
            len = std::max<std::size_t>(len, 2);

            std::vector<double> seq(len);
            for (std::size_t t = 0; t < len; ++t) {
                double pos = static_cast<double>(t) / static_cast<double>(len - 1);
                seq[t] = std::sin(two_pi * freq * pos) + noise * rng.normal();
            }

            double mean = 0.0, lo = seq[0], hi = seq[0];
            for (double v : seq) {
                mean += v;
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            mean /= static_cast<double>(len);
            double var = 0.0;
            for (double v : seq) var += (v - mean) * (v - mean);
            var /= static_cast<double>(len);

            ds.features(row, 0) = mean;
            ds.features(row, 1) = std::sqrt(var);
            ds.features(row, 2) = lo;
            ds.features(row, 3) = hi;
            (*ds.truth)[row] = static_cast<int>(c);
            ds.sequences->push_back(std::move(seq));
        }
    }
    return ds;
}

Dataset gen_multistage_walks(const std::vector<Matrix>& transition, std::size_t per_cluster,
                             std::size_t walk_len, std::uint64_t seed) {
    if (transition.empty()) throw std::invalid_argument("gen_multistage_walks: no transition matrices");
    if (per_cluster < 1) throw std::invalid_argument("gen_multistage_walks: per_cluster must be >= 1");
    if (walk_len < 2) throw std::invalid_argument("gen_multistage_walks: walk_len must be >= 2");
    const std::size_t stages = transition.front().rows();
    if (stages < 2) throw std::invalid_argument("gen_multistage_walks: stages must be >= 2");
    for (const auto& m : transition) {
        if (m.rows() != stages || m.cols() != stages)
            throw std::invalid_argument("gen_multistage_walks: transition matrices must all be stages x stages");
        for (std::size_t s = 0; s < stages; ++s) {
            double sum = 0.0;
            for (std::size_t t = 0; t < stages; ++t) {
                if (m(s, t) < 0.0)
                    throw std::invalid_argument("gen_multistage_walks: negative transition probability");
                sum += m(s, t);
            }
            if (sum <= 0.0)
                throw std::invalid_argument("gen_multistage_walks: transition row sums to zero");
        }
    }

    const std::size_t k = transition.size();
    Rng rng(seed);

    Dataset ds;
    ds.features = Matrix(k * per_cluster, stages * stages);
    ds.truth = std::vector<int>(k * per_cluster);
    for (std::size_t s = 0; s < stages; ++s)
        for (std::size_t t = 0; t < stages; ++t)
            ds.feature_names.push_back("t" + std::to_string(s) + "_" + std::to_string(t));

    std::size_t row = 0;
    for (std::size_t c = 0; c < k; ++c) {
        const Matrix& tm = transition[c];
        std::vector<double> row_sum(stages, 0.0);
        for (std::size_t s = 0; s < stages; ++s)
            for (std::size_t t = 0; t < stages; ++t) row_sum[s] += tm(s, t);

        for (std::size_t i = 0; i < per_cluster; ++i, ++row) {
            auto stage = static_cast<std::size_t>(rng.uniform_int(stages));
            for (std::size_t step = 1; step < walk_len; ++step) {
                double u = rng.uniform() * row_sum[stage];
                double acc = 0.0;
                std::size_t next = stages - 1;
                for (std::size_t t = 0; t < stages; ++t) {
                    acc += tm(stage, t);
                    if (u < acc) {
                        next = t;
                        break;
                    }
                }
                ds.features(row, stage * stages + next) += 1.0;
                stage = next;
            }
            (*ds.truth)[row] = static_cast<int>(c);
        }
    }
    return ds;
}

Dataset gen_multistage(std::size_t k, std::size_t per_cluster, std::size_t stages,
                       std::uint64_t seed) {
    if (stages < 2) throw std::invalid_argument("gen_multistage: stages must be >= 2");
    if (k < 1 || per_cluster < 1) throw std::invalid_argument("gen_multistage: k and per_cluster must be >= 1");

    // Random row-stochastic matrices, one per cluster, drawn before the
    // walks so the walk stream is independent of k only through the draw
    // order (fixed for fixed arguments).
    Rng rng(derive_seed(seed, 0xA11CE));
    std::vector<Matrix> transition(k, Matrix(stages, stages));
    for (std::size_t c = 0; c < k; ++c) {
        for (std::size_t s = 0; s < stages; ++s) {
            double sum = 0.0;
            for (std::size_t t = 0; t < stages; ++t) {
                double e = -std::log(1.0 - rng.uniform()); // Exp(1) draw, Dirichlet(1) row
                transition[c](s, t) = e;
                sum += e;
            }
            for (std::size_t t = 0; t < stages; ++t) transition[c](s, t) /= sum;
        }
    }
    return gen_multistage_walks(transition, per_cluster, 50, derive_seed(seed, 0xB0B));
}

} // namespace exalt
