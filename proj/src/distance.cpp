#include "exalt/distance.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "exalt/parallel.hpp"

namespace exalt {

Metric metric_from_string(const std::string& name) {
    if (name == "euclidean") return Metric::euclidean;
    if (name == "dtw") return Metric::dtw;
    throw std::invalid_argument("unknown metric '" + name + "' (valid: euclidean, dtw)");
}

std::string to_string(Metric m) {
    return m == Metric::euclidean ? "euclidean" : "dtw";
}

double euclidean(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        throw std::invalid_argument("euclidean: length mismatch (" + std::to_string(a.size()) +
                                    " vs " + std::to_string(b.size()) + ")");
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        double dv = a[i] - b[i];
        sum += dv * dv;
    }
    return std::sqrt(sum);
}

double dtw(std::span<const double> a, std::span<const double> b,
           std::optional<std::size_t> band, bool normalize) {
    const std::size_t la = a.size(), lb = b.size();
    if (la == 0 || lb == 0) throw std::invalid_argument("dtw: empty sequence");

    const std::size_t len_gap = la > lb ? la - lb : lb - la;
    if (band && *band < len_gap)
        throw std::invalid_argument("dtw: band " + std::to_string(*band) +
                                    " narrower than length difference " + std::to_string(len_gap));

    constexpr double inf = std::numeric_limits<double>::infinity();
    // Two-row DP over the (la+1) x (lb+1) grid with an infinite border.
    std::vector<double> prev(lb + 1, inf), curr(lb + 1, inf);
    prev[0] = 0.0;
    for (std::size_t i = 1; i <= la; ++i) {
        curr.assign(lb + 1, inf);
        std::size_t j_lo = 1, j_hi = lb;
        if (band) {
            j_lo = (i > *band) ? i - *band : 1;
            j_hi = std::min<std::size_t>(lb, i + *band);
        }
        for (std::size_t j = j_lo; j <= j_hi; ++j) {
            double best = std::min(prev[j - 1], std::min(prev[j], curr[j - 1]));
            curr[j] = std::abs(a[i - 1] - b[j - 1]) + best;
        }
        std::swap(prev, curr);
    }
    return normalize ? prev[lb] / double(la + lb) : prev[lb];
}

namespace {

DistanceMatrix pairwise_impl(std::size_t n, const auto& dist_fn) {
    DistanceMatrix dm;
    dm.d = Matrix(n, n, 0.0);
    // One task per row i computes pairs (i, j > i); writes are disjoint
    // because the mirror cell (j, i) belongs to row i's output too.
    parallel_for(n, [&](std::size_t i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double v = dist_fn(i, j);
            dm.d(i, j) = v;
            dm.d(j, i) = v;
        }
    });
    return dm;
}

} // namespace

DistanceMatrix pairwise(const Dataset& ds, Metric metric,
                        std::optional<std::size_t> dtw_band) {
    if (metric == Metric::dtw) {
        if (!ds.sequences)
            throw std::invalid_argument("pairwise: dtw requested but dataset has no sequences");
        const auto& seqs = *ds.sequences;
        return pairwise_impl(ds.n(), [&](std::size_t i, std::size_t j) {
            return dtw(seqs[i], seqs[j], dtw_band);
        });
    }
    return pairwise_rows(ds.features);
}

DistanceMatrix pairwise_rows(const Matrix& rows) {
    return pairwise_impl(rows.rows(), [&](std::size_t i, std::size_t j) {
        return euclidean(rows.row(i), rows.row(j));
    });
}

} // namespace exalt
