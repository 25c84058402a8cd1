#ifndef EXALT_LABELING_HPP
#define EXALT_LABELING_HPP

#include <vector>

namespace exalt {

// Length-n cluster assignment. Non-noise labels form a contiguous range
// [0, k); kNoise is reserved for points no cluster claims (DBSCAN).
using Labeling = std::vector<int>;

inline constexpr int kNoise = -1;

// Number of clusters, i.e. 1 + max non-noise label (0 when all noise).
inline int num_clusters(const Labeling& labels) {
    int hi = -1;
    for (int v : labels)
        if (v > hi) hi = v;
    return hi + 1;
}

inline std::size_t count_noise(const Labeling& labels) {
    std::size_t c = 0;
    for (int v : labels)
        if (v == kNoise) ++c;
    return c;
}

} // namespace exalt

#endif // EXALT_LABELING_HPP
