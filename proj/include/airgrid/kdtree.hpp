#pragma once

#include <utility>
#include <vector>

namespace airgrid {

// Median-split k-d tree over points of fixed dimension. Queries resolve
// distance ties toward the smaller point index, so results match an
// exhaustive scan using the same ordering.
class KdTree {
public:
    KdTree() = default;
    KdTree(int dim, const std::vector<double>& coords);

    int size() const { return n_; }

    // k nearest neighbors as (squared distance, point index), sorted
    // ascending by (distance, index). k is clamped to the point count.
    std::vector<std::pair<double, int>> knn(const double* query, int k) const;

private:
    struct Frame {
        int begin, end, depth;
    };

    int dim_ = 0;
    int n_ = 0;
    std::vector<double> coords_;
    // flattened tree: points_[m] is the splitting point of the subtree over
    // [begin, end) with m the midpoint; children are the two halves
    std::vector<int> points_;

    void build(int begin, int end, int depth);
    void search(int begin, int end, int depth, const double* query, int k,
                std::vector<std::pair<double, int>>& heap) const;
};

}  // namespace airgrid
