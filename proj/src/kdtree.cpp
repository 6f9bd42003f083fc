#include "airgrid/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace airgrid {

namespace {
// heap ordering: the worst (largest distance, then largest index) on top
struct WorseOnTop {
    bool operator()(const std::pair<double, int>& a, const std::pair<double, int>& b) const {
        if (a.first != b.first) return a.first < b.first;
        return a.second < b.second;
    }
};
}  // namespace

KdTree::KdTree(int dim, const std::vector<double>& coords) : dim_(dim), coords_(coords) {
    if (dim_ <= 0) throw std::invalid_argument("KdTree: dimension must be positive");
    if (coords_.size() % static_cast<std::size_t>(dim_) != 0)
        throw std::invalid_argument("KdTree: coordinate count not divisible by dimension");
    n_ = static_cast<int>(coords_.size() / static_cast<std::size_t>(dim_));
    points_.resize(static_cast<std::size_t>(n_));
    for (int i = 0; i < n_; ++i) points_[static_cast<std::size_t>(i)] = i;
    if (n_ > 0) build(0, n_, 0);
}

void KdTree::build(int begin, int end, int depth) {
    if (end - begin <= 1) return;
    const int axis = depth % dim_;
    const int mid = begin + (end - begin) / 2;
    std::nth_element(points_.begin() + begin, points_.begin() + mid, points_.begin() + end,
                     [&](int a, int b) {
                         const double ca = coords_[static_cast<std::size_t>(a) * dim_ + axis];
                         const double cb = coords_[static_cast<std::size_t>(b) * dim_ + axis];
                         if (ca != cb) return ca < cb;
                         return a < b;
                     });
    build(begin, mid, depth + 1);
    build(mid + 1, end, depth + 1);
}

void KdTree::search(int begin, int end, int depth, const double* query, int k,
                    std::vector<std::pair<double, int>>& heap) const {
    if (begin >= end) return;
    const int axis = depth % dim_;
    const int mid = begin + (end - begin) / 2;
    const int p = points_[static_cast<std::size_t>(mid)];
    const double* pc = coords_.data() + static_cast<std::size_t>(p) * dim_;

    double d2 = 0.0;
    for (int a = 0; a < dim_; ++a) {
        const double diff = query[a] - pc[a];
        d2 += diff * diff;
    }
    const std::pair<double, int> cand{d2, p};
    if (static_cast<int>(heap.size()) < k) {
        heap.push_back(cand);
        std::push_heap(heap.begin(), heap.end(), WorseOnTop{});
    } else if (WorseOnTop{}(cand, heap.front())) {
        std::pop_heap(heap.begin(), heap.end(), WorseOnTop{});
        heap.back() = cand;
        std::push_heap(heap.begin(), heap.end(), WorseOnTop{});
    }

    const double plane = query[axis] - pc[axis];
    const int near_begin = plane < 0.0 ? begin : mid + 1;
    const int near_end = plane < 0.0 ? mid : end;
    const int far_begin = plane < 0.0 ? mid + 1 : begin;
    const int far_end = plane < 0.0 ? end : mid;

    search(near_begin, near_end, depth + 1, query, k, heap);
    // <= keeps equal-distance candidates reachable so index tie-breaking
    // agrees with the exhaustive scan
    if (static_cast<int>(heap.size()) < k || plane * plane <= heap.front().first)
        search(far_begin, far_end, depth + 1, query, k, heap);
}

std::vector<std::pair<double, int>> KdTree::knn(const double* query, int k) const {
    if (n_ == 0) throw std::runtime_error("KdTree: query on empty tree");
    k = std::min(k, n_);
    std::vector<std::pair<double, int>> heap;
    heap.reserve(static_cast<std::size_t>(k) + 1);
    search(0, n_, 0, query, k, heap);
    std::sort_heap(heap.begin(), heap.end(), WorseOnTop{});
    return heap;
}

}  // namespace airgrid
