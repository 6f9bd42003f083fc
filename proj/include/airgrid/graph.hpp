#pragma once

#include <array>
#include <vector>

#include "airgrid/tensor.hpp"

namespace airgrid {

// k-NN graph over projected cell centers. Built directed (k out-edges per
// node), then symmetrized by union. norm holds the dense
// D^{-1/2} (A + I) D^{-1/2} matrix used by graph convolutions.
struct Adjacency {
    int n = 0;
    std::vector<std::vector<int>> out_neighbors;  // pre-symmetrization, exactly k each
    std::vector<std::vector<int>> neighbors;      // symmetrized, sorted, no self loops
    std::vector<double> norm;                     // n x n row-major

    bool has_edge(int i, int j) const;
};

// centers are (x, y) in meters. Distance ties break on the smaller node
// index, so callers that order nodes by (row, col) get lexicographic
// tie-breaking. Throws when n <= k.
Adjacency knn_graph(const std::vector<std::array<double, 2>>& centers, int k);

// Dense symmetric normalization with self loops added.
std::vector<double> normalize_adjacency(const std::vector<std::vector<int>>& neighbors);

// Edges grouped by receiving node, each node listed with itself first; the
// layout graph attention expects.
EdgeList edge_list_with_self(const Adjacency& adj);

}  // namespace airgrid
