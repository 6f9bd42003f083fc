#include "airgrid/graph.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

namespace airgrid {

bool Adjacency::has_edge(int i, int j) const {
    const auto& nb = neighbors[static_cast<std::size_t>(i)];
    return std::binary_search(nb.begin(), nb.end(), j);
}

Adjacency knn_graph(const std::vector<std::array<double, 2>>& centers, int k) {
    const int n = static_cast<int>(centers.size());
    if (k < 1) throw std::invalid_argument("knn_graph: k must be positive");
    if (n <= k) throw std::invalid_argument("knn_graph: need more than k nodes");

    Adjacency adj;
    adj.n = n;
    adj.out_neighbors.assign(static_cast<std::size_t>(n), {});

    std::vector<std::pair<double, int>> dist(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double dx = centers[j][0] - centers[i][0];
            const double dy = centers[j][1] - centers[i][1];
            dist[static_cast<std::size_t>(j)] = {dx * dx + dy * dy, j};
        }
        // drop self, keep k closest; equal distances resolve to the smaller index
        std::swap(dist[static_cast<std::size_t>(i)], dist[static_cast<std::size_t>(n - 1)]);
        std::partial_sort(dist.begin(), dist.begin() + k, dist.end() - 1);
        auto& out = adj.out_neighbors[static_cast<std::size_t>(i)];
        out.reserve(static_cast<std::size_t>(k));
        for (int r = 0; r < k; ++r) out.push_back(dist[static_cast<std::size_t>(r)].second);
    }

    // symmetrize by union
    std::vector<std::set<int>> sym(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        for (int j : adj.out_neighbors[static_cast<std::size_t>(i)]) {
            sym[static_cast<std::size_t>(i)].insert(j);
            sym[static_cast<std::size_t>(j)].insert(i);
        }
    }
    adj.neighbors.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        adj.neighbors.emplace_back(sym[static_cast<std::size_t>(i)].begin(),
                                   sym[static_cast<std::size_t>(i)].end());

    adj.norm = normalize_adjacency(adj.neighbors);
    return adj;
}

std::vector<double> normalize_adjacency(const std::vector<std::vector<int>>& neighbors) {
    const int n = static_cast<int>(neighbors.size());
    std::vector<double> inv_sqrt_deg(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        // degree of A + I: self loop plus symmetric neighbors
        const double deg = 1.0 + static_cast<double>(neighbors[static_cast<std::size_t>(i)].size());
        inv_sqrt_deg[static_cast<std::size_t>(i)] = 1.0 / std::sqrt(deg);
    }
    std::vector<double> m(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) {
        m[static_cast<std::size_t>(i) * n + i] =
            inv_sqrt_deg[static_cast<std::size_t>(i)] * inv_sqrt_deg[static_cast<std::size_t>(i)];
        for (int j : neighbors[static_cast<std::size_t>(i)])
            m[static_cast<std::size_t>(i) * n + j] =
                inv_sqrt_deg[static_cast<std::size_t>(i)] * inv_sqrt_deg[static_cast<std::size_t>(j)];
    }
    return m;
}

EdgeList edge_list_with_self(const Adjacency& adj) {
    EdgeList edges;
    edges.n_nodes = adj.n;
    for (int i = 0; i < adj.n; ++i) {
        edges.seg.push_back(i);
        edges.nbr.push_back(i);
        for (int j : adj.neighbors[static_cast<std::size_t>(i)]) {
            edges.seg.push_back(i);
            edges.nbr.push_back(j);
        }
    }
    return edges;
}

}  // namespace airgrid
