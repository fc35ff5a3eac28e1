#pragma once

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include <utility>
#include <vector>

namespace ccsim {

// Weighted digraph over nodes 0..n-1. weights(i, j) = a_ij >= 0 is the
// weight with which node i receives information from node j, so a_ij > 0
// means the edge j -> i exists. The diagonal is exactly zero.
class DirectedGraph {
public:
    DirectedGraph();  // single node, no edges
    explicit DirectedGraph(Eigen::MatrixXd weights);

    int size() const { return static_cast<int>(weights_.rows()); }
    const Eigen::MatrixXd& weights() const { return weights_; }
    double weight(int i, int j) const { return weights_(i, j); }

    // Information sources of node i: pairs (j, a_ij) with a_ij > 0.
    const std::vector<std::pair<int, double>>& in_neighbors(int i) const {
        return neighbors_[static_cast<size_t>(i)];
    }

private:
    Eigen::MatrixXd weights_;
    std::vector<std::vector<std::pair<int, double>>> neighbors_;
};

Eigen::VectorXd in_degrees(const DirectedGraph& g);

// L = D - A. Row sums are exactly zero by construction.
Eigen::MatrixXd laplacian(const DirectedGraph& g);

// Strongly connected components along the direction of information flow,
// in topological order of the condensation (sources first). Node ids
// inside each component are ascending.
std::vector<std::vector<int>> strongly_connected_components(const DirectedGraph& g);

bool is_strongly_connected(const DirectedGraph& g);

// True iff some node reaches all others along information-flow arcs,
// i.e. the condensation has a single source component.
bool has_spanning_tree(const DirectedGraph& g);

// Positive left null vector of L, normalized to sum 1.
// Throws NotStronglyConnected / NumericalRankFailure.
Eigen::VectorXd left_eigenvector(const DirectedGraph& g);

// W L + L^T W with W = diag(omega); symmetric positive semidefinite with
// the all-ones vector in its null space. Throws DimensionMismatch.
Eigen::MatrixXd lhat(const DirectedGraph& g, const Eigen::VectorXd& omega);

// Nonpositive off-diagonal entries and all eigenvalue real parts > 1e-12.
bool is_nonsingular_m_matrix(const Eigen::MatrixXd& mat);

enum class BlockKind { RootScc, MMatrixBlock };

struct GraphDecomposition {
    std::vector<int> permutation;            // new index -> original node
    std::vector<std::vector<int>> blocks;    // original node ids per block
    std::vector<BlockKind> block_kinds;
};

// Component reordering under which the Laplacian is lower block
// triangular, first block strongly connected, later diagonal blocks
// nonsingular M-matrices. Throws NoSpanningTree when the condensation
// has more than one source component.
GraphDecomposition perron_frobenius_form(const DirectedGraph& g);

// JSON schema: {"n": int, "edges": [{"from": i, "to": j, "weight": w}]}
// with 1-based node indices; "weight" defaults to 1.0.
DirectedGraph graph_from_json(const nlohmann::ordered_json& j);
nlohmann::ordered_json graph_to_json(const DirectedGraph& g);

} // namespace ccsim
