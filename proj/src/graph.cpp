#include "ccsim/graph.hpp"

#include "ccsim/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <string>

namespace ccsim {

DirectedGraph::DirectedGraph() : DirectedGraph(Eigen::MatrixXd::Zero(1, 1)) {}

DirectedGraph::DirectedGraph(Eigen::MatrixXd weights) : weights_(std::move(weights)) {
    if (weights_.rows() != weights_.cols() || weights_.rows() < 1) {
        throw std::invalid_argument("adjacency matrix must be square and nonempty");
    }
    const int n = static_cast<int>(weights_.rows());
    for (int i = 0; i < n; ++i) {
        if (weights_(i, i) != 0.0) {
            throw std::invalid_argument("adjacency diagonal must be exactly zero");
        }
        for (int j = 0; j < n; ++j) {
            const double w = weights_(i, j);
            if (!(w >= 0.0) || !std::isfinite(w)) {
                throw std::invalid_argument("edge weights must be finite and nonnegative");
            }
        }
    }
    neighbors_.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (weights_(i, j) > 0.0) {
                neighbors_[static_cast<size_t>(i)].emplace_back(j, weights_(i, j));
            }
        }
    }
}

Eigen::VectorXd in_degrees(const DirectedGraph& g) {
    return g.weights().rowwise().sum();
}

Eigen::MatrixXd laplacian(const DirectedGraph& g) {
    Eigen::MatrixXd l = -g.weights();
    l.diagonal() = in_degrees(g);
    return l;
}

namespace {

// Tarjan over information-flow arcs j -> i (i.e. a_ij > 0).
struct SccState {
    const DirectedGraph* g = nullptr;
    std::vector<std::vector<int>> successors;  // successors[j] = {i : a_ij > 0}
    std::vector<int> index, lowlink, on_stack;
    std::vector<int> stack;
    int next_index = 0;
    std::vector<std::vector<int>> sccs;

    void dfs(int v) {
        index[v] = lowlink[v] = next_index++;
        stack.push_back(v);
        on_stack[v] = 1;
        for (int w : successors[static_cast<size_t>(v)]) {
            if (index[w] < 0) {
                dfs(w);
                lowlink[v] = std::min(lowlink[v], lowlink[w]);
            } else if (on_stack[w]) {
                lowlink[v] = std::min(lowlink[v], index[w]);
            }
        }
        if (lowlink[v] == index[v]) {
            std::vector<int> comp;
            int w;
            do {
                w = stack.back();
                stack.pop_back();
                on_stack[w] = 0;
                comp.push_back(w);
            } while (w != v);
            std::sort(comp.begin(), comp.end());
            sccs.push_back(std::move(comp));
        }
    }
};

struct Condensation {
    std::vector<std::vector<int>> components;  // topological order, sources first
    std::vector<int> comp_of;                  // node -> component index
};

Condensation condense(const DirectedGraph& g) {
    const int n = g.size();
    SccState st;
    st.g = &g;
    st.successors.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        for (const auto& [j, w] : g.in_neighbors(i)) {
            (void)w;
            st.successors[static_cast<size_t>(j)].push_back(i);
        }
    }
    st.index.assign(static_cast<size_t>(n), -1);
    st.lowlink.assign(static_cast<size_t>(n), -1);
    st.on_stack.assign(static_cast<size_t>(n), 0);
    for (int v = 0; v < n; ++v) {
        if (st.index[static_cast<size_t>(v)] < 0) st.dfs(v);
    }

    const int nc = static_cast<int>(st.sccs.size());
    std::vector<int> comp_of(static_cast<size_t>(n), -1);
    for (int c = 0; c < nc; ++c) {
        for (int v : st.sccs[static_cast<size_t>(c)]) comp_of[static_cast<size_t>(v)] = c;
    }

    std::vector<std::set<int>> out(static_cast<size_t>(nc));
    std::vector<int> indeg(static_cast<size_t>(nc), 0);
    for (int i = 0; i < n; ++i) {
        for (const auto& [j, w] : g.in_neighbors(i)) {
            (void)w;
            const int cj = comp_of[static_cast<size_t>(j)];
            const int ci = comp_of[static_cast<size_t>(i)];
            if (cj != ci && out[static_cast<size_t>(cj)].insert(ci).second) {
                ++indeg[static_cast<size_t>(ci)];
            }
        }
    }

    // Kahn with a deterministic tie-break: smallest member node first.
    auto key = [&](int c) { return st.sccs[static_cast<size_t>(c)].front(); };
    std::set<std::pair<int, int>> ready;
    for (int c = 0; c < nc; ++c) {
        if (indeg[static_cast<size_t>(c)] == 0) ready.insert({key(c), c});
    }
    Condensation result;
    result.comp_of.assign(static_cast<size_t>(n), -1);
    while (!ready.empty()) {
        const int c = ready.begin()->second;
        ready.erase(ready.begin());
        for (int v : st.sccs[static_cast<size_t>(c)]) {
            result.comp_of[static_cast<size_t>(v)] = static_cast<int>(result.components.size());
        }
        result.components.push_back(st.sccs[static_cast<size_t>(c)]);
        for (int d : out[static_cast<size_t>(c)]) {
            if (--indeg[static_cast<size_t>(d)] == 0) ready.insert({key(d), d});
        }
    }
    return result;
}

int count_source_components(const DirectedGraph& g, const Condensation& cond) {
    const int nc = static_cast<int>(cond.components.size());
    std::vector<int> has_external_in(static_cast<size_t>(nc), 0);
    for (int i = 0; i < g.size(); ++i) {
        for (const auto& [j, w] : g.in_neighbors(i)) {
            (void)w;
            const int ci = cond.comp_of[static_cast<size_t>(i)];
            if (cond.comp_of[static_cast<size_t>(j)] != ci) has_external_in[static_cast<size_t>(ci)] = 1;
        }
    }
    int sources = 0;
    for (int c = 0; c < nc; ++c) {
        if (!has_external_in[static_cast<size_t>(c)]) ++sources;
    }
    return sources;
}

} // namespace

std::vector<std::vector<int>> strongly_connected_components(const DirectedGraph& g) {
    return condense(g).components;
}

bool is_strongly_connected(const DirectedGraph& g) {
    return strongly_connected_components(g).size() == 1;
}

bool has_spanning_tree(const DirectedGraph& g) {
    const Condensation cond = condense(g);
    return count_source_components(g, cond) == 1;
}

Eigen::VectorXd left_eigenvector(const DirectedGraph& g) {
    if (!is_strongly_connected(g)) {
        throw NotStronglyConnected("left eigenvector requires a strongly connected graph");
    }
    const int n = g.size();
    if (n == 1) return Eigen::VectorXd::Ones(1);

    const Eigen::MatrixXd lt = laplacian(g).transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(lt, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    const double scale = std::max(1.0, sv(0));
    if (sv(n - 2) <= 1e-10 * scale) {
        throw NumericalRankFailure("null space of L^T is not one-dimensional");
    }

    Eigen::VectorXd omega = svd.matrixV().col(n - 1);
    int imax = 0;
    omega.cwiseAbs().maxCoeff(&imax);
    omega /= omega(imax);
    if ((omega.array() <= 0.0).any()) {
        throw NumericalRankFailure("left null vector has non-positive entries");
    }
    omega /= omega.sum();
    return omega;
}

Eigen::MatrixXd lhat(const DirectedGraph& g, const Eigen::VectorXd& omega) {
    if (omega.size() != g.size()) {
        throw DimensionMismatch("omega length does not match node count");
    }
    const Eigen::MatrixXd wl = omega.asDiagonal() * laplacian(g);
    return wl + wl.transpose();
}

bool is_nonsingular_m_matrix(const Eigen::MatrixXd& mat) {
    if (mat.rows() != mat.cols() || mat.rows() < 1) {
        throw std::invalid_argument("matrix must be square and nonempty");
    }
    const int n = static_cast<int>(mat.rows());
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (i != j && mat(i, j) > 0.0) return false;
        }
    }
    const Eigen::EigenSolver<Eigen::MatrixXd> es(mat, /*computeEigenvectors=*/false);
    return (es.eigenvalues().real().array() > 1e-12).all();
}

GraphDecomposition perron_frobenius_form(const DirectedGraph& g) {
    const Condensation cond = condense(g);
    if (count_source_components(g, cond) != 1) {
        throw NoSpanningTree("graph has no spanning tree: condensation has multiple source components");
    }
    GraphDecomposition d;
    d.blocks = cond.components;
    d.block_kinds.assign(d.blocks.size(), BlockKind::MMatrixBlock);
    d.block_kinds.front() = BlockKind::RootScc;
    for (const auto& block : d.blocks) {
        d.permutation.insert(d.permutation.end(), block.begin(), block.end());
    }
    return d;
}

DirectedGraph graph_from_json(const nlohmann::ordered_json& j) {
    if (!j.is_object() || !j.contains("n")) {
        throw std::invalid_argument("graph JSON must be an object with an \"n\" field");
    }
    const int n = j.at("n").get<int>();
    if (n < 1) throw std::invalid_argument("graph node count must be positive");

    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    if (j.contains("edges")) {
        for (const auto& e : j.at("edges")) {
            const int from = e.at("from").get<int>();
            const int to = e.at("to").get<int>();
            if (from < 1 || from > n || to < 1 || to > n) {
                throw std::invalid_argument("edge endpoints must be 1-based node indices in [1, n]");
            }
            if (from == to) throw std::invalid_argument("self-loops are not allowed");
            const double weight = e.value("weight", 1.0);
            if (!(weight >= 0.0) || !std::isfinite(weight)) {
                throw std::invalid_argument("edge weight must be finite and nonnegative");
            }
            if (w(to - 1, from - 1) != 0.0) {
                throw std::invalid_argument("duplicate edge " + std::to_string(from) + " -> " + std::to_string(to));
            }
            w(to - 1, from - 1) = weight;
        }
    }
    return DirectedGraph(std::move(w));
}

nlohmann::ordered_json graph_to_json(const DirectedGraph& g) {
    nlohmann::ordered_json out;
    out["n"] = g.size();
    auto edges = nlohmann::ordered_json::array();
    for (int from = 0; from < g.size(); ++from) {
        for (int to = 0; to < g.size(); ++to) {
            const double w = g.weight(to, from);
            if (w > 0.0) {
                edges.push_back({{"from", from + 1}, {"to", to + 1}, {"weight", w}});
            }
        }
    }
    out["edges"] = std::move(edges);
    return out;
}

} // namespace ccsim
