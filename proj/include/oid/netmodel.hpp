#pragma once

// Power network description: nodes with output impedances, homogeneous RL
// lines, and the incidence / weighted Laplacian matrices built from them.

#include <cstddef>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace oid {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Malformed input document (bad JSON, missing or mistyped field).
class ParseError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Well-formed input that violates a network invariant. `field()` names the
/// offending entry, e.g. "edges[2].length" or "nodes[id=5]".
class ValidationError : public std::runtime_error {
public:
    ValidationError(std::string field, const std::string& what)
        : std::runtime_error(field + ": " + what), field_(std::move(field)) {}
    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

/// A computation that cannot produce a trustworthy number (singular block,
/// disagreeing eigen-routes, complex spectrum where a real one is required).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class NodeRole { Source, Load };

std::string_view to_string(NodeRole role);

struct Node {
    int id = 0;
    NodeRole role = NodeRole::Source;
    double r_out = 0.0;  // ohm
    double l_out = 0.0;  // henry
    std::string label;   // optional, free text

    bool operator==(const Node&) const = default;
};

/// Undirected line between two node ids. Lengths are in the network's
/// declared length unit.
struct Edge {
    int a = 0;
    int b = 0;
    double length = 0.0;

    bool operator==(const Edge&) const = default;
};

struct LineParameters {
    double r_per_len = 0.0;  // ohm / length-unit
    double l_per_len = 0.0;  // henry / length-unit
    std::string length_unit = "pu";

    bool operator==(const LineParameters&) const = default;
};

/// Immutable, validated network. Nodes are stored sorted by id; the position
/// of a node in that order is its matrix index everywhere in the library.
class PowerNetwork {
public:
    /// Throws ValidationError on any invariant violation.
    PowerNetwork(std::vector<Node> nodes, std::vector<Edge> edges, LineParameters line,
                 double frequency_rad_s);

    const std::vector<Node>& nodes() const noexcept { return nodes_; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }
    const LineParameters& line() const noexcept { return line_; }
    double omega() const noexcept { return omega_; }

    std::size_t node_count() const noexcept { return nodes_.size(); }
    std::size_t edge_count() const noexcept { return edges_.size(); }

    /// Matrix index of a node id; throws std::out_of_range for unknown ids.
    std::size_t index_of(int id) const;
    bool has_node(int id) const { return index_.count(id) != 0; }
    bool has_edge(int a, int b) const;

    std::vector<std::size_t> source_indices() const;
    std::vector<std::size_t> load_indices() const;

    Vector output_resistances() const;
    Vector output_inductances() const;

    PowerNetwork with_frequency(double omega) const;
    PowerNetwork with_output_resistance(double r_out) const;
    PowerNetwork with_output_inductance(double l_out) const;
    PowerNetwork with_roles(const std::vector<std::size_t>& source_indices) const;

    bool operator==(const PowerNetwork& other) const {
        return nodes_ == other.nodes_ && edges_ == other.edges_ && line_ == other.line_ &&
               omega_ == other.omega_;
    }

private:
    std::vector<Node> nodes_;
    std::vector<Edge> edges_;
    LineParameters line_;
    double omega_;
    std::map<int, std::size_t> index_;
};

/// Parse and validate a JSON network document.
PowerNetwork load_network(std::string_view document);
PowerNetwork load_network_file(const std::filesystem::path& path);
std::string save_network(const PowerNetwork& net);

struct IncidenceMatrix {
    Matrix matrix;                                          // n x m, entries in {-1, 0, +1}
    std::vector<std::pair<std::size_t, std::size_t>> orientation;  // (tail, head) per column
};

/// Column k is +1 at the tail and -1 at the head of edge k; the tail is the
/// endpoint with the smaller node id.
IncidenceMatrix build_incidence(const PowerNetwork& net);

struct WeightedLaplacian {
    Matrix matrix;   // B * diag(weights) * B^T
    Vector weights;  // 1 / length per edge
};

WeightedLaplacian build_laplacian(const PowerNetwork& net);

/// Everything the measure computations need, detached from the node/edge
/// bookkeeping: a Laplacian (full or Kron-reduced), homogeneous line
/// parameters, and the output impedances attached to each row.
struct GridModel {
    Matrix laplacian;
    double r = 0.0;      // ohm / length-unit
    double l = 0.0;      // henry / length-unit
    double omega = 0.0;  // rad/s
    Vector r_out;
    Vector l_out;
    std::vector<int> node_ids;  // original id of each row

    std::size_t size() const { return static_cast<std::size_t>(laplacian.rows()); }
};

/// Full-network model: every node carries its output impedance.
GridModel grid_model(const PowerNetwork& net);

/// Union-find connectivity over n vertices.
bool is_connected(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges);

}  // namespace oid
