#include "oid/netmodel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <json.hpp>

namespace oid {

using json = nlohmann::ordered_json;

std::string_view to_string(NodeRole role) {
    return role == NodeRole::Source ? "source" : "load";
}

namespace {

std::string node_field(int id) { return "nodes[id=" + std::to_string(id) + "]"; }

std::string edge_field(std::size_t k) { return "edges[" + std::to_string(k) + "]"; }

struct DisjointSet {
    std::vector<std::size_t> parent;
    explicit DisjointSet(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    std::size_t find(std::size_t x) {
        while (parent[x] != x) {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        return x;
    }
    void unite(std::size_t a, std::size_t b) { parent[find(a)] = find(b); }
};

}  // namespace

bool is_connected(std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
    if (n == 0) return false;
    DisjointSet ds(n);
    for (auto [a, b] : edges) ds.unite(a, b);
    const auto root = ds.find(0);
    for (std::size_t i = 1; i < n; ++i)
        if (ds.find(i) != root) return false;
    return true;
}

PowerNetwork::PowerNetwork(std::vector<Node> nodes, std::vector<Edge> edges, LineParameters line,
                           double frequency_rad_s)
    : nodes_(std::move(nodes)), edges_(std::move(edges)), line_(std::move(line)),
      omega_(frequency_rad_s) {
    if (!(std::isfinite(omega_) && omega_ > 0.0))
        throw ValidationError("frequency_rad_s", "must be positive and finite");
    if (!(std::isfinite(line_.r_per_len) && line_.r_per_len > 0.0))
        throw ValidationError("line.r_per_len", "must be positive and finite");
    if (!(std::isfinite(line_.l_per_len) && line_.l_per_len > 0.0))
        throw ValidationError("line.l_per_len", "must be positive and finite");
    if (nodes_.size() < 2) throw ValidationError("nodes", "at least two nodes are required");

    std::sort(nodes_.begin(), nodes_.end(), [](const Node& x, const Node& y) { return x.id < y.id; });
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        const auto& nd = nodes_[i];
        if (!index_.emplace(nd.id, i).second)
            throw ValidationError(node_field(nd.id), "duplicate node id");
        if (!(std::isfinite(nd.r_out) && nd.r_out >= 0.0))
            throw ValidationError(node_field(nd.id) + ".r_out", "must be nonnegative");
        if (!(std::isfinite(nd.l_out) && nd.l_out >= 0.0))
            throw ValidationError(node_field(nd.id) + ".l_out", "must be nonnegative");
    }

    std::set<std::pair<int, int>> seen;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t k = 0; k < edges_.size(); ++k) {
        auto& e = edges_[k];
        if (!has_node(e.a)) throw ValidationError(edge_field(k) + ".a", "unknown node " + std::to_string(e.a));
        if (!has_node(e.b)) throw ValidationError(edge_field(k) + ".b", "unknown node " + std::to_string(e.b));
        if (e.a == e.b) throw ValidationError(edge_field(k), "self-loop");
        if (!(std::isfinite(e.length) && e.length > 0.0))
            throw ValidationError(edge_field(k) + ".length", "must be positive and finite");
        if (e.a > e.b) std::swap(e.a, e.b);
        if (!seen.emplace(e.a, e.b).second)
            throw ValidationError(edge_field(k), "duplicate line between nodes " + std::to_string(e.a) +
                                                     " and " + std::to_string(e.b));
        pairs.emplace_back(index_.at(e.a), index_.at(e.b));
    }

    DisjointSet ds(nodes_.size());
    for (auto [a, b] : pairs) ds.unite(a, b);
    const auto root = ds.find(0);
    for (std::size_t i = 1; i < nodes_.size(); ++i)
        if (ds.find(i) != root)
            throw ValidationError(node_field(nodes_[i].id),
                                  "not connected to node " + std::to_string(nodes_[0].id));
}

std::size_t PowerNetwork::index_of(int id) const {
    auto it = index_.find(id);
    if (it == index_.end()) throw std::out_of_range("unknown node id " + std::to_string(id));
    return it->second;
}

bool PowerNetwork::has_edge(int a, int b) const {
    if (a > b) std::swap(a, b);
    return std::any_of(edges_.begin(), edges_.end(), [&](const Edge& e) { return e.a == a && e.b == b; });
}

std::vector<std::size_t> PowerNetwork::source_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].role == NodeRole::Source) out.push_back(i);
    return out;
}

std::vector<std::size_t> PowerNetwork::load_indices() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i)
        if (nodes_[i].role == NodeRole::Load) out.push_back(i);
    return out;
}

Vector PowerNetwork::output_resistances() const {
    Vector v(static_cast<Eigen::Index>(nodes_.size()));
    for (std::size_t i = 0; i < nodes_.size(); ++i) v(static_cast<Eigen::Index>(i)) = nodes_[i].r_out;
    return v;
}

Vector PowerNetwork::output_inductances() const {
    Vector v(static_cast<Eigen::Index>(nodes_.size()));
    for (std::size_t i = 0; i < nodes_.size(); ++i) v(static_cast<Eigen::Index>(i)) = nodes_[i].l_out;
    return v;
}

PowerNetwork PowerNetwork::with_frequency(double omega) const {
    return PowerNetwork(nodes_, edges_, line_, omega);
}

PowerNetwork PowerNetwork::with_output_resistance(double r_out) const {
    auto nodes = nodes_;
    for (auto& nd : nodes) nd.r_out = r_out;
    return PowerNetwork(std::move(nodes), edges_, line_, omega_);
}

PowerNetwork PowerNetwork::with_output_inductance(double l_out) const {
    auto nodes = nodes_;
    for (auto& nd : nodes) nd.l_out = l_out;
    return PowerNetwork(std::move(nodes), edges_, line_, omega_);
}

PowerNetwork PowerNetwork::with_roles(const std::vector<std::size_t>& source_indices) const {
    auto nodes = nodes_;
    for (auto& nd : nodes) nd.role = NodeRole::Load;
    for (auto i : source_indices) nodes.at(i).role = NodeRole::Source;
    return PowerNetwork(std::move(nodes), edges_, line_, omega_);
}

namespace {

template <typename T>
T required(const json& obj, const char* key, const std::string& where) {
    if (!obj.is_object() || !obj.contains(key))
        throw ParseError(where + "." + key + ": missing field");
    const auto& v = obj.at(key);
    try {
        if constexpr (std::is_same_v<T, double>) {
            if (!v.is_number()) throw ParseError(where + "." + key + ": expected a number");
        } else if constexpr (std::is_same_v<T, int>) {
            if (!v.is_number_integer()) throw ParseError(where + "." + key + ": expected an integer");
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) throw ParseError(where + "." + key + ": expected a string");
        }
        return v.get<T>();
    } catch (const json::exception& ex) {
        throw ParseError(where + "." + key + ": " + ex.what());
    }
}

}  // namespace

PowerNetwork load_network(std::string_view document) {
    json doc;
    try {
        doc = json::parse(document.begin(), document.end());
    } catch (const json::parse_error& ex) {
        throw ParseError(std::string("malformed JSON: ") + ex.what());
    }
    if (!doc.is_object()) throw ParseError("document: expected a JSON object");

    const double omega = required<double>(doc, "frequency_rad_s", "document");
    if (!doc.contains("line")) throw ParseError("document.line: missing field");
    const auto& jl = doc.at("line");
    LineParameters line{required<double>(jl, "r_per_len", "line"), required<double>(jl, "l_per_len", "line"),
                        required<std::string>(jl, "length_unit", "line")};

    if (!doc.contains("nodes") || !doc.at("nodes").is_array()) throw ParseError("document.nodes: expected an array");
    if (!doc.contains("edges") || !doc.at("edges").is_array()) throw ParseError("document.edges: expected an array");

    std::vector<Node> nodes;
    std::size_t k = 0;
    for (const auto& jn : doc.at("nodes")) {
        const std::string where = "nodes[" + std::to_string(k++) + "]";
        Node nd;
        nd.id = required<int>(jn, "id", where);
        const auto role = required<std::string>(jn, "role", where);
        if (role == "source")
            nd.role = NodeRole::Source;
        else if (role == "load")
            nd.role = NodeRole::Load;
        else
            throw ParseError(where + ".role: expected \"source\" or \"load\", got \"" + role + "\"");
        nd.r_out = required<double>(jn, "r_out", where);
        nd.l_out = required<double>(jn, "l_out", where);
        if (jn.contains("label")) nd.label = required<std::string>(jn, "label", where);
        nodes.push_back(std::move(nd));
    }

    std::vector<Edge> edges;
    k = 0;
    for (const auto& je : doc.at("edges")) {
        const std::string where = "edges[" + std::to_string(k++) + "]";
        edges.push_back({required<int>(je, "a", where), required<int>(je, "b", where),
                         required<double>(je, "length", where)});
    }

    return PowerNetwork(std::move(nodes), std::move(edges), std::move(line), omega);
}

PowerNetwork load_network_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path.string() + ": cannot open file");
    std::stringstream buf;
    buf << in.rdbuf();
    return load_network(buf.str());
}

std::string save_network(const PowerNetwork& net) {
    json doc;
    doc["frequency_rad_s"] = net.omega();
    doc["line"] = {{"r_per_len", net.line().r_per_len},
                   {"l_per_len", net.line().l_per_len},
                   {"length_unit", net.line().length_unit}};
    doc["nodes"] = json::array();
    for (const auto& nd : net.nodes()) {
        json jn = {{"id", nd.id}, {"role", std::string(to_string(nd.role))}, {"r_out", nd.r_out}, {"l_out", nd.l_out}};
        if (!nd.label.empty()) jn["label"] = nd.label;
        doc["nodes"].push_back(std::move(jn));
    }
    doc["edges"] = json::array();
    for (const auto& e : net.edges()) doc["edges"].push_back({{"a", e.a}, {"b", e.b}, {"length", e.length}});
    return doc.dump(2) + "\n";
}

IncidenceMatrix build_incidence(const PowerNetwork& net) {
    const auto n = static_cast<Eigen::Index>(net.node_count());
    const auto m = static_cast<Eigen::Index>(net.edge_count());
    IncidenceMatrix inc{Matrix::Zero(n, m), {}};
    for (Eigen::Index k = 0; k < m; ++k) {
        const auto& e = net.edges()[static_cast<std::size_t>(k)];
        // edges are stored with a < b
        const auto tail = net.index_of(e.a);
        const auto head = net.index_of(e.b);
        inc.matrix(static_cast<Eigen::Index>(tail), k) = 1.0;
        inc.matrix(static_cast<Eigen::Index>(head), k) = -1.0;
        inc.orientation.emplace_back(tail, head);
    }
    return inc;
}

WeightedLaplacian build_laplacian(const PowerNetwork& net) {
    const auto inc = build_incidence(net);
    Vector gamma(static_cast<Eigen::Index>(net.edge_count()));
    for (std::size_t k = 0; k < net.edge_count(); ++k)
        gamma(static_cast<Eigen::Index>(k)) = 1.0 / net.edges()[k].length;
    Matrix lap = inc.matrix * gamma.asDiagonal() * inc.matrix.transpose();
    return {0.5 * (lap + lap.transpose()), gamma};
}

GridModel grid_model(const PowerNetwork& net) {
    GridModel g;
    g.laplacian = build_laplacian(net).matrix;
    g.r = net.line().r_per_len;
    g.l = net.line().l_per_len;
    g.omega = net.omega();
    g.r_out = net.output_resistances();
    g.l_out = net.output_inductances();
    for (const auto& nd : net.nodes()) g.node_ids.push_back(nd.id);
    return g;
}

}  // namespace oid
