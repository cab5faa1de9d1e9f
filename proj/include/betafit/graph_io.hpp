#pragma once

#include <cstddef>
#include <cstdint>
#include <istream>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace betafit {

// Undirected edge stored with u < v.
struct Edge {
    std::uint32_t u;
    std::uint32_t v;
    friend bool operator==(const Edge&, const Edge&) = default;
};

struct IngestStats {
    std::size_t data_lines = 0;
    std::size_t self_loops_dropped = 0;
    std::size_t duplicates_dropped = 0;
    std::size_t relation_filtered = 0;
};

// Simple undirected graph. Edges are sorted by (u, v), unique, and loop-free.
// labels[i] is the external name of node i; empty when nodes are anonymous
// (then the decimal index is used as the label).
struct EdgeList {
    std::size_t n = 0;
    std::vector<Edge> edges;
    std::vector<std::string> labels;
    IngestStats stats;

    std::string label(std::size_t i) const;
};

struct DegreeSequence {
    std::vector<std::int64_t> degrees;
    std::vector<std::string> labels;  // empty or size() == degrees.size()

    std::size_t n() const { return degrees.size(); }
    std::string label(std::size_t i) const;
    std::int64_t total() const;
    std::int64_t max_degree() const;
};

// The m distinct degrees d_(1) < ... < d_(m), their multiplicities n_k and the
// node -> class map. Immutable once built.
class DegreeHistogram {
  public:
    static DegreeHistogram build(std::span<const std::int64_t> degrees);
    // Synthetic histogram from (degree, count) pairs; node_to_class lists the
    // nodes class by class. Used to construct large reduced problems cheaply.
    static DegreeHistogram from_classes(std::span<const std::int64_t> class_degrees,
                                        std::span<const std::int64_t> class_counts);

    std::size_t n() const { return node_to_class_.size(); }
    std::size_t m() const { return degrees_.size(); }
    const std::vector<std::int64_t>& degrees() const { return degrees_; }
    const std::vector<std::int64_t>& counts() const { return counts_; }
    const std::vector<std::uint32_t>& node_to_class() const { return node_to_class_; }
    std::int64_t degree(std::size_t k) const { return degrees_[k]; }
    std::int64_t count(std::size_t k) const { return counts_[k]; }
    std::int64_t total_degree() const { return total_degree_; }
    std::int64_t max_degree() const { return degrees_.empty() ? 0 : degrees_.back(); }

  private:
    std::vector<std::int64_t> degrees_;
    std::vector<std::int64_t> counts_;
    std::vector<std::uint32_t> node_to_class_;
    std::int64_t total_degree_ = 0;
};

enum class EdgeDialect {
    pairs,    // "u v"
    triples,  // "u relation v", kept when relation matches
};

struct EdgeListOptions {
    EdgeDialect dialect = EdgeDialect::pairs;
    std::string relation;                 // triples dialect only
    std::optional<std::size_t> num_nodes;  // declare trailing isolated nodes
};

// Reads the whole stream, transparently inflating gzip input.
std::string read_stream(std::istream& in);

EdgeList read_edge_list(std::istream& in, const EdgeListOptions& opts = {});
EdgeList parse_edge_list(std::string_view text, const EdgeListOptions& opts = {});

// Builds an EdgeList from 0-based index pairs (deduplicated, loops dropped).
EdgeList make_edge_list(std::size_t n, std::span<const Edge> edges);

DegreeSequence degrees_of(const EdgeList& g);

// Lines of "degree" or "label degree". num_nodes defaults to the line count.
DegreeSequence read_degree_file(std::istream& in);
DegreeSequence parse_degree_file(std::string_view text);

inline DegreeHistogram build_histogram(const DegreeSequence& d) {
    return DegreeHistogram::build(d.degrees);
}

// label -> node index, for resolving external references.
std::unordered_map<std::string, std::size_t> label_index(const DegreeSequence& d);

}  // namespace betafit
