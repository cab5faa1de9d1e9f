#pragma once

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "betafit/graph_io.hpp"
#include "betafit/solver.hpp"

namespace betafit::cli {

// Minimal streaming JSON emitter. Numbers use 17 significant digits so that
// every double reads back bit-identical; non-finite values become null.
class JsonWriter {
  public:
    explicit JsonWriter(std::ostream& out) : out_(out) {}

    JsonWriter& begin_object();
    JsonWriter& end_object();
    JsonWriter& begin_array();
    JsonWriter& end_array();
    JsonWriter& key(const std::string& k);
    JsonWriter& value(double v);
    JsonWriter& value(std::int64_t v);
    JsonWriter& value(std::size_t v) { return value(static_cast<std::int64_t>(v)); }
    JsonWriter& value(int v) { return value(static_cast<std::int64_t>(v)); }
    JsonWriter& value(bool v);
    JsonWriter& value(const std::string& v);
    JsonWriter& value(const char* v) { return value(std::string(v)); }

  private:
    void separate();

    std::ostream& out_;
    std::vector<bool> first_;
    bool after_key_ = false;
};

std::string format_double(double v);

struct GraphInput {
    std::optional<EdgeList> edges;  // absent for degree files
    DegreeSequence degrees;
};

struct InputOptions {
    bool degree_file = false;
    std::optional<std::size_t> num_nodes;
    std::string relation;  // non-empty selects the "u relation v" dialect
};

// path "-" reads standard input. Ingestion warnings go to warn.
GraphInput load_graph(const std::string& path, const InputOptions& opts, std::ostream& warn);

enum class NodeBlock { automatic, always, never };

void write_fit_json(std::ostream& out, const FitResult& fit, const DegreeHistogram& hist, const DegreeSequence& d,
                    NodeBlock nodes);

// A fit as read back from write_fit_json output.
struct StoredFit {
    double lambda = 0;
    bool converged = false;
    std::vector<std::int64_t> class_degrees;
    std::vector<double> class_delta;
    std::vector<std::string> labels;  // node block, may be empty
    std::vector<std::int64_t> node_degrees;
    std::vector<double> node_beta;
};

StoredFit read_fit_json(std::istream& in);

// beta aligned with d: by label when the stored node block is present,
// otherwise through the degree classes. Throws InputError on mismatch.
std::vector<double> align_fit(const StoredFit& fit, const DegreeSequence& d);

}  // namespace betafit::cli
