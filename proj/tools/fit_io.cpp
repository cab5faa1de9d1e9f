#include "fit_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <unordered_map>

#include "betafit/errors.hpp"
#include "json.hpp"

namespace betafit::cli {

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void JsonWriter::separate() {
    if (after_key_) {
        after_key_ = false;
        return;
    }
    if (!first_.empty()) {
        if (!first_.back()) out_ << ',';
        first_.back() = false;
    }
}

JsonWriter& JsonWriter::begin_object() {
    separate();
    out_ << '{';
    first_.push_back(true);
    return *this;
}

JsonWriter& JsonWriter::end_object() {
    first_.pop_back();
    out_ << '}';
    if (first_.empty()) out_ << '\n';
    return *this;
}

JsonWriter& JsonWriter::begin_array() {
    separate();
    out_ << '[';
    first_.push_back(true);
    return *this;
}

JsonWriter& JsonWriter::end_array() {
    first_.pop_back();
    out_ << ']';
    return *this;
}

JsonWriter& JsonWriter::key(const std::string& k) {
    separate();
    out_ << nlohmann::json(k).dump() << ':';
    after_key_ = true;
    return *this;
}

JsonWriter& JsonWriter::value(double v) {
    separate();
    if (std::isfinite(v)) out_ << format_double(v);
    else out_ << "null";
    return *this;
}

JsonWriter& JsonWriter::value(std::int64_t v) {
    separate();
    out_ << v;
    return *this;
}

JsonWriter& JsonWriter::value(bool v) {
    separate();
    out_ << (v ? "true" : "false");
    return *this;
}

JsonWriter& JsonWriter::value(const std::string& v) {
    separate();
    out_ << nlohmann::json(v).dump();
    return *this;
}

namespace {

std::string slurp(const std::string& path) {
    if (path == "-") return read_stream(std::cin);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path);
    return read_stream(in);
}

}  // namespace

GraphInput load_graph(const std::string& path, const InputOptions& opts, std::ostream& warn) {
    const std::string text = slurp(path);
    GraphInput g;
    if (opts.degree_file) {
        g.degrees = parse_degree_file(text);
        if (opts.num_nodes && *opts.num_nodes != g.degrees.n())
            throw InputError("--num-nodes does not match the degree file's line count");
        return g;
    }
    EdgeListOptions eo;
    if (!opts.relation.empty()) {
        eo.dialect = EdgeDialect::triples;
        eo.relation = opts.relation;
    }
    eo.num_nodes = opts.num_nodes;
    g.edges = parse_edge_list(text, eo);
    const auto& st = g.edges->stats;
    if (st.self_loops_dropped || st.duplicates_dropped) {
        warn << "warning: dropped " << st.self_loops_dropped << " self-loop(s) and " << st.duplicates_dropped
                  << " duplicate edge(s)\n";
    }
    g.degrees = degrees_of(*g.edges);
    return g;
}

void write_fit_json(std::ostream& out, const FitResult& fit, const DegreeHistogram& hist, const DegreeSequence& d,
                    NodeBlock nodes) {
    JsonWriter w(out);
    w.begin_object();
    w.key("lambda").value(fit.lambda);
    w.key("converged").value(fit.converged);
    w.key("iterations").value(fit.iterations);
    w.key("objective").value(fit.objective);
    w.key("grad_inf_norm").value(fit.final_grad_inf_norm);
    w.key("n").value(hist.n());
    w.key("classes").begin_array();
    for (std::size_t k = 0; k < hist.m(); ++k) {
        w.begin_object();
        w.key("degree").value(hist.degree(k));
        w.key("count").value(hist.count(k));
        w.key("delta").value(fit.delta_hat[static_cast<Eigen::Index>(k)]);
        w.end_object();
    }
    w.end_array();
    const bool emit = nodes == NodeBlock::always || (nodes == NodeBlock::automatic && hist.n() <= 1000000);
    if (emit) {
        w.key("nodes").begin_array();
        for (std::size_t i = 0; i < d.n(); ++i) {
            w.begin_object();
            w.key("label").value(d.label(i));
            w.key("degree").value(d.degrees[i]);
            w.key("beta").value(fit.beta_hat[i]);
            w.end_object();
        }
        w.end_array();
    }
    w.end_object();
}

StoredFit read_fit_json(std::istream& in) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(read_stream(in));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("fit JSON: ") + e.what());
    }
    StoredFit f;
    try {
        f.lambda = j.at("lambda").get<double>();
        f.converged = j.at("converged").get<bool>();
        for (const auto& c : j.at("classes")) {
            f.class_degrees.push_back(c.at("degree").get<std::int64_t>());
            f.class_delta.push_back(c.at("delta").get<double>());
        }
        if (j.contains("nodes")) {
            for (const auto& node : j.at("nodes")) {
                f.labels.push_back(node.at("label").get<std::string>());
                f.node_degrees.push_back(node.at("degree").get<std::int64_t>());
                f.node_beta.push_back(node.at("beta").get<double>());
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("fit JSON: ") + e.what());
    }
    return f;
}

std::vector<double> align_fit(const StoredFit& fit, const DegreeSequence& d) {
    std::vector<double> beta(d.n());
    if (!fit.labels.empty()) {
        std::unordered_map<std::string, std::size_t> pos;
        for (std::size_t i = 0; i < fit.labels.size(); ++i) pos.emplace(fit.labels[i], i);
        for (std::size_t i = 0; i < d.n(); ++i) {
            auto it = pos.find(d.label(i));
            if (it == pos.end()) throw InputError("node " + d.label(i) + " is missing from the fit");
            beta[i] = fit.node_beta[it->second];
        }
        return beta;
    }
    std::unordered_map<std::int64_t, double> by_degree;
    for (std::size_t k = 0; k < fit.class_degrees.size(); ++k) by_degree.emplace(fit.class_degrees[k], fit.class_delta[k]);
    for (std::size_t i = 0; i < d.n(); ++i) {
        auto it = by_degree.find(d.degrees[i]);
        if (it == by_degree.end())
            throw InputError("degree " + std::to_string(d.degrees[i]) + " has no class in the fit");
        beta[i] = it->second;
    }
    return beta;
}

}  // namespace betafit::cli
