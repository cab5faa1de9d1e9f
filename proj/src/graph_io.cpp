#include "betafit/graph_io.hpp"

#include <zlib.h>

#include <algorithm>
#include <charconv>
#include <iterator>
#include <limits>

#include "betafit/errors.hpp"

namespace betafit {

namespace {

bool is_blank(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\f' || c == '\v'; }

// Splits a line into whitespace-separated tokens, writing at most `cap`
// tokens; returns the total number found.
std::size_t tokenize(std::string_view line, std::string_view* out, std::size_t cap) {
    std::size_t count = 0;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && is_blank(line[i])) ++i;
        if (i >= line.size()) break;
        std::size_t j = i;
        while (j < line.size() && !is_blank(line[j])) ++j;
        if (count < cap) out[count] = line.substr(i, j - i);
        ++count;
        i = j;
    }
    return count;
}

// Calls fn(line, line_number) for every non-blank, non-comment line.
template <class Fn>
void for_each_data_line(std::string_view text, Fn&& fn) {
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        std::string_view line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        std::size_t first = 0;
        while (first < line.size() && is_blank(line[first])) ++first;
        if (first == line.size() || line[first] == '#') continue;
        fn(line, line_no);
    }
}

std::string inflate_gzip(const std::string& compressed) {
    z_stream zs{};
    if (inflateInit2(&zs, 15 + 32) != Z_OK) throw ParseError("gzip: inflateInit failed");
    std::string out;
    char buffer[1 << 16];
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(compressed.data()));
    zs.avail_in = static_cast<uInt>(compressed.size());
    int rc = Z_OK;
    for (;;) {
        zs.next_out = reinterpret_cast<Bytef*>(buffer);
        zs.avail_out = sizeof(buffer);
        rc = inflate(&zs, Z_NO_FLUSH);
        if (rc != Z_OK && rc != Z_STREAM_END) {
            inflateEnd(&zs);
            throw ParseError("gzip: corrupt stream");
        }
        out.append(buffer, sizeof(buffer) - zs.avail_out);
        if (rc == Z_STREAM_END) {
            // concatenated members
            if (zs.avail_in == 0) break;
            inflateReset(&zs);
        } else if (zs.avail_in == 0 && zs.avail_out != 0) {
            inflateEnd(&zs);
            throw ParseError("gzip: truncated stream");
        }
    }
    inflateEnd(&zs);
    return out;
}

std::string index_label(std::size_t i) { return std::to_string(i); }

}  // namespace

std::string EdgeList::label(std::size_t i) const {
    return labels.empty() ? index_label(i) : labels[i];
}

std::string DegreeSequence::label(std::size_t i) const {
    return labels.empty() ? index_label(i) : labels[i];
}

std::int64_t DegreeSequence::total() const {
    std::int64_t s = 0;
    for (auto d : degrees) s += d;
    return s;
}

std::int64_t DegreeSequence::max_degree() const {
    return degrees.empty() ? 0 : *std::max_element(degrees.begin(), degrees.end());
}

std::string read_stream(std::istream& in) {
    std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (data.size() >= 2 && static_cast<unsigned char>(data[0]) == 0x1f &&
        static_cast<unsigned char>(data[1]) == 0x8b) {
        return inflate_gzip(data);
    }
    return data;
}

EdgeList read_edge_list(std::istream& in, const EdgeListOptions& opts) {
    return parse_edge_list(read_stream(in), opts);
}

EdgeList parse_edge_list(std::string_view text, const EdgeListOptions& opts) {
    const bool triples = opts.dialect == EdgeDialect::triples;
    const std::size_t expected = triples ? 3 : 2;

    EdgeList g;
    std::unordered_map<std::string, std::uint32_t> index;
    std::vector<std::uint64_t> packed;
    auto intern = [&](std::string_view label) -> std::uint32_t {
        auto [it, inserted] = index.try_emplace(std::string(label), static_cast<std::uint32_t>(g.labels.size()));
        if (inserted) {
            if (g.labels.size() >= std::numeric_limits<std::uint32_t>::max())
                throw InputError("edge list: too many nodes");
            g.labels.emplace_back(label);
        }
        return it->second;
    };

    for_each_data_line(text, [&](std::string_view line, std::size_t line_no) {
        std::string_view tok[3];
        std::size_t count = tokenize(line, tok, 3);
        if (count != expected) {
            throw ParseError("expected " + std::to_string(expected) + " tokens, found " + std::to_string(count),
                             line_no);
        }
        ++g.stats.data_lines;
        std::string_view a = tok[0];
        std::string_view b = triples ? tok[2] : tok[1];
        if (triples && tok[1] != opts.relation) {
            ++g.stats.relation_filtered;
            return;
        }
        std::uint32_t u = intern(a);
        std::uint32_t v = intern(b);
        if (u == v) {
            ++g.stats.self_loops_dropped;
            return;
        }
        if (u > v) std::swap(u, v);
        packed.push_back((static_cast<std::uint64_t>(u) << 32) | v);
    });

    if (g.stats.data_lines == 0) throw ParseError("edge list is empty");

    std::sort(packed.begin(), packed.end());
    auto last = std::unique(packed.begin(), packed.end());
    g.stats.duplicates_dropped = static_cast<std::size_t>(std::distance(last, packed.end()));
    packed.erase(last, packed.end());
    g.edges.reserve(packed.size());
    for (auto p : packed) g.edges.push_back({static_cast<std::uint32_t>(p >> 32), static_cast<std::uint32_t>(p)});

    g.n = g.labels.size();
    if (opts.num_nodes) {
        if (*opts.num_nodes < g.n) {
            throw InputError("--num-nodes " + std::to_string(*opts.num_nodes) + " is smaller than the " +
                             std::to_string(g.n) + " distinct labels in the edge list");
        }
        for (std::size_t i = g.n; i < *opts.num_nodes; ++i) g.labels.push_back("isolated_" + index_label(i));
        g.n = *opts.num_nodes;
    }
    return g;
}

EdgeList make_edge_list(std::size_t n, std::span<const Edge> edges) {
    EdgeList g;
    g.n = n;
    std::vector<std::uint64_t> packed;
    packed.reserve(edges.size());
    for (const auto& e : edges) {
        if (e.u >= n || e.v >= n) throw InputError("edge endpoint out of range");
        std::uint32_t u = e.u, v = e.v;
        if (u == v) {
            ++g.stats.self_loops_dropped;
            continue;
        }
        if (u > v) std::swap(u, v);
        packed.push_back((static_cast<std::uint64_t>(u) << 32) | v);
    }
    std::sort(packed.begin(), packed.end());
    auto last = std::unique(packed.begin(), packed.end());
    g.stats.duplicates_dropped = static_cast<std::size_t>(std::distance(last, packed.end()));
    packed.erase(last, packed.end());
    g.edges.reserve(packed.size());
    for (auto p : packed) g.edges.push_back({static_cast<std::uint32_t>(p >> 32), static_cast<std::uint32_t>(p)});
    return g;
}

DegreeSequence degrees_of(const EdgeList& g) {
    DegreeSequence d;
    d.degrees.assign(g.n, 0);
    for (const auto& e : g.edges) {
        ++d.degrees[e.u];
        ++d.degrees[e.v];
    }
    d.labels = g.labels;
    return d;
}

DegreeSequence read_degree_file(std::istream& in) { return parse_degree_file(read_stream(in)); }

DegreeSequence parse_degree_file(std::string_view text) {
    DegreeSequence d;
    bool any_label = false;
    std::vector<std::string> labels;
    for_each_data_line(text, [&](std::string_view line, std::size_t line_no) {
        std::string_view tok[2];
        std::size_t count = tokenize(line, tok, 2);
        if (count < 1 || count > 2) {
            throw ParseError("expected \"degree\" or \"label degree\", found " + std::to_string(count) + " tokens",
                             line_no);
        }
        std::string_view value = tok[count - 1];
        std::int64_t deg = 0;
        auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), deg);
        if (ec != std::errc() || ptr != value.data() + value.size()) {
            throw ParseError("degree \"" + std::string(value) + "\" is not an integer", line_no);
        }
        if (deg < 0) throw ParseError("negative degree " + std::to_string(deg), line_no);
        if (count == 2) {
            any_label = true;
            labels.emplace_back(tok[0]);
        } else {
            labels.push_back(index_label(d.degrees.size()));
        }
        d.degrees.push_back(deg);
    });
    if (d.degrees.empty()) throw ParseError("degree file is empty");
    const auto n = static_cast<std::int64_t>(d.degrees.size());
    for (std::size_t i = 0; i < d.degrees.size(); ++i) {
        if (d.degrees[i] > n - 1) {
            throw InputError("degree " + std::to_string(d.degrees[i]) + " of node " + labels[i] + " exceeds n-1 = " +
                             std::to_string(n - 1));
        }
    }
    if (any_label) d.labels = std::move(labels);
    return d;
}

DegreeHistogram DegreeHistogram::build(std::span<const std::int64_t> degrees) {
    DegreeHistogram h;
    const std::size_t n = degrees.size();
    std::int64_t max_deg = 0;
    for (auto d : degrees) {
        if (d < 0) throw InputError("negative degree");
        max_deg = std::max(max_deg, d);
        h.total_degree_ += d;
    }
    // Counting pass over [0, max_deg]; degrees are bounded by n-1 for valid input.
    std::vector<std::int64_t> tally(static_cast<std::size_t>(max_deg) + 1, 0);
    for (auto d : degrees) ++tally[static_cast<std::size_t>(d)];
    std::vector<std::uint32_t> class_of(tally.size(), 0);
    for (std::size_t d = 0; d < tally.size(); ++d) {
        if (tally[d] == 0) continue;
        class_of[d] = static_cast<std::uint32_t>(h.degrees_.size());
        h.degrees_.push_back(static_cast<std::int64_t>(d));
        h.counts_.push_back(tally[d]);
    }
    h.node_to_class_.resize(n);
    for (std::size_t i = 0; i < n; ++i) h.node_to_class_[i] = class_of[static_cast<std::size_t>(degrees[i])];
    return h;
}

DegreeHistogram DegreeHistogram::from_classes(std::span<const std::int64_t> class_degrees,
                                              std::span<const std::int64_t> class_counts) {
    if (class_degrees.size() != class_counts.size()) throw InputError("histogram: size mismatch");
    DegreeHistogram h;
    for (std::size_t k = 0; k < class_degrees.size(); ++k) {
        if (class_counts[k] <= 0) throw InputError("histogram: class counts must be positive");
        if (k > 0 && class_degrees[k] <= class_degrees[k - 1])
            throw InputError("histogram: degrees must be strictly increasing");
        if (class_degrees[k] < 0) throw InputError("histogram: negative degree");
        h.degrees_.push_back(class_degrees[k]);
        h.counts_.push_back(class_counts[k]);
        h.total_degree_ += class_degrees[k] * class_counts[k];
        h.node_to_class_.insert(h.node_to_class_.end(), static_cast<std::size_t>(class_counts[k]),
                                static_cast<std::uint32_t>(k));
    }
    return h;
}

std::unordered_map<std::string, std::size_t> label_index(const DegreeSequence& d) {
    std::unordered_map<std::string, std::size_t> index;
    index.reserve(d.n());
    for (std::size_t i = 0; i < d.n(); ++i) index.emplace(d.label(i), i);
    return index;
}

}  // namespace betafit
