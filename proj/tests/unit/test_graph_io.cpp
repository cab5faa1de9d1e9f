#include <gtest/gtest.h>
#include <zlib.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "betafit/errors.hpp"
#include "betafit/graph_io.hpp"

using namespace betafit;

TEST(ReadEdgeList, TwoEdgePath) {
    EdgeList g = parse_edge_list("a b\nb c\n");
    EXPECT_EQ(g.n, 3u);
    ASSERT_EQ(g.edges.size(), 2u);
    EXPECT_EQ(g.edges[0], (Edge{0, 1}));
    EXPECT_EQ(g.edges[1], (Edge{1, 2}));
    EXPECT_EQ(g.labels, (std::vector<std::string>{"a", "b", "c"}));
}

TEST(ReadEdgeList, DropsDuplicatesAndSelfLoops) {
    EdgeList g = parse_edge_list("a b\nb a\na a\n");
    EXPECT_EQ(g.n, 2u);
    ASSERT_EQ(g.edges.size(), 1u);
    EXPECT_EQ(g.stats.self_loops_dropped, 1u);
    EXPECT_EQ(g.stats.duplicates_dropped, 1u);
}

TEST(ReadEdgeList, CommentsAndBlankLines) {
    EdgeList g = parse_edge_list("# header\n\n  x y  \n\t# indented comment\ny z\n");
    EXPECT_EQ(g.n, 3u);
    EXPECT_EQ(g.edges.size(), 2u);
}

TEST(ReadEdgeList, MalformedLineReportsLineNumber) {
    try {
        parse_edge_list("a b\n# ok\nc d e\n");
        FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
        EXPECT_EQ(e.line(), 3u);
    }
    EXPECT_THROW(parse_edge_list("lonely\n"), ParseError);
}

TEST(ReadEdgeList, EmptyInputIsAnError) {
    EXPECT_THROW(parse_edge_list(""), ParseError);
    EXPECT_THROW(parse_edge_list("# only comments\n"), ParseError);
}

TEST(ReadEdgeList, TriplesFilterByRelation) {
    EdgeListOptions opts;
    opts.dialect = EdgeDialect::triples;
    opts.relation = "cites";
    EdgeList g = parse_edge_list("p1 cites p2\np2 authored_by x\np3 cites p1\n", opts);
    EXPECT_EQ(g.n, 3u);
    EXPECT_EQ(g.edges.size(), 2u);
    EXPECT_EQ(g.stats.relation_filtered, 1u);
}

TEST(ReadEdgeList, NumNodesAddsIsolated) {
    EdgeListOptions opts;
    opts.num_nodes = 5;
    EdgeList g = parse_edge_list("a b\n", opts);
    EXPECT_EQ(g.n, 5u);
    EXPECT_EQ(g.label(4), "isolated_4");
    EXPECT_EQ(degrees_of(g).degrees, (std::vector<std::int64_t>{1, 1, 0, 0, 0}));
    opts.num_nodes = 1;
    EXPECT_THROW(parse_edge_list("a b\n", opts), InputError);
}

TEST(ReadEdgeList, GzipStream) {
    const std::string text = "a b\nb c\nc a\n";
    z_stream zs{};
    ASSERT_EQ(deflateInit2(&zs, Z_DEFAULT_COMPRESSION, Z_DEFLATED, 15 + 16, 8, Z_DEFAULT_STRATEGY), Z_OK);
    std::string packed(256, '\0');
    zs.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(text.data()));
    zs.avail_in = static_cast<uInt>(text.size());
    zs.next_out = reinterpret_cast<Bytef*>(packed.data());
    zs.avail_out = static_cast<uInt>(packed.size());
    ASSERT_EQ(deflate(&zs, Z_FINISH), Z_STREAM_END);
    packed.resize(zs.total_out);
    deflateEnd(&zs);
    std::istringstream in(packed);
    EdgeList g = read_edge_list(in);
    EXPECT_EQ(g.n, 3u);
    EXPECT_EQ(g.edges.size(), 3u);
}

TEST(DegreesOf, SmallGraphs) {
    EXPECT_EQ(degrees_of(parse_edge_list("a b\nb c\n")).degrees, (std::vector<std::int64_t>{1, 2, 1}));
    EXPECT_EQ(degrees_of(make_edge_list(4, {})).degrees, (std::vector<std::int64_t>(4, 0)));
    std::vector<Edge> k5;
    for (std::uint32_t i = 0; i < 5; ++i)
        for (std::uint32_t j = i + 1; j < 5; ++j) k5.push_back({i, j});
    EXPECT_EQ(degrees_of(make_edge_list(5, k5)).degrees, (std::vector<std::int64_t>(5, 4)));
}

TEST(ReadDegreeFile, PlainAndLabelled) {
    DegreeSequence d = parse_degree_file("1\n2\n1\n");
    EXPECT_EQ(d.degrees, (std::vector<std::int64_t>{1, 2, 1}));
    EXPECT_TRUE(d.labels.empty());
    DegreeSequence e = parse_degree_file("x 1\ny 1\n");
    EXPECT_EQ(e.label(1), "y");
}

TEST(ReadDegreeFile, Validation) {
    EXPECT_THROW(parse_degree_file("x 3\ny 0\n"), InputError);
    EXPECT_THROW(parse_degree_file("-1\n1\n"), ParseError);
    EXPECT_THROW(parse_degree_file("1.5\n1\n"), ParseError);
    EXPECT_THROW(parse_degree_file("a b c\n"), ParseError);
    EXPECT_THROW(parse_degree_file(""), ParseError);
    EXPECT_NO_THROW(parse_degree_file("0\n0\n0\n"));
}

TEST(BuildHistogram, Classes) {
    DegreeSequence d;
    d.degrees = {1, 2, 1};
    DegreeHistogram h = build_histogram(d);
    EXPECT_EQ(h.m(), 2u);
    EXPECT_EQ(h.degrees(), (std::vector<std::int64_t>{1, 2}));
    EXPECT_EQ(h.counts(), (std::vector<std::int64_t>{2, 1}));
    EXPECT_EQ(h.node_to_class(), (std::vector<std::uint32_t>{0, 1, 0}));

    d.degrees = {0, 0, 0};
    h = build_histogram(d);
    EXPECT_EQ(h.m(), 1u);
    EXPECT_EQ(h.count(0), 3);
}

TEST(BuildHistogram, RoundTripAndPermutationInvariance) {
    std::mt19937_64 gen(11);
    for (int rep = 0; rep < 20; ++rep) {
        const std::uint32_t n = 5 + static_cast<std::uint32_t>(gen() % 40);
        std::vector<Edge> edges;
        for (std::uint32_t i = 0; i < n; ++i)
            for (std::uint32_t j = i + 1; j < n; ++j)
                if (gen() % 4 == 0) edges.push_back({i, j});
        EdgeList g = make_edge_list(n, edges);
        DegreeHistogram h = build_histogram(degrees_of(g));
        std::int64_t total = 0, count = 0;
        for (std::size_t k = 0; k < h.m(); ++k) {
            total += h.degree(k) * h.count(k);
            count += h.count(k);
            if (k > 0) EXPECT_LT(h.degree(k - 1), h.degree(k));
        }
        EXPECT_EQ(total, 2 * static_cast<std::int64_t>(g.edges.size()));
        EXPECT_EQ(count, static_cast<std::int64_t>(n));
        EXPECT_LE(h.m(), std::min<std::size_t>(n, static_cast<std::size_t>(h.max_degree()) + 1));
        for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(h.degree(h.node_to_class()[i]), degrees_of(g).degrees[i]);

        std::vector<std::uint32_t> perm(n);
        for (std::uint32_t i = 0; i < n; ++i) perm[i] = i;
        std::shuffle(perm.begin(), perm.end(), gen);
        std::vector<Edge> relabelled;
        for (auto e : edges) relabelled.push_back({perm[e.u], perm[e.v]});
        DegreeHistogram h2 = build_histogram(degrees_of(make_edge_list(n, relabelled)));
        EXPECT_EQ(h.degrees(), h2.degrees());
        EXPECT_EQ(h.counts(), h2.counts());
    }
}

TEST(BuildHistogram, FromClasses) {
    std::vector<std::int64_t> deg{1, 3}, cnt{2, 2};
    DegreeHistogram h = DegreeHistogram::from_classes(deg, cnt);
    EXPECT_EQ(h.n(), 4u);
    EXPECT_EQ(h.total_degree(), 8);
    std::vector<std::int64_t> bad{3, 1};
    EXPECT_THROW(DegreeHistogram::from_classes(bad, cnt), InputError);
}
