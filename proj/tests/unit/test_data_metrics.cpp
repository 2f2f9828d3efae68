#include <sstream>

#include "doctest.h"
#include "fldcrf/dataset.hpp"
#include "fldcrf/error.hpp"
#include "fldcrf/folds.hpp"
#include "fldcrf/metrics.hpp"
#include "metric_suite.hpp"

using namespace fldcrf;

TEST_CASE("worked data and metric examples") {
    const auto failures = testing::data_metric_example_failures();
    for (const auto& f : failures) MESSAGE(f);
    CHECK(failures.empty());
}

TEST_CASE("csv details") {
    const CsvSchema schema = CsvSchema::standard(1, {"y"});
    SUBCASE("missing label column is a schema error") {
        std::istringstream in("seq_id,t,f0\ns,0,1\n");
        CHECK_THROWS_AS(read_sequences(in, schema), SchemaError);
    }
    SUBCASE("extra columns, crlf and quotes") {
        std::istringstream in("extra,seq_id,t,f0,y\r\nz,\"a,b\",0,-2.5e-3,\"q\"\"r\"\r\nz,c,0,+4,q\r\n");
        const Dataset d = read_sequences(in, schema);
        REQUIRE(d.size() == 2);
        CHECK(d[0].id == "a,b");
        CHECK(d[0].x(0, 0) == -2.5e-3);
        CHECK(d[0].labels[0][0] == "q\"r");
        CHECK(d[1].x(0, 0) == 4.0);
    }
    SUBCASE("ids keep first-appearance order") {
        std::istringstream in("seq_id,t,f0,y\nb,0,1,u\na,0,2,u\nb,1,3,v\n");
        const Dataset d = read_sequences(in, schema);
        REQUIRE(d.size() == 2);
        CHECK(d[0].id == "b");
        CHECK(d[0].x.rows() == 2);
        CHECK(infer_alphabets(d, schema)[0].alphabet == std::vector<std::string>{"u", "v"});
    }
    SUBCASE("non-finite text is rejected") {
        std::istringstream in("seq_id,t,f0,y\nb,0,inf,u\n");
        CHECK_THROWS_AS(read_sequences(in, schema), ParseError);
    }
    SUBCASE("header only gives an empty dataset") {
        std::istringstream in("seq_id,t,f0,y\n");
        CHECK(read_sequences(in, schema).empty());
    }
}

TEST_CASE("model sequences from string labels") {
    const std::vector<LabelTrack> tracks = {{"a", {"p", "q"}}, {"b", {"u", "v", "w"}}};
    LabeledSequence seq;
    seq.id = "s";
    seq.x = Matrix(2, 1, 0.5);
    seq.time = {0, 1};
    seq.labels = {{"q", "p"}, {"w", "u"}};

    const ModelSpec fcrf = build_spec({.kind = ModelKind::fcrf, .tracks = tracks, .feature_dim = 1});
    const Sequence f = to_model_sequence(seq, fcrf);
    CHECK(f.y == LabelTracks{{1, 0}, {2, 0}});

    const ModelSpec ccrf = build_spec({.kind = ModelKind::ccrf, .tracks = tracks, .feature_dim = 1});
    const Sequence c = to_model_sequence(seq, ccrf);
    REQUIRE(c.y.size() == 1);
    CHECK(ccrf.alphabet(0)[c.y[0][0]] == "q|w");
    CHECK(ccrf.alphabet(0)[c.y[0][1]] == "p|u");

    seq.labels[1][0] = "zz";
    CHECK_THROWS_AS(to_model_sequence(seq, fcrf), InvalidLabel);
}

TEST_CASE("select keeps the requested order") {
    Dataset d(3);
    d[0].id = "a";
    d[1].id = "b";
    d[2].id = "c";
    const std::vector<std::string> ids = {"c", "a"};
    const Dataset s = select(d, ids);
    REQUIRE(s.size() == 2);
    CHECK(s[0].id == "c");
    CHECK(s[1].id == "a");
    const std::vector<std::string> bad = {"nope"};
    CHECK_THROWS_AS(select(d, bad), SchemaError);
}

TEST_CASE("fold plan contents") {
    const std::vector<std::vector<std::string>> g = {{"a"}, {"b", "b2"}, {"c"}};
    const FoldPlan plan = plan_nested_cv(g);
    REQUIRE(plan.outer.size() == 3);
    CHECK(plan.outer[0].test == std::vector<std::string>{"a"});
    CHECK(plan.outer[0].inner[0].validation == std::vector<std::string>{"b", "b2"});
    CHECK(plan.outer[0].inner[0].train == std::vector<std::string>{"c"});
    CHECK(non_test_ids(plan, 1) == std::vector<std::string>{"a", "c"});

    const std::vector<std::vector<std::string>> two = {{"a"}, {"b"}};
    const FoldPlan p2 = plan_nested_cv(two);
    CHECK(p2.outer[0].inner.size() == 1);
    CHECK(p2.outer[0].inner[0].train.empty());

    const std::vector<std::vector<std::string>> dup = {{"a"}, {"a"}};
    CHECK_THROWS_AS(plan_nested_cv(dup), InvalidSpec);

    FoldPlan broken = plan;
    broken.outer[2].inner[0].train.push_back("c");
    CHECK_THROWS_AS(verify_plan(broken, g), InvalidSpec);
}

TEST_CASE("metric names") {
    CHECK(MetricSpec::parse("micro_f1").kind == MetricSpec::Kind::micro_f1);
    const MetricSpec f = MetricSpec::parse("f1:gesture");
    CHECK(f.kind == MetricSpec::Kind::f1);
    CHECK(f.to_string() == "f1:gesture");
    CHECK(MetricSpec::parse("hl_f1:early,relax").classes == std::vector<std::string>{"early", "relax"});
    CHECK_THROWS_AS(MetricSpec::parse("f1"), ParseError);
    CHECK_THROWS_AS(MetricSpec::parse("hl_f1:a"), ParseError);
    CHECK_THROWS_AS(MetricSpec::parse("macro"), ParseError);

    const std::vector<std::string> classes = {"n", "g"};
    const std::vector<std::string> truth = {"g", "g", "n", "n"};
    const std::vector<std::string> pred = {"g", "n", "g", "n"};
    const ConfusionCounts cc = confusion(pred, truth, classes);
    CHECK(MetricSpec::parse("f1:g").evaluate(cc) == 0.5);
    CHECK(MetricSpec::parse("accuracy").evaluate(cc) == 0.5);
    CHECK_THROWS_AS(MetricSpec::parse("f1:zz").evaluate(cc), InvalidLabel);
    const std::vector<std::string> shorter = {"g"};
    CHECK_THROWS_AS(confusion(shorter, truth, classes), AlignmentError);
}
