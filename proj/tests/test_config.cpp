#include <gtest/gtest.h>

#include "tbsim/config.hpp"

using namespace tbsim;

TEST(Config, ParsesCommentsArraysAndStrings) {
    const auto doc = ConfigDocument::parse(
        "# header\n"
        "kind = grid   # trailing\n"
        "nx = 3\n"
        "ny=3\n"
        "\n"
        "J = [1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 2.5]\n"
        "source = \"corner\"\n");
    EXPECT_EQ(doc.get_string("kind"), "grid");
    EXPECT_EQ(doc.get_uint("nx"), 3u);
    EXPECT_TRUE(doc.is_array("J"));
    EXPECT_DOUBLE_EQ(doc.get_array("J").back(), 2.5);
    EXPECT_EQ(doc.get_string("source"), "corner");
}

TEST(Config, Errors) {
    EXPECT_THROW(ConfigDocument::parse("a = 1\na = 2\n"), Error);
    EXPECT_THROW(ConfigDocument::parse("novalue\n"), Error);
    const auto doc = ConfigDocument::parse("x = abc\nn = -1\n");
    EXPECT_THROW(doc.get_double("x"), Error);
    EXPECT_THROW(doc.get_uint("n"), Error);
    EXPECT_THROW(doc.raw("missing"), Error);
    try {
        doc.get_array("x");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::ConfigError);
    }
}

TEST(Config, FormatDoubleRoundTrips) {
    for (double v : {0.1, 1.0 / 3.0, 2.0, -1e-300, 6.02214076e23, 0.58})
        EXPECT_EQ(std::strtod(format_double(v).c_str(), nullptr), v);
    EXPECT_EQ(format_double(2.0), "2");
    EXPECT_EQ(format_double(0.1), "0.1");
}

TEST(Config, LatticeRoundTrip) {
    LatticeConfig c;
    c.kind = Geometry::Grid;
    c.nx = 3;
    c.ny = 3;
    c.J = std::vector<double>(12, 1.0 / 3.0);
    c.source = "center";
    c.detunings = std::vector<double>{0.1, 0, 0, 0, 0, 0, 0, 0, -0.2};
    c.disorder = DisorderSpec{2.5, 99, 3};
    c.stark = StarkField{1.0, 2.0, 0};

    const auto text = c.to_document().emit();
    const auto doc = ConfigDocument::parse(text);
    EXPECT_EQ(doc.emit(), text);
    const auto back = LatticeConfig::from_document(doc);
    EXPECT_EQ(back.materialize(), c.materialize());
    EXPECT_EQ(back.to_document(), c.to_document());
}

TEST(Config, MaterializeSumsDetuningSources) {
    LatticeConfig c;
    c.nx = 5;
    c.detunings = std::vector<double>{1, 1, 1, 1, 1};
    c.stark = StarkField{1.0, 1.0, std::nullopt};
    const auto spec = c.materialize();
    EXPECT_EQ(spec.detunings(), (std::vector<double>{-1, 0, 1, 2, 3}));

    c.disorder = DisorderSpec{3.0, 5, 0};
    const auto d = disorder_detunings(5, *c.disorder);
    const auto eps = c.materialize().detunings();
    for (std::size_t i = 0; i < 5; ++i) EXPECT_DOUBLE_EQ(eps[i], spec.detunings()[i] + d[i]);
}

TEST(Config, SourceNames) {
    const auto g = build_grid(3, 3, 1.0);
    EXPECT_EQ(LatticeConfig::resolve_source(g, "corner"), 0u);
    EXPECT_EQ(LatticeConfig::resolve_source(g, "center"), 4u);
    EXPECT_EQ(LatticeConfig::resolve_source(g, "7"), 7u);
    EXPECT_THROW(LatticeConfig::resolve_source(g, "9"), Error);
    EXPECT_THROW(LatticeConfig::resolve_source(g, "middle"), Error);
}

TEST(Config, UnknownKind) {
    EXPECT_THROW(LatticeConfig::from_document(ConfigDocument::parse("kind = ring\n")), Error);
}
