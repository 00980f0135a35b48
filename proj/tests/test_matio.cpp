#include "arlink/matio.hpp"
#include "support.hpp"

#include <catch_amalgamated.hpp>

#include <sstream>

using namespace arlink;
using testing_support::gaussian;
using testing_support::scratch_dir;

namespace {
Matrix parse(const std::string& text) {
    std::istringstream in(text);
    return parse_matrix_market(in);
}
}  // namespace

TEST_CASE("array file with the identity") {
    const Matrix m = parse("%%MatrixMarket matrix array real general\n2 2\n1\n0\n0\n1\n");
    CHECK(m == Matrix::Identity(2, 2));
}

TEST_CASE("coordinate file fills missing entries with zero") {
    const Matrix m = parse("%%MatrixMarket matrix coordinate real general\n% comment\n2 2 1\n1 2 3.5\n");
    Matrix e = Matrix::Zero(2, 2);
    e(0, 1) = 3.5;
    CHECK(m == e);
}

TEST_CASE("symmetric and pattern variants") {
    const Matrix s = parse("%%MatrixMarket matrix coordinate real symmetric\n3 3 2\n2 1 4\n3 3 1\n");
    CHECK(s(0, 1) == 4);
    CHECK(s(1, 0) == 4);
    CHECK(s(2, 2) == 1);
    const Matrix p = parse("%%MatrixMarket matrix coordinate pattern general\n2 2 1\n2 2\n");
    CHECK(p(1, 1) == 1.0);
    const Matrix a = parse("%%MatrixMarket matrix array real symmetric\n2 2\n1\n2\n3\n");
    CHECK(a(1, 0) == 2);
    CHECK(a(0, 1) == 2);
    CHECK(a(1, 1) == 3);
}

TEST_CASE("parse errors carry line numbers") {
    try {
        parse("%%MatrixMarket matrix array real general\n2 2\n1\n0\nabc\n1\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 5);
    }
    try {
        parse("%%MatrixMarket matrix coordinate real general\n2 2 1\n3 1 1.0\n");
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 3);
        CHECK(std::string(e.what()).find("dimension mismatch") != std::string::npos);
    }
    CHECK_THROWS_AS(parse("%%MatrixMarket matrix array real general\n2 2\n1\n0\n0\n"), ParseError);
    CHECK_THROWS_AS(parse("%%MatrixMarket matrix array real general\n1 1\n1\n2\n"), ParseError);
    CHECK_THROWS_AS(parse("not a header\n"), ParseError);
    CHECK_THROWS_AS(parse(""), ParseError);
}

TEST_CASE("missing file is an IO error") {
    CHECK_THROWS_AS(read_matrix("/nonexistent/arlink/file.mtx"), IoError);
}

TEST_CASE("zero matrix writes nine zero value lines") {
    const std::string text = format_matrix_market(Matrix::Zero(3, 3));
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    std::getline(in, line);
    CHECK(line == "3 3");
    int zeros = 0;
    while (std::getline(in, line)) zeros += line == "0" ? 1 : 0;
    CHECK(zeros == 9);
}

TEST_CASE("write is deterministic and rejects non-finite values") {
    CHECK(format_matrix_market(Matrix::Identity(2, 2)) == format_matrix_market(Matrix::Identity(2, 2)));
    Matrix bad = Matrix::Zero(2, 2);
    bad(1, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(format_matrix_market(bad), DomainError);
}

TEST_CASE("round trip is value-exact and write/read/write is idempotent") {
    const auto dir = scratch_dir("matio_roundtrip");
    std::mt19937_64 rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix m = gaussian(5, 5, rng, 1e3);
        write_matrix(m, dir / "a.mtx");
        const Matrix back = read_matrix(dir / "a.mtx");
        CHECK(back == m);
        write_matrix(back, dir / "b.mtx");
        CHECK(read_text(dir / "a.mtx") == read_text(dir / "b.mtx"));
    }
}

TEST_CASE("graph sequence invariants") {
    const Matrix a = Matrix::Identity(3, 3);
    CHECK_NOTHROW(GraphSequence({a, a}));
    CHECK_THROWS_AS(GraphSequence({a}), DomainError);
    CHECK_THROWS_AS(GraphSequence({a, Matrix::Identity(4, 4)}), DimensionError);
    CHECK_THROWS_AS(GraphSequence({a, Matrix::Ones(3, 4)}), DimensionError);
    Matrix neg = a;
    neg(0, 1) = -0.1;
    CHECK_THROWS_AS(GraphSequence({a, neg}), DomainError);
    Matrix nan = a;
    nan(2, 2) = std::nan("");
    CHECK_THROWS_AS(GraphSequence({nan, a}), DomainError);
    const GraphSequence s({a, 2 * a, 3 * a});
    CHECK(s.n() == 3);
    CHECK(s.horizon() == 2);
    CHECK(s.last() == 3 * a);
}

TEST_CASE("csv quoting and CRLF line endings") {
    CsvTable t({"a", "b"});
    t.add_row({"x,y", "say \"hi\""});
    CHECK(t.str() == "a,b\r\n\"x,y\",\"say \"\"hi\"\"\"\r\n");
    CHECK_THROWS_AS(t.add_row({"only one"}), DimensionError);
    const auto rows = parse_csv(t.str());
    REQUIRE(rows.size() == 2);
    CHECK(rows[1][0] == "x,y");
    CHECK(rows[1][1] == "say \"hi\"");
}

TEST_CASE("format_double round-trips") {
    std::mt19937_64 rng(22);
    std::normal_distribution<double> g(0.0, 1e5);
    for (int i = 0; i < 1000; ++i) {
        const double v = g(rng);
        CHECK(std::stod(format_double(v)) == v);
    }
}
