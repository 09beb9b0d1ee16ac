#include "doctest.h"

#include <random>

#include "incrasat/model/payload_codec.hpp"

using namespace incrasat;

namespace {

RevisionPayload randomPayload(std::mt19937_64& rng) {
    RevisionPayload p;
    p.revision = std::uniform_int_distribution<uint32_t>(0, 50)(rng);
    p.maxVar = std::uniform_int_distribution<uint32_t>(0, 1000)(rng);
    if (p.maxVar == 0) return p;
    std::uniform_int_distribution<int> var(1, static_cast<int>(p.maxVar));
    int nClauses = std::uniform_int_distribution<int>(0, 40)(rng);
    for (int i = 0; i < nClauses; i++) {
        Clause c;
        int len = std::uniform_int_distribution<int>(0, 6)(rng);
        for (int k = 0; k < len; k++) c.push_back(rng() & 1 ? var(rng) : -var(rng));
        p.clauses.push_back(c);
    }
    int nAssume = std::uniform_int_distribution<int>(0, 5)(rng);
    for (int k = 0; k < nAssume; k++) p.assumptions.push_back(rng() & 1 ? var(rng) : -var(rng));
    return p;
}

} // namespace

TEST_CASE("empty payload encodes to the bare header") {
    RevisionPayload p;
    auto bytes = encodePayload(p);
    CHECK(bytes.size() == kPayloadHeaderSize);
    CHECK(decodePayload(bytes) == p);
}

TEST_CASE("payload wire layout matches the hand encoding") {
    RevisionPayload p {0, {{1, 2}}, {-1}, 2};
    // magic, revision, max_var, n_clause_ints=3, n_assumption_ints=1, <1,2,0>, <-1>
    std::vector<uint8_t> expected = {
        0x31, 0x4C, 0x41, 0x4D,
        0, 0, 0, 0,
        2, 0, 0, 0,
        3, 0, 0, 0, 0, 0, 0, 0,
        1, 0, 0, 0, 0, 0, 0, 0,
        1, 0, 0, 0, 2, 0, 0, 0, 0, 0, 0, 0,
        0xFF, 0xFF, 0xFF, 0xFF,
    };
    CHECK(encodePayload(p) == expected);
    CHECK(decodePayload(expected) == p);
}

TEST_CASE("decoding a clause section with several clauses") {
    RevisionPayload p {4, {{1, 2}, {-2}}, {}, 2};
    auto bytes = encodePayload(p);
    auto back = decodePayload(bytes);
    REQUIRE(back.clauses.size() == 2);
    CHECK(back.clauses[0] == Clause {1, 2});
    CHECK(back.clauses[1] == Clause {-2});
    CHECK(back.revision == 4);
}

TEST_CASE("empty clause survives the round trip") {
    RevisionPayload p {0, {{}, {1}}, {}, 1};
    CHECK(decodePayload(encodePayload(p)) == p);
}

TEST_CASE("encoding rejects literals beyond max_var") {
    RevisionPayload p {0, {{1, 3}}, {}, 2};
    CHECK_THROWS_AS(encodePayload(p), ValidationError);
    RevisionPayload q {0, {}, {-5}, 4};
    CHECK_THROWS_AS(encodePayload(q), ValidationError);
}

TEST_CASE("malformed streams produce parse errors with offsets") {
    ByteWriter w;
    w.u32(kPayloadMagic);
    w.u32(0);
    w.u32(2);
    w.u64(2);
    w.u64(0);
    w.i32(1);
    w.i32(2);
    auto dangling = w.take();
    try {
        decodePayload(dangling);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.offset() == dangling.size());
    }

    auto good = encodePayload({0, {{1, 2}}, {-1}, 2});
    auto truncated = good;
    truncated.pop_back();
    CHECK_THROWS_AS(decodePayload(truncated), ParseError);
    auto shortHeader = std::vector<uint8_t>(good.begin(), good.begin() + 10);
    try {
        decodePayload(shortHeader);
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.offset() == 10);
    }
    auto badMagic = good;
    badMagic[0] ^= 0xFF;
    CHECK_THROWS_AS(decodePayload(badMagic), ParseError);
}

TEST_CASE("payload round trip and determinism over random payloads") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 300; i++) {
        auto p = randomPayload(rng);
        auto bytes = encodePayload(p);
        CHECK(decodePayload(bytes) == p);
        CHECK(encodePayload(p) == bytes);
    }
}

TEST_CASE("normalization removes duplicates and tautologies and is idempotent") {
    CHECK(normalizeClause({2, 1, 2, -3}) == Clause {1, 2, -3});
    CHECK_FALSE(normalizeClause({1, -2, -1}).has_value());
    CHECK(normalizeClause({}) == Clause {});
    std::mt19937_64 rng(3);
    for (int i = 0; i < 200; i++) {
        Clause c;
        int len = std::uniform_int_distribution<int>(0, 8)(rng);
        for (int k = 0; k < len; k++) {
            int v = std::uniform_int_distribution<int>(1, 6)(rng);
            c.push_back(rng() & 1 ? v : -v);
        }
        auto once = normalizeClause(c);
        if (once) CHECK(normalizeClause(*once) == once);
    }
}

TEST_CASE("payload normalization drops tautologies at ingestion") {
    RevisionPayload p {0, {{1, -1}, {2, 2, 3}}, {}, 3};
    p.normalize();
    REQUIRE(p.clauses.size() == 1);
    CHECK(p.clauses[0] == Clause {2, 3});
}

TEST_CASE("outcome encoding uses the SAT exit-code verdicts") {
    auto sat = encodeOutcome(SolveOutcome::sat({1, -2}));
    CHECK(sat[0] == 10);
    CHECK(sat.size() == 1 + 8 + 8);
    CHECK(decodeOutcome(sat).model == std::vector<Literal> {1, -2});
    auto unsat = encodeOutcome(SolveOutcome::unsat({-1}));
    CHECK(unsat[0] == 20);
    CHECK(decodeOutcome(unsat).failed == std::vector<Literal> {-1});
    auto unk = encodeOutcome(SolveOutcome::unknown());
    CHECK(unk == std::vector<uint8_t> {0, 0, 0, 0, 0, 0, 0, 0, 0});
    CHECK_THROWS_AS(decodeOutcome(std::vector<uint8_t> {7, 0, 0, 0, 0, 0, 0, 0, 0}), ParseError);
}
