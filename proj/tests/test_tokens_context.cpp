#include <doctest.h>

#include <cmath>
#include <random>

#include "helpers.hpp"
#include "slipstream/context.hpp"
#include "slipstream/errors.hpp"
#include "slipstream/tokens.hpp"

using namespace slipstream;

namespace {

// Independent reference for the default estimator, computed via floating
// point instead of the library's integer arithmetic.
int reference_token_count(const std::string& text) {
    if (text.empty()) return 0;
    return static_cast<int>(std::ceil(static_cast<double>(text.size()) / 4.0));
}

std::string random_ascii(std::mt19937& rng, std::size_t length) {
    std::uniform_int_distribution<int> dist(32, 126);
    std::string text;
    text.reserve(length);
    for (std::size_t i = 0; i < length; ++i) text.push_back(static_cast<char>(dist(rng)));
    return text;
}

}  // namespace

TEST_CASE("default token estimator matches its definition") {
    CharEstimator counter(4);
    CHECK(counter.count("") == 0);
    CHECK(counter.count("abcd") == 1);
    CHECK(counter.count("abcde") == 2);
    CHECK(counter.count("a") == 1);
}

TEST_CASE("token estimator agrees with an independent reference on long inputs") {
    CharEstimator counter(4);
    std::mt19937 rng(1234);
    for (int i = 0; i < 50; ++i) {
        const std::string text = random_ascii(rng, 1000);
        CHECK(counter.count(text) == reference_token_count(text));
    }
}

TEST_CASE("token count is monotone under concatenation") {
    CharEstimator counter(4);
    std::mt19937 rng(99);
    std::uniform_int_distribution<std::size_t> len(0, 64);
    for (int i = 0; i < 200; ++i) {
        const std::string a = random_ascii(rng, len(rng));
        const std::string b = random_ascii(rng, len(rng));
        const int joined = counter.count(a + b);
        CHECK(joined >= counter.count(a));
        CHECK(joined >= counter.count(b));
    }
}

TEST_CASE("estimator rejects a non-positive divisor") {
    CHECK_THROWS_AS(CharEstimator(0), std::invalid_argument);
}

TEST_CASE("compaction trigger fires at the threshold, not below") {
    TrajectoryContext ctx("");
    ctx.append(ctx.make_step(Role::user, test_helpers::filler(4096)));
    REQUIRE(ctx.active_tokens() == 4096);
    CHECK(should_compact(ctx, 4096));

    TrajectoryContext low("");
    CHECK_FALSE(should_compact(low, 4096));  // zero active tokens

    TrajectoryContext boundary("");
    boundary.append(boundary.make_step(Role::user, std::string(4095 * 4, 'a')));
    REQUIRE(boundary.active_tokens() == 4095);
    CHECK_FALSE(should_compact(boundary, 4096));
}

TEST_CASE("trigger threshold must be positive") {
    TrajectoryContext ctx("");
    CHECK_THROWS_AS(should_compact(ctx, 0), std::invalid_argument);
    CHECK_THROWS_AS(should_compact(ctx, -5), std::invalid_argument);
}

TEST_CASE("append accounts tokens additively and enforces ordering") {
    TrajectoryContext ctx("pre-" + test_helpers::filler(9));  // 10 tokens
    REQUIRE(ctx.preamble_tokens() == 10);
    ctx.append(ctx.make_step(Role::agent_reasoning, test_helpers::filler(10)));
    CHECK(ctx.active_tokens() == 20);

    Step gap = ctx.make_step(Role::agent_reasoning, "x");
    gap.index = 5;
    CHECK_THROWS_AS(ctx.append(gap), SequenceError);
}

TEST_CASE("a hundred appends match a brute-force recount") {
    TrajectoryContext ctx("system text for the recount check");
    std::mt19937 rng(7);
    std::uniform_int_distribution<std::size_t> len(0, 200);
    for (int i = 0; i < 100; ++i) {
        ctx.append(ctx.make_step(Role::tool_observation, random_ascii(rng, len(rng))));
    }
    int recount = ctx.counter().count(ctx.system_preamble());
    for (const Step& step : ctx.steps()) recount += ctx.counter().count(step.content);
    CHECK(ctx.active_tokens() == recount);
    CHECK(ctx.steps().size() == 100);
}

TEST_CASE("token additivity holds over random step sequences") {
    std::mt19937 rng(2024);
    std::uniform_int_distribution<std::size_t> len(0, 300);
    std::uniform_int_distribution<int> role(0, 4);
    for (int round = 0; round < 20; ++round) {
        TrajectoryContext ctx(random_ascii(rng, len(rng)));
        const int steps = static_cast<int>(len(rng) % 40);
        for (int i = 0; i < steps; ++i) {
            ctx.append(ctx.make_step(static_cast<Role>(role(rng)), random_ascii(rng, len(rng))));
        }
        int recount = ctx.counter().count(ctx.system_preamble());
        for (const Step& step : ctx.steps()) recount += ctx.counter().count(step.content);
        CHECK(ctx.active_tokens() == recount);
    }
}

TEST_CASE("trigger stays on once reached, for any extension") {
    std::mt19937 rng(5);
    std::uniform_int_distribution<std::size_t> len(1, 100);
    TrajectoryContext ctx("");
    ctx.append(ctx.make_step(Role::user, random_ascii(rng, 600)));
    const int threshold = 100;
    REQUIRE(should_compact(ctx, threshold));
    for (int i = 0; i < 50; ++i) {
        ctx.append(ctx.make_step(Role::agent_reasoning, random_ascii(rng, len(rng))));
        CHECK(should_compact(ctx, threshold));
    }
}

TEST_CASE("step construction uses the context's counter") {
    TrajectoryContext ctx("");
    const Step step = ctx.make_step(Role::tool_call, "abcdefgh");
    CHECK(step.token_count == ctx.counter().count("abcdefgh"));
}

TEST_CASE("snapshots are isolated from later appends") {
    TrajectoryContext ctx("preamble");
    ctx.append(ctx.make_step(Role::user, "the task"));
    const ContextSnapshot snap = snapshot(ctx);
    const int snap_tokens = snap.active_tokens();

    for (int i = 0; i < 3; ++i) {
        ctx.append(ctx.make_step(Role::agent_reasoning, "more work " + std::to_string(i)));
    }
    CHECK(snap.steps().size() == 1);
    CHECK(snap.active_tokens() == snap_tokens);
    CHECK(ctx.steps().size() == 4);
}

TEST_CASE("snapshot ids are unique, contents equal for identical contexts") {
    TrajectoryContext a("same");
    a.append(a.make_step(Role::user, "identical content"));
    TrajectoryContext b("same");
    b.append(b.make_step(Role::user, "identical content"));

    const ContextSnapshot sa = snapshot(a);
    const ContextSnapshot sb = snapshot(b);
    CHECK(sa.id() != sb.id());
    CHECK(sa.system_preamble() == sb.system_preamble());
    REQUIRE(sa.steps().size() == sb.steps().size());
    CHECK(sa.steps()[0].content == sb.steps()[0].content);
    CHECK(sa.active_tokens() == sb.active_tokens());
}

TEST_CASE("snapshot serialization is byte-stable and round-trips") {
    TrajectoryContext ctx("header preamble");
    ctx.append(ctx.make_step(Role::user, "task"));
    ctx.append(ctx.make_step(Role::agent_reasoning, "thinking", 1.5));
    ctx.append(ctx.make_step(Role::tool_call, "search(\"x\")"));

    const ContextSnapshot snap = snapshot(ctx, "fixed-id");
    const std::string once = snap.to_jsonl();
    const std::string twice = snap.to_jsonl();
    CHECK(once == twice);

    const ContextSnapshot parsed = ContextSnapshot::from_jsonl(once);
    CHECK(parsed.id() == "fixed-id");
    CHECK(parsed.system_preamble() == ctx.system_preamble());
    CHECK(parsed.active_tokens() == ctx.active_tokens());
    REQUIRE(parsed.steps().size() == 3);
    CHECK(parsed.steps()[1].content == "thinking");
    CHECK(parsed.steps()[1].wall_time == 1.5);
    CHECK(parsed.steps()[2].role == Role::tool_call);
    // Reserializing the parsed snapshot reproduces the original bytes.
    CHECK(parsed.to_jsonl() == once);
}

TEST_CASE("snapshot reads never change across interleaved appends") {
    std::mt19937 rng(31);
    std::uniform_int_distribution<std::size_t> len(0, 80);
    TrajectoryContext ctx("iso");
    std::vector<ContextSnapshot> snaps;
    std::vector<std::string> frozen;
    for (int i = 0; i < 30; ++i) {
        ctx.append(ctx.make_step(Role::agent_reasoning, random_ascii(rng, len(rng))));
        if (i % 3 == 0) {
            snaps.push_back(snapshot(ctx));
            frozen.push_back(snaps.back().to_jsonl());
        }
        for (std::size_t s = 0; s < snaps.size(); ++s) {
            CHECK(snaps[s].to_jsonl() == frozen[s]);
        }
    }
}

TEST_CASE("malformed snapshot streams are rejected with context") {
    CHECK_THROWS_AS(ContextSnapshot::from_jsonl(""), ParseError);
    CHECK_THROWS_AS(ContextSnapshot::from_jsonl("not json\n"), ParseError);
    const std::string bad_step =
        R"({"snapshot_id":"s","system_preamble":"","active_tokens":0})"
        "\n{\"index\":0}\n";
    CHECK_THROWS_AS(ContextSnapshot::from_jsonl(bad_step), ParseError);
}

TEST_CASE("role names round-trip") {
    for (Role role : {Role::agent_reasoning, Role::tool_call, Role::tool_observation, Role::user,
                      Role::summary}) {
        CHECK(role_from_string(to_string(role)) == role);
    }
    CHECK_THROWS_AS(role_from_string("assistant"), ParseError);
}
