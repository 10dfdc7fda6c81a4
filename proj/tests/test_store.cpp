#include "test_support.hpp"

#include "zeta/error.hpp"
#include "zeta/store.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

using namespace zeta;
using namespace zeta::testing;
namespace fs = std::filesystem;

namespace {

fs::path temp_path(const std::string& name)
{
    auto dir = fs::temp_directory_path() / ("zeta_store_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    auto p = dir / name;
    fs::remove(p);
    return p;
}

user_record sample_user(const knowledge_base& kb, std::uint64_t seed)
{
    user_record u;
    u.user_id = "user-" + std::to_string(seed);
    u.secret = generate_secret(kb, {}, 0.05, seed, 25);
    u.plan = build_plan(kb, u.secret, seed);
    u.policy = make_policy(1e-6, 1);
    u.enrolled_at = 1'700'000'000'000 + static_cast<timestamp_ms>(seed);
    // Exercise recycle bookkeeping too.
    for (int i = 0; i < 4; ++i)
        draw_session_challenges(u.plan, kb, 25);
    return u;
}

session_record sample_session(const knowledge_base& kb, const user_record& u, bool completed)
{
    auto plan = u.plan;
    auto d = draw_session_challenges(plan, kb, u.policy.challenge_count);
    session_record s;
    s.session_id = "0123456789abcdef0123456789abcdef";
    s.user_id = u.user_id;
    s.challenges = d.challenges;
    s.expected = d.expected;
    s.created_at = 1'700'000'000'123;
    if (completed) {
        s.answers = d.expected;
        s.answers[3] = !s.answers[3];
        s.state = session_state::completed;
        s.outcome = decide(u.policy, s.expected, s.answers);
    } else {
        s.answers = {true, false};
        s.state = session_state::in_progress;
    }
    return s;
}

} // namespace

TEST_CASE("property: records round-trip through JSON")
{
    const auto kb = bundled_kb();
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto u = sample_user(kb, seed);
        CHECK(nlohmann::json(u).get<user_record>() == u);
        for (bool completed : {false, true}) {
            const auto s = sample_session(kb, u, completed);
            CHECK(nlohmann::json(s).get<session_record>() == s);
        }
    }
}

TEST_CASE("session states have stable names")
{
    for (auto s : {session_state::created, session_state::in_progress, session_state::completed, session_state::expired})
        CHECK(parse_session_state(to_string(s)) == s);
    CHECK_THROWS_AS(parse_session_state("paused"), StorageError);
}

TEST_CASE("json_file_store persists and reloads")
{
    const auto kb = bundled_kb();
    const auto path = temp_path("store.json");
    const auto u = sample_user(kb, 3);
    const auto s = sample_session(kb, u, true);
    {
        json_file_store store(path);
        CHECK(store.load().users.empty());
        store.put_user(u);
        store.put_session(s);
    }
    CHECK(fs::exists(path));
    CHECK_FALSE(fs::exists(path.string() + ".tmp"));

    json_file_store reopened(path);
    const auto snap = reopened.load();
    REQUIRE(snap.users.size() == 1);
    REQUIRE(snap.sessions.size() == 1);
    CHECK(snap.users.at(u.user_id) == u);
    CHECK(snap.sessions.at(s.session_id) == s);

    const auto text = read_file(path.string());
    CHECK(canonical_store_text(text) == canonical_store_text(canonical_store_text(text)));
    CHECK(canonical_store_text(text) == snapshot_to_json(snap).dump(1));
}

TEST_CASE("corrupt store is a storage error")
{
    const auto path = temp_path("corrupt.json");
    {
        std::ofstream out(path);
        out << "{\"version\": 1, \"users\": {";
    }
    json_file_store store(path);
    CHECK_THROWS_AS(store.load(), StorageError);

    {
        std::ofstream out(path);
        out << R"({"version": 1, "users": {}, "sessions": {"x": {"session_id": "x", "user_id": "u",
                  "challenges": [], "expected": [], "answers": [], "state": "completed", "created_at": 0}}})";
    }
    CHECK_THROWS_AS(store.load(), StorageError);

    {
        std::ofstream out(path);
        out << R"({"version": 2, "users": {}, "sessions": {}})";
    }
    CHECK_THROWS_AS(store.load(), StorageError);
}

TEST_CASE("memory_store keeps the latest record")
{
    const auto kb = bundled_kb();
    memory_store store;
    auto u = sample_user(kb, 1);
    store.put_user(u);
    u.plan.cursor = 3;
    store.put_user(u);
    CHECK(store.load().users.at(u.user_id).plan.cursor == 3);
}
