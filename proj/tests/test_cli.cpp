#include "process.hpp"
#include "test_support.hpp"

#include <doctest.h>
#include <httplib.h>
#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace zeta;
using namespace zeta::testing;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

fs::path scratch(const std::string& name)
{
    auto dir = fs::temp_directory_path() / ("zeta_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    auto p = dir / name;
    fs::remove(p);
    return p;
}

fs::path write_file(const std::string& name, const std::string& text)
{
    auto p = scratch(name);
    std::ofstream(p) << text;
    return p;
}

std::string field_after(const std::string& out, const std::string& label)
{
    const auto at = out.find(label);
    REQUIRE(at != std::string::npos);
    std::istringstream in(out.substr(at + label.size()));
    std::string value;
    in >> value;
    return value;
}

} // namespace

TEST_CASE("kb-validate reports counts of the bundled kb")
{
    const auto doc = json::parse(read_file(data_path("example_kb.json")));
    const auto r = run_command(cli() + " kb-validate " + data_path("example_kb.json"));
    CHECK(r.exit_code == 0);
    CHECK(field_after(r.out, "attributes:") == std::to_string(doc["attributes"].size()));
    CHECK(field_after(r.out, "concepts:") == std::to_string(doc["concepts"].size()));
    CHECK(field_after(r.out, "relations:") == std::to_string(doc["relations"].size()));
    CHECK(r.out.find("feasible") != std::string::npos);
}

TEST_CASE("kb-validate rejects broken files")
{
    const auto dangling = write_file("dangling.json", R"({"attributes": [{"id": "a"}], "concepts": [{"id": "c"}],
        "relations": [["a", "ghost"]]})");
    auto r = run_command(cli() + " kb-validate " + dangling.string(), true);
    CHECK(r.exit_code == 1);
    CHECK(r.out.find("ghost") != std::string::npos);

    const auto garbage = write_file("garbage.json", "[1, 2");
    CHECK(run_command(cli() + " kb-validate " + garbage.string()).exit_code == 1);
    CHECK(run_command(cli() + " kb-validate " + scratch("missing.json").string()).exit_code == 1);

    const auto empty = write_file("empty.json", R"({"attributes": [], "concepts": [], "relations": []})");
    r = run_command(cli() + " kb-validate " + empty.string());
    CHECK(r.exit_code == 0);
    CHECK(field_after(r.out, "attributes:") == "0");
}

TEST_CASE("params")
{
    auto r = run_command(cli() + " params --threshold 1e-4 --errors 0");
    CHECK(r.exit_code == 0);
    CHECK(field_after(r.out, "challenge_count:") == "14");
    r = run_command(cli() + " params --threshold 1e-6 --errors 1");
    CHECK(field_after(r.out, "challenge_count:") == "25");
    CHECK(r.out.find("13/2^24") != std::string::npos);
    r = run_command(cli() + " params --threshold 1e-6 --errors 0");
    CHECK(field_after(r.out, "challenge_count:") == "20");

    CHECK(run_command(cli() + " params --threshold 0").exit_code == 2);
    CHECK(run_command(cli() + " params --threshold abc").exit_code == 2);
    CHECK(run_command(cli() + " params --threshold 1e-30 --errors 5").exit_code == 1);
    CHECK(run_command(cli() + " no-such-command").exit_code == 2);
}

TEST_CASE("simulate prints both cohorts")
{
    const auto r = run_command(cli() + " simulate --users 2 --sessions 10 --seed 4");
    CHECK(r.exit_code == 0);
    CHECK(r.out.find("honest") != std::string::npos);
    CHECK(r.out.find("random") != std::string::npos);
    CHECK(run_command(cli() + " simulate --error-rate 1.5").exit_code == 2);
}

TEST_CASE("attack writes a monotone curve")
{
    const auto csv = scratch("curve.csv");
    const auto r = run_command(cli() + " attack --kb " + data_path("toy_kb.json") +
                               " --trials 200 --max-observations 4 --seed 2 --csv " + csv.string());
    CHECK(r.exit_code == 0);
    std::istringstream in(read_file(csv.string()));
    std::string line;
    std::getline(in, line);
    CHECK(line == "observations,surviving,estimate,ci_low,ci_high");
    long previous = -1;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        std::istringstream cells(line);
        std::string obs, surviving;
        std::getline(cells, obs, ',');
        std::getline(cells, surviving, ',');
        CHECK(std::stoul(obs) == rows);
        const long s = std::stol(surviving);
        if (previous >= 0)
            CHECK(s <= previous);
        previous = s;
        ++rows;
    }
    CHECK(rows == 5);

    CHECK(run_command(cli() + " attack --max-leaves 3 --cap 10").exit_code == 1);
    CHECK(run_command(cli() + " attack --secret 'OR(metal, nonsense)'").exit_code != 0);
}

TEST_CASE("serve answers health checks and keeps its store across restarts")
{
    const auto store = scratch("serve_store.json");
    std::string user_before;
    {
        child_process server({cli(), "serve", "--kb", data_path("example_kb.json"), "--store", store.string(),
                              "--listen", "127.0.0.1:0"});
        REQUIRE(server.started());
        const auto port = server.wait_for_port();
        REQUIRE(port.has_value());
        httplib::Client c("127.0.0.1", *port);
        const auto h = c.Get("/api/v1/healthz");
        REQUIRE(h);
        CHECK(json::parse(h->body)["kb_attributes"] == 89);
        const auto e = c.Post("/api/v1/enroll", R"({"user_id": "alice", "seed": 3})", "application/json");
        REQUIRE(e);
        CHECK(e->status == 201);
        const auto s = c.Post("/api/v1/sessions", R"({"user_id": "alice"})", "application/json");
        REQUIRE(s);
        CHECK(s->status == 201);
        user_before = json::parse(read_file(store.string()))["users"]["alice"].dump();

        server.signal(SIGTERM);
        CHECK(server.read_line() == std::optional<std::string>("stopped"));
        CHECK(server.wait() == 0);
    }
    const auto doc = json::parse(read_file(store.string()));
    CHECK(doc["users"].contains("alice"));
    CHECK(doc["sessions"].size() == 1);

    child_process again({cli(), "serve", "--kb", data_path("example_kb.json"), "--store", store.string(),
                         "--listen", "127.0.0.1:0"});
    const auto port = again.wait_for_port();
    REQUIRE(port.has_value());
    httplib::Client c("127.0.0.1", *port);
    const auto dup = c.Post("/api/v1/enroll", R"({"user_id": "alice"})", "application/json");
    REQUIRE(dup);
    CHECK(dup->status == 409);
    CHECK(json::parse(read_file(store.string()))["users"]["alice"].dump() == user_before);
    again.signal(SIGINT);
    CHECK(again.wait() == 0);
}

TEST_CASE("serve refuses an invalid knowledge base")
{
    const auto bad = write_file("bad_kb.json", R"({"attributes": [{"id": "a"}, {"id": "a"}], "concepts": [],
        "relations": []})");
    child_process server({cli(), "serve", "--kb", bad.string(), "--store", scratch("unused.json").string(),
                          "--listen", "127.0.0.1:0"});
    CHECK_FALSE(server.wait_for_port().has_value());
    CHECK(server.wait() != 0);
}
