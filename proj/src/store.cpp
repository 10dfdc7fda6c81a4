#include "zeta/store.hpp"

#include "zeta/error.hpp"

#include <fstream>
#include <sstream>

namespace zeta {

using nlohmann::json;

std::string to_string(session_state s)
{
    switch (s) {
    case session_state::created:
        return "created";
    case session_state::in_progress:
        return "in_progress";
    case session_state::completed:
        return "completed";
    case session_state::expired:
        return "expired";
    }
    return "unknown";
}

session_state parse_session_state(const std::string& s)
{
    if (s == "created")
        return session_state::created;
    if (s == "in_progress")
        return session_state::in_progress;
    if (s == "completed")
        return session_state::completed;
    if (s == "expired")
        return session_state::expired;
    throw StorageError("unknown session state '" + s + "'");
}

void to_json(json& j, const user_record& r)
{
    json entries = json::array();
    for (const auto& e : r.plan.entries)
        entries.push_back({e.attribute, e.expected});
    json recycles = json::array();
    for (const auto& ev : r.plan.recycles)
        recycles.push_back({{"generation", ev.generation}, {"seed", ev.seed}, {"carried", ev.carried}});

    j = json{
        {"user_id", r.user_id},
        {"secret", to_string(r.secret)},
        {"plan",
         {{"entries", std::move(entries)},
          {"cursor", r.plan.cursor},
          {"seed", r.plan.seed},
          {"generation", r.plan.generation},
          {"recycles", std::move(recycles)}}},
        {"policy",
         {{"guessing_threshold", r.policy.guessing_threshold},
          {"allowed_errors", r.policy.allowed_errors},
          {"challenge_count", r.policy.challenge_count},
          {"tolerance", r.policy.tolerance}}},
        {"enrolled_at", r.enrolled_at},
    };
}

void from_json(const json& j, user_record& r)
{
    r.user_id = j.at("user_id").get<std::string>();
    r.secret = parse_formula(j.at("secret").get<std::string>());

    const auto& plan = j.at("plan");
    r.plan = {};
    for (const auto& e : plan.at("entries"))
        r.plan.entries.push_back({e.at(0).get<std::string>(), e.at(1).get<bool>()});
    r.plan.cursor = plan.at("cursor").get<std::size_t>();
    r.plan.seed = plan.at("seed").get<std::uint64_t>();
    r.plan.generation = plan.at("generation").get<std::uint64_t>();
    for (const auto& ev : plan.at("recycles"))
        r.plan.recycles.push_back({ev.at("generation").get<std::uint64_t>(), ev.at("seed").get<std::uint64_t>(),
                                   ev.at("carried").get<std::size_t>()});
    if (r.plan.cursor > r.plan.entries.size())
        throw StorageError("plan cursor past end for user '" + r.user_id + "'");

    const auto& policy = j.at("policy");
    r.policy.guessing_threshold = policy.at("guessing_threshold").get<double>();
    r.policy.allowed_errors = policy.at("allowed_errors").get<std::size_t>();
    r.policy.challenge_count = policy.at("challenge_count").get<std::size_t>();
    r.policy.tolerance = policy.at("tolerance").get<double>();
    r.enrolled_at = j.at("enrolled_at").get<timestamp_ms>();
}

void to_json(json& j, const session_record& r)
{
    json challenges = json::array();
    for (const auto& c : r.challenges)
        challenges.push_back({{"index", c.index}, {"attribute", c.attribute}, {"label", c.label}});
    j = json{
        {"session_id", r.session_id},
        {"user_id", r.user_id},
        {"challenges", std::move(challenges)},
        {"expected", r.expected},
        {"answers", r.answers},
        {"state", to_string(r.state)},
        {"created_at", r.created_at},
    };
    if (r.outcome)
        j["verdict"] = {{"accepted", r.outcome->accepted},
                        {"errors_observed", r.outcome->errors_observed},
                        {"challenges_answered", r.outcome->challenges_answered}};
}

void from_json(const json& j, session_record& r)
{
    r.session_id = j.at("session_id").get<std::string>();
    r.user_id = j.at("user_id").get<std::string>();
    r.challenges.clear();
    for (const auto& c : j.at("challenges"))
        r.challenges.push_back(
            {c.at("index").get<std::size_t>(), c.at("attribute").get<std::string>(), c.at("label").get<std::string>()});
    r.expected = j.at("expected").get<std::vector<bool>>();
    r.answers = j.at("answers").get<std::vector<bool>>();
    r.state = parse_session_state(j.at("state").get<std::string>());
    r.created_at = j.at("created_at").get<timestamp_ms>();
    r.outcome.reset();
    if (j.contains("verdict")) {
        const auto& v = j.at("verdict");
        r.outcome = verdict{v.at("accepted").get<bool>(), v.at("errors_observed").get<std::size_t>(),
                            v.at("challenges_answered").get<std::size_t>()};
    }
    if ((r.state == session_state::completed) != r.outcome.has_value())
        throw StorageError("session '" + r.session_id + "' has a verdict without being completed, or vice versa");
}

json snapshot_to_json(const store_snapshot& s)
{
    json doc = {{"version", 1}, {"users", json::object()}, {"sessions", json::object()}};
    for (const auto& [id, u] : s.users)
        doc["users"][id] = u;
    for (const auto& [id, sess] : s.sessions)
        doc["sessions"][id] = sess;
    return doc;
}

store_snapshot snapshot_from_json(const json& j)
{
    if (j.value("version", 0) != 1)
        throw StorageError("unsupported store version");
    store_snapshot s;
    for (const auto& [id, u] : j.at("users").items())
        s.users.emplace(id, u.get<user_record>());
    for (const auto& [id, sess] : j.at("sessions").items())
        s.sessions.emplace(id, sess.get<session_record>());
    return s;
}

// memory_store

store_snapshot memory_store::load()
{
    std::lock_guard lock(mutex_);
    return data_;
}

void memory_store::put_user(const user_record& record)
{
    std::lock_guard lock(mutex_);
    data_.users.insert_or_assign(record.user_id, record);
}

void memory_store::put_session(const session_record& record)
{
    std::lock_guard lock(mutex_);
    data_.sessions.insert_or_assign(record.session_id, record);
}

// json_file_store

json_file_store::json_file_store(std::filesystem::path path) : path_(std::move(path))
{
    doc_ = snapshot_to_json({});
}

store_snapshot json_file_store::load()
{
    std::lock_guard lock(mutex_);
    std::error_code ec;
    if (!std::filesystem::exists(path_, ec)) {
        doc_ = snapshot_to_json({});
        return {};
    }
    std::ifstream in(path_, std::ios::binary);
    if (!in)
        throw StorageError("cannot read store '" + path_.string() + "'");
    try {
        doc_ = json::parse(in);
        return snapshot_from_json(doc_);
    } catch (const json::exception& e) {
        throw StorageError("corrupt store '" + path_.string() + "': " + e.what());
    } catch (const error& e) {
        throw StorageError("corrupt store '" + path_.string() + "': " + e.what());
    }
}

void json_file_store::put_user(const user_record& record)
{
    std::lock_guard lock(mutex_);
    doc_["users"][record.user_id] = record;
    write_locked();
}

void json_file_store::put_session(const session_record& record)
{
    std::lock_guard lock(mutex_);
    doc_["sessions"][record.session_id] = record;
    write_locked();
}

void json_file_store::write_locked()
{
    auto tmp = path_;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out)
            throw StorageError("cannot write '" + tmp.string() + "'");
        out << doc_.dump(1) << '\n';
        out.flush();
        if (!out)
            throw StorageError("short write to '" + tmp.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path_, ec);
    if (ec)
        throw StorageError("cannot replace '" + path_.string() + "': " + ec.message());
}

std::string canonical_store_text(const std::string& text)
{
    return snapshot_to_json(snapshot_from_json(json::parse(text))).dump(1);
}

} // namespace zeta
