#pragma once

#include "zeta/challenge.hpp"
#include "zeta/secret.hpp"
#include "zeta/verifier.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace zeta {

// Milliseconds since the Unix epoch.
using timestamp_ms = std::int64_t;

struct user_record {
    std::string user_id;
    formula secret = formula::leaf("?");
    challenge_plan plan;
    security_policy policy;
    timestamp_ms enrolled_at = 0;

    bool operator==(const user_record&) const = default;
};

enum class session_state { created, in_progress, completed, expired };

std::string to_string(session_state s);
session_state parse_session_state(const std::string& s);

struct session_record {
    std::string session_id;
    std::string user_id;
    std::vector<challenge> challenges;
    std::vector<bool> expected; // server-side only
    std::vector<bool> answers;
    session_state state = session_state::created;
    std::optional<verdict> outcome; // set iff completed
    timestamp_ms created_at = 0;

    std::size_t total() const noexcept { return challenges.size(); }
    bool closed() const noexcept { return state == session_state::completed || state == session_state::expired; }

    bool operator==(const session_record&) const = default;
};

struct store_snapshot {
    std::map<std::string, user_record> users;
    std::map<std::string, session_record> sessions;
};

void to_json(nlohmann::json& j, const user_record& r);
void from_json(const nlohmann::json& j, user_record& r);
void to_json(nlohmann::json& j, const session_record& r);
void from_json(const nlohmann::json& j, session_record& r);

nlohmann::json snapshot_to_json(const store_snapshot& s);
store_snapshot snapshot_from_json(const nlohmann::json& j);

// Persistence behind the service. Implementations serialize their own writes;
// the service serializes writes per user and per session.
class user_store {
public:
    virtual ~user_store() = default;

    virtual store_snapshot load() = 0;
    virtual void put_user(const user_record& record) = 0;
    virtual void put_session(const session_record& record) = 0;
};

// Keeps nothing; for in-process simulation.
class memory_store final : public user_store {
public:
    store_snapshot load() override;
    void put_user(const user_record& record) override;
    void put_session(const session_record& record) override;

private:
    std::mutex mutex_;
    store_snapshot data_;
};

// One JSON document on disk, rewritten through a temporary file and an
// atomic rename on every change, so a killed process leaves either the old
// or the new document. Throws StorageError.
class json_file_store final : public user_store {
public:
    explicit json_file_store(std::filesystem::path path);

    store_snapshot load() override;
    void put_user(const user_record& record) override;
    void put_session(const session_record& record) override;

    const std::filesystem::path& path() const noexcept { return path_; }

private:
    void write_locked();

    std::filesystem::path path_;
    std::mutex mutex_;
    nlohmann::json doc_;
};

// Parses and re-dumps a store document with sorted keys and fixed
// formatting; two stores holding the same state compare equal as text.
std::string canonical_store_text(const std::string& text);

} // namespace zeta
