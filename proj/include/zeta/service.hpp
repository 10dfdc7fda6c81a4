#pragma once

#include "zeta/challenge.hpp"
#include "zeta/kb.hpp"
#include "zeta/secret.hpp"
#include "zeta/store.hpp"
#include "zeta/verifier.hpp"

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <string>

namespace zeta {

timestamp_ms system_now_ms();

struct service_config {
    std::chrono::milliseconds session_ttl = std::chrono::minutes(10);
    generation_limits limits;
    std::function<timestamp_ms()> clock = system_now_ms;
};

struct enroll_request {
    std::string user_id;
    double threshold = 1e-6;
    std::size_t allowed_errors = 1;
    double tolerance = default_balance_tolerance;
    std::optional<std::uint64_t> seed;
};

// The only response that ever carries the secret.
struct enroll_response {
    std::string user_id;
    std::size_t challenge_count = 0;
    std::string secret_text;
};

struct session_start {
    std::string session_id;
    std::size_t total = 0;
    challenge first;
};

// Exactly one of next / accepted is set.
struct answer_outcome {
    std::optional<challenge> next;
    std::optional<bool> accepted;
};

// What a client may learn about a session: progress, never expectations.
struct session_view {
    std::string session_id;
    std::size_t total = 0;
    std::size_t answered = 0;
    session_state state = session_state::created;
    std::optional<challenge> current;
    std::optional<bool> accepted;
};

// Enrolment and the session state machine:
//   created -> in_progress -> completed, and any open state -> expired.
// Every session runs to its full challenge count before a verdict; the
// verdict says accept or reject and nothing else.
class auth_service {
public:
    auth_service(std::shared_ptr<const knowledge_base> kb, std::unique_ptr<user_store> store,
                 service_config config = {});

    auth_service(const auth_service&) = delete;
    auth_service& operator=(const auth_service&) = delete;

    // Throws DuplicateUser, ValidationError, NoBalancedSecret, DomainError, StorageError.
    enroll_response enroll(const enroll_request& request);

    // Throws UnknownUser, PlanTooSmall.
    session_start start_session(const std::string& user_id);

    // index must equal the number of answers already recorded.
    // Throws UnknownSession, OutOfOrder, SessionClosed.
    answer_outcome answer(const std::string& session_id, std::size_t index, bool response);

    // Moves every open session older than the TTL to expired.
    std::size_t expire_sessions(timestamp_ms now);

    // Throws UnknownSession.
    session_view view(const std::string& session_id) const;

    const knowledge_base& kb() const noexcept { return *kb_; }
    const service_config& config() const noexcept { return config_; }

    // Server-side inspection, for tests and tooling. Throw UnknownUser / UnknownSession.
    user_record user(const std::string& user_id) const;
    session_record session(const std::string& session_id) const;
    std::size_t user_count() const;
    std::size_t session_count() const;

private:
    struct user_slot {
        std::mutex mutex;
        user_record record;
    };
    struct session_slot {
        mutable std::mutex mutex;
        session_record record;
    };

    user_slot& find_user(const std::string& user_id) const;
    session_slot& find_session(const std::string& session_id) const;
    std::string new_session_id();
    bool stale(const session_record& s, timestamp_ms now) const;

    std::shared_ptr<const knowledge_base> kb_;
    std::unique_ptr<user_store> store_;
    service_config config_;

    mutable std::shared_mutex users_mutex_;
    std::map<std::string, std::unique_ptr<user_slot>> users_;
    mutable std::shared_mutex sessions_mutex_;
    std::map<std::string, std::unique_ptr<session_slot>> sessions_;

    std::mutex id_mutex_;
    std::random_device entropy_;
};

} // namespace zeta
