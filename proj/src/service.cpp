#include "zeta/service.hpp"

#include "zeta/error.hpp"
#include "zeta/rng.hpp"

#include <array>
#include <cstdio>

namespace zeta {

timestamp_ms system_now_ms()
{
    return std::chrono::duration_cast<std::chrono::milliseconds>(
               std::chrono::system_clock::now().time_since_epoch())
        .count();
}

auth_service::auth_service(std::shared_ptr<const knowledge_base> kb, std::unique_ptr<user_store> store,
                           service_config config)
    : kb_(std::move(kb)), store_(std::move(store)), config_(std::move(config))
{
    if (!kb_ || !store_)
        throw PreconditionError("auth_service needs a knowledge base and a store");
    auto snapshot = store_->load();
    for (auto& [id, record] : snapshot.users) {
        auto slot = std::make_unique<user_slot>();
        slot->record = std::move(record);
        users_.emplace(id, std::move(slot));
    }
    for (auto& [id, record] : snapshot.sessions) {
        auto slot = std::make_unique<session_slot>();
        slot->record = std::move(record);
        sessions_.emplace(id, std::move(slot));
    }
}

enroll_response auth_service::enroll(const enroll_request& request)
{
    if (request.user_id.empty())
        throw ValidationError("user_id must be non-empty");
    {
        std::shared_lock lock(users_mutex_);
        if (users_.contains(request.user_id))
            throw DuplicateUser("user '" + request.user_id + "' is already enrolled");
    }

    const auto policy = make_policy(request.threshold, request.allowed_errors, request.tolerance);
    if (policy.challenge_count > kb_->attribute_count())
        throw PlanTooSmall("policy needs " + std::to_string(policy.challenge_count) +
                           " challenges per session but the knowledge base has " +
                           std::to_string(kb_->attribute_count()) + " attributes");

    std::uint64_t seed = 0;
    if (request.seed) {
        seed = *request.seed;
    } else {
        std::lock_guard lock(id_mutex_);
        seed = (static_cast<std::uint64_t>(entropy_()) << 32) ^ entropy_();
    }

    auto slot = std::make_unique<user_slot>();
    auto& record = slot->record;
    record.user_id = request.user_id;
    record.secret = generate_secret(*kb_, config_.limits, policy.tolerance, derive_seed(seed, 1),
                                    policy.challenge_count);
    record.plan = build_plan(*kb_, record.secret, derive_seed(seed, 2));
    record.policy = policy;
    record.enrolled_at = config_.clock();

    enroll_response response{record.user_id, policy.challenge_count, to_string(record.secret)};

    std::unique_lock lock(users_mutex_);
    if (users_.contains(request.user_id))
        throw DuplicateUser("user '" + request.user_id + "' is already enrolled");
    store_->put_user(record);
    users_.emplace(request.user_id, std::move(slot));
    return response;
}

auth_service::user_slot& auth_service::find_user(const std::string& user_id) const
{
    std::shared_lock lock(users_mutex_);
    const auto it = users_.find(user_id);
    if (it == users_.end())
        throw UnknownUser("unknown user '" + user_id + "'");
    return *it->second;
}

auth_service::session_slot& auth_service::find_session(const std::string& session_id) const
{
    std::shared_lock lock(sessions_mutex_);
    const auto it = sessions_.find(session_id);
    if (it == sessions_.end())
        throw UnknownSession("unknown session '" + session_id + "'");
    return *it->second;
}

std::string auth_service::new_session_id()
{
    std::array<std::uint32_t, 4> words{};
    {
        std::lock_guard lock(id_mutex_);
        for (auto& w : words)
            w = entropy_();
    }
    std::string id(32, '0');
    for (std::size_t i = 0; i < words.size(); ++i)
        std::snprintf(id.data() + 8 * i, 9, "%08x", words[i]);
    return id;
}

bool auth_service::stale(const session_record& s, timestamp_ms now) const
{
    return !s.closed() && now - s.created_at > config_.session_ttl.count();
}

session_start auth_service::start_session(const std::string& user_id)
{
    auto& user = find_user(user_id);

    auto slot = std::make_unique<session_slot>();
    auto& session = slot->record;
    {
        std::lock_guard lock(user.mutex);
        auto plan = user.record.plan;
        auto draw = draw_session_challenges(plan, *kb_, user.record.policy.challenge_count);
        auto updated = user.record;
        updated.plan = std::move(plan);
        store_->put_user(updated);
        user.record = std::move(updated);

        session.user_id = user_id;
        session.challenges = std::move(draw.challenges);
        session.expected = std::move(draw.expected);
    }
    session.state = session_state::in_progress;
    session.created_at = config_.clock();

    std::unique_lock lock(sessions_mutex_);
    do {
        session.session_id = new_session_id();
    } while (sessions_.contains(session.session_id));
    store_->put_session(session);
    session_start out{session.session_id, session.total(), session.challenges.front()};
    sessions_.emplace(session.session_id, std::move(slot));
    return out;
}

answer_outcome auth_service::answer(const std::string& session_id, std::size_t index, bool response)
{
    auto& slot = find_session(session_id);
    std::lock_guard lock(slot.mutex);
    auto& s = slot.record;

    if (stale(s, config_.clock())) {
        auto expired = s;
        expired.state = session_state::expired;
        store_->put_session(expired);
        s = std::move(expired);
    }
    if (s.closed())
        throw SessionClosed("session '" + session_id + "' is " + to_string(s.state));
    if (index != s.answers.size())
        throw OutOfOrder("expected answer for challenge " + std::to_string(s.answers.size()) + ", got " +
                         std::to_string(index));

    auto updated = s;
    updated.answers.push_back(response);
    answer_outcome out;
    if (updated.answers.size() < updated.total()) {
        out.next = updated.challenges[updated.answers.size()];
    } else {
        security_policy policy;
        {
            auto& user = find_user(s.user_id);
            std::lock_guard user_lock(user.mutex);
            policy = user.record.policy;
        }
        updated.outcome = decide(policy, updated.expected, updated.answers);
        updated.state = session_state::completed;
        out.accepted = updated.outcome->accepted;
    }
    store_->put_session(updated);
    s = std::move(updated);
    return out;
}

std::size_t auth_service::expire_sessions(timestamp_ms now)
{
    std::vector<session_slot*> slots;
    {
        std::shared_lock lock(sessions_mutex_);
        for (auto& [id, slot] : sessions_)
            slots.push_back(slot.get());
    }
    std::size_t count = 0;
    for (auto* slot : slots) {
        std::lock_guard lock(slot->mutex);
        if (!stale(slot->record, now))
            continue;
        auto expired = slot->record;
        expired.state = session_state::expired;
        store_->put_session(expired);
        slot->record = std::move(expired);
        ++count;
    }
    return count;
}

session_view auth_service::view(const std::string& session_id) const
{
    auto& slot = find_session(session_id);
    std::lock_guard lock(slot.mutex);
    const auto& s = slot.record;
    session_view v;
    v.session_id = s.session_id;
    v.total = s.total();
    v.answered = s.answers.size();
    v.state = s.state;
    if (v.state == session_state::in_progress && stale(s, config_.clock()))
        v.state = session_state::expired;
    if (v.state == session_state::in_progress || v.state == session_state::created)
        v.current = s.challenges[s.answers.size()];
    if (s.outcome)
        v.accepted = s.outcome->accepted;
    return v;
}

user_record auth_service::user(const std::string& user_id) const
{
    auto& slot = find_user(user_id);
    std::lock_guard lock(slot.mutex);
    return slot.record;
}

session_record auth_service::session(const std::string& session_id) const
{
    auto& slot = find_session(session_id);
    std::lock_guard lock(slot.mutex);
    return slot.record;
}

std::size_t auth_service::user_count() const
{
    std::shared_lock lock(users_mutex_);
    return users_.size();
}

std::size_t auth_service::session_count() const
{
    std::shared_lock lock(sessions_mutex_);
    return sessions_.size();
}

} // namespace zeta
