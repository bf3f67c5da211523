#include "designloop/server/service.hpp"

#include "designloop/error.hpp"

namespace designloop::server {

namespace {

using nlohmann::ordered_json;

ordered_json code_json(const design::CodeVersion& v) {
    return {{"version", v.version}, {"origin", design::origin_name(v.origin)}, {"content", v.content}};
}

ordered_json panel_json(const design::PanelVersion& v) {
    return {{"version", v.version}, {"origin", design::origin_name(v.origin)}, {"panel", design::to_json(v.panel)}};
}

ordered_json patch_summary(const patchkit::PatchResult& r) {
    return {{"outcome", patchkit::outcome_name(r.outcome)},
            {"applied", r.applied_edits.size()},
            {"failed", r.failed_edits.size()}};
}

ordered_json error_result(const std::string& message, std::string_view code) {
    return {{"ok", false}, {"error", message}, {"error_code", code}};
}

} // namespace

// Everything the server keeps for one open project. The observer persists
// each mutation before it becomes visible; the bridge turns agent callbacks
// into session events.
class Session : public agents::SessionListener {
public:
    Session(store::ArtifactStore& store, std::size_t ring,
            const std::function<design::Project(design::ProjectObserver*)>& make)
        : observer_(store), project(make(&observer_)), log(ring) {}

    void on_token(agents::AgentKind agent, std::string_view text) override {
        log.append(EventKind::ChatToken, {{"agent", agents::agent_name(agent)}, {"text", text}});
    }
    void on_patch_preview(const patchkit::PatchResult& r) override {
        ordered_json p{{"provisional", true}};
        p.update(patch_summary(r));
        p["content"] = r.new_code ? ordered_json(*r.new_code) : ordered_json();
        log.append(EventKind::CodePatchApplied, std::move(p));
    }
    void on_code_version(const design::CodeVersion& v, const std::optional<patchkit::PatchResult>& patch) override {
        if (patch) {
            ordered_json p{{"provisional", false}};
            p.update(patch_summary(*patch));
            p["code"] = code_json(v);
            log.append(EventKind::CodePatchApplied, std::move(p));
        } else {
            log.append(EventKind::CodeRewritten, {{"code", code_json(v)}});
        }
    }
    void on_message(const design::ChatMessage& m) override {
        log.append(EventKind::ChatMessage, {{"message", design::to_json(m)}});
    }
    void on_panel_event(const streamsync::ReconciliationEvent& e) override {
        log.append(EventKind::PanelEvent, {{"event", streamsync::to_json(e)}});
    }
    void on_panel_version(const design::PanelVersion& v) override {
        log.append(EventKind::PanelCommitted, {{"panel", panel_json(v)}, {"discarded", false}});
    }
    void on_panel_discarded(std::uint64_t) override {
        // Provisional events of the discarded run are superseded by the panel
        // as it stands.
        const auto current = project.read([](const design::Project& p) { return p.panel_versions().back(); });
        log.append(EventKind::PanelCommitted, {{"panel", panel_json(current)}, {"discarded", true}});
    }
    void on_trial(const design::TrialSession& t) override {
        log.append(EventKind::TrialStateChanged, {{"trial", design::to_json(t)}});
    }
    void on_error(agents::AgentKind agent, const std::string& message) override {
        log.append(EventKind::Error, {{"agent", agents::agent_name(agent)}, {"message", message}});
    }

    // Snapshot events for a project opened from disk, so that replay from
    // seq 1 still reconstructs the state.
    void announce_loaded() {
        project.read([&](const design::Project& p) {
            on_code_version(p.current_code(), std::nullopt);
            on_panel_version(p.panel_versions().back());
            for (const auto& m : p.transcript()) on_message(m);
            if (p.trial()) on_trial(*p.trial());
            return 0;
        });
    }

private:
    store::StoreObserver observer_; // must outlive and precede `project`

public:
    design::GuardedProject project;
    EventLog log;
};

Operation::~Operation() {
    cancel();
    if (thread_.joinable()) thread_.join();
}

bool Operation::done() const {
    std::lock_guard lock(mutex_);
    return result_.has_value();
}

nlohmann::ordered_json Operation::wait() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return result_.has_value(); });
    return *result_;
}

std::vector<SessionEvent> Operation::next_events(std::chrono::milliseconds timeout) {
    if (exhausted()) return {};
    auto events = log_.drain(*subscription_, timeout);
    std::optional<std::uint64_t> end;
    {
        std::lock_guard lock(mutex_);
        if (result_) end = result_->at("last_seq").get<std::uint64_t>();
    }
    if (end) std::erase_if(events, [&](const SessionEvent& e) { return e.seq > *end; });
    if (!events.empty()) delivered_ = events.back().seq;
    return events;
}

bool Operation::exhausted() const {
    std::lock_guard lock(mutex_);
    return result_ && delivered_ >= result_->at("last_seq").get<std::uint64_t>();
}

void Operation::finish(nlohmann::ordered_json result) {
    std::lock_guard lock(mutex_);
    result_ = std::move(result);
    cv_.notify_all();
}

Service::Service(store::ArtifactStore& store, agents::LlmProvider& provider, ServiceOptions options)
    : store_(store),
      options_(std::move(options)),
      recorder_(
          provider,
          [this](const agents::LlmExchange& e) {
              std::lock_guard lock(log_mutex_);
              store_.append_llm_record(e.project, agents::to_json(e));
              ++logged_;
          },
          options_.clock),
      coordinator_(recorder_, options_.agents) {}

Service::~Service() { shutdown(); }

void Service::shutdown() {
    std::vector<std::shared_ptr<Operation>> ops;
    {
        std::lock_guard lock(sessions_mutex_);
        shut_down_ = true;
        ops.swap(operations_);
    }
    for (auto& op : ops) op->cancel();
    for (auto& op : ops) op->wait();
    ops.clear();
    std::lock_guard lock(sessions_mutex_);
    for (auto& [id, s] : sessions_) s->log.close();
}

Session& Service::session(const std::string& id) {
    std::lock_guard lock(sessions_mutex_);
    if (shut_down_) throw Error(ErrorCode::InvalidState, "server is shutting down");
    if (auto it = sessions_.find(id); it != sessions_.end()) return *it->second;
    if (!design::valid_project_name(id) || !store_.has_project(id)) {
        throw Error(ErrorCode::NotFound, "no project '" + id + "'");
    }
    auto s = std::make_unique<Session>(store_, options_.event_ring, [&](design::ProjectObserver* observer) {
        design::Project p = store_.load_project(id);
        p.set_observer(observer);
        // A trial that was still executing when the process stopped never
        // finished; it is rolled back like any failed trial.
        if (p.trial() && p.trial()->state == design::TrialState::Pending) p.abort_trial(p.trial()->id);
        return p;
    });
    s->announce_loaded();
    return *sessions_.emplace(id, std::move(s)).first->second;
}

nlohmann::ordered_json Service::create_project(const std::string& id, std::optional<std::string> initial_code) {
    std::lock_guard lock(sessions_mutex_);
    if (shut_down_) throw Error(ErrorCode::InvalidState, "server is shutting down");
    if (!design::valid_project_name(id)) throw Error(ErrorCode::InvalidArgument, "invalid project name '" + id + "'");
    if (sessions_.count(id) || store_.has_project(id)) throw Error(ErrorCode::Conflict, "project '" + id + "' exists");
    store_.create_project(id);
    auto s = std::make_unique<Session>(store_, options_.event_ring, [&](design::ProjectObserver* observer) {
        return design::Project::create(id, std::move(initial_code), observer);
    });
    s->announce_loaded();
    Session& ref = *sessions_.emplace(id, std::move(s)).first->second;
    return ref.project.read([&](const design::Project& p) {
        return ordered_json{{"project", id}, {"code", code_json(p.current_code())},
                            {"panel", panel_json(p.panel_versions().back())}, {"last_seq", ref.log.last_seq()}};
    });
}

nlohmann::ordered_json Service::list_projects() const {
    ordered_json out = ordered_json::array();
    for (const auto& id : store_.list_projects()) out.push_back(id);
    return out;
}

nlohmann::ordered_json Service::state(const std::string& id) {
    Session& s = session(id);
    return s.project.read([&](const design::Project& p) {
        ordered_json j;
        j["project"] = id;
        j["code"] = code_json(p.current_code());
        j["panel"] = panel_json(p.panel_versions().back());
        j["transcript"] = ordered_json::array();
        for (const auto& m : p.transcript()) j["transcript"].push_back(design::to_json(m));
        j["trial"] = p.trial() ? design::to_json(*p.trial()) : ordered_json();
        j["last_seq"] = s.log.last_seq();
        return j;
    });
}

nlohmann::ordered_json Service::versions(const std::string& id, store::ArtifactKind kind) {
    Session& s = session(id);
    // Saves happen under the write lock, so the shared lock gives a stable index.
    return s.project.read([&](const design::Project&) {
        ordered_json out = ordered_json::array();
        for (const auto& m : store_.list_versions(id, kind)) out.push_back(store::to_json(m));
        return out;
    });
}

nlohmann::ordered_json Service::version(const std::string& id, store::ArtifactKind kind, std::uint64_t n) {
    Session& s = session(id);
    return s.project.read([&](const design::Project&) {
        const std::string content = store_.load_artifact(id, kind, n);
        const auto metas = store_.list_versions(id, kind);
        ordered_json j;
        j["meta"] = store::to_json(metas.at(n - 1));
        if (kind == store::ArtifactKind::Code) {
            j["content"] = content;
        } else {
            j["panel"] = ordered_json::parse(content);
        }
        return j;
    });
}

nlohmann::ordered_json Service::put_code(const std::string& id, std::string content) {
    Session& s = session(id);
    design::TurnLease lease(s.project);
    if (!lease) throw Error(ErrorCode::Conflict, "a turn is in progress");
    const design::CodeVersion v = s.project.write(
        [&](design::Project& p) { return p.add_code_version(std::move(content), design::VersionOrigin::Manual); });
    s.on_code_version(v, std::nullopt);
    return {{"code", code_json(v)}, {"last_seq", s.log.last_seq()}};
}

nlohmann::ordered_json Service::revert(const std::string& id, const std::string& trial_id) {
    Session& s = session(id);
    design::TurnLease lease(s.project);
    if (!lease) throw Error(ErrorCode::Conflict, "a turn is in progress");
    const design::TrialSession t = coordinator_.revert(s.project, trial_id, s);
    return {{"trial", design::to_json(t)}, {"last_seq", s.log.last_seq()}};
}

std::shared_ptr<Operation> Service::start_chat(const std::string& id, const std::string& message) {
    if (message.empty()) throw Error(ErrorCode::InvalidArgument, "empty message");
    Session& s = session(id);
    auto lease = std::make_unique<design::TurnLease>(s.project);
    if (!*lease) throw Error(ErrorCode::Conflict, "a turn is in progress");
    return launch(
        s,
        [this, &s, message](std::stop_token stop) {
            const auto outcome = coordinator_.chat(s.project, message, s, stop);
            ordered_json r{{"ok", outcome.turn.ok}};
            if (outcome.turn.error) r["error"] = *outcome.turn.error;
            if (outcome.turn.code) r["code_version"] = outcome.turn.code->version;
            return r;
        },
        std::move(lease));
}

std::shared_ptr<Operation> Service::start_trial(const std::string& id, const std::string& item_id,
                                                const std::string& alternative_id) {
    Session& s = session(id);
    auto lease = std::make_unique<design::TurnLease>(s.project);
    if (!*lease) throw Error(ErrorCode::Conflict, "a turn is in progress");
    const std::uint64_t start = s.log.last_seq();
    // Begin synchronously so that unknown ids and active trials are reported
    // as request errors, not stream events.
    const design::TrialSession trial =
        s.project.write([&](design::Project& p) { return p.begin_trial(item_id, alternative_id); });
    s.on_trial(trial);
    return launch(
        s,
        [this, &s, trial_id = trial.id](std::stop_token stop) {
            const auto result = coordinator_.design().run_trial(s.project, trial_id, s, stop);
            ordered_json r{{"ok", result.turn.ok}, {"trial", design::to_json(result.trial)}};
            if (result.turn.error) r["error"] = *result.turn.error;
            return r;
        },
        std::move(lease), start);
}

std::shared_ptr<Operation> Service::start_commit(const std::string& id, const std::string& trial_id) {
    Session& s = session(id);
    auto lease = std::make_unique<design::TurnLease>(s.project);
    if (!*lease) throw Error(ErrorCode::Conflict, "a turn is in progress");
    s.project.read([&](const design::Project& p) {
        if (!p.trial() || p.trial()->id != trial_id) throw Error(ErrorCode::NotFound, "no trial '" + trial_id + "'");
        if (p.trial()->state != design::TrialState::Applied) {
            throw Error(ErrorCode::InvalidState, "trial '" + trial_id + "' is not applied");
        }
        return 0;
    });
    return launch(
        s,
        [this, &s, trial_id](std::stop_token stop) {
            coordinator_.commit(s.project, trial_id, s, stop);
            const auto trial = s.project.read([](const design::Project& p) { return *p.trial(); });
            return ordered_json{{"ok", true}, {"trial", design::to_json(trial)}};
        },
        std::move(lease));
}

std::shared_ptr<Operation> Service::launch(Session& s, std::function<nlohmann::ordered_json(std::stop_token)> body,
                                           std::unique_ptr<design::TurnLease> lease,
                                           std::optional<std::uint64_t> start_seq) {
    std::shared_ptr<Operation> op(new Operation(s.log, start_seq.value_or(s.log.last_seq())));
    op->subscription_ = s.log.subscribe(op->start_seq_);
    {
        std::lock_guard lock(sessions_mutex_);
        if (shut_down_) throw Error(ErrorCode::InvalidState, "server is shutting down");
        std::erase_if(operations_, [](const auto& o) { return o->done(); });
        operations_.push_back(op);
    }
    Operation* raw = op.get();
    op->thread_ = std::jthread([raw, &s, body = std::move(body), lease = std::move(lease)]() mutable {
        ordered_json result;
        try {
            result = body(raw->stop_.get_token());
        } catch (const Error& e) {
            if (e.code() != ErrorCode::Cancelled) s.log.append(EventKind::Error, {{"message", e.what()}});
            result = error_result(e.what(), error_code_name(e.code()));
        } catch (const std::exception& e) {
            s.log.append(EventKind::Error, {{"message", e.what()}});
            result = error_result(e.what(), "Internal");
        }
        // The operation's events end here. The lease goes before the result
        // is published so that a client reacting to it can start the next
        // mutation.
        result["last_seq"] = s.log.last_seq();
        lease.reset();
        raw->finish(std::move(result));
    });
    return op;
}

EventLog& Service::events(const std::string& id) { return session(id).log; }

nlohmann::ordered_json Service::llm_log(const std::string& id) {
    session(id);
    std::lock_guard lock(log_mutex_);
    ordered_json out = ordered_json::array();
    for (const auto& r : store_.load_llm_log(id)) out.push_back(ordered_json::parse(r.dump()));
    return out;
}

nlohmann::ordered_json empty_mirror(const std::string& project) {
    return {{"project", project}, {"code", nullptr},   {"panel", nullptr},
            {"transcript", ordered_json::array()},      {"trial", nullptr}, {"last_seq", 0}};
}

void apply_session_event(nlohmann::ordered_json& mirror, const SessionEvent& event) {
    const auto& p = event.payload;
    switch (event.kind) {
    case EventKind::CodePatchApplied:
        if (!p.at("provisional").get<bool>()) mirror["code"] = p.at("code");
        break;
    case EventKind::CodeRewritten:
        mirror["code"] = p.at("code");
        break;
    case EventKind::ChatMessage:
        mirror["transcript"].push_back(p.at("message"));
        break;
    case EventKind::PanelCommitted:
        mirror["panel"] = p.at("panel");
        break;
    case EventKind::TrialStateChanged:
        mirror["trial"] = p.at("trial");
        break;
    case EventKind::ChatToken:
    case EventKind::PanelEvent:
    case EventKind::Error:
        break;
    }
    mirror["last_seq"] = event.seq;
}

} // namespace designloop::server
