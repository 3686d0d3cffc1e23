#pragma once

// HTTP API, console push channel and prototype listeners. Handlers only
// translate between JSON and the session/repository/log/analysis modules.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "woe/analysis.hpp"
#include "woe/assist.hpp"
#include "woe/error.hpp"
#include "woe/logstore.hpp"
#include "woe/protocol.hpp"
#include "woe/prototype_link.hpp"
#include "woe/repository.hpp"
#include "woe/session.hpp"

namespace woe::service {

using Json = nlohmann::ordered_json;

struct ServiceConfig {
    std::string http_bind = "127.0.0.1:8080";
    std::string prototype_bind = "127.0.0.1:9090";
    std::optional<std::filesystem::path> data_dir = std::filesystem::path("woe-data");
    SessionMode default_mode = SessionMode::manual;
    ErrorWeights default_weights;

    void validate() const {
        const auto http = parse_host_port(http_bind);
        const auto proto = parse_host_port(prototype_bind);
        if (http.port == proto.port && http.port != 0 && (http.host == proto.host || http.host == "0.0.0.0" || proto.host == "0.0.0.0")) {
            throw Error(ErrorCode::InvalidConfig, "HTTP and prototype bind addresses must differ");
        }
        default_weights.validate();
        if (data_dir) {
            std::error_code ec;
            std::filesystem::create_directories(*data_dir, ec);
            const auto probe = *data_dir / ".write-test";
            std::ofstream out(probe);
            if (ec || !out) throw Error(ErrorCode::InvalidConfig, "data directory " + data_dir->string() + " is not writable");
            out.close();
            std::filesystem::remove(probe, ec);
        }
    }
};

/// "segmentation,similarity,wild,no_recognition" as four numbers.
inline ErrorWeights parse_weights(std::string_view text) {
    ErrorWeights w;
    double* slots[] = {&w.segmentation, &w.similarity, &w.wild, &w.no_recognition};
    std::size_t i = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto comma = text.find(',', start);
        const auto item = csv::trim(text.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (i >= 4) throw Error(ErrorCode::InvalidConfig, "expected 4 weights");
        char* end = nullptr;
        const std::string s(item);
        *slots[i++] = std::strtod(s.c_str(), &end);
        if (s.empty() || end != s.c_str() + s.size()) throw Error(ErrorCode::InvalidConfig, "bad weight '" + s + "'");
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    if (i != 4) throw Error(ErrorCode::InvalidConfig, "expected 4 weights");
    w.validate();
    return w;
}

/// Applies WOE_HTTP_BIND, WOE_PROTOTYPE_BIND, WOE_DATA_DIR, WOE_DEFAULT_MODE
/// and WOE_DEFAULT_WEIGHTS on top of `config`.
inline ServiceConfig apply_env(ServiceConfig config) {
    if (const char* v = std::getenv("WOE_HTTP_BIND")) config.http_bind = v;
    if (const char* v = std::getenv("WOE_PROTOTYPE_BIND")) config.prototype_bind = v;
    if (const char* v = std::getenv("WOE_DATA_DIR")) config.data_dir = std::filesystem::path(v);
    if (const char* v = std::getenv("WOE_DEFAULT_MODE")) {
        const auto mode = parse_mode(v);
        if (!mode) throw Error(ErrorCode::InvalidConfig, std::string("WOE_DEFAULT_MODE: unknown mode '") + v + "'");
        config.default_mode = *mode;
    }
    if (const char* v = std::getenv("WOE_DEFAULT_WEIGHTS")) config.default_weights = parse_weights(v);
    return config;
}

inline int http_status(ErrorCode code) {
    switch (code) {
        case ErrorCode::UnknownRepository:
        case ErrorCode::UnknownSession:
            return 404;
        case ErrorCode::SessionNotRunning:
        case ErrorCode::NoGroundTruthSelected:
        case ErrorCode::KindNotScheduled:
        case ErrorCode::ScheduleExhausted:
            return 409;
        case ErrorCode::StorageFailure:
            return 500;
        default:
            return 422;
    }
}

// ---------------------------------------------------------------------------
// JSON views of domain values.

inline Json to_json(const PredictionEvent& e) {
    return Json{
        {"seq", e.seq},
        {"trial_index", e.trial_index},
        {"ground_truth", e.ground_truth},
        {"kind", std::string(to_string(e.kind))},
        {"predicted_label", e.predicted_label ? Json(*e.predicted_label) : Json(nullptr)},
        {"confidence", e.confidence ? Json(*e.confidence) : Json(nullptr)},
        {"correct", e.correct},
        {"accuracy_after", e.accuracy_after},
        {"timestamp_ms", e.timestamp_ms},
    };
}

inline Json to_json(const ErrorWeights& w) {
    return Json{{"segmentation", w.segmentation}, {"similarity", w.similarity}, {"wild", w.wild}, {"no_recognition", w.no_recognition}};
}

inline Json to_json(const ErrorRepository& repo) {
    Json entries = Json::array();
    for (const auto& e : repo.entries()) {
        entries.push_back(Json{{"id", e.id},
                               {"correct_answer", e.correct_answer},
                               {"segmentation_error", e.segmentation_error},
                               {"similarity_error", e.similarity_error},
                               {"wild_error", e.wild_error},
                               {"no_recognition_error", nullptr}});
    }
    return Json{{"name", repo.name()}, {"entries", std::move(entries)}};
}

/// Everything the console renders, so it never resolves labels or computes
/// accuracy itself.
inline Json snapshot(const Session& s) {
    const auto& c = s.config();
    const auto acc = s.current_accuracy();
    Json options = nullptr;
    if (s.pending_ground_truth()) {
        options = Json::object();
        for (auto kind : all_kinds) {
            const auto label = s.repository().lookup(*s.pending_ground_truth(), kind);
            options[std::string(to_string(kind))] = label ? Json(*label) : Json(nullptr);
        }
    }
    Json recommendation = nullptr;
    if (auto rec = s.recommendation()) {
        recommendation = Json{{"kind", std::string(to_string(rec->kind))}, {"reason", rec->reason}, {"projected_accuracy", rec->projected_accuracy}};
    }
    const auto scheduled = s.phase() == SessionPhase::running ? s.scheduled_kind() : std::nullopt;
    Json events = Json::array();
    for (const auto& e : s.events()) events.push_back(to_json(e));
    return Json{
        {"session_id", c.session_id},
        {"repository_name", c.repository_name},
        {"target_accuracy", c.target_accuracy},
        {"mode", std::string(to_string(c.mode))},
        {"phase", std::string(to_string(s.phase()))},
        {"planned_trials", c.planned_trials ? Json(*c.planned_trials) : Json(nullptr)},
        {"rng_seed", c.rng_seed ? Json(*c.rng_seed) : Json(nullptr)},
        {"expose_correctness_to_prototype", c.expose_correctness_to_prototype},
        {"weights", to_json(c.weights)},
        {"ground_truths", s.repository().list_ground_truths()},
        {"pending_ground_truth", s.pending_ground_truth() ? Json(*s.pending_ground_truth()) : Json(nullptr)},
        {"pending_confidence", s.pending_confidence() ? Json(*s.pending_confidence()) : Json(nullptr)},
        {"options", std::move(options)},
        {"accuracy",
         Json{{"n_total", acc.n_total}, {"n_correct", acc.n_correct}, {"current", acc.defined() ? Json(acc.current) : Json(nullptr)}, {"target", acc.target}}},
        {"kind_counts", analysis::kind_counts_json(s.kind_counts())},
        {"recommendation", std::move(recommendation)},
        {"scheduled_kind", scheduled ? Json(std::string(to_string(*scheduled))) : Json(nullptr)},
        {"events", std::move(events)},
    };
}

/// Push-channel frame: `{"type":"state","session":{...}}\n`.
inline std::string state_frame(const Session& s) {
    Json j{{"type", "state"}, {"session", snapshot(s)}};
    std::string line = j.dump();
    line.push_back('\n');
    return line;
}

// ---------------------------------------------------------------------------

struct Request {
    std::string method;
    std::string path;
    std::string body;
    std::map<std::string, std::string> params;
};

struct Response {
    int status = 200;
    std::string content_type = "application/json";
    std::string body;
};

namespace detail {

inline Json parse_body(const std::string& body) {
    try {
        auto j = Json::parse(body.empty() ? std::string("{}") : body);
        if (!j.is_object()) throw Error(ErrorCode::InvalidPayload, "body must be a JSON object");
        return j;
    } catch (const Json::parse_error& e) {
        throw Error(ErrorCode::InvalidPayload, std::string("invalid JSON: ") + e.what());
    }
}

inline const Json& require(const Json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) throw Error(ErrorCode::InvalidPayload, std::string("missing '") + key + "'");
    return *it;
}

inline std::string require_string(const Json& j, const char* key) {
    const auto& v = require(j, key);
    if (!v.is_string()) throw Error(ErrorCode::InvalidPayload, std::string("'") + key + "' must be a string");
    return v.get<std::string>();
}

inline double require_number(const Json& j, const char* key) {
    const auto& v = require(j, key);
    if (!v.is_number()) throw Error(ErrorCode::InvalidPayload, std::string("'") + key + "' must be a number");
    return v.get<double>();
}

inline std::int64_t require_integer(const Json& j, const char* key) {
    const auto& v = require(j, key);
    if (!v.is_number_integer()) throw Error(ErrorCode::InvalidPayload, std::string("'") + key + "' must be an integer");
    return v.get<std::int64_t>();
}

inline bool valid_id(std::string_view id) {
    if (id.empty() || id.size() > 64 || id.front() == '.') return false;
    for (char c : id) {
        if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) return false;
    }
    return true;
}

inline std::vector<std::string> split_path(std::string_view path) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (start < path.size()) {
        const auto slash = path.find('/', start);
        const auto end = slash == std::string_view::npos ? path.size() : slash;
        if (end > start) parts.emplace_back(path.substr(start, end - start));
        start = end + 1;
    }
    return parts;
}

inline Response json_response(int status, const Json& body) { return Response{status, "application/json", body.dump()}; }

}  // namespace detail

/// Transport-independent API. Thread-safe: requests on different sessions
/// run in parallel, requests on one session are serialized by its lock, and
/// every frame a session emits is pushed while that lock is held.
class Api {
public:
    struct Options {
        std::optional<std::filesystem::path> data_dir;
        SessionMode default_mode = SessionMode::manual;
        ErrorWeights default_weights;
        Clock clock = system_clock_ms;
        std::size_t subscriber_queue = 1024;
    };

    explicit Api(Options options, ClientRegistry& prototypes)
        : options_(std::move(options)), prototypes_(prototypes), logs_(options_.data_dir ? LogStore(*options_.data_dir / "logs") : LogStore()) {
        load_repositories();
    }

    Response dispatch(const Request& req) {
        try {
            return route(req);
        } catch (const Error& e) {
            return error_response(http_status(e.code()), std::string(to_string(e.code())), e.what());
        } catch (const std::exception& e) {
            return error_response(500, "Internal", e.what());
        }
    }

    // -- operations (each also reachable through dispatch) ------------------

    Json add_repository(const std::string& name, std::string_view csv_bytes) {
        if (!detail::valid_id(name)) throw Error(ErrorCode::InvalidPayload, "repository name must match [A-Za-z0-9_.-]{1,64}");
        auto repo = std::make_shared<const ErrorRepository>(parse_repository(name, csv_bytes));
        if (options_.data_dir) {
            const auto dir = *options_.data_dir / "repositories";
            std::filesystem::create_directories(dir);
            std::ofstream out(dir / (name + ".csv"), std::ios::binary);
            out << repo->serialize();
            if (!out) throw Error(ErrorCode::StorageFailure, "cannot store repository '" + name + "'");
        }
        Json report{{"name", name}, {"entries", repo->size()}, {"ground_truths", repo->list_ground_truths()}};
        std::lock_guard lock(mutex_);
        repositories_[name] = std::move(repo);
        return report;
    }

    std::shared_ptr<const ErrorRepository> repository(const std::string& name) const {
        std::lock_guard lock(mutex_);
        auto it = repositories_.find(name);
        if (it == repositories_.end()) throw Error(ErrorCode::UnknownRepository, "no repository named '" + name + "'");
        return it->second;
    }

    SessionConfig config_from_json(const Json& body) {
        SessionConfig c;
        if (body.contains("session_id") && !body["session_id"].is_null()) {
            c.session_id = detail::require_string(body, "session_id");
        } else {
            c.session_id = generate_session_id();
        }
        if (!detail::valid_id(c.session_id)) throw Error(ErrorCode::InvalidPayload, "session_id must match [A-Za-z0-9_.-]{1,64}");
        c.repository_name = detail::require_string(body, "repository_name");
        c.target_accuracy = detail::require_number(body, "target_accuracy");
        c.mode = options_.default_mode;
        if (body.contains("mode") && !body["mode"].is_null()) {
            const auto mode = parse_mode(detail::require_string(body, "mode"));
            if (!mode) throw Error(ErrorCode::InvalidPayload, "mode must be manual, recommend or auto");
            c.mode = *mode;
        }
        if (body.contains("planned_trials") && !body["planned_trials"].is_null()) {
            const auto n = detail::require_integer(body, "planned_trials");
            if (n < 1) throw Error(ErrorCode::InvalidConfig, "planned_trials must be at least 1");
            c.planned_trials = static_cast<std::size_t>(n);
        }
        if (body.contains("rng_seed") && !body["rng_seed"].is_null()) {
            const auto& v = body["rng_seed"];
            if (!v.is_number_integer()) throw Error(ErrorCode::InvalidPayload, "'rng_seed' must be an integer");
            c.rng_seed = v.is_number_unsigned() ? v.get<std::uint64_t>() : static_cast<std::uint64_t>(v.get<std::int64_t>());
        }
        if (body.contains("expose_correctness_to_prototype") && !body["expose_correctness_to_prototype"].is_null()) {
            const auto& v = body["expose_correctness_to_prototype"];
            if (!v.is_boolean()) throw Error(ErrorCode::InvalidPayload, "'expose_correctness_to_prototype' must be a boolean");
            c.expose_correctness_to_prototype = v.get<bool>();
        }
        c.weights = options_.default_weights;
        if (body.contains("weights") && !body["weights"].is_null()) {
            const auto& w = body["weights"];
            if (!w.is_object()) throw Error(ErrorCode::InvalidPayload, "'weights' must be an object");
            for (auto kind : error_kinds) {
                const auto key = std::string(to_string(kind));
                if (!w.contains(key)) continue;
                const double v = detail::require_number(w, key.c_str());
                switch (kind) {
                    case PredictionKind::segmentation: c.weights.segmentation = v; break;
                    case PredictionKind::similarity: c.weights.similarity = v; break;
                    case PredictionKind::wild: c.weights.wild = v; break;
                    default: c.weights.no_recognition = v; break;
                }
            }
        }
        // Auto sessions always record their seed so the schedule can be replayed.
        if (c.mode == SessionMode::automatic && !c.rng_seed) c.rng_seed = std::random_device{}() * 0x100000000ULL + std::random_device{}();
        return c;
    }

    Json create_session(SessionConfig config) {
        auto repo = repository(config.repository_name);
        config.validate();
        auto slot = std::make_shared<Slot>();
        {
            std::lock_guard lock(mutex_);
            if (sessions_.count(config.session_id)) throw Error(ErrorCode::InvalidConfig, "session '" + config.session_id + "' already exists");
            slot->log = logs_.open(config.session_id);
            sessions_.emplace(config.session_id, slot);
        }
        std::lock_guard lock(slot->mutex);
        const bool expose = config.expose_correctness_to_prototype;
        SessionHooks hooks;
        hooks.on_action = [log = slot->log](const ActionRecord& r) { log->append(r); };
        hooks.on_prediction = [this, expose](const PredictionEvent& e) { broadcast(e, expose, prototypes_); };
        try {
            slot->session = std::make_unique<Session>(config, repo, options_.clock, hooks);
        } catch (...) {
            std::lock_guard g(mutex_);
            sessions_.erase(config.session_id);
            throw;
        }
        prototypes_.broadcast(wire::SessionStart{config.session_id, config.target_accuracy});
        return snapshot(*slot->session);
    }

    Json select_ground_truth(const std::string& id, const std::string& label) {
        return mutate(id, [&](Session& s) { s.select_ground_truth(label); return snapshot(s); });
    }

    Json set_confidence(const std::string& id, int value) {
        return mutate(id, [&](Session& s) { s.set_confidence(value); return snapshot(s); });
    }

    /// `kind` may be omitted in auto mode to send the scheduled kind.
    Json record_prediction(const std::string& id, std::optional<PredictionKind> kind) {
        return mutate(id, [&](Session& s) {
            const auto& e = kind ? s.record_prediction(*kind) : s.record_scheduled_prediction();
            return to_json(e);
        });
    }

    Json end_session(const std::string& id) {
        return mutate(id, [&](Session& s) {
            auto summary = s.end_session();
            prototypes_.broadcast(wire::SessionEnd{summary.session_id, summary.final_accuracy});
            return analysis::to_json(summary);
        });
    }

    Json session_snapshot(const std::string& id) {
        auto slot = find(id);
        std::lock_guard lock(slot->mutex);
        return snapshot(*slot->session);
    }

    std::string log_csv(const std::string& id) {
        find(id);
        return logs_.export_csv(id);
    }

    Json session_analysis(const std::string& id) {
        auto slot = find(id);
        std::vector<PredictionEvent> events;
        SessionSummary summary;
        std::vector<std::string> order;
        double target = 0.0;
        {
            std::lock_guard lock(slot->mutex);
            events = slot->session->events();
            summary = slot->session->summary();
            order = slot->session->repository().list_ground_truths();
            target = slot->session->config().target_accuracy;
        }
        Json regression = nullptr;
        Json regression_error = nullptr;
        try {
            regression = analysis::to_json(analysis::confidence_regression(events));
        } catch (const Error& e) {
            regression_error = e.what();
        }
        return Json{
            {"summary", analysis::to_json(summary)},
            {"distribution", analysis::to_json(analysis::per_label_distribution(events, order))},
            {"regression", std::move(regression)},
            {"regression_error", std::move(regression_error)},
            {"deviation_series", analysis::to_json(analysis::deviation_series(events, target))},
        };
    }

    /// Console push channel. The returned queue starts with a full snapshot
    /// and then receives one state frame per session change, in order.
    std::shared_ptr<QueuedConnection> subscribe(const std::string& id) {
        auto slot = find(id);
        auto conn = std::make_shared<QueuedConnection>(options_.subscriber_queue, "console " + id);
        std::lock_guard lock(slot->mutex);
        conn->send(state_frame(*slot->session));
        slot->subscribers.push_back(conn);
        return conn;
    }

    void unsubscribe(const std::string& id, const std::shared_ptr<QueuedConnection>& conn) {
        conn->close();
        std::shared_ptr<Slot> slot;
        try {
            slot = find(id);
        } catch (const Error&) {
            return;
        }
        std::lock_guard lock(slot->mutex);
        std::erase(slot->subscribers, conn);
    }

    std::vector<std::string> session_ids() const {
        std::lock_guard lock(mutex_);
        std::vector<std::string> ids;
        for (const auto& [id, slot] : sessions_) ids.push_back(id);
        return ids;
    }

    ClientRegistry& prototypes() noexcept { return prototypes_; }

private:
    struct Slot {
        std::mutex mutex;
        std::unique_ptr<Session> session;
        std::shared_ptr<ActionLog> log;
        std::vector<std::shared_ptr<QueuedConnection>> subscribers;
    };

    std::shared_ptr<Slot> find(const std::string& id) const {
        std::lock_guard lock(mutex_);
        auto it = sessions_.find(id);
        if (it == sessions_.end()) throw Error(ErrorCode::UnknownSession, "no session '" + id + "'");
        return it->second;
    }

    template <class F>
    Json mutate(const std::string& id, F&& f) {
        auto slot = find(id);
        std::lock_guard lock(slot->mutex);
        Json result = f(*slot->session);
        push_state(*slot);
        return result;
    }

    static void push_state(Slot& slot) {
        if (slot.subscribers.empty()) return;
        const auto frame = state_frame(*slot.session);
        std::erase_if(slot.subscribers, [&](const auto& conn) {
            if (conn->send(frame)) return false;
            conn->close();
            return true;
        });
    }

    std::string generate_session_id() {
        static constexpr char hex[] = "0123456789abcdef";
        std::random_device rd;
        std::string suffix;
        for (int i = 0; i < 6; ++i) suffix.push_back(hex[rd() % 16]);
        return "s" + std::to_string(++session_counter_) + "-" + suffix;
    }

    void load_repositories() {
        if (!options_.data_dir) return;
        const auto dir = *options_.data_dir / "repositories";
        std::error_code ec;
        if (!std::filesystem::is_directory(dir, ec)) return;
        for (const auto& file : std::filesystem::directory_iterator(dir)) {
            if (file.path().extension() != ".csv") continue;
            std::ifstream in(file.path(), std::ios::binary);
            std::stringstream buf;
            buf << in.rdbuf();
            const auto name = file.path().stem().string();
            repositories_[name] = std::make_shared<const ErrorRepository>(parse_repository(name, buf.str()));
        }
    }

    Response route(const Request& req) {
        using detail::json_response;
        const auto parts = detail::split_path(req.path);
        const auto& m = req.method;
        if (parts.empty()) return error_response(404, "NotFound", "no route for " + m + " " + req.path);

        if (parts[0] == "repositories") {
            if (parts.size() == 1 && m == "POST") {
                auto it = req.params.find("name");
                if (it == req.params.end()) throw Error(ErrorCode::InvalidPayload, "missing 'name' query parameter");
                return json_response(201, add_repository(it->second, req.body));
            }
            if (parts.size() == 1 && m == "GET") {
                Json names = Json::array();
                std::lock_guard lock(mutex_);
                for (const auto& [name, repo] : repositories_) names.push_back(name);
                return json_response(200, names);
            }
            if (parts.size() == 2 && m == "GET") return json_response(200, to_json(*repository(parts[1])));
        }

        if (parts[0] == "sessions") {
            if (parts.size() == 1 && m == "POST") return json_response(201, create_session(config_from_json(detail::parse_body(req.body))));
            if (parts.size() == 1 && m == "GET") return json_response(200, Json(session_ids()));
            if (parts.size() == 2 && m == "GET") return json_response(200, session_snapshot(parts[1]));
            if (parts.size() == 3) {
                const auto& id = parts[1];
                const auto& action = parts[2];
                if (m == "POST" && action == "ground-truth") {
                    return json_response(200, select_ground_truth(id, detail::require_string(detail::parse_body(req.body), "label")));
                }
                if (m == "POST" && action == "confidence") {
                    const auto value = detail::require_integer(detail::parse_body(req.body), "value");
                    if (value < 0 || value > 100) throw Error(ErrorCode::OutOfRange, "confidence " + std::to_string(value) + " is outside [0, 100]");
                    return json_response(200, set_confidence(id, static_cast<int>(value)));
                }
                if (m == "POST" && action == "prediction") {
                    const auto body = detail::parse_body(req.body);
                    std::optional<PredictionKind> kind;
                    if (body.contains("kind") && !body["kind"].is_null()) {
                        kind = parse_kind(detail::require_string(body, "kind"));
                        if (!kind) throw Error(ErrorCode::InvalidPayload, "unknown kind");
                    }
                    return json_response(200, record_prediction(id, kind));
                }
                if (m == "POST" && action == "end") return json_response(200, end_session(id));
                if (m == "GET" && action == "log.csv") return Response{200, "text/csv", log_csv(id)};
                if (m == "GET" && action == "analysis") return json_response(200, session_analysis(id));
            }
        }
        return error_response(404, "NotFound", "no route for " + m + " " + req.path);
    }

    static Response error_response(int status, const std::string& code, const std::string& message) {
        return detail::json_response(status, Json{{"error", code}, {"message", message}});
    }

    Options options_;
    ClientRegistry& prototypes_;
    LogStore logs_;
    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<const ErrorRepository>> repositories_;
    std::map<std::string, std::shared_ptr<Slot>> sessions_;
    std::atomic<std::uint64_t> session_counter_{0};
};

/// Binds the API to cpp-httplib. Besides the JSON routes this serves
///   GET  /sessions/{id}/events  console push channel (NDJSON stream)
///   GET  /prototype/stream      prototype frames over HTTP (NDJSON stream)
///   POST /prototype/ack?client=N  ack frame from an HTTP prototype client
class HttpServer {
public:
    explicit HttpServer(Api& api) : api_(api) {
        auto forward = [this](const httplib::Request& req, httplib::Response& res) {
            Request r{req.method, req.path, req.body, {}};
            for (const auto& [k, v] : req.params) r.params[k] = v;
            auto out = api_.dispatch(r);
            res.status = out.status;
            res.set_content(out.body, out.content_type);
        };
        server_.Get(R"(/sessions/([^/]+)/events)", [this](const httplib::Request& req, httplib::Response& res) {
            const std::string id = req.matches[1];
            std::shared_ptr<QueuedConnection> conn;
            try {
                conn = api_.subscribe(id);
            } catch (const Error& e) {
                res.status = http_status(e.code());
                res.set_content(Json{{"error", std::string(to_string(e.code()))}, {"message", e.what()}}.dump(), "application/json");
                return;
            }
            stream(res, conn, [this, id, conn] { api_.unsubscribe(id, conn); });
        });
        server_.Get("/prototype/stream", [this](const httplib::Request&, httplib::Response& res) {
            auto conn = std::make_shared<QueuedConnection>(1024, "http prototype");
            const auto client = api_.prototypes().add(conn);
            res.set_header("X-Woe-Client-Id", std::to_string(client));
            stream(res, conn, [this, client] { api_.prototypes().remove(client); });
        });
        server_.Post("/prototype/ack", [this](const httplib::Request& req, httplib::Response& res) {
            try {
                const auto msg = wire::decode(req.body);
                const auto* ack = std::get_if<wire::Ack>(&msg);
                if (!ack) throw Error(ErrorCode::UnknownType, "prototypes may only send ack frames");
                const auto client = req.has_param("client") ? std::stoull(req.get_param_value("client")) : 0;
                api_.prototypes().record_ack(client, ack->seq);
                res.status = 204;
            } catch (const std::exception& e) {
                res.status = 422;
                res.set_content(Json{{"error", "MalformedFrame"}, {"message", e.what()}}.dump(), "application/json");
            }
        });
        server_.Get(".*", forward);
        server_.Post(".*", forward);
    }

    /// Binds to host:port (port 0 picks a free port) and returns the port.
    int bind(const HostPort& addr) {
        if (addr.port == 0) return server_.bind_to_any_port(addr.host);
        if (!server_.bind_to_port(addr.host, addr.port)) {
            throw Error(ErrorCode::InvalidConfig, "cannot listen on " + addr.host + ":" + std::to_string(addr.port));
        }
        return addr.port;
    }

    /// Serves until stop(); blocks.
    bool listen() { return server_.listen_after_bind(); }
    void stop() {
        stopping_ = true;
        server_.stop();
    }
    void wait_until_ready() const { server_.wait_until_ready(); }

private:
    template <class OnClose>
    void stream(httplib::Response& res, std::shared_ptr<QueuedConnection> conn, OnClose on_close) {
        res.set_chunked_content_provider(
            "application/x-ndjson",
            [this, conn](std::size_t, httplib::DataSink& sink) {
                while (!stopping_) {
                    if (auto frame = conn->pop(std::chrono::milliseconds(100))) return sink.write(frame->data(), frame->size());
                    if (conn->closed()) {
                        sink.done();
                        return true;
                    }
                    if (!sink.is_writable()) return false;
                }
                sink.done();
                return true;
            },
            [on_close](bool) { on_close(); });
    }

    Api& api_;
    httplib::Server server_;
    std::atomic<bool> stopping_{false};
};

/// Whole service: API, HTTP server and the TCP prototype listener.
class Service {
public:
    explicit Service(const ServiceConfig& config, Clock clock = system_clock_ms)
        : api_(Api::Options{config.data_dir, config.default_mode, config.default_weights, std::move(clock), 1024}, registry_),
          http_(api_),
          prototype_(registry_, parse_host_port(config.prototype_bind)) {
        http_port_ = http_.bind(parse_host_port(config.http_bind));
    }

    int http_port() const noexcept { return http_port_; }
    std::uint16_t prototype_port() const noexcept { return prototype_.port(); }
    Api& api() noexcept { return api_; }

    /// Blocks until stop() is called from another thread or a signal handler.
    void run() { http_.listen(); }
    void wait_until_ready() const { http_.wait_until_ready(); }

    void stop() {
        http_.stop();
        prototype_.stop();
    }

private:
    ClientRegistry registry_;
    Api api_;
    HttpServer http_;
    TcpPrototypeServer prototype_;
    int http_port_ = 0;
};

}  // namespace woe::service
