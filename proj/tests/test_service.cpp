#include <gtest/gtest.h>

#include <httplib.h>

#include <filesystem>
#include <thread>

#include "support.hpp"
#include "woe/service.hpp"

namespace {

using namespace std::chrono_literals;
using woe::service::Api;
using woe::service::Json;
using woe::service::Request;
using woe::service::Response;

class FakeClock {
public:
    woe::Clock clock() {
        return [this] { return now_ += 1000; };
    }

private:
    std::atomic<std::int64_t> now_{1'600'000'000'000};
};

class ApiTest : public ::testing::Test {
protected:
    ApiTest() : api_(Api::Options{std::nullopt, woe::SessionMode::manual, {}, clock_.clock(), 1024}, registry_) {
        api_.add_repository("kitchen", woe::test::kitchen_csv());
    }

    Response call(const std::string& method, const std::string& path, const std::string& body = "", std::map<std::string, std::string> params = {}) {
        return api_.dispatch(Request{method, path, body, std::move(params)});
    }

    Json json(const Response& r) { return Json::parse(r.body); }

    std::string create(const std::string& body) {
        const auto r = call("POST", "/sessions", body);
        EXPECT_EQ(r.status, 201) << r.body;
        return json(r)["session_id"].get<std::string>();
    }

    FakeClock clock_;
    woe::ClientRegistry registry_;
    Api api_;
};

}  // namespace

TEST_F(ApiTest, ErrorStatusMapping) {
    EXPECT_EQ(call("GET", "/sessions/none").status, 404);
    EXPECT_EQ(json(call("GET", "/sessions/none"))["error"], "UnknownSession");
    EXPECT_EQ(call("POST", "/sessions", R"({"repository_name":"nope","target_accuracy":50})").status, 404);
    EXPECT_EQ(call("GET", "/nowhere").status, 404);
    EXPECT_EQ(call("GET", "/").status, 404);

    const auto id = create(R"({"repository_name":"kitchen","target_accuracy":50})");
    auto r = call("POST", "/sessions/" + id + "/prediction", R"({"kind":"correct"})");
    EXPECT_EQ(r.status, 409);
    EXPECT_EQ(json(r)["error"], "NoGroundTruthSelected");
    EXPECT_EQ(call("POST", "/sessions/" + id + "/ground-truth", R"({"label":"quinoa"})").status, 422);
    EXPECT_EQ(call("POST", "/sessions/" + id + "/ground-truth", R"({"label":"oats"})").status, 200);
    EXPECT_EQ(call("POST", "/sessions/" + id + "/confidence", R"({"value":101})").status, 422);
    EXPECT_EQ(call("POST", "/sessions/" + id + "/confidence", R"({"value":"high"})").status, 422);
    EXPECT_EQ(call("POST", "/sessions/" + id + "/prediction", R"({"kind":"weird"})").status, 422);
    EXPECT_EQ(call("POST", "/sessions/" + id + "/prediction", "{not json").status, 422);
    EXPECT_EQ(call("POST", "/sessions/" + id + "/end").status, 200);
    EXPECT_EQ(call("POST", "/sessions/" + id + "/end").status, 409);
    EXPECT_EQ(call("POST", "/sessions", R"({"repository_name":"kitchen","target_accuracy":120})").status, 422);
    EXPECT_EQ(call("POST", "/sessions", R"({"repository_name":"kitchen","target_accuracy":50,"mode":"auto"})").status, 422);
    EXPECT_EQ(call("POST", "/repositories", "ID\n", {{"name", "bad"}}).status, 422);
}

TEST_F(ApiTest, Repositories) {
    EXPECT_EQ(json(call("GET", "/repositories")), Json::parse(R"(["kitchen"])"));
    const auto repo = json(call("GET", "/repositories/kitchen"));
    EXPECT_EQ(repo["entries"][1]["wild_error"], "maple syrup");
    EXPECT_TRUE(repo["entries"][0]["no_recognition_error"].is_null());
    EXPECT_EQ(call("GET", "/repositories/none").status, 404);
    EXPECT_EQ(call("POST", "/repositories", woe::test::kitchen_csv(), {{"name", "../evil"}}).status, 422);
}

TEST_F(ApiTest, ScriptedTwelveTrialSession) {
    const auto id = create(R"({"session_id":"p07","repository_name":"kitchen","target_accuracy":70})");
    EXPECT_EQ(id, "p07");
    const std::vector<std::string> kinds{"correct", "correct", "wild", "correct", "similarity", "correct",
                                         "correct", "segmentation", "correct", "correct", "no_recognition", "correct"};
    for (std::size_t i = 0; i < kinds.size(); ++i) {
        auto snap = json(call("POST", "/sessions/p07/ground-truth", i % 2 ? R"({"label":"flour"})" : R"({"label":"oats"})"));
        EXPECT_EQ(snap["options"]["segmentation"], i % 2 ? "salt" : "cinnamon");
        EXPECT_TRUE(snap["options"]["no_recognition"].is_null());
        call("POST", "/sessions/p07/confidence", R"({"value":)" + std::to_string(40 + i) + "}");
        const auto e = json(call("POST", "/sessions/p07/prediction", R"({"kind":")" + kinds[i] + "\"}"));
        EXPECT_EQ(e["trial_index"], i + 1);
    }
    const auto snap = json(call("GET", "/sessions/p07"));
    EXPECT_EQ(snap["accuracy"]["n_correct"], 8);
    EXPECT_NEAR(snap["accuracy"]["current"].get<double>(), 66.67, 0.005);
    const auto summary = json(call("POST", "/sessions/p07/end"));
    EXPECT_NEAR(summary["deviation"].get<double>(), 3.33, 0.005);

    const auto log = call("GET", "/sessions/p07/log.csv");
    EXPECT_EQ(log.content_type, "text/csv");
    EXPECT_NE(log.body.find(",66.67,70.00,manual\n"), std::string::npos);
    const auto records = woe::import_csv(log.body).records;
    EXPECT_EQ(records.front().action, woe::ActionType::session_started);
    EXPECT_EQ(records.back().action, woe::ActionType::session_ended);

    const auto analysis = json(call("GET", "/sessions/p07/analysis"));
    EXPECT_EQ(analysis["distribution"][0]["label"], "oats");
    EXPECT_EQ(analysis["regression"]["df"][1], 9);  // 11 events with a confidence
}

TEST_F(ApiTest, AutoModeAndRecommendMode) {
    const auto id = create(R"({"repository_name":"kitchen","target_accuracy":50,"mode":"auto","planned_trials":12,"rng_seed":7})");
    const auto expected = woe::plan_error_budget(12, 50, {}, 7).schedule;
    for (std::size_t i = 0; i < 12; ++i) {
        call("POST", "/sessions/" + id + "/ground-truth", R"({"label":"oats"})");
        const auto snap = json(call("GET", "/sessions/" + id));
        EXPECT_EQ(snap["scheduled_kind"], std::string(woe::to_string(expected[i])));
        const auto e = json(call("POST", "/sessions/" + id + "/prediction", "{}"));
        EXPECT_EQ(e["kind"], std::string(woe::to_string(expected[i])));
    }
    EXPECT_EQ(json(call("GET", "/sessions/" + id))["accuracy"]["current"], 50.0);

    const auto rid = create(R"({"repository_name":"kitchen","target_accuracy":50,"mode":"recommend"})");
    EXPECT_EQ(json(call("GET", "/sessions/" + rid))["recommendation"]["kind"], "correct");
    EXPECT_TRUE(json(call("GET", "/sessions/" + rid))["accuracy"]["current"].is_null());
}

TEST_F(ApiTest, PrototypesReceiveSessionFrames) {
    auto conn = std::make_shared<woe::QueuedConnection>();
    registry_.add(conn);
    const auto id = create(R"({"session_id":"h","repository_name":"kitchen","target_accuracy":50,"expose_correctness_to_prototype":false})");
    call("POST", "/sessions/h/ground-truth", R"({"label":"flour"})");
    call("POST", "/sessions/h/prediction", R"({"kind":"wild"})");
    call("POST", "/sessions/h/end");
    EXPECT_EQ(conn->pop(10ms), woe::wire::encode(woe::wire::SessionStart{"h", 50}));
    const auto p = std::get<woe::wire::Prediction>(woe::wire::decode(*conn->pop(10ms)));
    EXPECT_EQ(p.predicted_label, "maple syrup");
    EXPECT_FALSE(p.correct);
    EXPECT_FALSE(p.kind);
    EXPECT_EQ(conn->pop(10ms), woe::wire::encode(woe::wire::SessionEnd{"h", 0}));
}

TEST_F(ApiTest, PushChannelSnapshotThenOneFramePerChange) {
    const auto id = create(R"({"session_id":"c","repository_name":"kitchen","target_accuracy":50})");
    auto sub = api_.subscribe("c");
    auto first = Json::parse(*sub->pop(10ms));
    EXPECT_EQ(first["type"], "state");
    EXPECT_EQ(first["session"]["events"].size(), 0u);
    call("POST", "/sessions/c/ground-truth", R"({"label":"oats"})");
    call("POST", "/sessions/c/prediction", R"({"kind":"correct"})");
    EXPECT_EQ(Json::parse(*sub->pop(10ms))["session"]["pending_ground_truth"], "oats");
    const auto after = Json::parse(*sub->pop(10ms));
    EXPECT_EQ(after["session"]["events"].size(), 1u);
    EXPECT_EQ(after["session"]["accuracy"]["current"], 100.0);
    EXPECT_FALSE(sub->pop(10ms));
    api_.unsubscribe("c", sub);
    EXPECT_TRUE(sub->closed());
}

TEST_F(ApiTest, ConcurrentPredictionsKeepSeqOrderOnEveryChannel) {
    create(R"({"session_id":"m","repository_name":"kitchen","target_accuracy":50})");
    auto sub = api_.subscribe("m");
    auto proto = std::make_shared<woe::QueuedConnection>(4096);
    registry_.add(proto);
    std::vector<std::thread> wizards;
    for (int t = 0; t < 4; ++t) {
        wizards.emplace_back([&] {
            for (int i = 0; i < 50; ++i) {
                call("POST", "/sessions/m/ground-truth", R"({"label":"oats"})");
                call("POST", "/sessions/m/prediction", R"({"kind":"correct"})");
            }
        });
    }
    for (auto& w : wizards) w.join();
    const auto n = json(call("GET", "/sessions/m"))["events"].size();
    EXPECT_GT(n, 0u);

    std::uint64_t last = 0, seen = 0;
    while (auto frame = proto->pop(10ms)) {
        const auto p = std::get<woe::wire::Prediction>(woe::wire::decode(*frame));
        EXPECT_EQ(p.seq, last + 1);
        last = p.seq;
        ++seen;
    }
    EXPECT_EQ(seen, n);

    std::size_t previous = 0;
    sub->pop(10ms);  // snapshot
    while (auto frame = sub->pop(10ms)) {
        const auto events = Json::parse(*frame)["session"]["events"].size();
        EXPECT_GE(events, previous);
        previous = events;
    }
    EXPECT_EQ(previous, n);
}

TEST_F(ApiTest, LogEndpointMatchesExport) {
    create(R"({"session_id":"l","repository_name":"kitchen","target_accuracy":50})");
    call("POST", "/sessions/l/ground-truth", R"({"label":"oats"})");
    call("POST", "/sessions/l/prediction", R"({"kind":"no_recognition"})");
    EXPECT_EQ(call("GET", "/sessions/l/log.csv").body, api_.log_csv("l"));
}

TEST(ServiceConfig, EnvAndValidation) {
    ::setenv("WOE_HTTP_BIND", "127.0.0.1:7000", 1);
    ::setenv("WOE_DEFAULT_WEIGHTS", "1,2,3,0", 1);
    const auto c = woe::service::apply_env(woe::service::ServiceConfig{});
    ::unsetenv("WOE_HTTP_BIND");
    ::unsetenv("WOE_DEFAULT_WEIGHTS");
    EXPECT_EQ(c.http_bind, "127.0.0.1:7000");
    EXPECT_EQ(c.default_weights.wild, 3.0);
    EXPECT_EQ(c.default_weights.no_recognition, 0.0);
    EXPECT_THROW(woe::service::parse_weights("1,2,3"), woe::Error);
    EXPECT_THROW(woe::service::parse_weights("1,2,x,4"), woe::Error);
    woe::service::ServiceConfig clash;
    clash.http_bind = "127.0.0.1:9000";
    clash.prototype_bind = "127.0.0.1:9000";
    clash.data_dir.reset();
    EXPECT_THROW(clash.validate(), woe::Error);
}

TEST(HttpIntegration, EndToEnd) {
    const auto dir = std::filesystem::temp_directory_path() / ("woe-http-" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    woe::service::ServiceConfig config;
    config.http_bind = "127.0.0.1:0";
    config.prototype_bind = "127.0.0.1:0";
    config.data_dir = dir;
    {
        woe::service::Service service(config);
        std::thread runner([&] { service.run(); });
        service.wait_until_ready();

        httplib::Client client("127.0.0.1", service.http_port());
        auto res = client.Post("/repositories?name=kitchen", woe::test::kitchen_csv(), "text/csv");
        ASSERT_TRUE(res);
        EXPECT_EQ(res->status, 201);
        res = client.Post("/sessions", R"({"session_id":"e2e","repository_name":"kitchen","target_accuracy":50})", "application/json");
        ASSERT_TRUE(res);
        EXPECT_EQ(res->status, 201);

        // HTTP prototype stream in the background.
        std::string streamed;
        std::atomic<bool> got_prediction{false};
        std::thread proto([&] {
            httplib::Client c("127.0.0.1", service.http_port());
            c.Get("/prototype/stream", [&](const char* data, std::size_t len) {
                streamed.append(data, len);
                if (streamed.find("\"prediction\"") != std::string::npos) {
                    got_prediction = true;
                    return false;
                }
                return true;
            });
        });
        for (int i = 0; i < 200 && service.api().prototypes().size() == 0; ++i) std::this_thread::sleep_for(10ms);
        ASSERT_EQ(service.api().prototypes().size(), 1u);

        client.Post("/sessions/e2e/ground-truth", R"({"label":"oats"})", "application/json");
        res = client.Post("/sessions/e2e/prediction", R"({"kind":"segmentation"})", "application/json");
        ASSERT_TRUE(res);
        EXPECT_EQ(Json::parse(res->body)["predicted_label"], "cinnamon");
        proto.join();
        EXPECT_TRUE(got_prediction);
        EXPECT_NE(streamed.find("\"predicted_label\":\"cinnamon\""), std::string::npos);

        res = client.Post("/prototype/ack?client=1", "{\"type\":\"ack\",\"seq\":1}\n", "application/x-ndjson");
        ASSERT_TRUE(res);
        EXPECT_EQ(res->status, 204);
        res = client.Post("/prototype/ack", "{\"type\":\"ping\"}", "application/x-ndjson");
        EXPECT_EQ(res->status, 422);

        res = client.Get("/sessions/e2e/log.csv");
        ASSERT_TRUE(res);
        EXPECT_EQ(res->status, 200);
        std::ifstream in(dir / "logs" / "e2e.log.csv", std::ios::binary);
        std::stringstream disk;
        disk << in.rdbuf();
        EXPECT_EQ(res->body, disk.str());
        EXPECT_TRUE(std::filesystem::exists(dir / "repositories" / "kitchen.csv"));

        res = client.Get("/sessions/missing");
        EXPECT_EQ(res->status, 404);

        service.stop();
        runner.join();
    }
    {
        // Repositories persist across restarts.
        woe::ClientRegistry registry;
        Api api(Api::Options{dir, woe::SessionMode::manual, {}, woe::system_clock_ms, 16}, registry);
        EXPECT_EQ(api.dispatch(Request{"GET", "/repositories/kitchen", "", {}}).status, 200);
    }
    std::filesystem::remove_all(dir);
}
