// woe: run the Wizard-of-Oz service, validate repositories, analyze logs and
// simulate auto-mode sessions.
//
// Exit codes: 0 ok, 1 usage error, 2 validation failure.

#include <csignal>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <thread>

#include <pthread.h>

#include <CLI11.hpp>

#include "woe/analysis.hpp"
#include "woe/logstore.hpp"
#include "woe/repository.hpp"
#include "woe/service.hpp"
#include "woe/simulate.hpp"

namespace {

constexpr int exit_ok = 0;
constexpr int exit_usage = 1;
constexpr int exit_invalid = 2;

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw woe::Error(woe::ErrorCode::StorageFailure, "cannot read " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string stem(const std::string& path) {
    auto name = std::filesystem::path(path).stem().string();
    return name.empty() ? "repository" : name;
}

std::string fixed2(double v) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(2) << v;
    return out.str();
}

void print_text(const woe::analysis::Report& report, std::ostream& out) {
    using namespace woe;
    out << "sessions\n";
    for (const auto& s : report.sessions) {
        out << "  " << s.summary.session_id << " target=" << fixed2(s.summary.target_accuracy) << " trials=" << s.summary.n_trials
            << " correct=" << s.summary.n_correct << " final=" << fixed2(s.summary.final_accuracy)
            << " deviation=" << fixed2(s.summary.deviation) << "\n";
    }
    out << "accuracy by target\n";
    for (const auto& g : report.accuracy) {
        out << "  target=" << fixed2(g.target) << " n=" << g.n_sessions << " mean=" << fixed2(g.mean)
            << " sd=" << (g.sd ? fixed2(*g.sd) : std::string("n/a")) << "\n";
    }
    out << "distribution\n";
    out << "  label";
    for (auto kind : all_kinds) out << "," << to_string(kind);
    out << "\n";
    for (const auto& [label, counts] : report.distribution.rows) {
        out << "  " << label;
        for (auto kind : all_kinds) out << "," << counts[kind];
        out << "\n";
    }
    out << "regression (confidence ~ correct)\n";
    if (!report.regression) {
        out << "  unavailable: " << report.regression_error << "\n";
    } else {
        const auto& r = *report.regression;
        out << std::setprecision(6) << "  n=" << r.n << " slope=" << r.slope << " intercept=" << r.intercept << " r2=" << r.r_squared
            << " adj_r2=" << r.adjusted_r_squared << "\n";
        if (r.degenerate_y) {
            out << "  confidence has zero variance; F, t, p and beta undefined\n";
        } else {
            out << "  F(" << r.df.first << "," << r.df.second << ")=" << *r.f_stat << " t=" << *r.t_stat << " p=" << *r.p_value
                << " beta=" << *r.standardized_beta << "\n";
        }
    }
    for (const auto& w : report.warnings) out << "warning: " << w << "\n";
}

int run_serve(woe::service::ServiceConfig config) {
    config.validate();
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    woe::service::Service service(config);
    std::cerr << "woe: http on " << config.http_bind << " (port " << service.http_port() << "), prototypes on " << config.prototype_bind
              << " (port " << service.prototype_port() << ")\n";
    std::thread waiter([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        service.stop();
    });
    service.run();
    // run() also returns if the listener fails; make sure the waiter exits.
    pthread_kill(waiter.native_handle(), SIGTERM);
    waiter.join();
    return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Wizard-of-Oz ML error simulation service"};
    app.require_subcommand(1);

    woe::service::ServiceConfig serve_config;
    std::string weights_text;
    std::string mode_text;
    auto* serve = app.add_subcommand("serve", "Run the HTTP API and prototype listener");
    serve->add_option("--http", serve_config.http_bind, "HTTP bind address host:port");
    serve->add_option("--proto", serve_config.prototype_bind, "Prototype TCP bind address host:port");
    std::string data_dir;
    serve->add_option("--data", data_dir, "Data directory for logs and repositories");
    serve->add_option("--mode", mode_text, "Default session mode (manual, recommend, auto)");
    serve->add_option("--weights", weights_text, "Default error weights: seg,sim,wild,norec");

    std::string validate_path;
    auto* validate = app.add_subcommand("validate", "Validate an error repository CSV");
    validate->add_option("repo", validate_path, "Repository CSV")->required();

    std::string analyze_path;
    std::string analyze_repo;
    bool analyze_json = false;
    auto* analyze = app.add_subcommand("analyze", "Analyze an exported session log");
    analyze->add_option("log", analyze_path, "Log CSV")->required();
    analyze->add_flag("--json", analyze_json, "Emit JSON");
    analyze->add_option("--repo", analyze_repo, "Repository CSV fixing the label order");

    std::string sim_repo;
    std::string sim_out;
    std::string sim_weights;
    woe::SimulationOptions sim;
    bool sim_hide = false;
    auto* simulate = app.add_subcommand("simulate", "Run a headless auto-mode session and print its log");
    simulate->add_option("--repo", sim_repo, "Repository CSV")->required();
    simulate->add_option("--trials", sim.trials, "Number of trials")->required()->check(CLI::PositiveNumber);
    simulate->add_option("--target", sim.target_accuracy, "Target accuracy in percent")->required()->check(CLI::Range(0.0, 100.0));
    simulate->add_option("--seed", sim.seed, "Schedule seed")->required();
    simulate->add_option("--weights", sim_weights, "Error weights: seg,sim,wild,norec");
    simulate->add_option("--session-id", sim.session_id, "Session id (default sim-<seed>)");
    simulate->add_option("--out", sim_out, "Write the log here and print the summary instead");
    simulate->add_flag("--hide-correctness", sim_hide, "Do not expose correctness to prototypes");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? exit_ok : exit_usage;
    }

    try {
        if (*serve) {
            auto config = woe::service::apply_env(woe::service::ServiceConfig{});
            if (serve->count("--http")) config.http_bind = serve_config.http_bind;
            if (serve->count("--proto")) config.prototype_bind = serve_config.prototype_bind;
            if (!data_dir.empty()) config.data_dir = data_dir;
            if (!mode_text.empty()) {
                const auto mode = woe::parse_mode(mode_text);
                if (!mode) {
                    std::cerr << "error: unknown mode '" << mode_text << "'\n";
                    return exit_usage;
                }
                config.default_mode = *mode;
            }
            if (!weights_text.empty()) config.default_weights = woe::service::parse_weights(weights_text);
            return run_serve(config);
        }
        if (*validate) {
            const auto repo = woe::parse_repository(stem(validate_path), read_file(validate_path));
            std::cout << "ok: " << repo.name() << " has " << repo.size() << " entries\n";
            return exit_ok;
        }
        if (*analyze) {
            const auto imported = woe::import_csv(read_file(analyze_path));
            std::vector<std::string> order;
            if (!analyze_repo.empty()) order = woe::parse_repository(stem(analyze_repo), read_file(analyze_repo)).list_ground_truths();
            auto report = woe::analysis::analyze_log(imported.records, order);
            report.warnings.insert(report.warnings.begin(), imported.warnings.begin(), imported.warnings.end());
            if (analyze_json) {
                std::cout << woe::analysis::to_json(report).dump(2) << "\n";
            } else {
                print_text(report, std::cout);
            }
            return exit_ok;
        }
        if (*simulate) {
            if (!sim_weights.empty()) sim.weights = woe::service::parse_weights(sim_weights);
            sim.expose_correctness = !sim_hide;
            auto repo = std::make_shared<const woe::ErrorRepository>(woe::parse_repository(stem(sim_repo), read_file(sim_repo)));
            const auto result = woe::run_simulation(repo, sim);
            const auto log = woe::export_csv(result.log);
            if (sim_out.empty()) {
                std::cout << log;
            } else {
                std::ofstream out(sim_out, std::ios::binary);
                out << log;
                if (!out) throw woe::Error(woe::ErrorCode::StorageFailure, "cannot write " + sim_out);
                std::cout << woe::analysis::to_json(result.summary).dump() << "\n";
            }
            return exit_ok;
        }
    } catch (const woe::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code() == woe::ErrorCode::InvalidConfig ? exit_usage : exit_invalid;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_invalid;
    }
    return exit_usage;
}
