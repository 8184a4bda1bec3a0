// cie: command-line front end for the engine.

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>

#include <nlohmann/json.hpp>

#include "cie/causality.hpp"
#include "cie/engine.hpp"
#include "cie/environment.hpp"
#include "cie/error.hpp"
#include "cie/knowledge_base.hpp"
#include "cie/query_service.hpp"
#include "cie/scenario_harness.hpp"

namespace {

using nlohmann::json;

std::atomic<bool> g_stop{false};

void on_signal(int) { g_stop.store(true); }

void install_signal_handlers() {
    struct sigaction action {};
    action.sa_handler = on_signal;
    sigemptyset(&action.sa_mask);
    action.sa_flags = 0;  // no SA_RESTART: a blocked read returns so the loop can exit
    sigaction(SIGINT, &action, nullptr);
    sigaction(SIGTERM, &action, nullptr);
}

struct Inputs {
    std::string env;
    std::string codebook;
    std::string scenario;
    std::string observations;
    std::uint64_t seed = 0;
    bool seed_given = false;
};

void add_inputs(CLI::App* cmd, Inputs& in) {
    cmd->add_option("--env", in.env, "environment file (env/1)");
    cmd->add_option("--codebook", in.codebook, "codebook file (codebook/1)");
    cmd->add_option("--scenario", in.scenario, "scenario file; supplies env, codebook and observations");
    cmd->add_option("--observations", in.observations, "observation stream (one JSON object per line)");
    cmd->add_option("--seed", in.seed, "observation seed when --scenario is given")->each([&](const std::string&) {
        in.seed_given = true;
    });
}

// Builds an engine from either a scenario or explicit files.
std::unique_ptr<cie::Engine> build_engine(const Inputs& in) {
    std::shared_ptr<const cie::Codebook> codebook;
    cie::Environment environment;
    std::vector<cie::Observation> observations;
    if (!in.scenario.empty()) {
        const cie::Scenario scenario = cie::read_scenario(in.scenario);
        auto files = cie::load_scenario_files(scenario);
        codebook = files.codebook;
        environment = std::move(files.environment);
        auto graph = cie::instantiate(environment.topology, codebook);
        observations = cie::scenario_observations(scenario, environment, graph,
                                                  in.seed_given ? in.seed : scenario.seed);
    } else {
        if (in.env.empty() || in.codebook.empty()) {
            throw CLI::ValidationError("inputs", "give --scenario, or both --env and --codebook");
        }
        codebook = std::make_shared<const cie::Codebook>(cie::load_codebook(cie::read_file(in.codebook)));
        environment = cie::load_environment(cie::read_file(in.env), *codebook);
    }
    if (!in.observations.empty()) {
        auto extra = cie::parse_observation_stream(cie::read_file(in.observations));
        observations.insert(observations.end(), extra.begin(), extra.end());
    }
    auto engine = std::make_unique<cie::Engine>(std::move(environment), std::move(codebook));
    if (!observations.empty()) engine->ingest(observations);
    return engine;
}

void print_table(const json& value, const std::string& indent = "") {
    if (value.is_object()) {
        for (const auto& [key, item] : value.items()) {
            if (item.is_structured() && !item.empty()) {
                std::cout << indent << key << ":\n";
                print_table(item, indent + "  ");
            } else {
                std::cout << indent << key << ": " << item.dump() << '\n';
            }
        }
    } else if (value.is_array()) {
        for (const auto& item : value) {
            if (item.is_structured()) {
                std::cout << indent << "-\n";
                print_table(item, indent + "  ");
            } else {
                std::cout << indent << "- " << (item.is_string() ? item.get<std::string>() : item.dump()) << '\n';
            }
        }
    } else {
        std::cout << indent << value.dump() << '\n';
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Causal intelligence engine"};
    app.require_subcommand(1);
    std::string format = "json";
    app.add_option("--format", format, "output format")->check(CLI::IsMember({"json", "table"}));

    Inputs serve_in;
    std::size_t workers = 1;
    auto* serve = app.add_subcommand("serve", "answer tool requests on stdin, one JSON object per line");
    add_inputs(serve, serve_in);
    serve->add_option("--workers", workers, "concurrent request handlers")->check(CLI::PositiveNumber);

    auto* scenario_cmd = app.add_subcommand("scenario", "fault-injection scenarios");
    scenario_cmd->require_subcommand(1);
    std::string scenario_path;
    std::string metrics_path;
    std::string engine_codebook;
    std::uint64_t run_seed = 0;
    bool run_seed_given = false;
    auto* run = scenario_cmd->add_subcommand("run", "replay a scenario and score it against the rubric");
    run->add_option("--scenario", scenario_path, "scenario file")->required();
    run->add_option("--seed", run_seed, "observation seed (defaults to the scenario's)")
        ->each([&](const std::string&) { run_seed_given = true; });
    run->add_option("--metrics", metrics_path, "append per-query metrics lines to this file");
    run->add_option("--engine-codebook", engine_codebook,
                    "answer with this codebook instead of the scenario's (observations still come from the scenario)");
    auto* observe = scenario_cmd->add_subcommand("observations", "print a scenario's observation stream");
    observe->add_option("--scenario", scenario_path, "scenario file")->required();
    observe->add_option("--seed", run_seed, "observation seed")->each([&](const std::string&) {
        run_seed_given = true;
    });

    Inputs query_in;
    std::string method;
    std::string params = "{}";
    auto* query = app.add_subcommand("query", "answer a single tool request");
    add_inputs(query, query_in);
    query->add_option("--method", method, "tool method")->required();
    query->add_option("--params", params, "JSON object of method parameters");

    Inputs graph_in;
    std::string what = "all";
    auto* graph = app.add_subcommand("graph", "inspect the engine's graphs");
    graph->require_subcommand(1);
    auto* dump = graph->add_subcommand("dump", "print topology, causality and attribute graphs");
    add_inputs(dump, graph_in);
    dump->add_option("--what", what, "which graph")->check(CLI::IsMember({"all", "topology", "causality", "attributes"}));

    CLI11_PARSE(app, argc, argv);

    try {
        if (serve->parsed()) {
            install_signal_handlers();
            auto engine = build_engine(serve_in);
            cie::QueryService service(*engine);
            std::ios::sync_with_stdio(false);
            service.serve(std::cin, std::cout, workers, &g_stop);
            return 0;
        }

        if (run->parsed() || observe->parsed()) {
            const cie::Scenario scenario = cie::read_scenario(scenario_path);
            const std::uint64_t seed = run_seed_given ? run_seed : scenario.seed;
            auto files = cie::load_scenario_files(scenario);
            auto truth = cie::instantiate(files.environment.topology, files.codebook);
            const auto observations = cie::scenario_observations(scenario, files.environment, truth, seed);
            if (observe->parsed()) {
                std::cout << cie::format_observation_stream(observations);
                return 0;
            }
            auto codebook = files.codebook;
            if (!engine_codebook.empty()) {
                codebook = std::make_shared<const cie::Codebook>(cie::load_codebook(cie::read_file(engine_codebook)));
            }
            cie::Engine engine(std::move(files.environment), codebook);
            cie::RubricResult result = cie::run_scenario(scenario, engine, observations);
            result.seed = seed;
            if (!metrics_path.empty()) {
                std::ofstream out(metrics_path, std::ios::app);
                if (!out) throw cie::Error(cie::ErrorCode::invalid_argument, "cannot write '" + metrics_path + "'");
                for (const auto& record : cie::measure_footprint(scenario, result)) {
                    out << cie::format_metrics(record) << '\n';
                }
            }
            if (format == "table") {
                std::cout << cie::rubric_table(result);
            } else {
                std::cout << cie::rubric_report(result).dump(2) << '\n';
            }
            return result.all_passed() ? 0 : 1;
        }

        if (query->parsed()) {
            auto engine = build_engine(query_in);
            cie::QueryService service(*engine);
            json request = {{"id", 1}, {"method", method}};
            try {
                request["params"] = json::parse(params);
            } catch (const json::parse_error& e) {
                throw CLI::ValidationError("--params", e.what());
            }
            const json response = service.handle(request);
            if (format == "table") {
                print_table(response);
            } else {
                std::cout << response.dump(2) << '\n';
            }
            return response["status"] == "ok" ? 0 : 1;
        }

        if (dump->parsed()) {
            auto engine = build_engine(graph_in);
            auto snapshot = engine->snapshot();
            json out = json::object();
            cie::Environment env{snapshot->topology, snapshot->attributes, snapshot->constraints};
            json environment = cie::environment_to_json(env);
            if (what == "all" || what == "topology") {
                out["topology"] = {{"entities", environment["entities"]}, {"relations", environment["relations"]}};
            }
            if (what == "all" || what == "causality") out["causality"] = cie::dump_causality(snapshot->causality);
            if (what == "all" || what == "attributes") {
                out["attributes"] = {{"nodes", environment["attributes"]},
                                     {"dependencies", environment["attribute_dependencies"]},
                                     {"constraints", environment["constraints"]}};
            }
            if (format == "table") {
                print_table(out);
            } else {
                std::cout << out.dump(2) << '\n';
            }
            return 0;
        }
    } catch (const CLI::Error& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "cie: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
