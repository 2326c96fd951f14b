// Copyright 2026 The Aimon Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "aimon/errors.hpp"
#include "aimon/pipeline.hpp"

namespace {

namespace fs = std::filesystem;
using namespace aimon;

// Exit codes: 0 success, 1 config error, 2 malformed input, 3 internal error.
constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitMalformed = 2;
constexpr int kExitInternal = 3;

struct CommonOpts {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string level;
    std::string out_dir;
};

RunConfig load_config(const CommonOpts& opts) {
    RunConfig config;
    if (!opts.config_path.empty()) config = load_run_config_file(opts.config_path);
    if (opts.seed) config.seed = *opts.seed;
    if (!opts.level.empty()) {
        const auto level = parse_monitoring_level(opts.level);
        if (!level)
            throw ConfigError(opts.config_path.empty() ? "--level" : opts.config_path,
                              "level must be metadata|derived|full");
        config.level = *level;
    }
    return config;
}

void write_file(const fs::path& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError(path.string(), "cannot write file");
    out << bytes;
}

int cmd_simulate(const std::string& scenario, const std::string& scenario_file,
                 std::uint64_t seed, const std::string& prefix,
                 const std::vector<std::string>& param_overrides,
                 const std::string& out_dir) {
    ScenarioSpec spec;
    if (!scenario_file.empty()) {
        spec = load_scenario_file(scenario_file);
    } else {
        const auto id = parse_scenario(scenario);
        if (!id) {
            std::cerr << "unknown scenario '" << scenario << "'; known:";
            for (const auto& info : scenario_catalog()) std::cerr << ' ' << info.name;
            std::cerr << '\n';
            return kExitConfig;
        }
        spec.scenario = *id;
    }
    spec.seed = seed;
    if (!prefix.empty()) spec.tenant_prefix = prefix;
    for (const auto& kv : param_overrides) {
        const auto eq = kv.find('=');
        std::size_t used = 0;
        double value = 0.0;
        if (eq != std::string::npos) {
            try {
                value = std::stod(kv.substr(eq + 1), &used);
            } catch (const std::exception&) {
                used = 0;
            }
        }
        if (eq == std::string::npos || used != kv.size() - eq - 1) {
            std::cerr << "--param expects name=value, got '" << kv << "'\n";
            return kExitConfig;
        }
        spec.params[kv.substr(0, eq)] = value;
    }

    const Workload workload = generate_workload(spec);
    fs::create_directories(out_dir);
    std::ostringstream txns;
    write_txn_log(txns, workload.transactions);
    write_file(fs::path(out_dir) / "txns.log", txns.str());
    std::ostringstream labels;
    write_label_log(labels, workload.labels);
    write_file(fs::path(out_dir) / "labels.tsv", labels.str());
    std::cout << "scenario " << scenario_name(spec.scenario) << ": "
              << workload.transactions.size() << " transactions, "
              << workload.labels.size() << " labeled tenants -> " << out_dir << '\n';
    return kExitOk;
}

int cmd_run(const CommonOpts& opts) {
    const RunConfig config = load_config(opts);
    const PipelineResult result = run_pipeline(config, opts.out_dir);
    print_alert_summary(std::cout, result.alerts);
    std::cout << "transactions: " << result.report.transactions
              << " (denied " << result.report.denied << ", truncated "
              << result.report.truncated << ")\n"
              << "billable units: " << result.report.total_billable_units << '\n'
              << "artifacts: " << opts.out_dir << '\n';
    return kExitOk;
}

int cmd_replay(const std::string& log_path, const CommonOpts& opts) {
    const RunConfig config = load_config(opts);
    const PipelineResult result = replay(log_path, config, opts.out_dir);
    print_alert_summary(std::cout, result.alerts);
    std::cout << "replayed " << result.report.transactions << " transactions from "
              << log_path << " -> " << opts.out_dir << '\n';
    return kExitOk;
}

int cmd_bench(const CommonOpts& opts, const std::string& mode) {
    RunConfig config = load_config(opts);
    if (config.scenarios.empty()) {
        // Default bench workload: one benign population, dense enough to time.
        ScenarioSpec spec;
        spec.scenario = ScenarioId::BenignBaseline;
        spec.seed = config.seed;
        spec.params["tenant_count"] = 50;
        spec.params["base_rate_per_min"] = 40;
        spec.params["duration_s"] = 3600;
        config.scenarios.push_back(std::move(spec));
    }
    const RunReport report = bench(config, opts.out_dir);
    for (const auto& bench_mode : report.bench_modes) {
        if (!mode.empty() && mode != bench_mode.mode) continue;
        std::cout << bench_mode.mode << ": " << bench_mode.transactions << " txns in "
                  << bench_mode.seconds << " s = " << bench_mode.txns_per_s
                  << " txn/s (x" << bench_mode.ratio_vs_gateway << " of gateway-only)\n";
    }
    std::cout << "peak audit state: " << report.peak_audit_state_bytes << " bytes\n";
    return kExitOk;
}

int cmd_validate(const std::string& config_path) {
    const RunConfig config = load_run_config_file(config_path);
    std::cout << "ok: " << config.scenarios.size() << " scenario(s), "
              << config.rules.size() << " rule(s), level "
              << monitoring_level_name(config.level) << '\n';
    return kExitOk;
}

int cmd_catalog() {
    for (const auto& info : scenario_catalog()) {
        std::cout << info.name << ": " << info.description << '\n';
        for (const auto& [param, value] : info.default_params)
            std::cout << "    " << param << " = " << value << '\n';
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"AIaaS transaction stream misuse monitor"};
    app.require_subcommand(1);

    CommonOpts opts;

    auto* simulate = app.add_subcommand("simulate", "generate a labeled synthetic workload");
    std::string scenario, scenario_file, prefix;
    std::uint64_t sim_seed = 0;
    std::vector<std::string> params;
    std::string sim_out = "out";
    simulate->add_option("--scenario", scenario, "scenario name");
    simulate->add_option("--config", scenario_file, "scenario config file (json)");
    simulate->add_option("--seed", sim_seed, "workload seed");
    simulate->add_option("--tenant-prefix", prefix, "tenant id prefix");
    simulate->add_option("--param", params, "override a scenario param, name=value");
    simulate->add_option("--out", sim_out, "output directory");

    auto* run = app.add_subcommand("run", "simulate, meter, audit and detect");
    run->add_option("--config", opts.config_path, "run config file (json)");
    std::uint64_t run_seed = 0;
    auto* run_seed_opt = run->add_option("--seed", run_seed, "override config seed");
    run->add_option("--level", opts.level, "monitoring level: metadata|derived|full");
    run->add_option("--out", opts.out_dir, "output directory")->required();

    auto* replay_cmd = app.add_subcommand("replay", "re-run detection from a transaction log");
    std::string log_path;
    replay_cmd->add_option("--log", log_path, "transaction log path")->required();
    replay_cmd->add_option("--config", opts.config_path, "run config file (json)");
    auto* replay_seed_opt = replay_cmd->add_option("--seed", run_seed, "override config seed");
    replay_cmd->add_option("--level", opts.level, "monitoring level");
    replay_cmd->add_option("--out", opts.out_dir, "output directory")->required();

    auto* bench_cmd = app.add_subcommand("bench", "measure monitoring overhead");
    bench_cmd->add_option("--config", opts.config_path, "run config file (json)");
    auto* bench_seed_opt = bench_cmd->add_option("--seed", run_seed, "override config seed");
    std::string bench_mode;
    bench_cmd->add_option("--mode", bench_mode, "limit output to gateway|audit|detect");
    bench_cmd->add_option("--out", opts.out_dir, "output directory");

    auto* validate = app.add_subcommand("validate-config", "parse and check a run config");
    std::string validate_path;
    validate->add_option("--config", validate_path, "run config file (json)")->required();

    app.add_subcommand("scenarios", "list the scenario catalog with default params");

    CLI11_PARSE(app, argc, argv);

    try {
        if (simulate->parsed())
            return cmd_simulate(scenario, scenario_file, sim_seed, prefix, params, sim_out);
        if (run->parsed()) {
            if (run_seed_opt->count() > 0) opts.seed = run_seed;
            return cmd_run(opts);
        }
        if (replay_cmd->parsed()) {
            if (replay_seed_opt->count() > 0) opts.seed = run_seed;
            return cmd_replay(log_path, opts);
        }
        if (bench_cmd->parsed()) {
            if (bench_seed_opt->count() > 0) opts.seed = run_seed;
            return cmd_bench(opts, bench_mode);
        }
        if (validate->parsed()) return cmd_validate(validate_path);
        return cmd_catalog();
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const MalformedRecord& e) {
        std::cerr << "malformed input: " << e.what() << '\n';
        return kExitMalformed;
    } catch (const InvariantViolation& e) {
        std::cerr << "malformed input: " << e.what() << '\n';
        return kExitMalformed;
    } catch (const UnorderedInput& e) {
        std::cerr << "malformed input: " << e.what() << '\n';
        return kExitMalformed;
    } catch (const InvalidScenarioParams& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitInternal;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kExitInternal;
    }
}
