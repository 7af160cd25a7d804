// Copyright 2026 The Epicontrol Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line front end: fit | validate | run | summarize | serve.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "epicontrol/epicontrol.hpp"
#include "epicontrol/service/server.hpp"

namespace fs = std::filesystem;
using namespace epicontrol;

namespace {

struct CommonOptions {
  std::string config;
  std::string preset = "desk";
  std::optional<std::uint64_t> seed;
  std::optional<std::string> planner;
  std::optional<double> kappa_soec;
  std::string out = "out";
};

RunConfig resolve(const CommonOptions& o) {
  RunConfig cfg = o.config.empty() ? preset(o.preset) : load_config(o.config);
  if (o.seed) {
    cfg.seed = *o.seed;
  }
  if (o.planner) {
    cfg.planner = parse_planner(*o.planner);
  }
  if (o.kappa_soec) {
    cfg.reward.kappa_soec = *o.kappa_soec;
  }
  cfg.validate();
  return cfg;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream out(path);
  out << j.dump(2) << '\n';
  if (!out) {
    throw Error{"failed to write " + path.string()};
  }
}

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "JSON run configuration (overlays its preset)");
  cmd->add_option("--preset", o.preset, "Built-in preset")->check(CLI::IsMember({"desk", "paper"}));
  cmd->add_option("--seed", o.seed, "Root seed");
  cmd->add_option("--planner", o.planner, "Planner")
      ->check(CLI::IsMember({"threshold", "qlearn", "random", "historical", "naive_q"}));
  cmd->add_option("--kappa-soec", o.kappa_soec, "Socio-economic cost weight")
      ->check(CLI::IsMember({0.2, 0.5, 0.8}));
  cmd->add_option("--out", o.out, "Output folder");
}

int cmd_fit(const CommonOptions& o) {
  const auto cfg = resolve(o);
  fs::create_directories(o.out);
  const auto generator = make_generator(cfg);
  write_json(fs::path{o.out} / "generator.json", generator);
  std::printf("wrote %zu worlds to %s\n", generator.worlds.size(), (fs::path{o.out} / "generator.json").c_str());
  return 0;
}

int cmd_validate(const CommonOptions& o, int paths) {
  const auto cfg = resolve(o);
  fs::create_directories(o.out);
  const auto generator = make_generator(cfg);
  std::vector<ActionLevel> actions = generator.warmup.actions;
  actions.insert(actions.end(), generator.historical_actions.begin(), generator.historical_actions.end());
  const auto bands = validation_replay(generator, generator.warmup.initial, actions, paths,
                                       RandomStream{cfg.seed}.derive(0x7a));
  std::ofstream csv(fs::path{o.out} / "validation_bands.csv");
  csv << "day,mean,q05,q95\n";
  for (std::size_t t = 0; t < bands.mean.size(); ++t) {
    csv << generator.warmup.initial.day + static_cast<int>(t) + 1 << ',' << bands.mean[t] << ',' << bands.q05[t]
        << ',' << bands.q95[t] << '\n';
  }
  write_json(fs::path{o.out} / "validation_bands.json",
             json{{"mean", bands.mean}, {"q05", bands.q05}, {"q95", bands.q95}});
  std::printf("replayed %d paths over %zu days\n", paths, bands.mean.size());
  return 0;
}

void write_outputs(const fs::path& out, const std::vector<DecisionTrace>& traces) {
  const auto rows = summarize(traces);
  std::ofstream csv(out / "metrics.csv");
  write_summary_csv(csv, rows);
  write_json(out / "metrics.json", rows);
}

int cmd_run(const CommonOptions& o) {
  const auto base = resolve(o);
  const fs::path out{o.out};
  fs::create_directories(out);
  std::vector<DecisionTrace> traces;
  for (int r = 0; r < base.replicates; ++r) {
    RunConfig cfg = base;
    cfg.seed = base.seed + static_cast<std::uint64_t>(r);
    const auto trace = run_decision_loop(cfg, make_generator(cfg));
    const auto stem = to_string(cfg.planner) + "_r" + std::to_string(r);
    std::ofstream csv(out / ("trace_" + stem + ".csv"));
    write_trace_csv(csv, trace);
    std::printf("replicate %d (seed %llu): total reward %.6g\n", r, static_cast<unsigned long long>(cfg.seed),
                trace.total_reward());
    traces.push_back(trace);
  }
  write_json(out / "traces.json", traces);
  json curves = json::array();
  for (const auto& t : traces) {
    curves.push_back(t.convergence);
  }
  write_json(out / "convergence.json", curves);
  write_outputs(out, traces);
  return 0;
}

int cmd_summarize(const std::vector<std::string>& inputs, const std::string& out) {
  std::vector<DecisionTrace> traces;
  for (const auto& path : inputs) {
    std::ifstream in(path);
    if (!in) {
      throw Error{"cannot open " + path};
    }
    const auto j = json::parse(in);
    for (const auto& t : j) {
      traces.push_back(t.get<DecisionTrace>());
    }
  }
  fs::create_directories(out);
  write_outputs(out, traces);
  std::ofstream csv(fs::path{out} / "metrics.csv", std::ios::in);
  std::cout << csv.rdbuf();
  return 0;
}

int cmd_serve(const std::string& addr, int port, const std::string& checkpoints) {
  SessionManager sessions{checkpoints.empty() ? std::nullopt : std::optional<fs::path>{checkpoints}};
  httplib::Server server;
  register_routes(server, sessions);
  std::printf("listening on %s:%d (%zu restored sessions)\n", addr.c_str(), port, sessions.size());
  std::fflush(stdout);
  return server.listen(addr, port) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Posterior-guided epidemic intervention planning"};
  app.require_subcommand(1);

  CommonOptions fit_opts;
  auto* fit = app.add_subcommand("fit", "Fit the counterfactual generator");
  add_common(fit, fit_opts);

  CommonOptions validate_opts;
  int paths = 200;
  auto* validate = app.add_subcommand("validate", "Replay historical actions through the generator");
  add_common(validate, validate_opts);
  validate->add_option("--paths", paths, "Replayed trajectories")->check(CLI::PositiveNumber);

  CommonOptions run_opts;
  auto* run = app.add_subcommand("run", "Run the decision loop for every replicate");
  add_common(run, run_opts);

  std::vector<std::string> inputs;
  std::string summary_out = "out";
  auto* summarize_cmd = app.add_subcommand("summarize", "Aggregate traces.json files into metrics");
  summarize_cmd->add_option("inputs", inputs, "traces.json files")->required()->check(CLI::ExistingFile);
  summarize_cmd->add_option("--out", summary_out, "Output folder");

  std::string addr = "127.0.0.1";
  int port = 8080;
  std::string checkpoints;
  auto* serve = app.add_subcommand("serve", "Serve interactive sessions over HTTP");
  serve->add_option("--addr", addr, "Bind address");
  serve->add_option("--port", port, "Bind port")->check(CLI::Range(0, 65535));
  serve->add_option("--checkpoints", checkpoints, "Folder for session checkpoints");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*fit) {
      return cmd_fit(fit_opts);
    }
    if (*validate) {
      return cmd_validate(validate_opts, paths);
    }
    if (*run) {
      return cmd_run(run_opts);
    }
    if (*summarize_cmd) {
      return cmd_summarize(inputs, summary_out);
    }
    if (*serve) {
      return cmd_serve(addr, port, checkpoints);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
