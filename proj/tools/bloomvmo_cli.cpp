// bloomvmo: experiment runner and thin per-diagnostic subcommands.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "bloomvmo/errors.hpp"
#include "bloomvmo/experiment.hpp"
#include "bloomvmo/io.hpp"

namespace {

using nlohmann::json;

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<int> depth;
  std::optional<int> threads;
  std::string op;
  std::string symbol;
  std::string input;
  std::string weight;
  std::string family;
  std::string settings;
  bool quiet = false;
};

void add_flags(CLI::App* sub, Flags& f, bool full) {
  sub->add_option("--config", f.config, "Experiment config (JSON)");
  sub->add_option("--seed", f.seed, "RNG seed");
  sub->add_option("--out", f.out, "Output directory (default: $BLOOMVMO_OUT or ./bloomvmo-out)");
  sub->add_option("--depth", f.depth, "Grid depth L");
  sub->add_option("--threads", f.threads, "Worker threads");
  sub->add_flag("--quiet", f.quiet, "Print nothing on success");
  if (!full) return;
  sub->add_option("--op", f.op, "Operator name");
  sub->add_option("--symbol", f.symbol, "Symbol spec (JSON)");
  sub->add_option("--input", f.input, "Input function: grid file or JSON spec");
  sub->add_option("--weight", f.weight, "Weight spec (JSON)");
  sub->add_option("--family", f.family, "Sparse family file");
  sub->add_option("--settings", f.settings, "Diagnostic settings (JSON, merged)");
}

json parse_inline(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception&) {
    throw bloomvmo::PreconditionError(std::string(what) + " is not valid JSON");
  }
}

json build_config(const std::string& diagnostic, const Flags& f) {
  json j = f.config.empty() ? json::object() : bloomvmo::read_json(f.config);
  if (!diagnostic.empty()) j["diagnostic"] = diagnostic;
  if (f.seed) j["seed"] = *f.seed;
  if (f.depth) j["grid"]["L"] = *f.depth;
  if (f.threads) j["threads"] = *f.threads;
  if (!f.op.empty()) j["operator"] = f.op;
  if (!f.symbol.empty()) j["symbol"] = parse_inline(f.symbol, "--symbol");
  if (!f.input.empty()) {
    const bool spec = f.input.front() == '{';
    j["input"] = spec ? parse_inline(f.input, "--input") : json{{"path", f.input}};
  }
  if (!f.settings.empty()) {
    if (!j.contains("settings")) j["settings"] = json::object();
    j["settings"].merge_patch(parse_inline(f.settings, "--settings"));
  }
  if (!f.weight.empty()) j["settings"]["weight"] = parse_inline(f.weight, "--weight");
  if (!f.family.empty()) j["settings"]["family"] = f.family;
  return j;
}

int execute(const std::string& diagnostic, const Flags& f) {
  try {
    const bloomvmo::ExperimentConfig cfg = bloomvmo::ExperimentConfig::parse(build_config(diagnostic, f));
    const auto out = bloomvmo::resolve_output_dir(f.out, cfg.output_dir);
    const bloomvmo::RunOutcome r = bloomvmo::run_experiment(cfg, out);
    if (r.exit_code != bloomvmo::kExitOk) {
      std::cerr << "invariant violation: " << r.message << '\n';
    }
    if (!f.quiet || r.exit_code != bloomvmo::kExitOk) {
      std::cout << r.headline << '\n';
    }
    return r.exit_code;
  } catch (const std::exception& e) {
    return bloomvmo::exit_code_for(e, std::cerr);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bloom-weighted commutator diagnostics on dyadic grids"};
  app.require_subcommand(1);

  Flags flags;
  std::string chosen;

  CLI::App* run = app.add_subcommand("run", "Run the diagnostic named in --config");
  add_flags(run, flags, false);
  run->callback([&] { chosen = "run"; });
  run->get_option("--config")->required();

  for (const std::string& name : bloomvmo::diagnostic_names()) {
    CLI::App* sub = app.add_subcommand(name, "Run the " + name + " diagnostic");
    add_flags(sub, flags, true);
    sub->callback([&chosen, name] { chosen = name; });
  }

  CLI11_PARSE(app, argc, argv);
  return execute(chosen == "run" ? std::string{} : chosen, flags);
}
