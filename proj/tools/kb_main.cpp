#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "kb/barriers.hpp"
#include "kb/scenario.hpp"

namespace {

unsigned workers_from_env() {
  if (const char* env = std::getenv("KB_WORKERS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<unsigned>(v);
  }
  return 0;  // hardware default
}

int fail_json(const std::string& kind, const std::string& what) {
  std::cout << "{\n  \"error\": \"" << kind << "\",\n  \"message\": "
            << nlohmann::json(what).dump() << "\n}\n";
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"kb - phase-space Boltzmann solver and verification suite"};
  app.set_version_flag("--version", kb::kVersion);
  app.require_subcommand(1);

  unsigned workers = 0;
  app.add_option("--workers", workers,
                 "worker threads (default: KB_WORKERS or all hardware)");

  std::string cfg_path;
  auto* run = app.add_subcommand("run", "execute a scenario configuration");
  run->add_option("config", cfg_path, "configuration file")->required();

  bool as_json = false;
  std::string fault;
  auto* verify =
      app.add_subcommand("verify", "closed-form and geometry checks");
  verify->add_flag("--json", as_json, "emit one JSON document");
  verify->add_option("--inject-fault", fault)->group("");  // test harness

  unsigned bench_workers = 0;
  auto* bench = app.add_subcommand("bench", "time the gain quadrature");
  bench->add_option("config", cfg_path, "configuration file")->required();
  bench->add_option("--max-workers", bench_workers,
                    "largest worker count to time");

  CLI11_PARSE(app, argc, argv);
  if (workers == 0) workers = workers_from_env();

  try {
    if (run->parsed()) {
      const kb::ScenarioConfig cfg = kb::load_config(cfg_path);
      const kb::RunResult result = kb::run_scenario(cfg, workers);
      std::cout << result.summary_json << "\n";
      return result.pass ? 0 : 1;
    }
    if (verify->parsed()) {
      const kb::VerifyReport rep = kb::verify_suite(fault);
      std::cout << (as_json ? rep.to_json() + "\n" : rep.to_text());
      return rep.pass ? 0 : 1;
    }
    if (bench->parsed()) {
      const kb::ScenarioConfig cfg = kb::load_config(cfg_path);
      const kb::BenchReport rep = kb::bench_scenario(
          cfg, bench_workers == 0 ? workers : bench_workers);
      std::cout << rep.to_json() << "\n";
      return 0;
    }
  } catch (const kb::ConfigError& e) {
    std::cout << e.to_json() << "\n";
    return 2;
  } catch (const kb::SmallnessError& e) {
    return fail_json("smallness violated", e.what());
  } catch (const kb::BlowupError& e) {
    return fail_json("barrier blow-up", e.what());
  } catch (const std::exception& e) {
    return fail_json("failure", e.what());
  }
  return 0;
}
