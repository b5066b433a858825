// Command-line front end: `bfi run <config>` and `bfi validate <config>`.
//
// Exit status: 0 success, 1 floor violation or failed validation, 2 malformed
// config, 3 numerical failure.

#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "bfi/cli/config.hpp"
#include "bfi/cli/runner.hpp"

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> samples;
  std::optional<std::string> out_dir;
};

bfi::cli::AnalysisConfig load(const std::string& path, const Overrides& o) {
  auto c = bfi::cli::load_config(path);
  if (o.seed) bfi::cli::override_seed(c, *o.seed);
  if (o.samples) bfi::cli::override_samples(c, *o.samples);
  if (o.out_dir) bfi::cli::override_out_dir(c, *o.out_dir);
  return c;
}

template <class F>
int guarded(const std::string& stage, F&& f) {
  try {
    return f();
  } catch (const bfi::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const bfi::AlphaBelowFloor& e) {
    std::cerr << "floor violation: " << e.what() << "\n";
    return 1;
  } catch (const bfi::cli::ValidationFailed& e) {
    std::cerr << "validation failed: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure in " << stage << ": " << e.what() << "\n";
    return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bispatial-fiducial inference engine"};
  app.require_subcommand(1);
  Overrides ov;
  bool record_timings = false;
  std::string config_path;

  auto add_overrides = [&](CLI::App* sub) {
    sub->add_option("config", config_path, "analysis config (JSON)")->required();
    sub->add_option_function<std::uint64_t>("--seed", [&](std::uint64_t v) { ov.seed = v; }, "override sampler seed");
    sub->add_option_function<std::size_t>("--samples", [&](std::size_t v) { ov.samples = v; }, "override sample count");
    sub->add_option_function<std::string>("--out-dir", [&](const std::string& v) { ov.out_dir = v; },
                                          "override output directory");
  };

  CLI::App* run = app.add_subcommand("run", "execute the configured tasks");
  add_overrides(run);
  run->add_flag("--record-timings", record_timings, "write per-task wall times into the manifest");
  CLI::App* validate = app.add_subcommand("validate", "check a config without running it");
  add_overrides(validate);

  CLI11_PARSE(app, argc, argv);

  if (*run) {
    return guarded("run", [&] {
      const auto c = load(config_path, ov);
      const auto res = bfi::cli::run(c, {record_timings});
      for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
      std::cout << "wrote " << res.outputs.size() << " files to " << c.output.dir << "\n";
      return 0;
    });
  }
  return guarded("validate", [&] {
    const auto c = load(config_path, ov);
    const auto rep = bfi::cli::validate_config(c);
    for (const auto& f : rep.failures) std::cerr << "fail: " << f << "\n";
    if (!rep.ok()) return 1;
    std::cout << "ok (" << rep.checks.size() << " checks)\n";
    return 0;
  });
}
