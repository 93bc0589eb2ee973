// Command-line front end; talks to the library only through mgdfis.h.
#include <cstdio>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mgdfis.h"

namespace {

struct Options {
  std::string config;
  std::optional<std::string> stage;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::vector<std::uint64_t> tokens{1024, 4096, 16384};
  std::uint32_t seeds = 20;
};

int fail(mgdfis_status s) {
  std::fprintf(stderr, "mgdfis: %s\n", mgdfis_last_error());
  return static_cast<int>(s);
}

struct ConfigHandle {
  mgdfis_config* cfg = nullptr;
  ~ConfigHandle() { mgdfis_config_destroy(cfg); }
};

struct ReportHandle {
  mgdfis_report* report = nullptr;
  ~ReportHandle() { mgdfis_report_destroy(report); }
};

mgdfis_status load(const Options& o, ConfigHandle& h) {
  mgdfis_status s = mgdfis_config_load(o.config.empty() ? nullptr : o.config.c_str(), &h.cfg);
  if (s != MGDFIS_OK) return s;
  if (o.stage && (s = mgdfis_config_set(h.cfg, "stage", o.stage->c_str())) != MGDFIS_OK) return s;
  if (o.seed) {
    const std::string v = std::to_string(*o.seed);
    if ((s = mgdfis_config_set(h.cfg, "seed", v.c_str())) != MGDFIS_OK) return s;
  }
  if (o.out && (s = mgdfis_config_set(h.cfg, "out", o.out->c_str())) != MGDFIS_OK) return s;
  return MGDFIS_OK;
}

int print_report(mgdfis_status s, const ReportHandle& r) {
  if (s != MGDFIS_OK) return fail(s);
  std::fputs(mgdfis_report_text(r.report), stdout);
  return mgdfis_report_passed(r.report) ? 0 : MGDFIS_ERR_CONTRACT;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"MGDFIS feature-fusion kernels"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "key = value run configuration")->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "override the config seed");
  };

  auto* run = app.add_subcommand("run", "execute a pipeline stage and write output.mgdt + summary.txt");
  common(run);
  run->add_option("--stage", o.stage, "ftssa|gmm|dmm|gdim|dpam|full");
  run->add_option("--out", o.out, "output directory");

  auto* bench = app.add_subcommand("bench-tssa", "time TSSA against quadratic attention");
  common(bench);
  bench->add_option("--tokens", o.tokens, "token counts")->delimiter(',');

  auto* flops = app.add_subcommand("flops", "analytic FLOP report for the full pipeline");
  common(flops);

  auto* grad = app.add_subcommand("gradcheck", "finite-difference check of every backward pass");
  common(grad);
  grad->add_option("--seeds", o.seeds, "seeds per op")->check(CLI::PositiveNumber);

  auto* dump = app.add_subcommand("dump-params", "write initialized parameters as MGDT files");
  common(dump);
  dump->add_option("--out", o.out, "destination directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return MGDFIS_ERR_USAGE;
  }

  ConfigHandle cfg;
  if (mgdfis_status s = load(o, cfg); s != MGDFIS_OK) return fail(s);

  ReportHandle report;
  if (*run) return print_report(mgdfis_run(cfg.cfg, &report.report), report);
  if (*bench) {
    return print_report(
        mgdfis_bench_tssa(cfg.cfg, o.tokens.data(), o.tokens.size(), &report.report), report);
  }
  if (*flops) return print_report(mgdfis_flops(cfg.cfg, &report.report), report);
  if (*grad) return print_report(mgdfis_gradcheck(cfg.cfg, o.seeds, &report.report), report);

  mgdfis_model* model = nullptr;
  mgdfis_status s = mgdfis_model_create(cfg.cfg, &model);
  if (s == MGDFIS_OK) s = mgdfis_model_dump(model, o.out->c_str());
  mgdfis_model_destroy(model);
  if (s != MGDFIS_OK) return fail(s);
  std::printf("parameters written to %s\n", o.out->c_str());
  return 0;
}
