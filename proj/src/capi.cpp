#include "mgdfis.h"

#include <exception>
#include <new>
#include <string>

#include "harness.hpp"
#include "io.hpp"

struct mgdfis_tensor {
  mgdfis::Tensor t;
};
struct mgdfis_config {
  mgdfis::RunConfig cfg;
};
struct mgdfis_model {
  mgdfis::RunConfig cfg;
  mgdfis::MgdfisParams params;
};
struct mgdfis_report {
  std::string text;
  bool passed = true;
};

namespace {

thread_local std::string last_error;

template <class F>
mgdfis_status guarded(F&& f) {
  try {
    f();
    return MGDFIS_OK;
  } catch (const mgdfis::ConfigError& e) {
    last_error = e.what();
    return MGDFIS_ERR_USAGE;
  } catch (const mgdfis::FormatError& e) {
    last_error = e.what();
    return MGDFIS_ERR_IO;
  } catch (const mgdfis::ShapeError& e) {
    last_error = e.what();
    return MGDFIS_ERR_CONTRACT;
  } catch (const std::filesystem::filesystem_error& e) {
    last_error = e.what();
    return MGDFIS_ERR_IO;
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return MGDFIS_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return MGDFIS_ERR_INTERNAL;
  }
}

mgdfis_status null_arg(const char* what) {
  last_error = std::string("null argument: ") + what;
  return MGDFIS_ERR_USAGE;
}

mgdfis_report* make_report(std::string text, bool passed = true) {
  return new mgdfis_report{std::move(text), passed};
}

}  // namespace

extern "C" {

const char* mgdfis_last_error(void) { return last_error.c_str(); }

mgdfis_status mgdfis_tensor_create(const uint64_t dims[4], mgdfis_tensor** out) {
  if (!dims || !out) return null_arg("dims/out");
  return guarded([&] {
    *out = new mgdfis_tensor{mgdfis::Tensor({dims[0], dims[1], dims[2], dims[3]})};
  });
}

mgdfis_status mgdfis_tensor_read(const char* path, mgdfis_tensor** out) {
  if (!path || !out) return null_arg("path/out");
  return guarded([&] { *out = new mgdfis_tensor{mgdfis::read_tensor(path)}; });
}

mgdfis_status mgdfis_tensor_write(const mgdfis_tensor* t, const char* path) {
  if (!t || !path) return null_arg("tensor/path");
  return guarded([&] { mgdfis::write_tensor(path, t->t); });
}

mgdfis_status mgdfis_tensor_dims(const mgdfis_tensor* t, uint64_t dims[4]) {
  if (!t || !dims) return null_arg("tensor/dims");
  for (int i = 0; i < 4; ++i) dims[i] = t->t.dims()[i];
  return MGDFIS_OK;
}

double* mgdfis_tensor_data(mgdfis_tensor* t) { return t ? t->t.raw() : nullptr; }

size_t mgdfis_tensor_size(const mgdfis_tensor* t) { return t ? t->t.size() : 0; }

void mgdfis_tensor_destroy(mgdfis_tensor* t) { delete t; }

mgdfis_status mgdfis_config_load(const char* path, mgdfis_config** out) {
  if (!out) return null_arg("out");
  return guarded([&] {
    *out = new mgdfis_config{path ? mgdfis::load_config(path) : mgdfis::RunConfig{}};
  });
}

mgdfis_status mgdfis_config_set(mgdfis_config* cfg, const char* key, const char* value) {
  if (!cfg || !key || !value) return null_arg("config/key/value");
  return guarded([&] {
    mgdfis::RunConfig next = cfg->cfg;
    next.set(key, value);
    cfg->cfg = std::move(next);
  });
}

void mgdfis_config_destroy(mgdfis_config* cfg) { delete cfg; }

mgdfis_status mgdfis_model_create(const mgdfis_config* cfg, mgdfis_model** out) {
  if (!cfg || !out) return null_arg("config/out");
  return guarded([&] { *out = new mgdfis_model{cfg->cfg, mgdfis::init_params(cfg->cfg)}; });
}

mgdfis_status mgdfis_model_dump(const mgdfis_model* model, const char* dir) {
  if (!model || !dir) return null_arg("model/dir");
  return guarded([&] { mgdfis::dump_params(model->cfg, dir); });
}

mgdfis_status mgdfis_model_forward(const mgdfis_model* model, const mgdfis_tensor* f1,
                                   const mgdfis_tensor* f2, const char* stage,
                                   mgdfis_tensor** out) {
  if (!model || !f1 || !f2 || !stage || !out) return null_arg("model/f1/f2/stage/out");
  return guarded([&] {
    const mgdfis::Stage s = mgdfis::parse_stage(stage);
    mgdfis::expect_dims(f1->t.dims(), model->cfg.f1, "f1");
    mgdfis::expect_dims(f2->t.dims(), model->cfg.f2, "f2");
    *out = new mgdfis_tensor{
        mgdfis::run_stage(s, f1->t, f2->t, model->params, mgdfis::thread_cap())};
  });
}

void mgdfis_model_destroy(mgdfis_model* model) { delete model; }

mgdfis_status mgdfis_run(const mgdfis_config* cfg, mgdfis_report** out) {
  if (!cfg || !out) return null_arg("config/out");
  return guarded([&] {
    const mgdfis::RunSummary s = mgdfis::run(cfg->cfg);
    *out = make_report(s.to_text(cfg->cfg));
  });
}

mgdfis_status mgdfis_bench_tssa(const mgdfis_config* cfg, const uint64_t* tokens, size_t count,
                                mgdfis_report** out) {
  if (!cfg || !out || (count && !tokens)) return null_arg("config/tokens/out");
  return guarded([&] {
    std::vector<std::size_t> n(tokens, tokens + count);
    *out = make_report(mgdfis::bench_tssa(cfg->cfg, n).to_text());
  });
}

mgdfis_status mgdfis_flops(const mgdfis_config* cfg, mgdfis_report** out) {
  if (!cfg || !out) return null_arg("config/out");
  return guarded([&] {
    cfg->cfg.validate();
    *out = make_report(mgdfis::count_pipeline(cfg->cfg.shape()).to_text());
  });
}

mgdfis_status mgdfis_gradcheck(const mgdfis_config* cfg, uint32_t seeds, mgdfis_report** out) {
  if (!cfg || !out) return null_arg("config/out");
  if (seeds == 0) {
    last_error = "gradcheck needs at least one seed";
    return MGDFIS_ERR_USAGE;
  }
  return guarded([&] {
    const mgdfis::GradcheckReport r = mgdfis::gradcheck_all(cfg->cfg, seeds);
    *out = make_report(r.to_text(), r.passed());
  });
}

const char* mgdfis_report_text(const mgdfis_report* report) {
  return report ? report->text.c_str() : "";
}

int mgdfis_report_passed(const mgdfis_report* report) { return report && report->passed ? 1 : 0; }

void mgdfis_report_destroy(mgdfis_report* report) { delete report; }

}  // extern "C"
