#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <string>

#include "mgdfis.h"

namespace fs = std::filesystem;

namespace {

mgdfis_config* tiny() {
  mgdfis_config* cfg = nullptr;
  REQUIRE(mgdfis_config_load(nullptr, &cfg) == MGDFIS_OK);
  REQUIRE(mgdfis_config_set(cfg, "f1_shape", "1,4,4,4") == MGDFIS_OK);
  REQUIRE(mgdfis_config_set(cfg, "f2_shape", "1,4,2,2") == MGDFIS_OK);
  REQUIRE(mgdfis_config_set(cfg, "heads", "2") == MGDFIS_OK);
  REQUIRE(mgdfis_config_set(cfg, "head_dim", "2") == MGDFIS_OK);
  return cfg;
}

}  // namespace

TEST_CASE("tensor handles") {
  const std::uint64_t dims[4] = {1, 2, 3, 4};
  mgdfis_tensor* t = nullptr;
  REQUIRE(mgdfis_tensor_create(dims, &t) == MGDFIS_OK);
  CHECK(mgdfis_tensor_size(t) == 24);
  double* d = mgdfis_tensor_data(t);
  for (int i = 0; i < 24; ++i) d[i] = i * 0.5;

  const fs::path path = fs::temp_directory_path() / "mgdfis_capi_tensor.mgdt";
  REQUIRE(mgdfis_tensor_write(t, path.c_str()) == MGDFIS_OK);
  mgdfis_tensor* back = nullptr;
  REQUIRE(mgdfis_tensor_read(path.c_str(), &back) == MGDFIS_OK);
  std::uint64_t got[4] = {};
  CHECK(mgdfis_tensor_dims(back, got) == MGDFIS_OK);
  CHECK(got[3] == 4);
  CHECK(mgdfis_tensor_data(back)[23] == 11.5);
  mgdfis_tensor_destroy(back);
  mgdfis_tensor_destroy(t);

  std::FILE* f = std::fopen(path.c_str(), "wb");
  std::fputs("MGDT\x02", f);
  std::fclose(f);
  CHECK(mgdfis_tensor_read(path.c_str(), &back) == MGDFIS_ERR_IO);
  CHECK(std::string(mgdfis_last_error()).find("byte 4") != std::string::npos);
  fs::remove(path);

  const std::uint64_t zero[4] = {1, 0, 1, 1};
  CHECK(mgdfis_tensor_create(zero, &t) != MGDFIS_OK);
  CHECK(mgdfis_tensor_create(dims, nullptr) == MGDFIS_ERR_USAGE);
}

TEST_CASE("config errors map to usage") {
  mgdfis_config* cfg = nullptr;
  REQUIRE(mgdfis_config_load(nullptr, &cfg) == MGDFIS_OK);
  CHECK(mgdfis_config_set(cfg, "nonsense", "1") == MGDFIS_ERR_USAGE);
  CHECK(std::string(mgdfis_last_error()).find("nonsense") != std::string::npos);
  CHECK(mgdfis_config_set(cfg, "stage", "everything") == MGDFIS_ERR_USAGE);
  mgdfis_config_destroy(cfg);
  CHECK(mgdfis_config_load("/nonexistent/config.txt", &cfg) == MGDFIS_ERR_IO);
}

TEST_CASE("model forward and shape contract") {
  mgdfis_config* cfg = tiny();
  mgdfis_model* model = nullptr;
  REQUIRE(mgdfis_model_create(cfg, &model) == MGDFIS_OK);

  const std::uint64_t d1[4] = {1, 4, 4, 4}, d2[4] = {1, 4, 2, 2}, bad[4] = {1, 4, 3, 4};
  mgdfis_tensor *f1 = nullptr, *f2 = nullptr, *wrong = nullptr, *out = nullptr;
  mgdfis_tensor_create(d1, &f1);
  mgdfis_tensor_create(d2, &f2);
  mgdfis_tensor_create(bad, &wrong);
  for (std::size_t i = 0; i < mgdfis_tensor_size(f1); ++i) mgdfis_tensor_data(f1)[i] = 0.01 * double(i);

  REQUIRE(mgdfis_model_forward(model, f1, f2, "dpam", &out) == MGDFIS_OK);
  std::uint64_t got[4] = {};
  mgdfis_tensor_dims(out, got);
  CHECK(got[1] == 4);
  for (std::size_t i = 0; i < mgdfis_tensor_size(out); ++i) {
    CHECK(mgdfis_tensor_data(out)[i] > 0.0);
    CHECK(mgdfis_tensor_data(out)[i] < 1.0);
  }
  mgdfis_tensor_destroy(out);

  CHECK(mgdfis_model_forward(model, wrong, f2, "full", &out) == MGDFIS_ERR_CONTRACT);
  CHECK(mgdfis_model_forward(model, f1, f2, "nope", &out) == MGDFIS_ERR_USAGE);

  mgdfis_tensor_destroy(f1);
  mgdfis_tensor_destroy(f2);
  mgdfis_tensor_destroy(wrong);
  mgdfis_model_destroy(model);
  mgdfis_config_destroy(cfg);
}

TEST_CASE("reports") {
  mgdfis_config* cfg = tiny();
  mgdfis_report* r = nullptr;
  REQUIRE(mgdfis_flops(cfg, &r) == MGDFIS_OK);
  CHECK(mgdfis_report_passed(r));
  CHECK(std::string(mgdfis_report_text(r)).find("+dpam") != std::string::npos);
  mgdfis_report_destroy(r);

  const fs::path dir = fs::temp_directory_path() / "mgdfis_capi_run";
  fs::remove_all(dir);
  REQUIRE(mgdfis_config_set(cfg, "out", dir.c_str()) == MGDFIS_OK);
  REQUIRE(mgdfis_run(cfg, &r) == MGDFIS_OK);
  CHECK(fs::exists(dir / "output.mgdt"));
  CHECK(std::string(mgdfis_report_text(r)).find("digest") != std::string::npos);
  mgdfis_report_destroy(r);
  fs::remove_all(dir);
  mgdfis_config_destroy(cfg);
}
