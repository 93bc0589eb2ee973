#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include "mgdfis.h"

namespace fs = std::filesystem;

namespace {

const fs::path kDir = fs::temp_directory_path() / "mgdfis_cli_test";

int cli(const std::string& args) {
  const std::string cmd = std::string(MGDFIS_CLI) + " " + args + " >" + (kDir / "stdout.txt").string() +
                          " 2>" + (kDir / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read(const fs::path& p) {
  std::ifstream in(p);
  return {std::istreambuf_iterator<char>(in), {}};
}

fs::path write_config(const std::string& name, const std::string& extra) {
  const fs::path p = kDir / name;
  std::ofstream(p) << "f1_shape = 1,4,4,4\nf2_shape = 1,4,2,2\nheads = 2\nhead_dim = 2\n" << extra;
  return p;
}

void write_tensor(const fs::path& p, std::uint64_t h) {
  const std::uint64_t d[4] = {1, 4, h, 4};
  mgdfis_tensor* t = nullptr;
  REQUIRE(mgdfis_tensor_create(d, &t) == MGDFIS_OK);
  REQUIRE(mgdfis_tensor_write(t, p.c_str()) == MGDFIS_OK);
  mgdfis_tensor_destroy(t);
}

struct Scratch {
  Scratch() {
    fs::remove_all(kDir);
    fs::create_directories(kDir);
  }
  ~Scratch() { fs::remove_all(kDir); }
};

}  // namespace

TEST_CASE("cli exit codes") {
  Scratch s;
  const fs::path cfg = write_config("tiny.cfg", "");

  CHECK(cli("run --config " + cfg.string() + " --out " + (kDir / "out").string()) == 0);
  CHECK(read(kDir / "stdout.txt").find("shape = 1,4,4,4") != std::string::npos);
  CHECK(fs::exists(kDir / "out" / "output.mgdt"));

  CHECK(cli("") == 1);
  CHECK(cli("frobnicate") == 1);
  CHECK(cli("run --config " + cfg.string() + " --stage sideways") == 1);
  CHECK(cli("dump-params --config " + cfg.string()) == 1);
  CHECK(cli("run --config " + write_config("bad_k.cfg", "k = 3\n").string()) == 1);
  CHECK(cli("run --config " + write_config("unknown.cfg", "flavour = mint\n").string()) == 1);

  std::ofstream(kDir / "junk.mgdt") << "MGDX";
  write_tensor(kDir / "f2.mgdt", 2);
  const std::string f2 = "f2_path = " + (kDir / "f2.mgdt").string() + "\n";
  CHECK(cli("run --config " +
            write_config("junk.cfg", "f1_path = " + (kDir / "junk.mgdt").string() + "\n" + f2).string()) == 2);
  CHECK(read(kDir / "stderr.txt").find("byte 3") != std::string::npos);

  write_tensor(kDir / "f1_wrong.mgdt", 5);
  CHECK(cli("run --config " +
            write_config("wrong.cfg", "f1_path = " + (kDir / "f1_wrong.mgdt").string() + "\n" + f2).string()) == 3);
  CHECK(read(kDir / "stderr.txt").find("height") != std::string::npos);
}

TEST_CASE("cli subcommands") {
  Scratch s;
  const fs::path cfg = write_config("tiny.cfg", "");
  CHECK(cli("flops --config " + cfg.string()) == 0);
  CHECK(read(kDir / "stdout.txt").find("+ftssa") != std::string::npos);
  CHECK(cli("dump-params --config " + cfg.string() + " --out " + (kDir / "params").string()) == 0);
  CHECK(fs::exists(kDir / "params" / "manifest.txt"));
  CHECK(cli("bench-tssa --config " + cfg.string() + " --tokens 32,64") == 0);
  CHECK(cli("gradcheck --config " + cfg.string() + " --seeds 1") == 0);
  CHECK(read(kDir / "stdout.txt").find("dpam") != std::string::npos);
  CHECK(cli("run --config " + cfg.string() + " --stage gmm --seed 9 --out " + (kDir / "gmm").string()) == 0);
  CHECK(read(kDir / "stdout.txt").find("seed = 9") != std::string::npos);
}
