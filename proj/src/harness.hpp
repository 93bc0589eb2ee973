#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "dpam.hpp"
#include "flops.hpp"
#include "gradsuite.hpp"

namespace mgdfis {

enum class Stage { ftssa, gmm, dmm, gdim, dpam, full };

Stage parse_stage(const std::string& name);
std::string to_string(Stage stage);

struct RunConfig {
  std::uint64_t seed = 0;
  Dims f1{1, 64, 80, 80};
  Dims f2{1, 64, 40, 40};
  std::size_t k = 2;
  std::size_t heads = 4;
  std::size_t head_dim = 16;
  std::size_t mona_ratio = 4;
  std::size_t mlp_ratio = 4;
  std::size_t seff_base = 8;
  Stage stage = Stage::full;
  PiMode pi_mode = PiMode::constant;
  std::string out = "mgdfis_out";
  std::string f1_path;  // empty: generate from the seed
  std::string f2_path;
  /// Parameter groups (agg, gmm, dmm, dpam, fusion) zeroed after init.
  std::vector<std::string> zero_params;

  /// Applies one `key = value` setting; throws ConfigError on unknown keys or bad values.
  void set(const std::string& key, const std::string& value);
  /// Throws ConfigError if any count is zero or k does not divide the channels.
  void validate() const;
  MgdfisShape shape() const;
  std::string to_text() const;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

MgdfisParams init_params(const RunConfig& cfg);
/// Inputs drawn U(-1, 1) from a stream separate from the parameter stream.
std::pair<Tensor, Tensor> make_inputs(const RunConfig& cfg);
std::pair<Tensor, Tensor> load_inputs(const RunConfig& cfg);

/// Thread cap from MGDFIS_THREADS (default 1).
std::size_t thread_cap();

/// Every stage starts from aggregate(f1, f2). Batch items run concurrently up
/// to `threads`.
Tensor run_stage(Stage stage, const Tensor& f1, const Tensor& f2, const MgdfisParams& p,
                 std::size_t threads = 1);

struct RunSummary {
  Dims shape{};
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  std::uint64_t digest = 0;  // FNV-1a of output.mgdt
  double wall_seconds = 0.0;
  std::string to_text(const RunConfig& cfg) const;
};

/// Writes <out>/output.mgdt and <out>/summary.txt.
RunSummary run(const RunConfig& cfg);

/// Writes <dir>/<name>.mgdt for every parameter plus <dir>/manifest.txt.
void dump_params(const RunConfig& cfg, const std::filesystem::path& dir);

struct BenchRow {
  std::size_t tokens = 0;
  double tssa_ms = 0.0;
  std::optional<double> tssa_ratio;
  double baseline_ms = 0.0;
  std::optional<double> baseline_ratio;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  std::string to_text() const;
};

/// Single-head softmax attention over tokens with head dim D; cost O(N²·D).
/// Output is token-major: B × 1 × N × (value width).
Tensor quadratic_attention(const Tensor& f, const Tensor& wq, const Tensor& wk,
                           const Tensor& wv);

/// Median of 9 timed runs after 2 warmups, per token count. The ratio column is
/// the per-doubling growth between consecutive token counts.
BenchReport bench_tssa(const RunConfig& cfg, const std::vector<std::size_t>& tokens,
                       std::size_t repeats = 9, std::size_t warmup = 2);

struct GradcheckSummary {
  std::string op;
  std::size_t seeds = 0;
  std::size_t failures = 0;
  double max_error = 0.0;
  double max_elementwise = 0.0;
  std::string first_failure;
};

struct GradcheckReport {
  std::vector<GradcheckSummary> ops;
  bool passed() const;
  std::string to_text() const;
};

/// Runs every gradient case over seeds cfg.seed .. cfg.seed + seeds − 1.
GradcheckReport gradcheck_all(const RunConfig& cfg, std::size_t seeds = 20,
                              const GradCheckOptions& options = {});

}  // namespace mgdfis
