#include "harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <future>
#include <iomanip>
#include <limits>
#include <sstream>

#include "io.hpp"

namespace mgdfis {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  std::uint64_t v = 0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (ec != std::errc{} || ptr != end) {
    throw ConfigError(key + ": expected an unsigned integer, got '" + value + "'");
  }
  return v;
}

std::size_t parse_count(const std::string& key, const std::string& value) {
  const std::uint64_t v = parse_u64(key, value);
  if (v == 0) throw ConfigError(key + " must be >= 1");
  return static_cast<std::size_t>(v);
}

std::vector<std::string> split_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

Dims parse_shape(const std::string& key, const std::string& value) {
  const auto parts = split_list(value);
  if (parts.size() != 4) throw ConfigError(key + ": expected N,C,H,W");
  Dims d{};
  for (std::size_t i = 0; i < 4; ++i) d[i] = parse_count(key, parts[i]);
  return d;
}

std::string shape_text(const Dims& d) {
  return std::to_string(d[0]) + "," + std::to_string(d[1]) + "," + std::to_string(d[2]) + "," +
         std::to_string(d[3]);
}

const char* const kParamGroups[] = {"agg", "gmm", "dmm", "dpam", "fusion"};

}  // namespace

Stage parse_stage(const std::string& name) {
  if (name == "ftssa") return Stage::ftssa;
  if (name == "gmm") return Stage::gmm;
  if (name == "dmm") return Stage::dmm;
  if (name == "gdim") return Stage::gdim;
  if (name == "dpam") return Stage::dpam;
  if (name == "full") return Stage::full;
  throw ConfigError("unknown stage '" + name + "' (ftssa|gmm|dmm|gdim|dpam|full)");
}

std::string to_string(Stage stage) {
  switch (stage) {
    case Stage::ftssa: return "ftssa";
    case Stage::gmm: return "gmm";
    case Stage::dmm: return "dmm";
    case Stage::gdim: return "gdim";
    case Stage::dpam: return "dpam";
    case Stage::full: return "full";
  }
  return "full";
}

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "seed") seed = parse_u64(key, value);
  else if (key == "f1_shape") f1 = parse_shape(key, value);
  else if (key == "f2_shape") f2 = parse_shape(key, value);
  else if (key == "k") k = parse_count(key, value);
  else if (key == "heads") heads = parse_count(key, value);
  else if (key == "head_dim") head_dim = parse_count(key, value);
  else if (key == "mona_ratio") mona_ratio = parse_count(key, value);
  else if (key == "mlp_ratio") mlp_ratio = parse_count(key, value);
  else if (key == "seff_base_resolution") seff_base = parse_count(key, value);
  else if (key == "stage") stage = parse_stage(value);
  else if (key == "tssa_pi_mode") {
    if (value == "constant") pi_mode = PiMode::constant;
    else if (value == "distribution") pi_mode = PiMode::distribution;
    else throw ConfigError("tssa_pi_mode must be 'constant' or 'distribution'");
  } else if (key == "out") {
    if (value.empty()) throw ConfigError("out must not be empty");
    out = value;
  } else if (key == "f1_path") f1_path = value;
  else if (key == "f2_path") f2_path = value;
  else if (key == "zero_params") {
    zero_params = split_list(value);
    for (const auto& g : zero_params) {
      if (std::find(std::begin(kParamGroups), std::end(kParamGroups), g) == std::end(kParamGroups)) {
        throw ConfigError("zero_params: unknown group '" + g + "' (agg|gmm|dmm|dpam|fusion)");
      }
    }
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

void RunConfig::validate() const {
  if (f1[0] != f2[0]) throw ConfigError("f1_shape and f2_shape must share the batch size");
  if (f1[1] % k != 0) {
    throw ConfigError("k = " + std::to_string(k) + " does not divide " + std::to_string(f1[1]) +
                      " channels");
  }
}

MgdfisShape RunConfig::shape() const {
  MgdfisShape s;
  s.f1 = f1;
  s.f2 = f2;
  s.groups = k;
  s.mlp_ratio = mlp_ratio;
  s.ftssa = {heads, head_dim, mona_ratio, seff_base, pi_mode};
  return s;
}

std::string RunConfig::to_text() const {
  std::ostringstream os;
  os << "seed = " << seed << '\n'
     << "f1_shape = " << shape_text(f1) << '\n'
     << "f2_shape = " << shape_text(f2) << '\n'
     << "k = " << k << '\n'
     << "heads = " << heads << '\n'
     << "head_dim = " << head_dim << '\n'
     << "mona_ratio = " << mona_ratio << '\n'
     << "mlp_ratio = " << mlp_ratio << '\n'
     << "seff_base_resolution = " << seff_base << '\n'
     << "stage = " << to_string(stage) << '\n'
     << "tssa_pi_mode = " << (pi_mode == PiMode::constant ? "constant" : "distribution") << '\n';
  if (!f1_path.empty()) os << "f1_path = " << f1_path << '\n';
  if (!f2_path.empty()) os << "f2_path = " << f2_path << '\n';
  if (!zero_params.empty()) {
    os << "zero_params = ";
    for (std::size_t i = 0; i < zero_params.size(); ++i) os << (i ? "," : "") << zero_params[i];
    os << '\n';
  }
  return os.str();
}

RunConfig parse_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  for (std::size_t lineno = 1; std::getline(in, line); ++lineno) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    try {
      cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError(0, "cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

MgdfisParams init_params(const RunConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  MgdfisParams p = MgdfisParams::init(cfg.shape(), rng);
  auto zero = [](auto& group) { group = zeros_like_params(group); };
  for (const auto& g : cfg.zero_params) {
    if (g == "agg") zero(p.agg);
    else if (g == "gmm") zero(p.gmm);
    else if (g == "dmm") zero(p.dmm);
    else if (g == "dpam") zero(p.dpam);
    else if (g == "fusion") zero(p.fusion);
  }
  return p;
}

std::pair<Tensor, Tensor> make_inputs(const RunConfig& cfg) {
  Rng rng(cfg.seed ^ 0xA5A5A5A5A5A5A5A5ULL);
  Tensor f1(cfg.f1), f2(cfg.f2);
  for (double& v : f1.data()) v = rng.symmetric(1.0);
  for (double& v : f2.data()) v = rng.symmetric(1.0);
  return {std::move(f1), std::move(f2)};
}

std::pair<Tensor, Tensor> load_inputs(const RunConfig& cfg) {
  auto [f1, f2] = make_inputs(cfg);
  if (!cfg.f1_path.empty()) {
    f1 = read_tensor(cfg.f1_path);
    expect_dims(f1.dims(), cfg.f1, "f1 file " + cfg.f1_path);
  }
  if (!cfg.f2_path.empty()) {
    f2 = read_tensor(cfg.f2_path);
    expect_dims(f2.dims(), cfg.f2, "f2 file " + cfg.f2_path);
  }
  return {std::move(f1), std::move(f2)};
}

std::size_t thread_cap() {
  const char* env = std::getenv("MGDFIS_THREADS");
  if (!env || !*env) return 1;
  char* end = nullptr;
  const unsigned long v = std::strtoul(env, &end, 10);
  if (*end != '\0' || v == 0) return 1;
  return v;
}

namespace {

Tensor batch_item(const Tensor& t, std::size_t n) {
  const std::size_t per = t.size() / t.batch();
  const auto begin = t.data().begin() + static_cast<std::ptrdiff_t>(n * per);
  return Tensor({1, t.channels(), t.height(), t.width()},
                std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(per)));
}

Tensor stage_single(Stage stage, const Tensor& f1, const Tensor& f2, const MgdfisParams& p) {
  if (stage == Stage::full) return mgdfis(f1, f2, p);
  const Tensor f_agg = aggregate(f1, f2, p.agg);
  switch (stage) {
    case Stage::ftssa: return ftssa(f_agg, p.dmm.ftssa);
    case Stage::gmm: return gmm(f_agg, p.gmm);
    case Stage::dmm: return dmm(f_agg, p.dmm);
    case Stage::gdim: return dmm(gmm(f_agg, p.gmm), p.dmm);
    case Stage::dpam: return dpam(f_agg, dmm(gmm(f_agg, p.gmm), p.dmm), p.dpam);
    case Stage::full: break;
  }
  return mgdfis(f1, f2, p);
}

}  // namespace

Tensor run_stage(Stage stage, const Tensor& f1, const Tensor& f2, const MgdfisParams& p,
                 std::size_t threads) {
  if (f1.batch() != f2.batch()) throw ShapeError("batch", "f1 and f2 batch sizes differ");
  const std::size_t batch = f1.batch();
  if (threads <= 1 || batch == 1) return stage_single(stage, f1, f2, p);

  std::vector<Tensor> parts(batch);
  for (std::size_t start = 0; start < batch; start += threads) {
    std::vector<std::future<Tensor>> jobs;
    for (std::size_t n = start; n < std::min(batch, start + threads); ++n) {
      jobs.push_back(std::async(std::launch::async, [&, n] {
        return stage_single(stage, batch_item(f1, n), batch_item(f2, n), p);
      }));
    }
    for (std::size_t i = 0; i < jobs.size(); ++i) parts[start + i] = jobs[i].get();
  }
  const Dims one = parts[0].dims();
  Tensor out({batch, one[1], one[2], one[3]});
  for (std::size_t n = 0; n < batch; ++n) {
    std::copy(parts[n].data().begin(), parts[n].data().end(),
              out.data().begin() + static_cast<std::ptrdiff_t>(n * parts[n].size()));
  }
  return out;
}

std::string RunSummary::to_text(const RunConfig& cfg) const {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "stage = " << to_string(cfg.stage) << '\n'
     << "seed = " << cfg.seed << '\n'
     << "output = output.mgdt\n"
     << "shape = " << shape_text(shape) << '\n'
     << "min = " << min << '\n'
     << "max = " << max << '\n'
     << "mean = " << mean << '\n'
     << "digest = fnv1a:" << hex64(digest) << '\n'
     << std::setprecision(6) << "wall_time_s = " << wall_seconds << '\n';
  return os.str();
}

RunSummary run(const RunConfig& cfg) {
  const auto [f1, f2] = load_inputs(cfg);
  const MgdfisParams params = init_params(cfg);
  const auto t0 = std::chrono::steady_clock::now();
  const Tensor out = run_stage(cfg.stage, f1, f2, params, thread_cap());
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  RunSummary s;
  s.shape = out.dims();
  const auto [lo, hi] = std::minmax_element(out.data().begin(), out.data().end());
  s.min = *lo;
  s.max = *hi;
  s.mean = sum(out) / static_cast<double>(out.size());
  s.wall_seconds = wall;

  const std::filesystem::path dir(cfg.out);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw FormatError(0, "cannot create output directory " + dir.string());
  const auto bytes = encode_tensor(out);
  s.digest = fnv1a(bytes);
  write_file(dir / "output.mgdt", bytes);
  std::ofstream summary(dir / "summary.txt");
  summary << s.to_text(cfg);
  if (!summary) throw FormatError(0, "cannot write " + (dir / "summary.txt").string());
  return s;
}

void dump_params(const RunConfig& cfg, const std::filesystem::path& dir) {
  MgdfisParams p = init_params(cfg);
  std::vector<ParamView> views;
  p.visit("", [&](const ParamView& v) { views.push_back(v); });
  const auto lines = dump_views(dir, views);

  std::ofstream m(dir / "manifest.txt");
  m << "# MGDFIS parameter manifest\n"
    << "format = MGDT v1, one <name>.mgdt per tensor\n"
    << "rng = splitmix64: state += 0x9E3779B97F4A7C15; z = (z ^ z>>30) * 0xBF58476D1CE4E5B9; "
       "z = (z ^ z>>27) * 0x94D049BB133111EB; out = z ^ z>>31; uniform = (out >> 11) * 2^-53\n"
    << "init = weights U(-1/sqrt(fan_in), +1/sqrt(fan_in)) drawn in construction order "
       "(agg, gmm, dmm, dpam); biases and position embeddings 0; seff frequency weights 1+0i\n"
    << "tssa_eps = 1e-08\n"
    << "xmona_scale_init = 1e-06\n"
    << "dyt_init = alpha 0.5, gamma 1, beta 0\n"
    << "batch_norm = inference, running mean 0, running var 1, eps 1e-05\n"
    << "\n[config]\n"
    << cfg.to_text() << "\n[tensors]\n";
  for (const auto& l : lines) m << l << '\n';
  if (!m) throw FormatError(0, "cannot write manifest in " + dir.string());
}

// ---------------------------------------------------------------------------
// Benchmark

Tensor quadratic_attention(const Tensor& f, const Tensor& wq, const Tensor& wk,
                           const Tensor& wv) {
  const std::size_t c = f.channels(), n = f.height() * f.width(), d = wq.width();
  const std::size_t dv = wv.width();
  expect_dims(wk.dims(), wq.dims(), "quadratic_attention: key weights");
  const Tensor tokens = [&] {
    Tensor t({f.batch(), 1, n, c});
    for (std::size_t b = 0; b < f.batch(); ++b)
      for (std::size_t ch = 0; ch < c; ++ch)
        for (std::size_t i = 0; i < n; ++i) t(b, 0, i, ch) = f.raw()[f.offset(b, ch, 0, 0) + i];
    return t;
  }();
  const Tensor q = linear(tokens, wq, {}), k = linear(tokens, wk, {}), v = linear(tokens, wv, {});
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  Tensor out({f.batch(), 1, n, dv});
  std::vector<double> scores(n);
  for (std::size_t b = 0; b < f.batch(); ++b) {
    const double* qb = q.raw() + q.offset(b, 0, 0, 0);
    const double* kb = k.raw() + k.offset(b, 0, 0, 0);
    const double* vb = v.raw() + v.offset(b, 0, 0, 0);
    for (std::size_t i = 0; i < n; ++i) {
      double peak = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j) {
        double s = 0.0;
        for (std::size_t e = 0; e < d; ++e) s += qb[i * d + e] * kb[j * d + e];
        scores[j] = s * scale;
        peak = std::max(peak, scores[j]);
      }
      double total = 0.0;
      for (std::size_t j = 0; j < n; ++j) total += scores[j] = std::exp(scores[j] - peak);
      double* o = out.raw() + out.offset(b, 0, i, 0);
      for (std::size_t j = 0; j < n; ++j) {
        const double w = scores[j] / total;
        for (std::size_t e = 0; e < dv; ++e) o[e] += w * vb[j * dv + e];
      }
    }
  }
  return out;
}

namespace {

template <class F>
double median_ms(F&& f, std::size_t repeats, std::size_t warmup) {
  for (std::size_t i = 0; i < warmup; ++i) f();
  std::vector<double> times;
  for (std::size_t i = 0; i < repeats; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    times.push_back(
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  std::sort(times.begin(), times.end());
  const std::size_t m = times.size() / 2;
  return times.size() % 2 ? times[m] : 0.5 * (times[m - 1] + times[m]);
}

std::optional<double> doubling_ratio(double t_prev, double t_cur, std::size_t n_prev,
                                     std::size_t n_cur) {
  const double doublings = std::log2(static_cast<double>(n_cur) / static_cast<double>(n_prev));
  if (doublings <= 0.0 || t_prev <= 0.0) return std::nullopt;
  return std::pow(t_cur / t_prev, 1.0 / doublings);
}

}  // namespace

std::string BenchReport::to_text() const {
  std::ostringstream os;
  os << std::fixed << std::setprecision(3);
  os << "# tokens tssa_ms tssa_ratio baseline_ms baseline_ratio\n";
  for (const auto& r : rows) {
    os << r.tokens << ' ' << r.tssa_ms << ' ';
    if (r.tssa_ratio) os << *r.tssa_ratio; else os << '-';
    os << ' ' << r.baseline_ms << ' ';
    if (r.baseline_ratio) os << *r.baseline_ratio; else os << '-';
    os << '\n';
  }
  return os.str();
}

BenchReport bench_tssa(const RunConfig& cfg, const std::vector<std::size_t>& tokens,
                       std::size_t repeats, std::size_t warmup) {
  if (tokens.empty()) throw ConfigError("bench-tssa needs at least one token count");
  const std::size_t c = cfg.f1[1];
  Rng rng(cfg.seed);
  TssaParams tp = TssaParams::init(c, cfg.heads, cfg.head_dim, rng);
  tp.pi_mode = cfg.pi_mode;
  const LinearLayer wq = LinearLayer::init(c, cfg.head_dim, rng);
  const LinearLayer wk = LinearLayer::init(c, cfg.head_dim, rng);
  const LinearLayer wv = LinearLayer::init(c, cfg.head_dim, rng);

  BenchReport report;
  for (std::size_t n : tokens) {
    if (n == 0) throw ConfigError("token counts must be >= 1");
    Tensor x({1, c, 1, n});
    Rng in(cfg.seed ^ n);
    for (double& v : x.data()) v = in.symmetric(1.0);
    BenchRow row;
    row.tokens = n;
    double sink = 0.0;
    row.tssa_ms = median_ms([&] { sink += tssa(x, tp)[0]; }, repeats, warmup);
    row.baseline_ms = median_ms(
        [&] { sink += quadratic_attention(x, wq.weight, wk.weight, wv.weight)[0]; }, repeats,
        warmup);
    if (!std::isfinite(sink)) throw Error("benchmark produced non-finite output");
    if (!report.rows.empty()) {
      const BenchRow& prev = report.rows.back();
      row.tssa_ratio = doubling_ratio(prev.tssa_ms, row.tssa_ms, prev.tokens, n);
      row.baseline_ratio = doubling_ratio(prev.baseline_ms, row.baseline_ms, prev.tokens, n);
    }
    report.rows.push_back(row);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Gradient checks

bool GradcheckReport::passed() const {
  return std::all_of(ops.begin(), ops.end(), [](const auto& o) { return o.failures == 0; });
}

std::string GradcheckReport::to_text() const {
  std::ostringstream os;
  os << "# op seeds failures max_error max_elementwise status\n";
  os << std::scientific << std::setprecision(3);
  for (const auto& o : ops) {
    os << o.op << ' ' << o.seeds << ' ' << o.failures << ' ' << o.max_error << ' '
       << o.max_elementwise << ' ' << (o.failures ? "FAIL" : "ok") << '\n';
    if (!o.first_failure.empty()) os << "  first failure: " << o.first_failure << '\n';
  }
  os << (passed() ? "gradcheck: all ops passed\n" : "gradcheck: FAILED\n");
  return os.str();
}

GradcheckReport gradcheck_all(const RunConfig& cfg, std::size_t seeds,
                              const GradCheckOptions& options) {
  GradcheckReport report;
  for (const auto& c : gradient_cases()) {
    GradcheckSummary s;
    s.op = c.name;
    for (std::size_t i = 0; i < seeds; ++i) {
      const std::uint64_t seed = cfg.seed + i;
      ++s.seeds;
      try {
        const GradCheckResult r = c.run(seed, options);
        s.max_error = std::max(s.max_error, r.max_error());
        s.max_elementwise = std::max(s.max_elementwise, r.max_rel_error());
        if (!r.passed) {
          ++s.failures;
          if (s.first_failure.empty()) s.first_failure = "seed " + std::to_string(seed) + ": " + r.failure();
        }
      } catch (const std::exception& e) {
        ++s.failures;
        if (s.first_failure.empty()) s.first_failure = "seed " + std::to_string(seed) + ": " + e.what();
      }
    }
    report.ops.push_back(std::move(s));
  }
  return report;
}

}  // namespace mgdfis
