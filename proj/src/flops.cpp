#include "flops.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <sstream>

namespace mgdfis {

std::uint64_t conv_flops(const ConvSpec& spec, const Dims& input) {
  const Dims out = spec.output_dims(input);
  return 2ULL * spec.kernel_h * spec.kernel_w * (spec.in_channels / spec.groups) *
         spec.out_channels * out[2] * out[3] * input[0];
}

std::uint64_t linear_flops(std::uint64_t m, std::uint64_t n, std::uint64_t p) {
  return 2 * m * n * p;
}

std::uint64_t fft_flops(std::size_t height, std::size_t width) {
  const double n = static_cast<double>(height * width);
  if (n <= 1.0) return 0;
  return static_cast<std::uint64_t>(std::llround(5.0 * n * std::log2(n)));
}

void FlopReport::add(std::string module, std::string op, std::uint64_t flops) {
  entries.push_back({std::move(module), std::move(op), flops});
}

std::uint64_t FlopReport::total() const {
  std::uint64_t t = 0;
  for (const auto& e : entries) t += e.flops;
  return t;
}

std::uint64_t FlopReport::module_total(const std::string& module) const {
  std::uint64_t t = 0;
  for (const auto& e : entries)
    if (e.module == module) t += e.flops;
  return t;
}

std::vector<std::string> FlopReport::modules() const {
  std::vector<std::string> out;
  for (const auto& e : entries)
    if (std::find(out.begin(), out.end(), e.module) == out.end()) out.push_back(e.module);
  return out;
}

std::vector<std::pair<std::string, std::uint64_t>> FlopReport::ablation() const {
  static const std::pair<const char*, const char*> order[] = {
      {"baseline", "aggregate"}, {"+gmm", "gmm"}, {"+dmm", "dmm"},
      {"+ftssa", "ftssa"},       {"+dpam", "dpam"}};
  std::vector<std::pair<std::string, std::uint64_t>> out;
  std::uint64_t running = 0;
  for (const auto& [label, module] : order) {
    running += module_total(module);
    out.emplace_back(label, running);
  }
  return out;
}

std::string FlopReport::to_text() const {
  std::ostringstream os;
  os << "# module op flops\n";
  for (const auto& e : entries) os << e.module << ' ' << e.op << ' ' << e.flops << '\n';
  os << "# module totals\n";
  for (const auto& m : modules()) os << "total." << m << " = " << module_total(m) << '\n';
  os << "total = " << total() << '\n';
  os << "# ablation (cumulative)\n";
  for (const auto& [label, v] : ablation()) os << "ablation." << label << " = " << v << '\n';
  return os.str();
}

namespace {

struct Counter {
  FlopReport& report;
  std::string module;

  void conv(const std::string& op, const ConvSpec& spec, const Dims& in) {
    report.add(module, op, conv_flops(spec, in));
  }
  void elementwise(const std::string& op, std::uint64_t count) { report.add(module, op, count); }
  void linear(const std::string& op, std::uint64_t m, std::uint64_t n, std::uint64_t p) {
    report.add(module, op, linear_flops(m, n, p));
  }
};

void count_reconcile(Counter& c, const std::string& op, const Dims& from, const Dims& to) {
  if (from == to) return;
  const Dims resized{from[0], from[1], to[2], to[3]};
  if (from[2] != to[2] || from[3] != to[3]) c.elementwise(op + ".resize", numel(resized));
  c.conv(op + ".proj", ConvSpec::pointwise(from[1], to[1]), resized);
}

void count_mona(Counter& c, const std::string& op, const Dims& d, std::size_t reduced) {
  const std::size_t ch = d[1];
  const Dims r{d[0], reduced, d[2], d[3]};
  c.conv(op + ".down", ConvSpec::pointwise(ch, reduced), d);
  c.conv(op + ".dw3", ConvSpec::depthwise(reduced, 3), r);
  c.conv(op + ".dw5", ConvSpec::depthwise(reduced, 5), r);
  c.conv(op + ".dw7", ConvSpec::depthwise(reduced, 7), r);
  c.elementwise(op + ".average", 3 * numel(r));
  c.conv(op + ".mix", ConvSpec::pointwise(reduced, reduced), r);
  c.elementwise(op + ".residuals", 2 * numel(r));
  c.elementwise(op + ".gelu", numel(r));
  c.conv(op + ".up", ConvSpec::pointwise(reduced, ch), r);
  c.conv(op + ".xmona", ConvSpec::pointwise(ch, ch), d);
  c.elementwise(op + ".xmona_scale", numel(d));
  c.elementwise(op + ".sum", numel(d));
}

void count_ftssa(Counter& c, const Dims& d, const FtssaShape& s) {
  const std::uint64_t tokens = d[0] * d[2] * d[3];
  const std::size_t ch = d[1], j = s.heads * s.head_dim, r = s.reduced(ch);
  const std::uint64_t stat = tokens * j;

  c.elementwise("dyt1", numel(d));
  c.linear("tssa.qkv", tokens, ch, j);
  c.elementwise("tssa.normalize", 3 * stat);
  c.elementwise("tssa.softmax", tokens * s.heads);
  c.elementwise("tssa.dots", 2 * stat);
  c.elementwise("tssa.attn", d[0] * j);
  c.elementwise("tssa.combine", 2 * stat);
  c.linear("tssa.out", tokens, j, ch);
  c.elementwise("daff.residual", numel(d));
  count_mona(c, "mona1", d, r);

  const Dims half{d[0], ch, d[2], d[3]};
  c.elementwise("dyt2", numel(d));
  c.conv("seff.split", ConvSpec::pointwise(ch, 2 * ch), d);
  c.conv("seff.branch1", ConvSpec::depthwise(ch, 3), half);
  c.conv("seff.branch2", ConvSpec::depthwise(ch, 3, 2), half);
  const std::uint64_t planes = 2 * d[0] * ch;
  c.elementwise("seff.fft2", planes * fft_flops(d[2], d[3]));
  c.elementwise("seff.weight_resize", 2 * 2 * ch * d[2] * d[3]);
  c.elementwise("seff.filter", 2 * planes * d[2] * d[3]);
  c.elementwise("seff.ifft2", planes * fft_flops(d[2], d[3]));
  c.elementwise("seff.silu_gate", 2 * numel(half));
  c.conv("seff.merge", ConvSpec::pointwise(ch, ch), half);
  c.elementwise("serr.residual", numel(d));
  count_mona(c, "mona2", d, r);
}

}  // namespace

FlopReport count_pipeline(const MgdfisShape& shape) {
  FlopReport report;
  const Dims d = shape.f1;
  const std::size_t ch = d[1], k = shape.groups;

  Counter agg{report, "aggregate"};
  count_reconcile(agg, "reconcile", shape.f2, d);
  agg.elementwise("sum", numel(d));

  Counter gmm{report, "gmm"};
  const Dims cols{d[0], ch / k, d[2], k * d[3]};
  const Dims rows{d[0], ch / k, k * d[2], d[3]};
  const Dims cat{d[0], 2 * ch, d[2], d[3]};
  for (const auto& [pass, regrouped] : {std::pair{"col", cols}, std::pair{"row", rows}}) {
    const std::string p = pass;
    gmm.elementwise(p + ".pos", numel(regrouped));
    gmm.conv(p + ".conv", ConvSpec::same(ch / k, ch / k, 3, 3), regrouped);
    gmm.elementwise(p + ".bn", 2 * numel(d));
    gmm.elementwise(p + ".gelu", numel(d));
    gmm.conv(p + ".fuse", ConvSpec::pointwise(2 * ch, ch), cat);
  }

  Counter dmm{report, "dmm"};
  const std::size_t hidden = std::max<std::size_t>(ch / shape.mlp_ratio, 1);
  dmm.conv("dir46", ConvSpec::same(ch, ch, 4, 6), d);
  dmm.conv("dir64", ConvSpec::same(ch, ch, 6, 4), d);
  dmm.elementwise("add", 2 * numel(d));
  dmm.elementwise("gap", numel(d));
  dmm.linear("mlp1", d[0], ch, hidden);
  dmm.elementwise("gelu", d[0] * hidden);
  dmm.linear("mlp2", d[0], hidden, ch);
  dmm.elementwise("swish", d[0] * ch);
  dmm.elementwise("gate", numel(d));

  Counter ft{report, "ftssa"};
  count_ftssa(ft, d, shape.ftssa);

  Counter dp{report, "dpam"};
  dp.conv("conv7x7", ConvSpec::same(2 * ch, ch, 7, 7), cat);
  dp.elementwise("sigmoid", numel(d));
  count_reconcile(dp, "fuse.x1", d, d);
  count_reconcile(dp, "fuse.x2", shape.f2, d);
  dp.elementwise("fuse", 8 * numel(d));
  return report;
}

}  // namespace mgdfis
