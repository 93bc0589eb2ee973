#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dpam.hpp"
#include "ops.hpp"

namespace mgdfis {

/// Analytic operation counts. conv = 2·kh·kw·(Cin/g)·Cout·Hout·Wout per batch
/// item, linear = 2·m·n·p, FFT = 5·H·W·log2(H·W) per plane, one op per element
/// for elementwise maps, activations and softmax.
std::uint64_t conv_flops(const ConvSpec& spec, const Dims& input);
std::uint64_t linear_flops(std::uint64_t m, std::uint64_t n, std::uint64_t p);
std::uint64_t fft_flops(std::size_t height, std::size_t width);

struct FlopEntry {
  std::string module;
  std::string op;
  std::uint64_t flops = 0;
};

struct FlopReport {
  std::vector<FlopEntry> entries;

  void add(std::string module, std::string op, std::uint64_t flops);
  std::uint64_t total() const;
  std::uint64_t module_total(const std::string& module) const;
  /// Module names in first-appearance order.
  std::vector<std::string> modules() const;
  /// Cumulative totals as aggregate, gmm, dmm (without its FTSSA), ftssa and
  /// dpam are enabled in turn.
  std::vector<std::pair<std::string, std::uint64_t>> ablation() const;
  std::string to_text() const;
};

/// Counts for the full pipeline on `shape`. FTSSA work inside DMM is booked
/// under module "ftssa"; DPAM and the final fusion under "dpam".
FlopReport count_pipeline(const MgdfisShape& shape);

}  // namespace mgdfis
