#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "layers.hpp"
#include "tensor.hpp"

namespace mgdfis {

/// MGDT container: "MGDT", version 1, dtype (0 real64, 1 complex as re/im
/// float64 pairs), rank, rank little-endian u64 dims, little-endian payload.
enum class MgdtDtype : std::uint8_t { real64 = 0, complex128 = 1 };

struct MgdtBlob {
  MgdtDtype dtype = MgdtDtype::real64;
  std::vector<std::uint64_t> shape;
  std::vector<double> values;  // interleaved (re, im) for complex128
};

std::vector<std::uint8_t> encode_mgdt(const MgdtBlob& blob);
/// Throws FormatError carrying the byte offset of the first bad field.
MgdtBlob decode_mgdt(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_tensor(const Tensor& t);
/// Reads a real tensor of rank ≤ 4 (leading axes padded with 1); higher ranks
/// are accepted when their extra leading axes are 1.
Tensor decode_tensor(std::span<const std::uint8_t> bytes);
Tensor read_tensor(const std::filesystem::path& path);
void write_tensor(const std::filesystem::path& path, const Tensor& t);

/// 64-bit FNV-1a.
std::uint64_t fnv1a(std::span<const std::uint8_t> bytes);
std::string hex64(std::uint64_t v);

/// Writes one <name>.mgdt per parameter view and returns (name, shape, digest)
/// lines suitable for a manifest.
std::vector<std::string> dump_views(const std::filesystem::path& dir,
                                    const std::vector<ParamView>& views);

}  // namespace mgdfis
