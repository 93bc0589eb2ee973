#include "io.hpp"

#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

namespace mgdfis {

namespace {

constexpr std::uint8_t kMagic[4] = {'M', 'G', 'D', 'T'};
constexpr std::uint8_t kVersion = 1;
constexpr std::size_t kMaxRank = 8;

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint64_t get_u64(std::span<const std::uint8_t> bytes, std::size_t at) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes[at + i]) << (8 * i);
  return v;
}

}  // namespace

std::vector<std::uint8_t> encode_mgdt(const MgdtBlob& blob) {
  if (blob.shape.size() > kMaxRank) throw FormatError(7, "rank above 8 cannot be encoded");
  std::uint64_t count = blob.dtype == MgdtDtype::complex128 ? 2 : 1;
  for (auto d : blob.shape) count *= d;
  if (count != blob.values.size()) {
    throw ShapeError("payload", "MGDT payload length does not match shape");
  }
  std::vector<std::uint8_t> out(kMagic, kMagic + 4);
  out.push_back(kVersion);
  out.push_back(static_cast<std::uint8_t>(blob.dtype));
  out.push_back(static_cast<std::uint8_t>(blob.shape.size()));
  for (auto d : blob.shape) put_u64(out, d);
  out.reserve(out.size() + 8 * blob.values.size());
  for (double v : blob.values) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof bits);
    put_u64(out, bits);
  }
  return out;
}

MgdtBlob decode_mgdt(std::span<const std::uint8_t> bytes) {
  for (std::size_t i = 0; i < 4 && i < bytes.size(); ++i) {
    if (bytes[i] != kMagic[i]) throw FormatError(i, "bad magic, expected \"MGDT\"");
  }
  if (bytes.size() > 4 && bytes[4] != kVersion) {
    throw FormatError(4, "unsupported MGDT version " + std::to_string(bytes[4]));
  }
  if (bytes.size() > 5 && bytes[5] > 1) {
    throw FormatError(5, "unknown dtype code " + std::to_string(bytes[5]));
  }
  if (bytes.size() < 7) throw FormatError(bytes.size(), "truncated MGDT header");
  MgdtBlob blob;
  blob.dtype = static_cast<MgdtDtype>(bytes[5]);
  const std::size_t rank = bytes[6];
  if (rank > kMaxRank) throw FormatError(6, "rank " + std::to_string(rank) + " above 8");

  std::size_t at = 7;
  if (bytes.size() < at + 8 * rank) throw FormatError(bytes.size(), "truncated dims");
  std::uint64_t count = blob.dtype == MgdtDtype::complex128 ? 2 : 1;
  for (std::size_t i = 0; i < rank; ++i, at += 8) {
    const std::uint64_t d = get_u64(bytes, at);
    if (d == 0) throw FormatError(at, "zero-length dimension");
    if (d > (std::uint64_t{1} << 40) || count > (std::uint64_t{1} << 40) / d) {
      throw FormatError(at, "dimension overflows payload size");
    }
    count *= d;
    blob.shape.push_back(d);
  }
  const std::size_t expected = at + 8 * count;
  if (bytes.size() < expected) {
    throw FormatError(bytes.size(), "payload truncated: expected " + std::to_string(expected) +
                                        " bytes in total");
  }
  if (bytes.size() > expected) throw FormatError(expected, "trailing bytes after payload");
  blob.values.resize(count);
  for (std::size_t i = 0; i < count; ++i, at += 8) {
    const std::uint64_t bits = get_u64(bytes, at);
    std::memcpy(&blob.values[i], &bits, sizeof bits);
  }
  return blob;
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(0, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError(0, "cannot write " + path.string());
}

std::vector<std::uint8_t> encode_tensor(const Tensor& t) {
  const Dims& d = t.dims();
  return encode_mgdt({MgdtDtype::real64, {d[0], d[1], d[2], d[3]},
                      std::vector<double>(t.data().begin(), t.data().end())});
}

Tensor decode_tensor(std::span<const std::uint8_t> bytes) {
  MgdtBlob blob = decode_mgdt(bytes);
  if (blob.dtype != MgdtDtype::real64) throw FormatError(5, "expected a real64 tensor");
  const std::size_t rank = blob.shape.size();
  Dims dims{1, 1, 1, 1};
  for (std::size_t i = 0; i < rank; ++i) {
    const std::size_t axis_offset = 7 + 8 * i;
    if (i + 4 < rank) {
      if (blob.shape[i] != 1) throw FormatError(axis_offset, "rank above 4 with a non-unit leading axis");
      continue;
    }
    dims[4 - (rank - i)] = blob.shape[i];
  }
  return Tensor(dims, std::move(blob.values));
}

Tensor read_tensor(const std::filesystem::path& path) { return decode_tensor(read_file(path)); }

void write_tensor(const std::filesystem::path& path, const Tensor& t) {
  write_file(path, encode_tensor(t));
}

std::uint64_t fnv1a(std::span<const std::uint8_t> bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (auto b : bytes) {
    h ^= b;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  std::ostringstream os;
  os << std::hex;
  os.width(16);
  os.fill('0');
  os << v;
  return os.str();
}

std::vector<std::string> dump_views(const std::filesystem::path& dir,
                                    const std::vector<ParamView>& views) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> lines;
  for (const auto& v : views) {
    MgdtBlob blob{v.complex ? MgdtDtype::complex128 : MgdtDtype::real64,
                  std::vector<std::uint64_t>(v.shape.begin(), v.shape.end()),
                  std::vector<double>(v.values.begin(), v.values.end())};
    const auto bytes = encode_mgdt(blob);
    write_file(dir / (v.name + ".mgdt"), bytes);
    std::ostringstream line;
    line << v.name << " = " << (v.complex ? "complex128" : "real64") << " [";
    for (std::size_t i = 0; i < v.shape.size(); ++i) line << (i ? "," : "") << v.shape[i];
    line << "] fnv1a:" << hex64(fnv1a(bytes));
    lines.push_back(line.str());
  }
  return lines;
}

}  // namespace mgdfis
