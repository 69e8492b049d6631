#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "ellab/errors.hpp"
#include "ellab/grid.hpp"

namespace ellab {

namespace {

constexpr std::size_t kHeaderBytes = 32;
constexpr std::uint32_t kVersion = 1;

void put_u32(unsigned char* p, std::uint32_t v) {
  for (int k = 0; k < 4; ++k) p[k] = static_cast<unsigned char>(v >> (8 * k));
}

std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int k = 0; k < 4; ++k) v |= static_cast<std::uint32_t>(p[k]) << (8 * k);
  return v;
}

}  // namespace

void write_field(std::ostream& os, const Field& f) {
  std::array<unsigned char, kHeaderBytes> h{};
  std::memcpy(h.data(), "ELF2", 4);
  put_u32(h.data() + 4, kVersion);
  h[8] = static_cast<unsigned char>(f.rank);
  put_u32(h.data() + 9, static_cast<std::uint32_t>(f.nx));
  put_u32(h.data() + 13, static_cast<std::uint32_t>(f.ny));
  os.write(reinterpret_cast<const char*>(h.data()), h.size());
  std::vector<unsigned char> buf(f.data.size() * 8);
  for (std::size_t k = 0; k < f.data.size(); ++k) {
    const auto bits = std::bit_cast<std::uint64_t>(f.data[k]);
    for (int b = 0; b < 8; ++b) buf[8 * k + b] = static_cast<unsigned char>(bits >> (8 * b));
  }
  os.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!os) throw Error(ErrorKind::Io, "write_field: stream failure");
}

Field read_field(std::istream& is) {
  std::array<unsigned char, kHeaderBytes> h{};
  if (!is.read(reinterpret_cast<char*>(h.data()), h.size()))
    throw Error(ErrorKind::Io, "read_field: truncated header");
  if (std::memcmp(h.data(), "ELF2", 4) != 0) throw Error(ErrorKind::Io, "read_field: bad magic");
  if (get_u32(h.data() + 4) != kVersion) throw Error(ErrorKind::Io, "read_field: unsupported version");
  const int rank = h[8];
  const auto nx = get_u32(h.data() + 9), ny = get_u32(h.data() + 13);
  if (rank > 2 || nx == 0 || ny == 0 || nx > (1u << 16) || ny > (1u << 16))
    throw Error(ErrorKind::Io, "read_field: bad header fields");
  Field f(rank, static_cast<int>(nx), static_cast<int>(ny));
  std::vector<unsigned char> buf(f.data.size() * 8);
  if (!is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size())))
    throw Error(ErrorKind::Io, "read_field: truncated data");
  for (std::size_t k = 0; k < f.data.size(); ++k) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(buf[8 * k + b]) << (8 * b);
    f.data[k] = std::bit_cast<double>(bits);
  }
  return f;
}

void write_snapshot(const std::string& path, const std::vector<const Field*>& fields) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw Error(ErrorKind::Io, "cannot open " + path + " for writing");
  for (const Field* f : fields) write_field(os, *f);
}

std::vector<Field> read_snapshot(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorKind::Io, "cannot open " + path);
  std::vector<Field> out;
  while (is.peek() != std::char_traits<char>::eof()) out.push_back(read_field(is));
  return out;
}

}  // namespace ellab
