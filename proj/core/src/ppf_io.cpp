#include <bit>
#include <cstdint>
#include <cstring>
#include <sstream>

#include "ephemera/ephemerality.hpp"
#include "ephemera/errors.hpp"
#include "ephemera/io.hpp"

namespace ephemera {

namespace {

constexpr char kMagic[4] = {'P', 'P', 'F', '1'};
constexpr std::size_t kHeaderBytes = 8;

void put_u32(std::uint32_t v, unsigned char* p) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xffu);
}

std::uint32_t get_u32(const unsigned char* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace

std::vector<unsigned char> encode_ppf(std::span<const float> tau) {
  std::vector<unsigned char> out(kHeaderBytes + 4 * tau.size());
  std::memcpy(out.data(), kMagic, 4);
  put_u32(static_cast<std::uint32_t>(tau.size()), out.data() + 4);
  for (std::size_t i = 0; i < tau.size(); ++i) {
    put_u32(std::bit_cast<std::uint32_t>(tau[i]), out.data() + kHeaderBytes + 4 * i);
  }
  return out;
}

std::vector<float> decode_ppf(std::span<const unsigned char> bytes,
                              const std::string& source) {
  if (bytes.size() < kHeaderBytes || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw FormatError(source + ": not a PPF1 sidecar");
  }
  const std::uint32_t n = get_u32(bytes.data() + 4);
  if (bytes.size() != kHeaderBytes + 4 * static_cast<std::size_t>(n)) {
    std::ostringstream msg;
    msg << source << ": header declares " << n << " scores but payload is "
        << bytes.size() - kHeaderBytes << " bytes";
    throw FormatError(msg.str());
  }
  std::vector<float> tau(n);
  for (std::size_t i = 0; i < n; ++i) {
    tau[i] = std::bit_cast<float>(get_u32(bytes.data() + kHeaderBytes + 4 * i));
  }
  return tau;
}

void write_ppf(const std::filesystem::path& path, const PPField& field) {
  write_file_atomic(path, encode_ppf(field.tau));
}

PPField read_ppf(const std::filesystem::path& path, std::string scan_id) {
  PPField field;
  field.scan_id = std::move(scan_id);
  field.tau = decode_ppf(read_file_bytes(path), path.string());
  return field;
}

}  // namespace ephemera
