#include <fstream>
#include <iterator>
#include <system_error>

#include <unistd.h>

#include "ephemera/errors.hpp"
#include "ephemera/io.hpp"

namespace ephemera {

namespace {

void write_bytes_atomic(const std::filesystem::path& path, const char* data,
                        std::size_t size) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open '" + tmp.string() + "' for writing");
    out.write(data, static_cast<std::streamsize>(size));
    out.flush();
    if (!out) throw Error("failed writing '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error("cannot rename into '" + path.string() + "': " + ec.message());
  }
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path,
                       std::string_view contents) {
  write_bytes_atomic(path, contents.data(), contents.size());
}

void write_file_atomic(const std::filesystem::path& path,
                       std::span<const unsigned char> contents) {
  write_bytes_atomic(path, reinterpret_cast<const char*>(contents.data()),
                     contents.size());
}

std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace ephemera
