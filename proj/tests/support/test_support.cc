#include "test_support.h"

#include <zlib.h>

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <unistd.h>

#include "tracelens/io.h"

namespace tracelens::testing {

namespace fs = std::filesystem;

TempDir::TempDir(std::string_view tag) {
  static std::atomic<int> counter{0};
  path_ = fs::temp_directory_path() /
          ("tracelens_" + std::string(tag) + "_" + std::to_string(::getpid()) + "_" +
           std::to_string(counter++));
  fs::remove_all(path_);
  fs::create_directories(path_);
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

void WriteLines(const fs::path& path, const std::vector<std::string>& lines, bool gzip) {
  fs::create_directories(path.parent_path());
  LineWriter w(path, gzip);
  for (const auto& l : lines) w.Write(l);
  w.Close();
}

std::string DirectoryDigest(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  uLong crc = crc32(0L, Z_NULL, 0);
  uLong adler = adler32(0L, Z_NULL, 0);
  for (const auto& f : files) {
    const std::string name = fs::relative(f, dir).string();
    const std::string body = ReadTextFile(f);
    for (const std::string* s : {&name, &body}) {
      crc = crc32(crc, reinterpret_cast<const Bytef*>(s->data()), static_cast<uInt>(s->size()));
      adler = adler32(adler, reinterpret_cast<const Bytef*>(s->data()),
                      static_cast<uInt>(s->size()));
    }
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%08lx%08lx", crc, adler);
  return buf;
}

}  // namespace tracelens::testing
