#include "tracelens/io.h"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "tracelens/errors.h"

namespace tracelens {

namespace fs = std::filesystem;

bool HasGzipMagic(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::array<unsigned char, 2> magic{};
  in.read(reinterpret_cast<char*>(magic.data()), 2);
  return in.gcount() == 2 && magic[0] == 0x1f && magic[1] == 0x8b;
}

LineReader::LineReader(const fs::path& path, std::size_t buffer_bytes)
    : path_(path), buffer_(std::max<std::size_t>(buffer_bytes, 64)) {
  compressed_ = HasGzipMagic(path);
  // gzopen reads uncompressed files transparently.
  gzFile f = gzopen(path.c_str(), "rb");
  if (f == nullptr) throw IoError("cannot open " + path.string());
  gzbuffer(f, static_cast<unsigned>(buffer_.size()));
  file_ = f;
}

LineReader::~LineReader() {
  if (file_ != nullptr) gzclose(static_cast<gzFile>(file_));
}

bool LineReader::Refill() {
  if (eof_) return false;
  const int n = gzread(static_cast<gzFile>(file_), buffer_.data(),
                       static_cast<unsigned>(buffer_.size()));
  if (n < 0) {
    int errnum = 0;
    const char* msg = gzerror(static_cast<gzFile>(file_), &errnum);
    throw IoError("read error in " + path_.string() + ": " + msg);
  }
  pos_ = 0;
  end_ = static_cast<std::size_t>(n);
  if (n == 0) eof_ = true;
  return n > 0;
}

bool LineReader::Next(std::string_view* line) {
  carry_.clear();
  bool have_partial = false;
  for (;;) {
    if (pos_ == end_ && !Refill()) {
      if (!have_partial) return false;
      break;
    }
    const char* begin = buffer_.data() + pos_;
    const void* nl = std::memchr(begin, '\n', end_ - pos_);
    if (nl != nullptr) {
      const std::size_t len = static_cast<const char*>(nl) - begin;
      pos_ += len + 1;
      if (!have_partial) {
        *line = std::string_view(begin, len);
        if (!line->empty() && line->back() == '\r') line->remove_suffix(1);
        return true;
      }
      carry_.append(begin, len);
      break;
    }
    carry_.append(begin, end_ - pos_);
    pos_ = end_;
    have_partial = true;
  }
  *line = carry_;
  if (!line->empty() && line->back() == '\r') line->remove_suffix(1);
  return true;
}

LineWriter::LineWriter(const fs::path& path, bool gzip) : path_(path) {
  gzFile f = gzopen(path.c_str(), gzip ? "wb6" : "wbT");
  if (f == nullptr) throw IoError("cannot create " + path.string());
  file_ = f;
}

LineWriter::~LineWriter() {
  if (file_ != nullptr) gzclose(static_cast<gzFile>(file_));
}

void LineWriter::Write(std::string_view line) {
  gzFile f = static_cast<gzFile>(file_);
  if (f == nullptr) throw ContractError("write after close: " + path_.string());
  if ((!line.empty() &&
       gzwrite(f, line.data(), static_cast<unsigned>(line.size())) == 0) ||
      gzputc(f, '\n') < 0) {
    throw IoError("write error in " + path_.string());
  }
  ++lines_;
}

void LineWriter::Close() {
  if (file_ == nullptr) return;
  const int rc = gzclose(static_cast<gzFile>(file_));
  file_ = nullptr;
  if (rc != Z_OK) throw IoError("close error in " + path_.string());
}

std::string ReadTextFile(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void WriteTextFile(const fs::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("write error in " + path.string());
}

std::string FormatDouble(double value) {
  std::string out;
  AppendDouble(&out, value);
  return out;
}

void AppendDouble(std::string* out, double value) {
  std::array<char, 32> buf;
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  out->append(buf.data(), ptr);
}

std::optional<double> ParseDouble(std::string_view text) {
  text = Trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    return std::nullopt;
  }
  return v;
}

std::optional<std::int64_t> ParseInt(std::string_view text) {
  text = Trim(text);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    return std::nullopt;
  }
  return v;
}

std::optional<std::uint64_t> ParseUint(std::string_view text) {
  text = Trim(text);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    return std::nullopt;
  }
  return v;
}

void SplitFields(std::string_view line, char sep,
                 std::vector<std::string_view>* fields) {
  fields->clear();
  std::size_t start = 0;
  for (;;) {
    const std::size_t p = line.find(sep, start);
    if (p == std::string_view::npos) {
      fields->push_back(line.substr(start));
      return;
    }
    fields->push_back(line.substr(start, p - start));
    start = p + 1;
  }
}

std::string_view Trim(std::string_view s) {
  const auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n';
  };
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<KeyValueEntry> ParseKeyValueText(std::string_view text) {
  std::vector<KeyValueEntry> entries;
  std::unordered_set<std::string> seen;
  std::string section;
  int line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(start, nl - start);
    start = nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = Trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ValidationError("line " + std::to_string(line_no),
                              "unterminated section header");
      }
      section = std::string(Trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ValidationError("line " + std::to_string(line_no),
                            "expected key = value");
    }
    std::string key(Trim(line.substr(0, eq)));
    if (key.empty()) {
      throw ValidationError("line " + std::to_string(line_no), "empty key");
    }
    if (!section.empty()) key = section + "." + key;
    if (!seen.insert(key).second) throw ValidationError(key, "duplicate key");
    entries.push_back({std::move(key), std::string(Trim(line.substr(eq + 1))),
                       line_no});
  }
  return entries;
}

std::vector<KeyValueEntry> LoadKeyValueFile(const fs::path& path) {
  return ParseKeyValueText(ReadTextFile(path));
}

}  // namespace tracelens
