// File and text helpers: buffered line reading over plain or gzip files,
// line writing with optional gzip, number formatting that round-trips, and
// the flat key = value config format used by column maps and synthesis specs.

#ifndef TRACELENS_IO_H_
#define TRACELENS_IO_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace tracelens {

bool HasGzipMagic(const std::filesystem::path& path);

// Reads a file one line at a time through a fixed-size buffer. gzip input is
// detected from the magic bytes. Lines are returned without the trailing
// newline (and without a trailing '\r').
class LineReader {
 public:
  explicit LineReader(const std::filesystem::path& path,
                      std::size_t buffer_bytes = 1 << 16);
  ~LineReader();

  LineReader(const LineReader&) = delete;
  LineReader& operator=(const LineReader&) = delete;

  // The view stays valid until the next call.
  bool Next(std::string_view* line);

  bool compressed() const { return compressed_; }
  const std::filesystem::path& path() const { return path_; }

 private:
  bool Refill();

  std::filesystem::path path_;
  void* file_ = nullptr;  // gzFile
  bool compressed_ = false;
  bool eof_ = false;
  std::vector<char> buffer_;
  std::size_t pos_ = 0;
  std::size_t end_ = 0;
  std::string carry_;
};

// Writes newline-terminated lines, gzip-compressed when requested. The gzip
// header carries no timestamp, so identical content gives identical bytes.
class LineWriter {
 public:
  LineWriter(const std::filesystem::path& path, bool gzip);
  ~LineWriter();

  LineWriter(const LineWriter&) = delete;
  LineWriter& operator=(const LineWriter&) = delete;

  void Write(std::string_view line);
  void Close();

  std::uint64_t lines() const { return lines_; }

 private:
  std::filesystem::path path_;
  void* file_ = nullptr;  // gzFile
  std::uint64_t lines_ = 0;
};

std::string ReadTextFile(const std::filesystem::path& path);
void WriteTextFile(const std::filesystem::path& path, std::string_view text);

// Shortest decimal form that parses back to the same double.
std::string FormatDouble(double value);
void AppendDouble(std::string* out, double value);

std::optional<double> ParseDouble(std::string_view text);
std::optional<std::int64_t> ParseInt(std::string_view text);
std::optional<std::uint64_t> ParseUint(std::string_view text);

// Splits on `sep` without collapsing empty fields.
void SplitFields(std::string_view line, char sep,
                 std::vector<std::string_view>* fields);

std::string_view Trim(std::string_view s);

struct KeyValueEntry {
  std::string key;
  std::string value;
  int line = 0;
};

// Parses `key = value` lines. '#' starts a comment. A `[section]` header
// prefixes following keys with "section.". Duplicate keys raise
// ValidationError naming the key.
std::vector<KeyValueEntry> ParseKeyValueText(std::string_view text);
std::vector<KeyValueEntry> LoadKeyValueFile(const std::filesystem::path& path);

}  // namespace tracelens

#endif  // TRACELENS_IO_H_
