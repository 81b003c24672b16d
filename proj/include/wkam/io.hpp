#pragma once

#include "wkam/field.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace wkam {

// Binary grid file: 64-byte header followed by little-endian float64 values,
// row-major.
//   0  char[8]  magic "WKAMGRID"
//   8  u32      version
//  12  u32      rank (1 or 2)
//  16  u64      rows
//  24  u64      cols
//  32  f64      param (free scalar, e.g. alpha or t)
//  40  u64      key (leading bytes of the producing config hash)
//  48  char[16] tag
struct GridHeader {
  std::uint32_t version = 1;
  std::uint32_t rank = 1;
  std::uint64_t rows = 0, cols = 1;
  double param = 0.0;
  std::uint64_t key = 0;
  std::string tag;
};

struct GridData {
  GridHeader header;
  std::vector<double> values;
};

void write_grid(const std::filesystem::path& path, const GridHeader& header, const std::vector<double>& values);
GridData read_grid(const std::filesystem::path& path);

void write_field(const std::filesystem::path& path, const ScalarField& u, double param, std::uint64_t key,
                 const std::string& tag);
ScalarField read_field(const std::filesystem::path& path, double* param = nullptr);

std::string sha256_hex(const std::string& data);
std::uint64_t key_prefix(const std::string& hex);

// Minimal CSV writer: LF line endings, RFC-4180 quoting, optional '#' comment header.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns,
            const std::string& comment = {});
  CsvWriter& operator<<(double v);
  CsvWriter& operator<<(long v);
  CsvWriter& operator<<(int v) { return *this << long(v); }
  CsvWriter& operator<<(std::size_t v) { return *this << long(v); }
  CsvWriter& operator<<(bool v) { return *this << long(v ? 1 : 0); }
  CsvWriter& operator<<(const std::string& v);
  void end_row();
  void close();
  ~CsvWriter();

 private:
  void cell(const std::string& text);
  std::filesystem::path path_;
  std::string buffer_;
  std::size_t columns_, in_row_ = 0;
  bool closed_ = false;
};

std::string format_double(double v);

// Write via a temporary file and rename into place.
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace wkam
