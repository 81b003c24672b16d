#include "wkam/io.hpp"

#include <openssl/evp.h>

#include <bit>
#include <cstring>
#include <fmt/format.h>
#include <fstream>
#include <sstream>

namespace wkam {

static_assert(std::endian::native == std::endian::little, "grid files are written in host order");

namespace {

constexpr char magic[8] = {'W', 'K', 'A', 'M', 'G', 'R', 'I', 'D'};

template <class T>
void put(std::string& buf, T v) {
  char raw[sizeof(T)];
  std::memcpy(raw, &v, sizeof(T));
  buf.append(raw, sizeof(T));
}

template <class T>
T get(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

std::filesystem::path temp_for(const std::filesystem::path& path) {
  auto tmp = path;
  tmp += ".tmp";
  return tmp;
}

}  // namespace

void write_text_atomic(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = temp_for(path);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ConfigError("cannot write " + tmp.string());
    out.write(text.data(), std::streamsize(text.size()));
    if (!out) throw ConfigError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_grid(const std::filesystem::path& path, const GridHeader& h, const std::vector<double>& values) {
  if (h.rank != 1 && h.rank != 2) throw ConfigError("grid rank must be 1 or 2");
  if (h.rows * h.cols != values.size()) throw ConfigError("grid shape does not match the data");
  if (h.tag.size() > 16) throw ConfigError("grid tag longer than 16 bytes");
  std::string buf;
  buf.reserve(64 + 8 * values.size());
  buf.append(magic, 8);
  put(buf, h.version);
  put(buf, h.rank);
  put(buf, h.rows);
  put(buf, h.cols);
  put(buf, h.param);
  put(buf, h.key);
  std::string tag = h.tag;
  tag.resize(16, '\0');
  buf += tag;
  for (double v : values) put(buf, v);
  write_text_atomic(path, buf);
}

GridData read_grid(const std::filesystem::path& path) {
  const std::string buf = read_text(path);
  if (buf.size() < 64 || std::memcmp(buf.data(), magic, 8) != 0) throw ConfigError(path.string() + " is not a grid file");
  GridData d;
  auto& h = d.header;
  h.version = get<std::uint32_t>(buf.data() + 8);
  h.rank = get<std::uint32_t>(buf.data() + 12);
  h.rows = get<std::uint64_t>(buf.data() + 16);
  h.cols = get<std::uint64_t>(buf.data() + 24);
  h.param = get<double>(buf.data() + 32);
  h.key = get<std::uint64_t>(buf.data() + 40);
  h.tag.assign(buf.data() + 48, 16);
  h.tag.erase(h.tag.find_last_not_of('\0') + 1);
  if (h.version != 1) throw ConfigError(fmt::format("unsupported grid version {}", h.version));
  if (buf.size() != 64 + 8 * h.rows * h.cols) throw ConfigError(path.string() + " has a truncated payload");
  d.values.resize(h.rows * h.cols);
  std::memcpy(d.values.data(), buf.data() + 64, 8 * d.values.size());
  return d;
}

void write_field(const std::filesystem::path& path, const ScalarField& u, double param, std::uint64_t key,
                 const std::string& tag) {
  const auto& g = u.geometry();
  GridHeader h;
  h.rank = std::uint32_t(g.dim());
  h.rows = std::uint64_t(g.dim() == 1 ? g.n() : g.n());
  h.cols = std::uint64_t(g.dim() == 1 ? 1 : g.n());
  h.param = param;
  h.key = key;
  h.tag = tag;
  write_grid(path, h, {u.values().begin(), u.values().end()});
}

ScalarField read_field(const std::filesystem::path& path, double* param) {
  auto d = read_grid(path);
  if (d.header.rank == 2 && d.header.rows != d.header.cols) throw ConfigError("field grids must be square");
  TorusGeometry g(int(d.header.rank), int(d.header.rows));
  if (param) *param = d.header.param;
  return ScalarField(g, std::move(d.values), d.header.tag);
}

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1) throw Error(ExitCode::invariant_violation, "sha256 failed");
  std::string hex;
  for (unsigned i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
  return hex;
}

std::uint64_t key_prefix(const std::string& hex) { return std::stoull(hex.substr(0, 16), nullptr, 16); }

std::string format_double(double v) { return fmt::format("{:.17g}", v); }

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns,
                     const std::string& comment)
    : path_(path), columns_(columns.size()) {
  if (!comment.empty()) buffer_ += "# " + comment + "\n";
  for (const auto& c : columns) cell(c);
  end_row();
}

void CsvWriter::cell(const std::string& text) {
  if (in_row_ == columns_) throw ConfigError("csv row has too many cells");
  if (in_row_++) buffer_ += ',';
  if (text.find_first_of(",\"\n\r") == std::string::npos) {
    buffer_ += text;
    return;
  }
  buffer_ += '"';
  for (char ch : text) {
    if (ch == '"') buffer_ += '"';
    buffer_ += ch;
  }
  buffer_ += '"';
}

CsvWriter& CsvWriter::operator<<(double v) {
  cell(format_double(v));
  return *this;
}
CsvWriter& CsvWriter::operator<<(long v) {
  cell(std::to_string(v));
  return *this;
}
CsvWriter& CsvWriter::operator<<(const std::string& v) {
  cell(v);
  return *this;
}

void CsvWriter::end_row() {
  if (in_row_ != columns_) throw ConfigError("csv row has too few cells");
  buffer_ += '\n';
  in_row_ = 0;
}

void CsvWriter::close() {
  if (closed_) return;
  closed_ = true;
  write_text_atomic(path_, buffer_);
}

CsvWriter::~CsvWriter() {
  try {
    close();
  } catch (...) {
  }
}

}  // namespace wkam
