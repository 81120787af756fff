#include "patcard/util.hpp"

#include <openssl/evp.h>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>

namespace patcard {

//---------------------------------------------------------------------------
// Sha256
//---------------------------------------------------------------------------

Sha256::Sha256() {
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx) throw InternalError("EVP_MD_CTX_new failed");
  ctx_ = ctx;
  reset();
}

Sha256::~Sha256() { EVP_MD_CTX_free(static_cast<EVP_MD_CTX*>(ctx_)); }

void Sha256::reset() {
  if (EVP_DigestInit_ex(static_cast<EVP_MD_CTX*>(ctx_), EVP_sha256(), nullptr) != 1)
    throw InternalError("EVP_DigestInit_ex failed");
}

void Sha256::update(const void* data, size_t len) {
  if (EVP_DigestUpdate(static_cast<EVP_MD_CTX*>(ctx_), data, len) != 1)
    throw InternalError("EVP_DigestUpdate failed");
}

void Sha256::update_u32(uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                        static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
  update(b, 4);
}

void Sha256::update_sized(std::string_view s) {
  update_u32(static_cast<uint32_t>(s.size()));
  update(s.data(), s.size());
}

Digest256 Sha256::finish() {
  Digest256 out{};
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(static_cast<EVP_MD_CTX*>(ctx_), out.data(), &len) != 1 || len != 32)
    throw InternalError("EVP_DigestFinal_ex failed");
  reset();
  return out;
}

Digest256 sha256(std::string_view data) {
  thread_local Sha256 h;
  h.update(data);
  return h.finish();
}

std::string hex(const Digest256& d) {
  static const char* digits = "0123456789abcdef";
  std::string s(64, '0');
  for (size_t i = 0; i < 32; ++i) {
    s[2 * i] = digits[d[i] >> 4];
    s[2 * i + 1] = digits[d[i] & 0xf];
  }
  return s;
}

//---------------------------------------------------------------------------
// dates (Gregorian civil-day algorithms)
//---------------------------------------------------------------------------

int64_t days_from_civil(int y, int m, int d) {
  y -= m <= 2;
  const int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<int64_t>(doe) - 719468;
}

void civil_from_days(int64_t days, int& y, int& m, int& d) {
  days += 719468;
  const int64_t era = (days >= 0 ? days : days - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(days - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const int64_t yy = static_cast<int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = static_cast<int>(doy - (153 * mp + 2) / 5 + 1);
  m = static_cast<int>(mp + (mp < 10 ? 3 : -9));
  y = static_cast<int>(yy + (m <= 2));
}

bool looks_like_date(std::string_view s) {
  if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
  for (size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
    if (s[i] < '0' || s[i] > '9') return false;
  return true;
}

int64_t parse_date(std::string_view s) {
  if (!looks_like_date(s)) throw Error("bad date literal: " + std::string(s));
  int y = (s[0] - '0') * 1000 + (s[1] - '0') * 100 + (s[2] - '0') * 10 + (s[3] - '0');
  int m = (s[5] - '0') * 10 + (s[6] - '0');
  int d = (s[8] - '0') * 10 + (s[9] - '0');
  if (m < 1 || m > 12 || d < 1 || d > 31) throw Error("bad date literal: " + std::string(s));
  const int64_t days = days_from_civil(y, m, d);
  // days_from_civil normalizes overflowed days into the next month; reject
  // anything that does not survive the round trip (e.g. Feb 29 off-leap).
  int yy, mm, dd;
  civil_from_days(days, yy, mm, dd);
  if (yy != y || mm != m || dd != d) throw Error("bad date literal: " + std::string(s));
  return days;
}

std::string format_date(int64_t days) {
  int y, m, d;
  civil_from_days(days, y, m, d);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", y, m, d);
  return buf;
}

//---------------------------------------------------------------------------
// numbers and text
//---------------------------------------------------------------------------

std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (c >= 'A' && c <= 'Z') c += 32;
  return out;
}

bool parse_i64(std::string_view s, int64_t& out) {
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

bool parse_f64(std::string_view s, double& out) {
  auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

//---------------------------------------------------------------------------
// csv
//---------------------------------------------------------------------------

CsvWriter::CsvWriter(const std::string& path) : path_(path) {
  FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("cannot open for writing: " + path);
  f_ = f;
  buf_.reserve(1 << 16);
}

CsvWriter::~CsvWriter() {
  if (f_) flush_close();
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  for (size_t i = 0; i < fields.size(); ++i) {
    if (i) buf_ += ',';
    const std::string& v = fields[i];
    if (v.find_first_of(",\"\r\n") != std::string::npos) {
      buf_ += '"';
      for (char c : v) {
        if (c == '"') buf_ += '"';
        buf_ += c;
      }
      buf_ += '"';
    } else {
      buf_ += v;
    }
  }
  buf_ += '\n';
  if (buf_.size() > (1u << 20)) {
    if (std::fwrite(buf_.data(), 1, buf_.size(), static_cast<FILE*>(f_)) != buf_.size())
      throw IoError("write failed: " + path_);
    buf_.clear();
  }
}

void CsvWriter::flush_close() {
  FILE* f = static_cast<FILE*>(f_);
  if (!buf_.empty() && std::fwrite(buf_.data(), 1, buf_.size(), f) != buf_.size())
    throw IoError("write failed: " + path_);
  buf_.clear();
  std::fclose(f);
  f_ = nullptr;
}

std::string read_file(const std::string& path) {
  FILE* f = std::fopen(path.c_str(), "rb");
  if (!f) throw IoError("cannot open: " + path);
  std::string out;
  char buf[1 << 16];
  size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, f)) > 0) out.append(buf, n);
  std::fclose(f);
  return out;
}

void write_file(const std::string& path, std::string_view content) {
  FILE* f = std::fopen(path.c_str(), "wb");
  if (!f) throw IoError("cannot open for writing: " + path);
  size_t n = std::fwrite(content.data(), 1, content.size(), f);
  std::fclose(f);
  if (n != content.size()) throw IoError("write failed: " + path);
}

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::string text = read_file(path);
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false;
  bool any = false;
  for (size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        quoted = true;
        any = true;
        break;
      case ',':
        row.push_back(std::move(field));
        field.clear();
        any = true;
        break;
      case '\r':
        break;
      case '\n':
        if (any || !field.empty()) {
          row.push_back(std::move(field));
          field.clear();
          rows.push_back(std::move(row));
          row.clear();
          any = false;
        }
        break;
      default:
        field += c;
        any = true;
    }
  }
  if (any || !field.empty()) {
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

//---------------------------------------------------------------------------
// Rng
//---------------------------------------------------------------------------

uint64_t Rng::below(uint64_t n) {
  if (n == 0) throw InternalError("Rng::below(0)");
  uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  uint64_t v;
  do {
    v = g_();
  } while (v >= limit);
  return v % n;
}

int64_t Rng::range(int64_t lo, int64_t hi) {
  if (lo > hi) throw InternalError("Rng::range lo > hi");
  return lo + static_cast<int64_t>(below(static_cast<uint64_t>(hi - lo) + 1));
}

double Rng::unit() { return (g_() >> 11) * 0x1.0p-53; }

double Rng::gauss() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = unit(), u2 = unit();
  while (u1 <= 0) u1 = unit();  // avoid log(0)
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * 3.14159265358979323846 * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

size_t Rng::weighted(const std::vector<double>& cumulative) {
  if (cumulative.empty()) throw InternalError("Rng::weighted on empty weights");
  double u = unit() * cumulative.back();
  size_t lo = 0, hi = cumulative.size() - 1;
  while (lo < hi) {
    size_t mid = (lo + hi) / 2;
    if (cumulative[mid] <= u)
      lo = mid + 1;
    else
      hi = mid;
  }
  return lo;
}

std::vector<double> cumulative_weights(const std::vector<double>& w) {
  std::vector<double> c(w.size());
  double s = 0;
  for (size_t i = 0; i < w.size(); ++i) {
    if (w[i] < 0) throw Error("negative weight");
    s += w[i];
    c[i] = s;
  }
  if (s <= 0) throw Error("weights sum to zero");
  return c;
}

uint64_t fnv1a64(std::string_view s) {
  uint64_t h = 14695981039346656037ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace patcard
