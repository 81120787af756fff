#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "patcard/util.hpp"

using namespace patcard;

//---------------------------------------------------------------------------
// Independent SHA-256 reference (straight FIPS 180-4, no library code) so the
// production digests are checked against a second implementation.
//---------------------------------------------------------------------------

namespace {

struct RefSha256 {
  static uint32_t rotr(uint32_t x, int n) { return (x >> n) | (x << (32 - n)); }

  static Digest256 digest(const std::string& msg) {
    static const uint32_t k[64] = {
        0x428a2f98, 0x71374491, 0xb5c0fbcf, 0xe9b5dba5, 0x3956c25b, 0x59f111f1,
        0x923f82a4, 0xab1c5ed5, 0xd807aa98, 0x12835b01, 0x243185be, 0x550c7dc3,
        0x72be5d74, 0x80deb1fe, 0x9bdc06a7, 0xc19bf174, 0xe49b69c1, 0xefbe4786,
        0x0fc19dc6, 0x240ca1cc, 0x2de92c6f, 0x4a7484aa, 0x5cb0a9dc, 0x76f988da,
        0x983e5152, 0xa831c66d, 0xb00327c8, 0xbf597fc7, 0xc6e00bf3, 0xd5a79147,
        0x06ca6351, 0x14292967, 0x27b70a85, 0x2e1b2138, 0x4d2c6dfc, 0x53380d13,
        0x650a7354, 0x766a0abb, 0x81c2c92e, 0x92722c85, 0xa2bfe8a1, 0xa81a664b,
        0xc24b8b70, 0xc76c51a3, 0xd192e819, 0xd6990624, 0xf40e3585, 0x106aa070,
        0x19a4c116, 0x1e376c08, 0x2748774c, 0x34b0bcb5, 0x391c0cb3, 0x4ed8aa4a,
        0x5b9cca4f, 0x682e6ff3, 0x748f82ee, 0x78a5636f, 0x84c87814, 0x8cc70208,
        0x90befffa, 0xa4506ceb, 0xbef9a3f7, 0xc67178f2};
    uint32_t h[8] = {0x6a09e667, 0xbb67ae85, 0x3c6ef372, 0xa54ff53a,
                     0x510e527f, 0x9b05688c, 0x1f83d9ab, 0x5be0cd19};

    std::string p = msg;
    const uint64_t bits = static_cast<uint64_t>(msg.size()) * 8;
    p.push_back(static_cast<char>(0x80));
    while (p.size() % 64 != 56) p.push_back('\0');
    for (int i = 7; i >= 0; --i) p.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));

    for (size_t off = 0; off < p.size(); off += 64) {
      uint32_t w[64];
      for (int t = 0; t < 16; ++t)
        w[t] = (static_cast<uint8_t>(p[off + 4 * t]) << 24) |
               (static_cast<uint8_t>(p[off + 4 * t + 1]) << 16) |
               (static_cast<uint8_t>(p[off + 4 * t + 2]) << 8) |
               static_cast<uint8_t>(p[off + 4 * t + 3]);
      for (int t = 16; t < 64; ++t) {
        const uint32_t s0 = rotr(w[t - 15], 7) ^ rotr(w[t - 15], 18) ^ (w[t - 15] >> 3);
        const uint32_t s1 = rotr(w[t - 2], 17) ^ rotr(w[t - 2], 19) ^ (w[t - 2] >> 10);
        w[t] = w[t - 16] + s0 + w[t - 7] + s1;
      }
      uint32_t a = h[0], b = h[1], c = h[2], d = h[3];
      uint32_t e = h[4], f = h[5], g = h[6], hh = h[7];
      for (int t = 0; t < 64; ++t) {
        const uint32_t S1 = rotr(e, 6) ^ rotr(e, 11) ^ rotr(e, 25);
        const uint32_t ch = (e & f) ^ (~e & g);
        const uint32_t t1 = hh + S1 + ch + k[t] + w[t];
        const uint32_t S0 = rotr(a, 2) ^ rotr(a, 13) ^ rotr(a, 22);
        const uint32_t maj = (a & b) ^ (a & c) ^ (b & c);
        const uint32_t t2 = S0 + maj;
        hh = g; g = f; f = e; e = d + t1;
        d = c; c = b; b = a; a = t1 + t2;
      }
      h[0] += a; h[1] += b; h[2] += c; h[3] += d;
      h[4] += e; h[5] += f; h[6] += g; h[7] += hh;
    }

    Digest256 out;
    for (int i = 0; i < 8; ++i) {
      out[4 * i] = static_cast<unsigned char>(h[i] >> 24);
      out[4 * i + 1] = static_cast<unsigned char>(h[i] >> 16);
      out[4 * i + 2] = static_cast<unsigned char>(h[i] >> 8);
      out[4 * i + 3] = static_cast<unsigned char>(h[i]);
    }
    return out;
  }
};

std::string temp_path(const char* stem) {
  return std::string("/tmp/patcard_test_util_") + stem;
}

}  // namespace

//---------------------------------------------------------------------------
// hashing
//---------------------------------------------------------------------------

TEST_CASE("sha256 matches published vectors") {
  CHECK(hex(sha256("")) ==
        "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(hex(sha256("abc")) ==
        "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(hex(sha256("abcdbcdecdefdefgefghfghighijhijkijkljklmklmnlmnomnopnopq")) ==
        "248d6a61d20638b8e5c026930c3e6039a33ce45964ff2167f6ecedd419db06c1");
}

TEST_CASE("sha256 matches an independent implementation") {
  std::vector<std::string> messages = {"", "a", "hello world",
                                       std::string(1, '\0'), std::string(55, 'x'),
                                       std::string(56, 'x'), std::string(64, 'x'),
                                       std::string(1000, 'q')};
  // assorted binary content
  std::string bin;
  for (int i = 0; i < 300; ++i) bin.push_back(static_cast<char>((i * 37 + 11) & 0xff));
  messages.push_back(bin);
  for (const std::string& m : messages) CHECK(sha256(m) == RefSha256::digest(m));
}

TEST_CASE("incremental hashing equals one-shot") {
  Sha256 h;
  h.update("hel");
  h.update("lo w");
  h.update("orld");
  CHECK(h.finish() == sha256("hello world"));

  // reuse after finish
  h.update("abc");
  CHECK(h.finish() == sha256("abc"));
}

TEST_CASE("update_u32 and update_sized have pinned byte layouts") {
  {
    Sha256 h;
    h.update_u32(0x01020304u);
    std::string le("\x04\x03\x02\x01", 4);
    CHECK(h.finish() == sha256(le));
  }
  {
    Sha256 h;
    h.update_sized("ab");
    std::string framed("\x02\x00\x00\x00"
                       "ab",
                       6);
    CHECK(h.finish() == sha256(framed));
  }
}

TEST_CASE("hex formats lowercase with leading zeros") {
  Digest256 d{};
  d[0] = 0x0f;
  d[31] = 0xa0;
  std::string s = hex(d);
  REQUIRE(s.size() == 64);
  CHECK(s.substr(0, 2) == "0f");
  CHECK(s.substr(62) == "a0");
}

//---------------------------------------------------------------------------
// dates
//---------------------------------------------------------------------------

TEST_CASE("civil date conversion agrees with a day-walking oracle") {
  // walk every day from 1999-01-01 forward, maintaining y/m/d by hand
  auto leap = [](int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; };
  const int mdays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  int y = 1999, m = 1, d = 1;
  int64_t day = days_from_civil(1999, 1, 1);
  for (int step = 0; step < 40000; ++step) {
    CHECK(days_from_civil(y, m, d) == day);
    int yy, mm, dd;
    civil_from_days(day, yy, mm, dd);
    CHECK(yy == y);
    CHECK(mm == m);
    CHECK(dd == d);
    // advance the oracle one day
    int lim = mdays[m - 1] + (m == 2 && leap(y) ? 1 : 0);
    if (++d > lim) {
      d = 1;
      if (++m > 12) {
        m = 1;
        ++y;
      }
    }
    ++day;
  }
  CHECK(days_from_civil(1970, 1, 1) == 0);
  CHECK(days_from_civil(1969, 12, 31) == -1);
}

TEST_CASE("date parsing and formatting") {
  CHECK(parse_date("2024-02-29") == days_from_civil(2024, 2, 29));
  CHECK(format_date(parse_date("2024-12-31")) == "2024-12-31");
  CHECK(format_date(0) == "1970-01-01");
  CHECK_THROWS_AS(parse_date("2023-02-29"), Error);  // not a leap year
  CHECK_THROWS_AS(parse_date("2024-13-01"), Error);
  CHECK_THROWS_AS(parse_date("2024-00-10"), Error);
  CHECK_THROWS_AS(parse_date("24-01-01"), Error);
  CHECK_THROWS_AS(parse_date("2024-1-01"), Error);
  CHECK_THROWS_AS(parse_date(""), Error);
  CHECK(looks_like_date("2024-01-31"));
  CHECK_FALSE(looks_like_date("2024-1-31"));
  CHECK_FALSE(looks_like_date("not-a-date"));
  CHECK_FALSE(looks_like_date("20240131"));
}

//---------------------------------------------------------------------------
// numbers
//---------------------------------------------------------------------------

TEST_CASE("fmt_double round-trips exactly") {
  std::vector<double> vals = {0.0,  1.0,     -1.0,   0.1,    1.0 / 3.0,
                              1e-7, 6.02e23, 1e308,  -2.5e-9};
  for (double v : vals) {
    double back;
    REQUIRE(parse_f64(fmt_double(v), back));
    CHECK(back == v);
  }
  CHECK(fmt_double(0.5) == "0.5");
  CHECK(fmt_double(2.0) == "2");
}

TEST_CASE("integer and float parsing reject junk") {
  int64_t i;
  double f;
  CHECK(parse_i64("42", i));
  CHECK(i == 42);
  CHECK(parse_i64("-7", i));
  CHECK(i == -7);
  CHECK_FALSE(parse_i64("", i));
  CHECK_FALSE(parse_i64("4.2", i));
  CHECK_FALSE(parse_i64("42x", i));
  CHECK_FALSE(parse_i64("999999999999999999999", i));
  CHECK(parse_f64("2.5e-3", f));
  CHECK(f == 2.5e-3);
  CHECK_FALSE(parse_f64("abc", f));
  CHECK_FALSE(parse_f64("1.5 ", f));
}

TEST_CASE("to_lower") {
  CHECK(to_lower("SeLeCt * FROM T") == "select * from t");
  CHECK(to_lower("") == "");
}

TEST_CASE("fnv1a64 matches the published offset basis and a known value") {
  CHECK(fnv1a64("") == 14695981039346656037ull);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ull);
}

//---------------------------------------------------------------------------
// csv and files
//---------------------------------------------------------------------------

TEST_CASE("csv writer and reader round-trip awkward fields") {
  const std::string path = temp_path("roundtrip.csv");
  {
    CsvWriter w(path);
    w.row({"plain", "with,comma", "with\"quote", "multi\nline", ""});
    w.row({"second", "row", "x", "y", "z"});
    w.flush_close();
  }
  auto rows = read_csv(path);
  REQUIRE(rows.size() == 2);
  REQUIRE(rows[0].size() == 5);
  CHECK(rows[0][1] == "with,comma");
  CHECK(rows[0][2] == "with\"quote");
  CHECK(rows[0][3] == "multi\nline");
  CHECK(rows[0][4] == "");
  CHECK(rows[1][0] == "second");
  std::remove(path.c_str());
}

TEST_CASE("read_file and write_file round-trip binary content") {
  const std::string path = temp_path("blob.bin");
  std::string content("ab\0cd\n\xff", 7);
  write_file(path, content);
  CHECK(read_file(path) == content);
  std::remove(path.c_str());
  CHECK_THROWS_AS(read_file("/nonexistent/dir/file"), IoError);
}

//---------------------------------------------------------------------------
// rng
//---------------------------------------------------------------------------

TEST_CASE("rng below is unbiased and in range") {
  Rng rng(123);
  const uint64_t n = 10;
  const int draws = 100000;
  std::vector<int> counts(n, 0);
  for (int i = 0; i < draws; ++i) {
    uint64_t v = rng.below(n);
    REQUIRE(v < n);
    ++counts[v];
  }
  // chi-square against uniform, df = 9; 27.88 is the 0.1% tail
  double chi2 = 0;
  const double expect = static_cast<double>(draws) / n;
  for (int c : counts) chi2 += (c - expect) * (c - expect) / expect;
  CHECK(chi2 < 27.88);
}

TEST_CASE("rng range is inclusive of both endpoints") {
  Rng rng(7);
  bool lo = false, hi = false;
  for (int i = 0; i < 2000; ++i) {
    int64_t v = rng.range(-3, 3);
    REQUIRE(v >= -3);
    REQUIRE(v <= 3);
    lo = lo || v == -3;
    hi = hi || v == 3;
  }
  CHECK(lo);
  CHECK(hi);
  CHECK(rng.range(5, 5) == 5);
}

TEST_CASE("rng unit stays in [0,1) and has a sane mean") {
  Rng rng(99);
  double sum = 0;
  for (int i = 0; i < 50000; ++i) {
    double u = rng.unit();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(sum / 50000 == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("weighted draws follow the weights") {
  Rng rng(5);
  auto cum = cumulative_weights({1.0, 3.0, 6.0});
  REQUIRE(cum.size() == 3);
  CHECK(cum[2] == doctest::Approx(10.0));
  std::vector<int> counts(3, 0);
  for (int i = 0; i < 100000; ++i) ++counts[rng.weighted(cum)];
  CHECK(counts[0] / 100000.0 == doctest::Approx(0.1).epsilon(0.15));
  CHECK(counts[1] / 100000.0 == doctest::Approx(0.3).epsilon(0.1));
  CHECK(counts[2] / 100000.0 == doctest::Approx(0.6).epsilon(0.05));
}

TEST_CASE("gauss has zero mean and unit variance") {
  Rng rng(31);
  double sum = 0, sq = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    double g = rng.gauss();
    sum += g;
    sq += g * g;
  }
  CHECK(sum / n == doctest::Approx(0.0).epsilon(1).scale(0.02));
  CHECK(sq / n == doctest::Approx(1.0).epsilon(0.03));
}

TEST_CASE("shuffle permutes without losing elements") {
  Rng rng(17);
  std::vector<int> v(100);
  for (int i = 0; i < 100; ++i) v[i] = i;
  std::vector<int> orig = v;
  rng.shuffle(v);
  CHECK(v != orig);  // astronomically unlikely to be identity
  std::set<int> s(v.begin(), v.end());
  CHECK(s.size() == 100);
}

TEST_CASE("same seed reproduces, different seeds differ") {
  Rng a(1234), b(1234), c(4321);
  std::vector<uint64_t> va, vb, vc;
  for (int i = 0; i < 64; ++i) {
    va.push_back(a.below(1000000));
    vb.push_back(b.below(1000000));
    vc.push_back(c.below(1000000));
  }
  CHECK(va == vb);
  CHECK(va != vc);
}
