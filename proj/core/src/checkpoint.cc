/* Copyright 2026 The Goldfish Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "goldfish/checkpoint.h"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <vector>

#include "goldfish/error.h"

namespace goldfish::exp {

namespace {

constexpr char kMagic[4] = {'G', 'F', 'C', 'K'};
constexpr std::size_t kHeaderBytes = 4 + 2 + 8 + 8 + 4;

template <typename T>
void put_le(std::vector<unsigned char>& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<unsigned char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xff));
  }
}

template <typename T>
T get_le(const unsigned char* p) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
  return static_cast<T>(v);
}

std::uint32_t crc_of(const unsigned char* p, std::size_t n) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in bounded chunks.
  while (n > 0) {
    const auto len = static_cast<uInt>(std::min<std::size_t>(n, 1u << 30));
    crc = crc32(crc, p, len);
    p += len;
    n -= len;
  }
  return static_cast<std::uint32_t>(crc);
}

}  // namespace

void save_checkpoint(const nn::ParameterVector& params, std::uint32_t round,
                     const std::filesystem::path& path) {
  std::vector<unsigned char> buf;
  buf.reserve(kHeaderBytes + 8 * params.size() + 4);
  buf.insert(buf.end(), std::begin(kMagic), std::end(kMagic));
  put_le<std::uint16_t>(buf, kCheckpointVersion);
  put_le<std::uint64_t>(buf, params.spec_digest);
  put_le<std::uint64_t>(buf, params.size());
  put_le<std::uint32_t>(buf, round);
  for (double v : params.values) put_le<std::uint64_t>(buf, std::bit_cast<std::uint64_t>(v));
  put_le<std::uint32_t>(buf, crc_of(buf.data() + kHeaderBytes, 8 * params.size()));

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot write checkpoint " + path.string());
  f.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
  if (!f) throw IoError("write failed for checkpoint " + path.string());
}

LoadedCheckpoint read_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint " + path.string());
  const std::vector<unsigned char> buf((std::istreambuf_iterator<char>(f)),
                                       std::istreambuf_iterator<char>());
  const std::string where = " in " + path.string();
  if (buf.size() < kHeaderBytes + 4) throw FormatError("truncated checkpoint header" + where);
  if (!std::equal(std::begin(kMagic), std::end(kMagic), buf.begin())) {
    throw FormatError("bad checkpoint magic" + where);
  }
  LoadedCheckpoint out;
  out.meta.version = get_le<std::uint16_t>(buf.data() + 4);
  out.meta.spec_digest = get_le<std::uint64_t>(buf.data() + 6);
  out.meta.param_count = get_le<std::uint64_t>(buf.data() + 14);
  out.meta.round = get_le<std::uint32_t>(buf.data() + 22);
  if (out.meta.version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(out.meta.version) +
                      where);
  }
  const std::uint64_t count = out.meta.param_count;
  if (count > (buf.size() - kHeaderBytes - 4) / 8 ||
      buf.size() != kHeaderBytes + 8 * count + 4) {
    throw FormatError("checkpoint length does not match its parameter count" + where);
  }
  const unsigned char* payload = buf.data() + kHeaderBytes;
  const auto stored = get_le<std::uint32_t>(payload + 8 * count);
  if (stored != crc_of(payload, 8 * count)) throw FormatError("checkpoint CRC mismatch" + where);

  out.params.spec_digest = out.meta.spec_digest;
  out.params.values.resize(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    out.params.values[i] = std::bit_cast<double>(get_le<std::uint64_t>(payload + 8 * i));
  }
  return out;
}

nn::ParameterVector load_checkpoint(const std::filesystem::path& path,
                                    const nn::NetworkSpec& active) {
  auto ck = read_checkpoint(path);
  if (ck.meta.spec_digest != active.digest()) {
    throw FormatError("checkpoint " + path.string() +
                      " was written for a different network architecture");
  }
  if (ck.meta.param_count != active.parameter_count()) {
    throw FormatError("checkpoint " + path.string() + " has the wrong parameter count");
  }
  return std::move(ck.params);
}

std::string describe_checkpoint(const LoadedCheckpoint& checkpoint) {
  const auto& v = checkpoint.params.values;
  double sq = 0.0;
  double lo = v.empty() ? 0.0 : v.front();
  double hi = lo;
  for (double x : v) {
    sq += x * x;
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "version      %u\n"
                "spec digest  %016llx\n"
                "round        %u\n"
                "parameters   %llu\n"
                "l2 norm      %.9g\n"
                "min / max    %.9g / %.9g\n",
                static_cast<unsigned>(checkpoint.meta.version),
                static_cast<unsigned long long>(checkpoint.meta.spec_digest),
                static_cast<unsigned>(checkpoint.meta.round),
                static_cast<unsigned long long>(checkpoint.meta.param_count), std::sqrt(sq), lo,
                hi);
  return buf;
}

}  // namespace goldfish::exp
