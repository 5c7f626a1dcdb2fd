#include "mosbench/wav.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>

#include "mosbench/error.hpp"

namespace mosbench {
namespace {

std::uint32_t read_u32(const unsigned char* p) {
  return std::uint32_t(p[0]) | (std::uint32_t(p[1]) << 8) |
         (std::uint32_t(p[2]) << 16) | (std::uint32_t(p[3]) << 24);
}

std::uint16_t read_u16(const unsigned char* p) {
  return std::uint16_t(p[0] | (p[1] << 8));
}

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back((v >> (8 * i)) & 0xff);
}

void put_u16(std::vector<unsigned char>& out, std::uint16_t v) {
  out.push_back(v & 0xff);
  out.push_back((v >> 8) & 0xff);
}

}  // namespace

Waveform read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open audio file " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  auto fail = [&](const std::string& why) {
    return IoError("cannot decode audio file " + path.string() + ": " + why);
  };
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw fail("not a RIFF/WAVE file");

  int channels = 0, bits = 0, rate = 0;
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const unsigned char* chunk = bytes.data() + pos;
    std::uint32_t size = read_u32(chunk + 4);
    std::size_t body = pos + 8;
    if (body + size > bytes.size()) size = std::uint32_t(bytes.size() - body);
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) throw fail("short fmt chunk");
      std::uint16_t format = read_u16(bytes.data() + body);
      channels = read_u16(bytes.data() + body + 2);
      rate = int(read_u32(bytes.data() + body + 4));
      bits = read_u16(bytes.data() + body + 14);
      if (format != 1 && format != 0xfffe) throw fail("not PCM");
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) throw fail("data chunk before fmt chunk");
      if (bits != 16) throw fail("only 16-bit PCM is supported");
      if (channels < 1) throw fail("no channels");
      std::size_t frames = size / (2 * std::size_t(channels));
      Waveform wave;
      wave.sample_rate = rate;
      wave.samples.resize(frames);
      const unsigned char* p = bytes.data() + body;
      for (std::size_t i = 0; i < frames; ++i) {
        float acc = 0.0f;
        for (int c = 0; c < channels; ++c) {
          auto v = std::int16_t(read_u16(p));
          acc += float(v) / 32768.0f;
          p += 2;
        }
        wave.samples[i] = acc / float(channels);
      }
      return wave;
    }
    pos = body + size + (size & 1);
  }
  throw fail("no data chunk");
}

void write_wav(const std::filesystem::path& path, const Waveform& wave) {
  std::vector<unsigned char> out;
  const auto data_bytes = std::uint32_t(wave.samples.size() * 2);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put_u32(out, 16);
  put_u16(out, 1);
  put_u16(out, 1);
  put_u32(out, std::uint32_t(wave.sample_rate));
  put_u32(out, std::uint32_t(wave.sample_rate) * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, data_bytes);
  for (float s : wave.samples) {
    auto v = std::int16_t(std::lround(std::clamp(s, -1.0f, 1.0f) * 32767.0f));
    put_u16(out, std::uint16_t(v));
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw IoError("cannot write audio file " + path.string());
  file.write(reinterpret_cast<const char*>(out.data()), std::streamsize(out.size()));
}

}  // namespace mosbench
