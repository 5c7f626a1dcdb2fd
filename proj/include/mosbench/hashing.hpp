#pragma once

#include <cstdint>
#include <cstring>
#include <string_view>

namespace mosbench {

/// 64-bit FNV-1a; stable across platforms, used for cache keys and seeds.
class Fnv1a {
 public:
  void add(std::string_view bytes) {
    for (unsigned char c : bytes) {
      state_ ^= c;
      state_ *= 0x100000001b3ULL;
    }
  }
  void add_int(std::int64_t v) {
    char buf[sizeof v];
    std::memcpy(buf, &v, sizeof v);
    add(std::string_view(buf, sizeof v));
  }
  std::uint64_t value() const { return state_; }

 private:
  std::uint64_t state_ = 0xcbf29ce484222325ULL;
};

/// Derives an independent stream seed from a base seed and a tag.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                                 std::int64_t index = 0) {
  Fnv1a h;
  h.add_int(std::int64_t(base));
  h.add(tag);
  h.add_int(index);
  return h.value();
}

}  // namespace mosbench
