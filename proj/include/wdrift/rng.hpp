#pragma once

#include <cstdint>
#include <initializer_list>

namespace wdrift {

/// Counter-based uniform generator. Every draw is a pure function of its
/// key, so a sample can be regenerated without replaying a stream.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : key_(mix(seed ^ 0x9e3779b97f4a7c15ULL)) {}

  /// Derives a child generator keyed on additional integers.
  [[nodiscard]] CounterRng fork(std::initializer_list<std::uint64_t> ids) const {
    std::uint64_t k = key_;
    for (auto id : ids) k = mix(k ^ mix(id + 0x632be59bd9b4e019ULL));
    CounterRng out(0);
    out.key_ = k;
    return out;
  }

  [[nodiscard]] std::uint64_t bits(std::uint64_t counter) const {
    return mix(key_ + mix(counter * 0xd1b54a32d192ed03ULL + 1));
  }

  /// Uniform on the open interval (0, 1).
  [[nodiscard]] double uniform(std::uint64_t counter) const {
    return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
  }

  [[nodiscard]] std::uint64_t key() const { return key_; }

 private:
  // splitmix64 finalizer
  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
};

}  // namespace wdrift
