#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>
#include <string>

namespace bosegas {

/// Philox4x32-10 counter-based generator (Salmon et al., Random123).
/// The key carries the master seed and the upper counter words carry the
/// stream index, so (seed, stream) pairs give independent reproducible streams.
class Philox4x32 {
 public:
  using result_type = std::uint64_t;
  using Block = std::array<std::uint32_t, 4>;
  using Key = std::array<std::uint32_t, 2>;

  Philox4x32() : Philox4x32(0, 0) {}
  Philox4x32(std::uint64_t seed, std::uint64_t stream) {
    key_ = {static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    counter_ = {0, 0, static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

  result_type operator()() {
    if (index_ >= 2) refill();
    const result_type out = (static_cast<result_type>(buffer_[2 * index_]) << 32) | buffer_[2 * index_ + 1];
    ++index_;
    return out;
  }

  static Block encrypt(Block ctr, Key key) {
    constexpr std::uint32_t kMul0 = 0xD2511F53u, kMul1 = 0xCD9E8D57u;
    constexpr std::uint32_t kWeyl0 = 0x9E3779B9u, kWeyl1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
      if (round > 0) {
        key[0] += kWeyl0;
        key[1] += kWeyl1;
      }
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
      const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
      const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
      ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
  }

  friend std::ostream& operator<<(std::ostream& os, const Philox4x32& g) {
    os << g.key_[0] << ' ' << g.key_[1];
    for (auto c : g.counter_) os << ' ' << c;
    for (auto b : g.buffer_) os << ' ' << b;
    return os << ' ' << g.index_;
  }
  friend std::istream& operator>>(std::istream& is, Philox4x32& g) {
    is >> g.key_[0] >> g.key_[1];
    for (auto& c : g.counter_) is >> c;
    for (auto& b : g.buffer_) is >> b;
    return is >> g.index_;
  }
  bool operator==(const Philox4x32&) const = default;

 private:
  void refill() {
    buffer_ = encrypt(counter_, key_);
    // 64-bit increment of the low counter words; upper words hold the stream.
    if (++counter_[0] == 0) ++counter_[1];
    index_ = 0;
  }

  Key key_{};
  Block counter_{};
  Block buffer_{};
  unsigned index_ = 2;
};

/// Random stream used throughout the library: a Philox engine plus the
/// handful of distributions the samplers need.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed = 0, std::uint64_t stream = 0) : engine_(seed, stream) {}

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() { return normal_(engine_); }
  std::uint64_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    std::poisson_distribution<std::uint64_t> dist(mean);
    return dist(engine_);
  }
  /// Uniform index in [0, n).
  std::size_t index(std::size_t n) {
    std::uniform_int_distribution<std::size_t> dist(0, n - 1);
    return dist(engine_);
  }

  Philox4x32& engine() { return engine_; }

  std::string serialize() const {
    std::ostringstream os;
    os << engine_ << ' ' << normal_;
    return os.str();
  }
  void deserialize(const std::string& s) {
    std::istringstream is(s);
    is >> engine_ >> normal_;
  }

 private:
  Philox4x32 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace bosegas
