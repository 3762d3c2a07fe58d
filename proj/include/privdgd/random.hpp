// Copyright 2026 The privdgd Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Seeded streams. The standard <random> distributions are implementation
// defined, so the uniform/normal/exponential conversions live here to keep
// traces identical across standard libraries. Engines are splitmix64 over a
// (key, counter) pair, which makes every stream addressable by index.

#ifndef PRIVDGD_RANDOM_HPP_
#define PRIVDGD_RANDOM_HPP_

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

namespace privdgd {

inline constexpr uint64_t Mix64(uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline constexpr uint64_t HashPurpose(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Splitting scheme: child = Mix64(Mix64(parent ^ H(purpose)) + index).
inline constexpr uint64_t DeriveSeed(uint64_t parent, std::string_view purpose,
                                     uint64_t index = 0) {
  return Mix64(Mix64(parent ^ HashPurpose(purpose)) + index);
}

// 53 random bits -> [0, 1).
inline double ToUnit(uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// 53 random bits -> (0, 1), safe for log().
inline double ToOpenUnit(uint64_t bits) {
  return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

// Uniform draw at an absolute position of the stream keyed by `key`.
inline double UniformAt(uint64_t key, uint64_t index) {
  return ToUnit(Mix64(key + Mix64(index)));
}

class Stream {
 public:
  explicit Stream(uint64_t key) : key_(key) {}

  uint64_t NextU64() { return Mix64(key_ + Mix64(counter_++)); }
  double Uniform() { return ToUnit(NextU64()); }
  double Uniform(double lo, double hi) { return lo + (hi - lo) * Uniform(); }
  double Exponential() { return -std::log(ToOpenUnit(NextU64())); }

  // Box-Muller; the second variate is kept for the next call.
  double Normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = ToOpenUnit(NextU64());
    const double u2 = ToUnit(NextU64());
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * std::numbers::pi * u2;
    spare_ = rad * std::sin(ang);
    has_spare_ = true;
    return rad * std::cos(ang);
  }

  uint64_t key() const { return key_; }

 private:
  uint64_t key_;
  uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace privdgd

#endif  // PRIVDGD_RANDOM_HPP_
