// Copyright 2026 The Netweave Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "netweave/bitstring.hpp"

namespace netweave {

// splitmix64. Chosen over <random> engines because its output for a given
// seed is pinned by these three constants, not by a library implementation —
// campaign reports must be reproducible byte-for-byte across toolchains.
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : state_(seed) {}

  uint64_t next() {
    uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Modulo-reduced; the bias at these ranges is far below anything the
  // campaign statistics could notice.
  uint64_t below(uint64_t n) { return n == 0 ? 0 : next() % n; }

  uint8_t byte() { return uint8_t(next()); }

 private:
  uint64_t state_;
};

// Coverage-guided input source. Inputs that lit a new block are kept and
// become mutation material; everything else is forgotten. Three mutators:
// fresh random bytes, byte flips on a kept input, and a two-parent splice.
class Fuzzer {
 public:
  explicit Fuzzer(uint64_t seed) : rng_(seed) {}

  Bytes next_input() {
    if (corpus_.empty()) return fresh(256);
    switch (rng_.below(8)) {
      case 0:
        return fresh(32 + rng_.below(481));
      case 1:
      case 2:
      case 3:
      case 4:
        return flipped();
      default:
        return spliced();
    }
  }

  // Call when the input's execution reached a block nothing before it had.
  void reward(Bytes input) {
    if (input.empty()) return;
    if (corpus_.size() < kCorpusCap) corpus_.push_back(std::move(input));
  }

  size_t corpus_size() const { return corpus_.size(); }

  static constexpr size_t kCorpusCap = 4096;
  static constexpr size_t kInputCap = 4096;

 private:
  Bytes fresh(size_t n) {
    Bytes b(n);
    for (auto& x : b) x = rng_.byte();
    return b;
  }

  Bytes flipped() {
    Bytes b = corpus_[rng_.below(corpus_.size())];
    size_t flips = 1 + rng_.below(8);
    for (size_t i = 0; i < flips; ++i) {
      b[rng_.below(b.size())] ^= uint8_t(1 + rng_.below(255));
    }
    return b;
  }

  Bytes spliced() {
    const Bytes& a = corpus_[rng_.below(corpus_.size())];
    const Bytes& b = corpus_[rng_.below(corpus_.size())];
    size_t cut_a = 1 + rng_.below(a.size());
    size_t cut_b = rng_.below(b.size() + 1);
    Bytes out(a.begin(), a.begin() + long(cut_a));
    out.insert(out.end(), b.begin() + long(cut_b), b.end());
    if (out.size() > kInputCap) out.resize(kInputCap);
    return out;
  }

  SplitMix64 rng_;
  std::vector<Bytes> corpus_;
};

}  // namespace netweave
