// Copyright 2026 The Isoharness Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Fixed-layout memory shared between the harness and a test worker. It holds
// the edge counters and the progress marker, both of which must remain
// readable after the worker dies.
//
// Layout (little-endian, offsets in bytes):
//   0           8-byte magic "ISOHSHM1"
//   8           4-byte edge count E
//   12          4 bytes reserved, zero
//   16          E x 8-byte edge counters
//   16 + 8E     8-byte progress marker
//
// Progress marker: 0 before any statement starts; k + 1 while statement k
// executes. It only grows during one execution.

#ifndef ISOHARNESS_SHARED_REGION_H_
#define ISOHARNESS_SHARED_REGION_H_

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace isoharness {

inline constexpr uint64_t kRegionMagic = 0x314d4853484f5349ULL;  // "ISOHSHM1"
inline constexpr size_t kRegionHeaderSize = 16;

constexpr size_t RegionSize(uint32_t edges) {
  return kRegionHeaderSize + 8 * static_cast<size_t>(edges) + 8;
}

class SharedRegion {
 public:
  // Named POSIX shared memory, owned (and unlinked on destruction) by the
  // creating process. Throws IoError.
  static SharedRegion CreateNamed(const std::string& name, uint32_t edges);
  // Maps a region created by another process; validates the magic.
  static SharedRegion OpenNamed(const std::string& name);
  // Private mapping with the same layout, for in-process execution.
  static SharedRegion CreateAnonymous(uint32_t edges);

  SharedRegion(SharedRegion&& other) noexcept;
  SharedRegion& operator=(SharedRegion&& other) noexcept;
  SharedRegion(const SharedRegion&) = delete;
  SharedRegion& operator=(const SharedRegion&) = delete;
  ~SharedRegion();

  const std::string& name() const { return name_; }
  uint32_t edge_count() const { return edges_; }

  uint64_t* counters();
  std::vector<uint64_t> SnapshotCounters() const;

  void SetProgress(uint64_t value);
  uint64_t progress() const;

  // Zeroes counters and the progress marker.
  void Reset();

 private:
  SharedRegion() = default;
  void Release();

  std::string name_;
  bool owner_ = false;
  void* base_ = nullptr;
  size_t size_ = 0;
  uint32_t edges_ = 0;
};

// A process-unique shared memory name.
std::string UniqueRegionName();

}  // namespace isoharness

#endif  // ISOHARNESS_SHARED_REGION_H_
