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

#include "isoharness/shared_region.h"

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <utility>

#include "isoharness/error.h"

namespace isoharness {

namespace {

uint8_t* Bytes(void* base) { return static_cast<uint8_t*>(base); }

uint64_t* ProgressCell(void* base, uint32_t edges) {
  return reinterpret_cast<uint64_t*>(Bytes(base) + kRegionHeaderSize +
                                     8 * static_cast<size_t>(edges));
}

void WriteHeader(void* base, uint32_t edges) {
  std::memcpy(Bytes(base), &kRegionMagic, 8);
  std::memcpy(Bytes(base) + 8, &edges, 4);
  std::memset(Bytes(base) + 12, 0, 4);
}

std::string ErrnoText(const std::string& what) {
  return what + ": " + std::strerror(errno);
}

}  // namespace

SharedRegion SharedRegion::CreateNamed(const std::string& name,
                                       uint32_t edges) {
  int fd = shm_open(name.c_str(), O_CREAT | O_EXCL | O_RDWR, 0600);
  if (fd < 0) throw IoError(ErrnoText("shm_open " + name));
  size_t size = RegionSize(edges);
  if (ftruncate(fd, static_cast<off_t>(size)) != 0) {
    close(fd);
    shm_unlink(name.c_str());
    throw IoError(ErrnoText("ftruncate " + name));
  }
  void* base = mmap(nullptr, size, PROT_READ | PROT_WRITE, MAP_SHARED, fd, 0);
  close(fd);
  if (base == MAP_FAILED) {
    shm_unlink(name.c_str());
    throw IoError(ErrnoText("mmap " + name));
  }
  SharedRegion r;
  r.name_ = name;
  r.owner_ = true;
  r.base_ = base;
  r.size_ = size;
  r.edges_ = edges;
  WriteHeader(base, edges);
  r.Reset();
  return r;
}

SharedRegion SharedRegion::OpenNamed(const std::string& name) {
  int fd = shm_open(name.c_str(), O_RDWR, 0);
  if (fd < 0) throw IoError(ErrnoText("shm_open " + name));
  struct stat st {};
  if (fstat(fd, &st) != 0 ||
      static_cast<size_t>(st.st_size) < RegionSize(0)) {
    close(fd);
    throw IoError("shared region " + name + " is too small");
  }
  size_t size = static_cast<size_t>(st.st_size);
  void* base = mmap(nullptr, size, PROT_READ | PROT_WRITE, MAP_SHARED, fd, 0);
  close(fd);
  if (base == MAP_FAILED) throw IoError(ErrnoText("mmap " + name));
  uint64_t magic = 0;
  uint32_t edges = 0;
  std::memcpy(&magic, Bytes(base), 8);
  std::memcpy(&edges, Bytes(base) + 8, 4);
  if (magic != kRegionMagic || RegionSize(edges) != size) {
    munmap(base, size);
    throw IoError("shared region " + name + " has a bad header");
  }
  SharedRegion r;
  r.name_ = name;
  r.base_ = base;
  r.size_ = size;
  r.edges_ = edges;
  return r;
}

SharedRegion SharedRegion::CreateAnonymous(uint32_t edges) {
  size_t size = RegionSize(edges);
  void* base = mmap(nullptr, size, PROT_READ | PROT_WRITE,
                    MAP_SHARED | MAP_ANONYMOUS, -1, 0);
  if (base == MAP_FAILED) throw IoError(ErrnoText("mmap anonymous region"));
  SharedRegion r;
  r.base_ = base;
  r.size_ = size;
  r.edges_ = edges;
  WriteHeader(base, edges);
  r.Reset();
  return r;
}

SharedRegion::SharedRegion(SharedRegion&& other) noexcept { *this = std::move(other); }

SharedRegion& SharedRegion::operator=(SharedRegion&& other) noexcept {
  if (this != &other) {
    Release();
    name_ = std::move(other.name_);
    owner_ = std::exchange(other.owner_, false);
    base_ = std::exchange(other.base_, nullptr);
    size_ = std::exchange(other.size_, 0);
    edges_ = std::exchange(other.edges_, 0);
  }
  return *this;
}

SharedRegion::~SharedRegion() { Release(); }

void SharedRegion::Release() {
  if (base_ != nullptr) munmap(base_, size_);
  if (owner_ && !name_.empty()) shm_unlink(name_.c_str());
  base_ = nullptr;
  owner_ = false;
}

uint64_t* SharedRegion::counters() {
  return reinterpret_cast<uint64_t*>(Bytes(base_) + kRegionHeaderSize);
}

std::vector<uint64_t> SharedRegion::SnapshotCounters() const {
  std::vector<uint64_t> out(edges_);
  if (edges_ > 0) {
    std::memcpy(out.data(), Bytes(base_) + kRegionHeaderSize, 8 * out.size());
  }
  return out;
}

void SharedRegion::SetProgress(uint64_t value) {
  std::atomic_ref<uint64_t>(*ProgressCell(base_, edges_))
      .store(value, std::memory_order_release);
}

uint64_t SharedRegion::progress() const {
  return std::atomic_ref<uint64_t>(*ProgressCell(base_, edges_))
      .load(std::memory_order_acquire);
}

void SharedRegion::Reset() {
  std::memset(Bytes(base_) + kRegionHeaderSize, 0, 8 * static_cast<size_t>(edges_));
  SetProgress(0);
}

std::string UniqueRegionName() {
  static std::atomic<uint64_t> counter{0};
  return "/isoharness-" + std::to_string(getpid()) + "-" +
         std::to_string(counter.fetch_add(1));
}

}  // namespace isoharness
