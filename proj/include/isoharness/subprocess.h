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

// Child processes talking length-prefixed frames over their standard
// streams. Shared by the per-test worker and the search-worker supervisor.

#ifndef ISOHARNESS_SUBPROCESS_H_
#define ISOHARNESS_SUBPROCESS_H_

#include <sys/types.h>

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace isoharness {

using Clock = std::chrono::steady_clock;

struct SpawnOptions {
  std::vector<std::string> argv;
  // RLIMIT_AS for the child, in bytes. Zero leaves the limit alone.
  uint64_t address_space_cap = 0;
  bool discard_stderr = false;
};

// Owns a forked child. Destroying a still-running child kills and reaps it.
class ChildProcess {
 public:
  // Throws the error type `E` (constructed from a message) when fork or exec
  // fails; exec failure is detected synchronously.
  template <typename E>
  static ChildProcess Spawn(const SpawnOptions& options);

  ChildProcess(ChildProcess&& other) noexcept;
  ChildProcess& operator=(ChildProcess&&) = delete;
  ChildProcess(const ChildProcess&) = delete;
  ~ChildProcess();

  pid_t pid() const { return pid_; }
  int stdin_fd() const { return stdin_fd_; }
  int stdout_fd() const { return stdout_fd_; }
  void CloseStdin();

  // Blocks until the child exits and returns its wait status.
  int Wait();
  // Returns the wait status if the child exited before `deadline`.
  std::optional<int> WaitUntil(Clock::time_point deadline);
  void Kill();
  bool reaped() const { return reaped_; }

 private:
  ChildProcess() = default;
  static std::optional<std::string> SpawnImpl(const SpawnOptions& options,
                                              ChildProcess& out);

  pid_t pid_ = -1;
  int stdin_fd_ = -1;
  int stdout_fd_ = -1;
  bool reaped_ = false;
  int status_ = 0;
};

template <typename E>
ChildProcess ChildProcess::Spawn(const SpawnOptions& options) {
  ChildProcess child;
  if (auto err = SpawnImpl(options, child)) throw E(*err);
  return child;
}

enum class FrameStatus { kOk, kEof, kTimeout, kMalformed };

inline constexpr uint32_t kMaxFrameSize = 1u << 30;

// 4-byte big-endian length followed by the payload. Returns false if the
// peer has gone away.
bool WriteFrame(int fd, std::string_view payload);
FrameStatus ReadFrame(int fd, std::string& payload,
                      std::optional<Clock::time_point> deadline = std::nullopt);

// Describes a wait status, e.g. "killed by signal 11".
std::string DescribeWaitStatus(int status);

}  // namespace isoharness

#endif  // ISOHARNESS_SUBPROCESS_H_
