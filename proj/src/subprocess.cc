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

#include "isoharness/subprocess.h"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/resource.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <thread>
#include <utility>

namespace isoharness {

namespace {

void CloseFd(int& fd) {
  if (fd >= 0) close(fd);
  fd = -1;
}

// Only async-signal-safe calls between fork and exec.
[[noreturn]] void ExecChild(int in_read, int out_write, int err_pipe,
                            uint64_t cap, bool discard_stderr,
                            char* const* argv) {
  if (dup2(in_read, STDIN_FILENO) < 0 || dup2(out_write, STDOUT_FILENO) < 0) {
    int e = errno;
    (void)!write(err_pipe, &e, sizeof(e));
    _exit(127);
  }
  if (discard_stderr) {
    int devnull = open("/dev/null", O_WRONLY);
    if (devnull >= 0) dup2(devnull, STDERR_FILENO);
  }
  struct rlimit no_core = {0, 0};
  setrlimit(RLIMIT_CORE, &no_core);
  if (cap > 0) {
    struct rlimit as = {cap, cap};
    setrlimit(RLIMIT_AS, &as);
  }
  // Ignored dispositions survive exec; the child needs default fatal ones.
  for (int sig : {SIGPIPE, SIGSEGV, SIGABRT, SIGFPE, SIGILL, SIGBUS}) {
    signal(sig, SIG_DFL);
  }
  sigset_t none;
  sigemptyset(&none);
  sigprocmask(SIG_SETMASK, &none, nullptr);
  execv(argv[0], argv);
  int e = errno;
  (void)!write(err_pipe, &e, sizeof(e));
  _exit(127);
}

bool PollFd(int fd, short events, std::optional<Clock::time_point> deadline,
            bool* timed_out) {
  *timed_out = false;
  for (;;) {
    int timeout_ms = -1;
    if (deadline) {
      auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          *deadline - Clock::now());
      if (left.count() <= 0) {
        *timed_out = true;
        return false;
      }
      timeout_ms = static_cast<int>(std::min<int64_t>(left.count() + 1, 1 << 30));
    }
    struct pollfd p = {fd, events, 0};
    int rc = poll(&p, 1, timeout_ms);
    if (rc > 0) return true;
    if (rc == 0) continue;  // re-evaluate the deadline
    if (errno != EINTR) return false;
  }
}

// Reads exactly `n` bytes. Returns bytes read before EOF/timeout/error.
size_t ReadFully(int fd, char* buf, size_t n,
                 std::optional<Clock::time_point> deadline, bool* timed_out) {
  size_t got = 0;
  *timed_out = false;
  while (got < n) {
    if (!PollFd(fd, POLLIN, deadline, timed_out)) return got;
    ssize_t rc = read(fd, buf + got, n - got);
    if (rc > 0) {
      got += static_cast<size_t>(rc);
    } else if (rc == 0) {
      return got;
    } else if (errno != EINTR && errno != EAGAIN) {
      return got;
    }
  }
  return got;
}

}  // namespace

std::optional<std::string> ChildProcess::SpawnImpl(const SpawnOptions& options,
                                                   ChildProcess& out) {
  if (options.argv.empty()) return "empty argv";
  std::vector<char*> argv;
  for (const auto& a : options.argv) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);

  int in_pipe[2], out_pipe[2], err_pipe[2];
  if (pipe2(in_pipe, O_CLOEXEC) != 0) return std::string("pipe: ") + strerror(errno);
  if (pipe2(out_pipe, O_CLOEXEC) != 0) {
    close(in_pipe[0]);
    close(in_pipe[1]);
    return std::string("pipe: ") + strerror(errno);
  }
  if (pipe2(err_pipe, O_CLOEXEC) != 0) {
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) close(fd);
    return std::string("pipe: ") + strerror(errno);
  }

  pid_t pid = fork();
  if (pid < 0) {
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1],
                   err_pipe[0], err_pipe[1]}) {
      close(fd);
    }
    return std::string("fork: ") + strerror(errno);
  }
  if (pid == 0) {
    ExecChild(in_pipe[0], out_pipe[1], err_pipe[1], options.address_space_cap,
              options.discard_stderr, argv.data());
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  close(err_pipe[1]);
  out.pid_ = pid;
  out.stdin_fd_ = in_pipe[1];
  out.stdout_fd_ = out_pipe[0];

  int child_errno = 0;
  ssize_t n;
  do {
    n = read(err_pipe[0], &child_errno, sizeof(child_errno));
  } while (n < 0 && errno == EINTR);
  close(err_pipe[0]);
  if (n == sizeof(child_errno)) {
    out.Wait();
    return "exec " + options.argv[0] + ": " + strerror(child_errno);
  }
  return std::nullopt;
}

ChildProcess::ChildProcess(ChildProcess&& other) noexcept
    : pid_(std::exchange(other.pid_, -1)),
      stdin_fd_(std::exchange(other.stdin_fd_, -1)),
      stdout_fd_(std::exchange(other.stdout_fd_, -1)),
      reaped_(std::exchange(other.reaped_, true)),
      status_(other.status_) {}

ChildProcess::~ChildProcess() {
  CloseFd(stdin_fd_);
  CloseFd(stdout_fd_);
  if (pid_ > 0 && !reaped_) {
    Kill();
    Wait();
  }
}

void ChildProcess::CloseStdin() { CloseFd(stdin_fd_); }

int ChildProcess::Wait() {
  if (reaped_ || pid_ <= 0) return status_;
  int status = 0;
  while (waitpid(pid_, &status, 0) < 0) {
    if (errno != EINTR) break;
  }
  reaped_ = true;
  status_ = status;
  return status_;
}

std::optional<int> ChildProcess::WaitUntil(Clock::time_point deadline) {
  if (reaped_) return status_;
  auto nap = std::chrono::microseconds(200);
  for (;;) {
    int status = 0;
    pid_t rc = waitpid(pid_, &status, WNOHANG);
    if (rc == pid_) {
      reaped_ = true;
      status_ = status;
      return status_;
    }
    if (rc < 0 && errno != EINTR) {
      reaped_ = true;
      return status_;
    }
    if (Clock::now() >= deadline) return std::nullopt;
    std::this_thread::sleep_for(nap);
    nap = std::min<std::chrono::microseconds>(nap * 2,
                                              std::chrono::milliseconds(20));
  }
}

void ChildProcess::Kill() {
  if (pid_ > 0 && !reaped_) kill(pid_, SIGKILL);
}

bool WriteFrame(int fd, std::string_view payload) {
  if (payload.size() > kMaxFrameSize) return false;
  uint32_t n = static_cast<uint32_t>(payload.size());
  std::string buf(4, '\0');
  buf[0] = static_cast<char>((n >> 24) & 0xff);
  buf[1] = static_cast<char>((n >> 16) & 0xff);
  buf[2] = static_cast<char>((n >> 8) & 0xff);
  buf[3] = static_cast<char>(n & 0xff);
  buf.append(payload);
  size_t sent = 0;
  while (sent < buf.size()) {
    ssize_t rc = write(fd, buf.data() + sent, buf.size() - sent);
    if (rc > 0) {
      sent += static_cast<size_t>(rc);
    } else if (rc < 0 && errno == EINTR) {
      continue;
    } else {
      return false;
    }
  }
  return true;
}

FrameStatus ReadFrame(int fd, std::string& payload,
                      std::optional<Clock::time_point> deadline) {
  unsigned char header[4];
  bool timed_out = false;
  size_t got = ReadFully(fd, reinterpret_cast<char*>(header), 4, deadline,
                         &timed_out);
  if (timed_out) return FrameStatus::kTimeout;
  if (got == 0) return FrameStatus::kEof;
  if (got < 4) return FrameStatus::kMalformed;
  uint32_t n = (uint32_t{header[0]} << 24) | (uint32_t{header[1]} << 16) |
               (uint32_t{header[2]} << 8) | uint32_t{header[3]};
  if (n > kMaxFrameSize) return FrameStatus::kMalformed;
  payload.assign(n, '\0');
  got = ReadFully(fd, payload.data(), n, deadline, &timed_out);
  if (timed_out) return FrameStatus::kTimeout;
  if (got < n) return FrameStatus::kMalformed;
  return FrameStatus::kOk;
}

std::string DescribeWaitStatus(int status) {
  if (WIFSIGNALED(status)) {
    return "killed by signal " + std::to_string(WTERMSIG(status));
  }
  if (WIFEXITED(status)) {
    return "exited with status " + std::to_string(WEXITSTATUS(status));
  }
  return "unknown wait status " + std::to_string(status);
}

}  // namespace isoharness
