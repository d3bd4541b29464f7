// Copyright 2026 The RankForge Authors
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

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <string>

#include "json.hpp"
#include "rankforge/error.hpp"
#include "rankforge/evaluator.hpp"

namespace rankforge {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

constexpr const char* kProtocolName = "rankforge-eval";
constexpr int kProtocolVersion = 1;

Error evaluator_error(const std::string& what) {
  return Error(ErrorKind::kEvaluator, "evaluator: " + what);
}

void ignore_sigpipe_once() {
  static const bool done = [] {
    struct sigaction current {};
    sigaction(SIGPIPE, nullptr, &current);
    if (current.sa_handler == SIG_DFL) signal(SIGPIPE, SIG_IGN);
    return true;
  }();
  (void)done;
}

}  // namespace

// One child process speaking the protocol over a pipe pair.
class ExternalProcessEvaluator::Process {
 public:
  Process(const std::string& command, std::chrono::milliseconds timeout)
      : timeout_(timeout) {
    int to_child[2];
    int from_child[2];
    if (pipe(to_child) != 0) throw evaluator_error(std::strerror(errno));
    if (pipe(from_child) != 0) {
      close(to_child[0]);
      close(to_child[1]);
      throw evaluator_error(std::strerror(errno));
    }
    pid_ = fork();
    if (pid_ < 0) {
      for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) {
        close(fd);
      }
      throw evaluator_error(std::strerror(errno));
    }
    if (pid_ == 0) {
      setpgid(0, 0);
      dup2(to_child[0], STDIN_FILENO);
      dup2(from_child[1], STDOUT_FILENO);
      for (int fd : {to_child[0], to_child[1], from_child[0], from_child[1]}) {
        close(fd);
      }
      execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
      _exit(127);
    }
    setpgid(pid_, pid_);
    close(to_child[0]);
    close(from_child[1]);
    in_fd_ = to_child[1];
    out_fd_ = from_child[0];
    fcntl(in_fd_, F_SETFD, FD_CLOEXEC);
    fcntl(out_fd_, F_SETFD, FD_CLOEXEC);

    const auto hello = read_message();
    if (!hello.is_object() || hello.value("protocol", "") != kProtocolName ||
        !hello.contains("version") || hello.at("version") != kProtocolVersion) {
      shutdown(true);
      throw evaluator_error("handshake failed, got: " + hello.dump());
    }
  }

  ~Process() { shutdown(false); }

  double call(std::uint64_t id, const json& request) {
    write_line(request.dump());
    const auto reply = read_message();
    if (!reply.is_object() || !reply.contains("id") || reply.at("id") != id) {
      throw evaluator_error("response id mismatch: " + reply.dump());
    }
    if (reply.contains("error")) {
      throw evaluator_error("request " + std::to_string(id) +
                            " failed: " + reply.at("error").dump());
    }
    if (!reply.contains("accuracy") || !reply.at("accuracy").is_number()) {
      throw evaluator_error("response without accuracy: " + reply.dump());
    }
    const double acc = reply.at("accuracy").get<double>();
    if (!std::isfinite(acc)) throw evaluator_error("non-finite accuracy");
    return acc;
  }

 private:
  void write_line(const std::string& line) {
    std::string data = line + "\n";
    std::size_t off = 0;
    while (off < data.size()) {
      const ssize_t n = write(in_fd_, data.data() + off, data.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw evaluator_error(std::string("write failed: ") + std::strerror(errno));
      }
      off += static_cast<std::size_t>(n);
    }
  }

  json read_message() {
    const auto line = read_line();
    try {
      return json::parse(line);
    } catch (const json::exception&) {
      throw evaluator_error("protocol violation, malformed line: " + line);
    }
  }

  std::string read_line() {
    const auto deadline = Clock::now() + timeout_;
    for (;;) {
      if (auto pos = buffer_.find('\n'); pos != std::string::npos) {
        std::string line = buffer_.substr(0, pos);
        buffer_.erase(0, pos + 1);
        return line;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - Clock::now());
      if (left.count() <= 0) {
        shutdown(true);
        throw evaluator_error("timed out waiting for the evaluator");
      }
      pollfd pfd{out_fd_, POLLIN, 0};
      const int rc = poll(&pfd, 1, static_cast<int>(std::min<std::int64_t>(
                                       left.count(), 1 << 30)));
      if (rc < 0) {
        if (errno == EINTR) continue;
        throw evaluator_error(std::string("poll failed: ") + std::strerror(errno));
      }
      if (rc == 0) continue;
      char chunk[4096];
      const ssize_t n = read(out_fd_, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw evaluator_error(std::string("read failed: ") + std::strerror(errno));
      }
      if (n == 0) {
        shutdown(false);
        throw evaluator_error("process exited unexpectedly");
      }
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

  void shutdown(bool kill_now) {
    if (in_fd_ >= 0) close(in_fd_);
    in_fd_ = -1;
    if (out_fd_ >= 0) close(out_fd_);
    out_fd_ = -1;
    if (pid_ <= 0) return;
    if (kill_now) kill(-pid_, SIGKILL);
    // Give a well-behaved child a moment to exit on EOF.
    for (int i = 0; i < 200; ++i) {
      int status = 0;
      const pid_t r = waitpid(pid_, &status, WNOHANG);
      if (r == pid_ || r < 0) {
        pid_ = -1;
        return;
      }
      usleep(5000);
    }
    kill(-pid_, SIGKILL);
    waitpid(pid_, nullptr, 0);
    pid_ = -1;
  }

  std::chrono::milliseconds timeout_;
  pid_t pid_ = -1;
  int in_fd_ = -1;
  int out_fd_ = -1;
  std::string buffer_;
};

ExternalProcessEvaluator::ExternalProcessEvaluator(
    ExternalEvaluatorOptions options)
    : options_(std::move(options)) {
  ignore_sigpipe_once();
  if (options_.processes == 0) options_.processes = 1;
  for (std::size_t i = 0; i < options_.processes; ++i) {
    processes_.push_back(
        std::make_unique<Process>(options_.command, options_.timeout));
    busy_.push_back(false);
  }
}

ExternalProcessEvaluator::~ExternalProcessEvaluator() = default;

ExternalProcessEvaluator::Process& ExternalProcessEvaluator::acquire() {
  std::unique_lock lock(mu_);
  for (;;) {
    for (std::size_t i = 0; i < processes_.size(); ++i) {
      if (!busy_[i]) {
        busy_[i] = true;
        return *processes_[i];
      }
    }
    idle_.wait(lock);
  }
}

void ExternalProcessEvaluator::release(Process& p) {
  {
    std::lock_guard lock(mu_);
    for (std::size_t i = 0; i < processes_.size(); ++i) {
      if (processes_[i].get() == &p) busy_[i] = false;
    }
  }
  idle_.notify_one();
}

double ExternalProcessEvaluator::evaluate(const RankSet& ranks, Stage stage) {
  if (ranks.size() != options_.layer_names.size()) {
    throw Error(ErrorKind::kInvalidArgument,
                "rank set is not aligned with the evaluator's layer list");
  }
  json request;
  std::uint64_t id = 0;
  {
    std::lock_guard lock(mu_);
    id = next_id_++;
  }
  request["id"] = id;
  request["cmd"] = "evaluate";
  json named = json::object();
  for (std::size_t i = 0; i < ranks.size(); ++i) {
    named[options_.layer_names[i]] = ranks[i];
  }
  request["ranks"] = std::move(named);
  request["stage"] = to_string(stage);
  request["subset_fraction"] = options_.subset_fraction;
  request["seed"] = options_.seed;

  Process& p = acquire();
  try {
    const double acc = p.call(id, request);
    release(p);
    return acc;
  } catch (...) {
    release(p);
    throw;
  }
}

}  // namespace rankforge
