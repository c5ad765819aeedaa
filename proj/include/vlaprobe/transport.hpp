#pragma once

// Request/response transports for protocol v1 documents.
//
// HTTP: POST <endpoint>/v1/infer and <endpoint>/v1/evaluate with a JSON body.
// Stdio: the model runs as a subprocess; each request is one JSON document
// on one line of its stdin, each response one line on its stdout. Evaluate
// requests carry "op":"evaluate"; infer requests carry no "op" field.

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "vlaprobe/errors.hpp"

namespace vlaprobe {

enum class RemoteOp : std::uint8_t { Infer, Evaluate };

inline std::string_view http_path(RemoteOp op) {
  return op == RemoteOp::Infer ? "/v1/infer" : "/v1/evaluate";
}

class Transport {
 public:
  virtual ~Transport() = default;
  // Sends one request document and returns the decoded response document.
  // Throws TimeoutError, TransportError, or ProtocolError("body") when the
  // reply is not JSON.
  virtual nlohmann::json exchange(RemoteOp op, const nlohmann::json& body) const = 0;
  virtual std::string describe() const = 0;
};

inline nlohmann::json parse_body(std::string_view text) {
  nlohmann::json j = nlohmann::json::parse(text, nullptr, false);
  if (j.is_discarded()) throw ProtocolError("body", "response is not valid JSON");
  return j;
}

// A fresh client per call keeps the transport free of shared mutable state.
class HttpTransport : public Transport {
 public:
  HttpTransport(std::string endpoint, int timeout_ms)
      : endpoint_(std::move(endpoint)), timeout_ms_(timeout_ms) {
    if (timeout_ms_ <= 0) throw DomainError("timeout must be positive");
    while (!endpoint_.empty() && endpoint_.back() == '/') endpoint_.pop_back();
  }

  nlohmann::json exchange(RemoteOp op, const nlohmann::json& body) const override {
    httplib::Client cli(endpoint_);
    if (!cli.is_valid()) throw TransportError("invalid endpoint '" + endpoint_ + "'");
    const auto timeout = std::chrono::milliseconds(timeout_ms_);
    cli.set_connection_timeout(timeout);
    cli.set_read_timeout(timeout);
    cli.set_write_timeout(timeout);
    const auto start = std::chrono::steady_clock::now();
    auto res = cli.Post(std::string(http_path(op)), body.dump(), "application/json");
    if (!res) {
      const auto elapsed = std::chrono::steady_clock::now() - start;
      if (res.error() == httplib::Error::ConnectionTimeout ||
          (res.error() == httplib::Error::Read && elapsed >= timeout)) {
        throw TimeoutError("no response from " + endpoint_ + " within " +
                           std::to_string(timeout_ms_) + " ms");
      }
      throw TransportError("request to " + endpoint_ + " failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200 && res->status != 400 && res->status != 500) {
      throw TransportError("unexpected HTTP status " + std::to_string(res->status));
    }
    return parse_body(res->body);
  }

  std::string describe() const override { return endpoint_; }

 private:
  std::string endpoint_;
  int timeout_ms_;
};

// Owns the child process; exchanges are serialized by a mutex.
class StdioTransport : public Transport {
 public:
  StdioTransport(std::vector<std::string> argv, int timeout_ms)
      : argv_(std::move(argv)), timeout_ms_(timeout_ms) {
    if (argv_.empty()) throw DomainError("stdio transport needs a command");
    if (timeout_ms_ <= 0) throw DomainError("timeout must be positive");
    // A child that exits early must surface as TransportError, not SIGPIPE.
    static std::once_flag sigpipe_once;
    std::call_once(sigpipe_once, [] { signal(SIGPIPE, SIG_IGN); });
    spawn();
  }
  StdioTransport(const StdioTransport&) = delete;
  StdioTransport& operator=(const StdioTransport&) = delete;

  ~StdioTransport() override { shutdown(); }

  nlohmann::json exchange(RemoteOp op, const nlohmann::json& body) const override {
    std::lock_guard<std::mutex> lock(mu_);
    if (broken_) throw TransportError("stdio model is no longer usable");
    nlohmann::json doc = body;
    if (op == RemoteOp::Evaluate) doc["op"] = "evaluate";
    const std::string line = doc.dump() + "\n";
    write_all(line);
    return parse_body(read_line());
  }

  std::string describe() const override {
    std::string out = "stdio:";
    for (const auto& a : argv_) out += " " + a;
    return out;
  }

 private:
  void spawn() {
    int in_pipe[2];
    int out_pipe[2];
    if (pipe2(in_pipe, O_CLOEXEC) != 0) throw TransportError("pipe failed");
    if (pipe2(out_pipe, O_CLOEXEC) != 0) {
      close(in_pipe[0]);
      close(in_pipe[1]);
      throw TransportError("pipe failed");
    }
    std::vector<char*> args;
    for (auto& a : argv_) args.push_back(a.data());
    args.push_back(nullptr);
    pid_ = fork();
    if (pid_ < 0) throw TransportError("fork failed");
    if (pid_ == 0) {
      dup2(in_pipe[0], STDIN_FILENO);
      dup2(out_pipe[1], STDOUT_FILENO);
      close(in_pipe[0]);
      close(in_pipe[1]);
      close(out_pipe[0]);
      close(out_pipe[1]);
      execvp(args[0], args.data());
      _exit(127);
    }
    close(in_pipe[0]);
    close(out_pipe[1]);
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
  }

  void shutdown() {
    if (to_child_ >= 0) close(to_child_);
    if (from_child_ >= 0) close(from_child_);
    to_child_ = from_child_ = -1;
    if (pid_ > 0) {
      for (int i = 0; i < 50; ++i) {
        if (waitpid(pid_, nullptr, WNOHANG) == pid_) {
          pid_ = -1;
          return;
        }
        usleep(10000);
      }
      kill(pid_, SIGKILL);
      waitpid(pid_, nullptr, 0);
      pid_ = -1;
    }
  }

  void write_all(const std::string& s) const {
    std::size_t off = 0;
    while (off < s.size()) {
      const ssize_t n = write(to_child_, s.data() + off, s.size() - off);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) {
        broken_ = true;
        throw TransportError("stdio model closed its input");
      }
      off += static_cast<std::size_t>(n);
    }
  }

  std::string read_line() const {
    const auto deadline =
        std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms_);
    for (;;) {
      const std::size_t nl = pending_.find('\n');
      if (nl != std::string::npos) {
        std::string line = pending_.substr(0, nl);
        pending_.erase(0, nl + 1);
        return line;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
                            deadline - std::chrono::steady_clock::now())
                            .count();
      if (left <= 0) {
        broken_ = true;  // a late reply would desynchronize the stream
        throw TimeoutError("stdio model did not answer within " + std::to_string(timeout_ms_) +
                           " ms");
      }
      pollfd pfd{from_child_, POLLIN, 0};
      const int r = poll(&pfd, 1, static_cast<int>(left));
      if (r < 0 && errno == EINTR) continue;
      if (r < 0) {
        broken_ = true;
        throw TransportError(std::string("poll failed: ") + std::strerror(errno));
      }
      if (r == 0) continue;
      char buf[4096];
      const ssize_t n = read(from_child_, buf, sizeof buf);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) {
        broken_ = true;
        throw TransportError("stdio model exited");
      }
      pending_.append(buf, static_cast<std::size_t>(n));
    }
  }

  std::vector<std::string> argv_;
  int timeout_ms_;
  pid_t pid_ = -1;
  int to_child_ = -1;
  int from_child_ = -1;
  mutable std::mutex mu_;
  mutable std::string pending_;
  mutable bool broken_ = false;
};

}  // namespace vlaprobe
