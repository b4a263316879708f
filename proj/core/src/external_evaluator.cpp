#include "blie/external_evaluator.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cmath>
#include <cstring>
#include <mutex>
#include "json.hpp"

#include "blie/error.hpp"

extern char** environ;

namespace blie {

namespace {

using json = nlohmann::json;

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

std::string describe_status(int status) {
  if (WIFEXITED(status)) return "exited with status " + std::to_string(WEXITSTATUS(status));
  if (WIFSIGNALED(status)) return "killed by signal " + std::to_string(WTERMSIG(status));
  return "stopped";
}

}  // namespace

std::string encode_request(const EvalRequest& request) {
  nlohmann::ordered_json j;
  j["id"] = request.request_id;
  j["point"] = request.point;
  j["budget"] = request.cumulative_budget;
  j["prior_budget"] = request.prior_budget;
  return j.dump();
}

EvalResult decode_response(const std::string& line, std::uint64_t expected_id) {
  const auto violation = [&](const std::string& why) {
    return Error(ErrorKind::ProtocolViolation,
                 "request " + std::to_string(expected_id) + ": " + why + ": " + line.substr(0, 200));
  };
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw violation("malformed response line");
  if (j.size() != 2 || !j.contains("id") || !j.contains("loss")) throw violation("expected exactly id and loss");
  const json& id = j["id"];
  if (!id.is_number_integer() || id.get<std::int64_t>() < 0) throw violation("id is not a non-negative integer");
  if (id.get<std::uint64_t>() != expected_id) throw violation("response id does not match");
  const json& loss = j["loss"];
  if (loss.is_string()) {
    const auto s = loss.get<std::string>();
    throw Error(ErrorKind::InvalidLoss, "request " + std::to_string(expected_id) + " returned loss \"" + s + "\"");
  }
  if (!loss.is_number()) throw violation("loss is not a number");
  EvalResult result;
  result.request_id = expected_id;
  result.loss = loss.get<double>();
  if (!std::isfinite(result.loss))
    throw Error(ErrorKind::InvalidLoss, "request " + std::to_string(expected_id) + " returned a non-finite loss");
  return result;
}

struct ExternalBackend::Worker {
  pid_t pid = -1;
  int to_child = -1;
  int from_child = -1;
  std::string buffer;

  ~Worker() { terminate(); }

  bool alive() const { return pid > 0; }

  void spawn(const ExternalSpec& spec) {
    int in_pipe[2];
    int out_pipe[2];
    if (::pipe2(in_pipe, O_CLOEXEC) != 0) throw Error(ErrorKind::SpawnFailed, std::strerror(errno));
    if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
      ::close(in_pipe[0]);
      ::close(in_pipe[1]);
      throw Error(ErrorKind::SpawnFailed, std::strerror(errno));
    }
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);
    if (!spec.working_dir.empty()) posix_spawn_file_actions_addchdir_np(&actions, spec.working_dir.c_str());

    std::vector<char*> argv;
    for (const auto& a : spec.command) argv.push_back(const_cast<char*>(a.c_str()));
    argv.push_back(nullptr);
    pid_t child = -1;
    const int rc = ::posix_spawnp(&child, argv[0], &actions, nullptr, argv.data(), environ);
    posix_spawn_file_actions_destroy(&actions);
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    if (rc != 0) {
      ::close(in_pipe[1]);
      ::close(out_pipe[0]);
      throw Error(ErrorKind::SpawnFailed, "cannot start '" + spec.command.front() + "': " + std::strerror(rc));
    }
    pid = child;
    to_child = in_pipe[1];
    from_child = out_pipe[0];
    buffer.clear();
  }

  void terminate() {
    if (to_child >= 0) ::close(to_child);
    if (from_child >= 0) ::close(from_child);
    to_child = from_child = -1;
    if (pid > 0) {
      int status = 0;
      if (::waitpid(pid, &status, WNOHANG) == 0) {
        ::kill(pid, SIGKILL);
        ::waitpid(pid, &status, 0);
      }
    }
    pid = -1;
    buffer.clear();
  }

  // Reaps the child if it has exited and describes how.
  std::string exit_reason() {
    if (pid <= 0) return "not running";
    int status = 0;
    for (int i = 0; i < 50; ++i) {
      const pid_t r = ::waitpid(pid, &status, WNOHANG);
      if (r == pid) {
        pid = -1;
        return describe_status(status);
      }
      ::usleep(2000);
    }
    return "closed its output";
  }

  void write_line(const std::string& line, std::uint64_t id) {
    const std::string data = line + "\n";
    std::size_t off = 0;
    while (off < data.size()) {
      const ssize_t n = ::write(to_child, data.data() + off, data.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        const std::string why = exit_reason();
        throw Error(ErrorKind::BatchFailed, "request " + std::to_string(id) + ": evaluator " + why);
      }
      off += static_cast<std::size_t>(n);
    }
  }

  std::string read_line(std::chrono::milliseconds timeout, std::uint64_t id) {
    const auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      const auto nl = buffer.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer.substr(0, nl);
        buffer.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0)
        throw Error(ErrorKind::Timeout, "request " + std::to_string(id) + ": no response within " +
                                            std::to_string(timeout.count()) + " ms");
      pollfd pfd{from_child, POLLIN, 0};
      const int pr = ::poll(&pfd, 1, static_cast<int>(std::min<long long>(left.count(), 1 << 30)));
      if (pr < 0) {
        if (errno == EINTR) continue;
        throw Error(ErrorKind::BatchFailed, std::string("poll: ") + std::strerror(errno));
      }
      if (pr == 0) continue;
      char chunk[4096];
      const ssize_t n = ::read(from_child, chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw Error(ErrorKind::BatchFailed, std::string("read: ") + std::strerror(errno));
      }
      if (n == 0) {
        const std::string why = exit_reason();
        std::string msg = "request " + std::to_string(id) + ": evaluator " + why;
        if (!buffer.empty()) msg += "; partial output: " + buffer.substr(0, 200);
        throw Error(ErrorKind::BatchFailed, msg);
      }
      buffer.append(chunk, static_cast<std::size_t>(n));
    }
  }
};

ExternalBackend::ExternalBackend(ExternalSpec spec) : spec_(std::move(spec)) {
  if (spec_.command.empty() || spec_.command.front().empty())
    throw Error(ErrorKind::InvalidArgument, "external evaluator command is empty");
  if (spec_.timeout.count() <= 0) throw Error(ErrorKind::InvalidArgument, "timeout must be positive");
  ignore_sigpipe();
}

ExternalBackend::~ExternalBackend() = default;

void ExternalBackend::prepare(std::size_t parallelism) {
  while (workers_.size() < parallelism) workers_.push_back(std::make_unique<Worker>());
}

EvalResult ExternalBackend::evaluate(const EvalRequest& request, std::size_t slot) {
  if (slot >= workers_.size()) throw Error(ErrorKind::InvalidArgument, "slot out of range");
  Worker& w = *workers_[slot];
  if (!w.alive()) w.spawn(spec_);
  const auto start = std::chrono::steady_clock::now();
  try {
    w.write_line(encode_request(request), request.request_id);
    const std::string line = w.read_line(spec_.timeout, request.request_id);
    EvalResult result = decode_response(line, request.request_id);
    result.wall_time_ms = static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start).count());
    return result;
  } catch (const Error& e) {
    // A worker in an unknown state cannot be trusted for the next request.
    if (e.kind() != ErrorKind::InvalidLoss) w.terminate();
    throw;
  }
}

std::size_t ExternalBackend::live_workers() const {
  std::size_t n = 0;
  for (const auto& w : workers_) n += w->alive() ? 1 : 0;
  return n;
}

}  // namespace blie
