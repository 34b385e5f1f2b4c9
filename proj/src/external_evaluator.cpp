#include "anchoropt/external_evaluator.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <chrono>
#include <cmath>
#include <limits>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "anchoropt/errors.hpp"

namespace anchoropt {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

FitnessResponse failure(long id, std::string detail) { return {id, kNaN, false, std::move(detail), 0.0}; }

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { ::signal(SIGPIPE, SIG_IGN); });
}

class Fd {
 public:
  explicit Fd(int fd = -1) : fd_(fd) {}
  Fd(const Fd&) = delete;
  Fd& operator=(const Fd&) = delete;
  ~Fd() { reset(); }
  int get() const { return fd_; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_;
};

FitnessResponse run_child(const FitnessRequest& request, const EvaluatorOptions& options) {
  const std::string payload = encode_request(request);
  int in_pipe[2];
  int out_pipe[2];
  if (::pipe2(in_pipe, O_CLOEXEC) != 0) return failure(request.trial_id, "pipe() failed");
  if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    return failure(request.trial_id, "pipe() failed");
  }
  Fd child_stdin(in_pipe[0]);
  Fd to_child(in_pipe[1]);
  Fd from_child(out_pipe[0]);
  Fd child_stdout(out_pipe[1]);

  const char* command = options.command.c_str();
  const pid_t pid = ::fork();
  if (pid < 0) return failure(request.trial_id, "fork() failed");
  if (pid == 0) {
    // Only async-signal-safe calls until exec.
    ::setpgid(0, 0);
    ::dup2(child_stdin.get(), STDIN_FILENO);
    ::dup2(child_stdout.get(), STDOUT_FILENO);
    ::execl("/bin/sh", "sh", "-c", command, static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::setpgid(pid, pid);
  child_stdin.reset();
  child_stdout.reset();

  const auto start = std::chrono::steady_clock::now();
  const auto deadline = start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                    std::chrono::duration<double>(options.timeout_s));
  const bool limited = options.timeout_s > 0.0;

  // Requests are small, so this cannot block on a full pipe; a child that
  // exits without reading just produces EPIPE, which is ignored.
  std::size_t written = 0;
  while (written < payload.size()) {
    const ssize_t n = ::write(to_child.get(), payload.data() + written, payload.size() - written);
    if (n < 0) {
      if (errno == EINTR) continue;
      break;
    }
    written += static_cast<std::size_t>(n);
  }
  to_child.reset();

  std::string output;
  bool timed_out = false;
  char buffer[4096];
  for (;;) {
    int wait_ms = -1;
    if (limited) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) {
        timed_out = true;
        break;
      }
      wait_ms = static_cast<int>(std::min<long long>(left.count(), 1000));
    }
    pollfd pfd{from_child.get(), POLLIN, 0};
    const int ready = ::poll(&pfd, 1, wait_ms);
    if (ready < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (ready == 0) continue;
    const ssize_t n = ::read(from_child.get(), buffer, sizeof buffer);
    if (n < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (n == 0) break;
    output.append(buffer, static_cast<std::size_t>(n));
  }

  if (timed_out) ::kill(-pid, SIGKILL);
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  if (timed_out) {
    return failure(request.trial_id, "timed out after " + std::to_string(options.timeout_s) + " s");
  }
  if (WIFSIGNALED(status)) {
    return failure(request.trial_id, "evaluator killed by signal " + std::to_string(WTERMSIG(status)));
  }
  if (WIFEXITED(status) && WEXITSTATUS(status) != 0) {
    return failure(request.trial_id,
                   "evaluator exited with status " + std::to_string(WEXITSTATUS(status)));
  }
  const auto newline = output.find('\n');
  if (newline == std::string::npos && output.empty()) {
    return failure(request.trial_id, "evaluator produced no response");
  }
  return decode_response(output.substr(0, newline), request.trial_id);
}

FitnessResponse run_one(const FitnessRequest& request, const EvaluatorOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  FitnessResponse response = run_child(request, options);
  response.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return response;
}

}  // namespace

std::string encode_request(const FitnessRequest& request) {
  nlohmann::ordered_json params = nlohmann::ordered_json::object();
  for (const auto& [name, value] : request.params.entries()) params[name] = value;
  nlohmann::ordered_json j;
  j["trial_id"] = request.trial_id;
  j["generation"] = request.generation;
  j["params"] = std::move(params);
  return j.dump() + "\n";
}

std::string encode_response(const FitnessResponse& response) {
  nlohmann::ordered_json j;
  j["trial_id"] = response.trial_id;
  j["fitness"] = response.ok ? nlohmann::ordered_json(response.fitness) : nlohmann::ordered_json(nullptr);
  j["status"] = response.ok ? "ok" : "failed";
  j["detail"] = response.detail;
  return j.dump() + "\n";
}

FitnessResponse decode_response(const std::string& line, long expected_id) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception&) {
    return failure(expected_id, "malformed response line: " + line.substr(0, 200));
  }
  if (!j.is_object() || !j.contains("trial_id") || !j["trial_id"].is_number_integer() ||
      !j.contains("status") || !j["status"].is_string()) {
    return failure(expected_id, "response lacks trial_id/status: " + line.substr(0, 200));
  }
  if (j["trial_id"].get<long>() != expected_id) {
    return failure(expected_id, "response trial_id " + std::to_string(j["trial_id"].get<long>()) +
                                    " does not match request " + std::to_string(expected_id));
  }
  std::string detail = j.contains("detail") && j["detail"].is_string() ? j["detail"].get<std::string>() : "";
  const auto status = j["status"].get<std::string>();
  if (status == "failed") return failure(expected_id, detail.empty() ? "evaluator reported failure" : detail);
  if (status != "ok") return failure(expected_id, "unknown status '" + status + "'");
  if (!j.contains("fitness") || !j["fitness"].is_number()) {
    return failure(expected_id, "status ok without a numeric fitness");
  }
  const double fitness = j["fitness"].get<double>();
  if (!std::isfinite(fitness)) return failure(expected_id, "status ok with non-finite fitness");
  return {expected_id, fitness, true, std::move(detail), 0.0};
}

std::vector<FitnessResponse> external_evaluate(std::span<const FitnessRequest> batch,
                                               const EvaluatorOptions& options) {
  if (options.command.empty()) throw ConfigError("no evaluator command configured");
  if (options.max_parallel < 1) throw ConfigError("max_parallel must be at least 1");
  ignore_sigpipe();

  std::vector<FitnessResponse> responses(batch.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < batch.size(); i = next++) {
      responses[i] = run_one(batch[i], options);
    }
  };
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(options.max_parallel), batch.size());
  {
    std::vector<std::jthread> pool;
    for (std::size_t w = 1; w < workers; ++w) pool.emplace_back(worker);
    worker();
  }
  return responses;
}

}  // namespace anchoropt
