#include "surplus/external_learner.h"

#include <cerrno>
#include <cmath>
#include <csignal>
#include <cstring>
#include <fcntl.h>
#include <mutex>
#include <poll.h>
#include <spawn.h>
#include <sys/wait.h>
#include <thread>
#include <unistd.h>

#include "surplus/errors.h"

extern char** environ;

namespace surplus {
namespace {

constexpr std::size_t kTranscriptLines = 16;
constexpr std::size_t kTranscriptWidth = 240;

void ignore_sigpipe() {
  static std::once_flag once;
  std::call_once(once, [] { std::signal(SIGPIPE, SIG_IGN); });
}

}  // namespace

LearnerProcess::LearnerProcess(const std::string& command,
                               std::chrono::milliseconds timeout)
    : command_(command), timeout_(timeout) {
  ignore_sigpipe();
  int in_pipe[2];   // parent writes -> child stdin
  int out_pipe[2];  // child stdout -> parent reads
  if (pipe2(in_pipe, O_CLOEXEC) != 0) fail("pipe failed");
  if (pipe2(out_pipe, O_CLOEXEC) != 0) {
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    fail("pipe failed");
  }
  posix_spawn_file_actions_t actions;
  posix_spawn_file_actions_init(&actions);
  posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
  posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);

  std::string sh = "/bin/sh", dash_c = "-c", cmd = command;
  char* argv[] = {sh.data(), dash_c.data(), cmd.data(), nullptr};
  const int rc = posix_spawn(&pid_, "/bin/sh", &actions, nullptr, argv, environ);
  posix_spawn_file_actions_destroy(&actions);
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  if (rc != 0) {
    pid_ = -1;
    ::close(to_child_);
    ::close(from_child_);
    to_child_ = from_child_ = -1;
    fail(std::string("cannot spawn learner: ") + std::strerror(rc));
  }
}

LearnerProcess::~LearnerProcess() {
  try {
    shutdown();
  } catch (...) {
  }
}

void LearnerProcess::shutdown() {
  if (to_child_ >= 0) {
    const std::string line = R"({"cmd":"shutdown"})";
    record(">", line);
    std::string data = line + "\n";
    // Best effort: the child may already be gone.
    [[maybe_unused]] auto ignored = ::write(to_child_, data.data(), data.size());
    ::close(to_child_);
    to_child_ = -1;
  }
  if (from_child_ >= 0) {
    ::close(from_child_);
    from_child_ = -1;
  }
  if (pid_ > 0) {
    int status = 0;
    for (int i = 0; i < 200; ++i) {
      if (waitpid(pid_, &status, WNOHANG) != 0) {
        pid_ = -1;
        return;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    ::kill(pid_, SIGKILL);
    waitpid(pid_, &status, 0);
    pid_ = -1;
  }
}

void LearnerProcess::record(const char* direction, const std::string& line) {
  std::string entry = std::string(direction) + " " +
                      (line.size() > kTranscriptWidth
                           ? line.substr(0, kTranscriptWidth) + "..."
                           : line);
  transcript_.push_back(std::move(entry));
  if (transcript_.size() > kTranscriptLines) transcript_.pop_front();
}

std::string LearnerProcess::transcript() const {
  std::string out;
  for (const auto& line : transcript_) {
    out += line;
    out += '\n';
  }
  return out;
}

void LearnerProcess::fail(const std::string& what) const {
  throw ProtocolError("external learner '" + command_ + "': " + what +
                      "\ntranscript:\n" + transcript());
}

void LearnerProcess::send_line(const std::string& line) {
  if (to_child_ < 0) fail("process already shut down");
  record(">", line);
  std::string data = line + "\n";
  std::size_t off = 0;
  while (off < data.size()) {
    const ssize_t w = ::write(to_child_, data.data() + off, data.size() - off);
    if (w < 0) {
      if (errno == EINTR) continue;
      fail(std::string("write failed: ") + std::strerror(errno));
    }
    off += static_cast<std::size_t>(w);
  }
}

std::string LearnerProcess::read_line() {
  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  for (;;) {
    const auto nl = buffer_.find('\n');
    if (nl != std::string::npos) {
      std::string line = buffer_.substr(0, nl);
      buffer_.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      record("<", line);
      return line;
    }
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - std::chrono::steady_clock::now());
    if (left.count() <= 0) fail("timed out waiting for reply");
    pollfd pfd{from_child_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, static_cast<int>(left.count()));
    if (ready < 0) {
      if (errno == EINTR) continue;
      fail(std::string("poll failed: ") + std::strerror(errno));
    }
    if (ready == 0) fail("timed out waiting for reply");
    char chunk[65536];
    const ssize_t r = ::read(from_child_, chunk, sizeof chunk);
    if (r < 0) {
      if (errno == EINTR) continue;
      fail(std::string("read failed: ") + std::strerror(errno));
    }
    if (r == 0) fail("process closed its output");
    buffer_.append(chunk, static_cast<std::size_t>(r));
  }
}

nlohmann::json LearnerProcess::request(nlohmann::json message) {
  const long id = next_id_++;
  message["id"] = id;
  send_line(message.dump());
  nlohmann::json reply;
  try {
    reply = nlohmann::json::parse(read_line());
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("malformed reply: ") + e.what());
  }
  if (!reply.is_object()) fail("reply is not a JSON object");
  if (!reply.contains("id") || reply["id"] != id) {
    fail("reply id does not match request id " + std::to_string(id));
  }
  if (reply.contains("error") ||
      (reply.contains("ok") && reply["ok"] == false)) {
    fail("learner reported an error");
  }
  return reply;
}

nlohmann::json rows_to_json(const Matrix& x, std::span<const std::size_t> rows,
                            const CoalitionMask& mask) {
  nlohmann::json out = nlohmann::json::array();
  for (std::size_t r : rows) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t c = 0; c < x.cols(); ++c) {
      row.push_back(mask.test(c) ? x(r, c) : 0.0);
    }
    out.push_back(std::move(row));
  }
  return out;
}

void ExternalPredictor::predict(const Matrix& x,
                                std::span<const std::size_t> rows,
                                std::span<double> out) const {
  nlohmann::json msg = {{"cmd", "predict"}, {"X", rows_to_json(x, rows, mask_)}};
  std::lock_guard lock(mu_);
  const nlohmann::json reply = process_->request(std::move(msg));
  if (!reply.contains("yhat") || !reply["yhat"].is_array() ||
      reply["yhat"].size() != rows.size()) {
    throw ProtocolError("external learner: predict reply lacks a yhat array of "
                        "length " + std::to_string(rows.size()) +
                        "\ntranscript:\n" + process_->transcript());
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& v = reply["yhat"][i];
    if (!v.is_number() || !std::isfinite(v.get<double>())) {
      throw ProtocolError("external learner: non-finite prediction\ntranscript:\n" +
                          process_->transcript());
    }
    out[i] = v.get<double>();
  }
}

std::shared_ptr<const ExternalPredictor> fit_external(
    const ExternalEndpoint& endpoint, std::uint64_t seed, const Dataset& ds,
    std::span<const std::size_t> rows, const CoalitionMask& mask) {
  if (endpoint.command.empty()) {
    throw ValidationError("external learner command is empty");
  }
  auto process = std::make_unique<LearnerProcess>(endpoint.command,
                                                  endpoint.timeout);
  nlohmann::json y = nlohmann::json::array();
  for (std::size_t r : rows) y.push_back(ds.y()[r]);
  nlohmann::json mask_json = nlohmann::json::array();
  for (std::size_t j = 0; j < mask.size(); ++j) mask_json.push_back(mask.test(j) ? 1 : 0);
  nlohmann::json hyper = nlohmann::json::object();
  for (const auto& [k, v] : endpoint.hyperparams) hyper[k] = v;
  nlohmann::json msg = {{"cmd", "fit"},
                        {"X", rows_to_json(ds.x(), rows, mask)},
                        {"y", std::move(y)},
                        {"mask", std::move(mask_json)},
                        {"seed", seed},
                        {"hyperparams", std::move(hyper)}};
  const nlohmann::json reply = process->request(std::move(msg));
  if (!reply.contains("ok") || reply["ok"] != true) {
    throw ProtocolError("external learner: fit reply lacks \"ok\":true\ntranscript:\n" +
                        process->transcript());
  }
  return std::make_shared<ExternalPredictor>(std::move(process), mask);
}

}  // namespace surplus
