#include "trackanno/pipeline/detector.hpp"

#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <deque>
#include <fstream>
#include <thread>

#include "trackanno/core/error.hpp"

namespace trackanno::pipeline {

namespace fs = std::filesystem;

namespace {

std::string tail_of(const fs::path& log, std::size_t max_lines = 20) {
  std::ifstream in(log);
  std::deque<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    lines.push_back(line);
    if (lines.size() > max_lines) lines.pop_front();
  }
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

std::string describe(const std::string& what, const std::string& command, const ProcessResult& r) {
  std::string msg = what + " failed: ";
  if (r.timed_out) {
    msg += "timed out";
  } else {
    msg += "exit status " + std::to_string(r.exit_code);
  }
  msg += "\n  command: " + command;
  if (!r.output_tail.empty()) msg += "\n  output:\n" + r.output_tail;
  return msg;
}

}  // namespace

ProcessResult run_command(const std::string& command, double timeout_s, const fs::path& log) {
  if (!log.parent_path().empty()) fs::create_directories(log.parent_path());
  int fd = ::open(log.c_str(), O_WRONLY | O_CREAT | O_APPEND | O_CLOEXEC, 0644);
  if (fd < 0) throw ProcessError("cannot open log " + log.string());

  pid_t pid = ::fork();
  if (pid < 0) {
    ::close(fd);
    throw ProcessError("fork failed");
  }
  if (pid == 0) {
    ::setpgid(0, 0);
    ::dup2(fd, STDOUT_FILENO);
    ::dup2(fd, STDERR_FILENO);
    int devnull = ::open("/dev/null", O_RDONLY);
    if (devnull >= 0) ::dup2(devnull, STDIN_FILENO);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::close(fd);
  ::setpgid(pid, pid);

  ProcessResult r;
  auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_s);
  int status = 0;
  auto sleep = std::chrono::milliseconds(1);
  for (;;) {
    pid_t w = ::waitpid(pid, &status, WNOHANG);
    if (w == pid) break;
    if (w < 0 && errno != EINTR) throw ProcessError("waitpid failed");
    if (std::chrono::steady_clock::now() >= deadline) {
      ::kill(-pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      r.timed_out = true;
      break;
    }
    std::this_thread::sleep_for(sleep);
    sleep = std::min(sleep * 2, std::chrono::milliseconds(50));
  }
  if (!r.timed_out) {
    if (WIFEXITED(status)) {
      r.exit_code = WEXITSTATUS(status);
    } else if (WIFSIGNALED(status)) {
      r.exit_code = 128 + WTERMSIG(status);
    }
  }
  r.output_tail = tail_of(log);
  return r;
}

std::string shell_quote(std::string_view s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out += c;
    }
  }
  return out + "'";
}

std::string expand_command(std::string_view tmpl, const std::map<std::string, std::string>& values) {
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl[i] == '{') {
      std::size_t close = tmpl.find('}', i);
      if (close != std::string_view::npos) {
        std::string name(tmpl.substr(i + 1, close - i - 1));
        auto it = values.find(name);
        if (it == values.end()) throw InvalidArgument("no value for placeholder {" + name + "}");
        out += shell_quote(it->second);
        i = close + 1;
        continue;
      }
    }
    out += tmpl[i++];
  }
  return out;
}

void run_inference(const DetectorContract& d, const fs::path& model, const fs::path& frame_list,
                   const fs::path& detections_out, int iteration, std::uint64_t seed, const fs::path& log) {
  std::string cmd = expand_command(d.infer_command, {{"model", model.string()},
                                                     {"frame_list", frame_list.string()},
                                                     {"detections_out", detections_out.string()},
                                                     {"iteration", std::to_string(iteration)},
                                                     {"seed", std::to_string(seed)}});
  ProcessResult r = run_command(cmd, d.timeout_s, log);
  if (r.timed_out || r.exit_code != 0) throw ProcessError(describe("inference", cmd, r));
  if (!fs::exists(detections_out)) {
    throw ProcessError("inference produced no detection file " + detections_out.string() + "\n  command: " + cmd);
  }
}

void run_training(const DetectorContract& d, const fs::path& train_list, const fs::path& model_out, int iteration,
                  std::uint64_t seed, const fs::path& log) {
  std::string cmd = expand_command(d.train_command, {{"train_list", train_list.string()},
                                                     {"model_out", model_out.string()},
                                                     {"iteration", std::to_string(iteration)},
                                                     {"seed", std::to_string(seed)}});
  ProcessResult r = run_command(cmd, d.timeout_s, log);
  if (r.timed_out || r.exit_code != 0) throw ProcessError(describe("training", cmd, r));
  if (!fs::exists(model_out)) {
    throw ProcessError("training produced no model " + model_out.string() + "\n  command: " + cmd);
  }
}

}  // namespace trackanno::pipeline
