#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <sys/types.h>

namespace vista {

/// A child process running `/bin/sh -c command` with line-oriented pipes on
/// its standard input and output. The child runs in its own process group,
/// which is killed on destruction if the child is still running.
class Subprocess {
 public:
  explicit Subprocess(const std::string& command);
  ~Subprocess();

  Subprocess(const Subprocess&) = delete;
  Subprocess& operator=(const Subprocess&) = delete;

  /// Writes `line` plus a newline. Throws DriverError if the child is gone.
  void write_line(const std::string& line);

  /// Next line without its newline; nullopt at end of stream. Throws
  /// DriverError on timeout.
  std::optional<std::string> read_line(std::chrono::milliseconds timeout);

  void close_stdin();

  /// Waits for exit and returns the exit code (128 + signal for signals).
  /// Kills the child and throws DriverError on timeout.
  int wait(std::chrono::milliseconds timeout);

  void kill();

  pid_t pid() const { return pid_; }

 private:
  pid_t pid_ = -1;
  int in_fd_ = -1;
  int out_fd_ = -1;
  bool reaped_ = false;
  int exit_code_ = -1;
  std::string buffer_;
  bool eof_ = false;
};

}  // namespace vista
