#pragma once

#include <sys/types.h>

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace vlmedge::bench {

/// A child process with stdout and stderr redirected to a log file. The
/// destructor terminates it if still running.
class ChildProcess {
 public:
  /// Throws BenchError{RunFailed} when the process cannot be started.
  static ChildProcess spawn(const std::filesystem::path& executable, const std::vector<std::string>& args,
                            const std::filesystem::path& log_path);

  ChildProcess(ChildProcess&& other) noexcept;
  ChildProcess& operator=(ChildProcess&& other) noexcept;
  ~ChildProcess();

  pid_t pid() const { return pid_; }
  bool running();

  /// Exit status, or nullopt if still running after `timeout`.
  std::optional<int> wait(std::chrono::milliseconds timeout);
  /// SIGTERM, then SIGKILL after `grace`. Returns the exit status.
  int terminate(std::chrono::milliseconds grace = std::chrono::seconds(3));

 private:
  explicit ChildProcess(pid_t pid) : pid_(pid) {}
  std::optional<int> reap(bool block);

  pid_t pid_ = -1;
  std::optional<int> status_;
};

/// A TCP and UDP port number that was free when asked.
std::uint16_t pick_free_port();

}  // namespace vlmedge::bench
