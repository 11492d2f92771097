#include "regionsel/external_estimator.hpp"

#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <cerrno>
#include <cstring>
#include <thread>

#include "regionsel/error.hpp"
#include "regionsel/image_io.hpp"

extern char** environ;

namespace regionsel {

namespace {

std::atomic<unsigned long> g_counter{0};

struct ScratchDir {
  std::filesystem::path path;
  ~ScratchDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

}  // namespace

ExternalEstimator::ExternalEstimator(std::vector<std::string> command, std::chrono::milliseconds timeout,
                                     std::filesystem::path scratch_dir)
    : command_(std::move(command)), timeout_(timeout), scratch_(std::move(scratch_dir)) {
  if (command_.empty()) throw ValidationError("external estimator command is empty");
  if (timeout_.count() <= 0) throw ValidationError("external estimator timeout must be positive");
}

KernelEstimate ExternalEstimator::estimate(const Image& blurred, int kernel_size) const {
  if (kernel_size < 3 || kernel_size % 2 == 0) throw ValidationError("kernel_size must be odd and >= 3");
  ScratchDir dir{scratch_ / ("regionsel-ext-" + std::to_string(::getpid()) + "-" + std::to_string(g_counter++))};
  std::filesystem::create_directories(dir.path);
  const auto input = dir.path / "blurred.pfm";
  const auto output = dir.path / "kernel.txt";
  write_image(blurred, input);

  std::vector<std::string> args = command_;
  args.push_back(input.string());
  args.push_back(std::to_string(kernel_size));
  args.push_back(output.string());
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  argv.push_back(nullptr);

  pid_t pid = 0;
  const int rc = posix_spawnp(&pid, argv[0], nullptr, nullptr, argv.data(), environ);
  if (rc != 0) throw EstimatorError("cannot start " + command_[0] + ": " + std::strerror(rc));

  const auto deadline = std::chrono::steady_clock::now() + timeout_;
  int status = 0;
  for (;;) {
    const pid_t done = ::waitpid(pid, &status, WNOHANG);
    if (done == pid) break;
    if (done < 0 && errno != EINTR) throw EstimatorError("waitpid failed for " + command_[0]);
    if (std::chrono::steady_clock::now() >= deadline) {
      ::kill(pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      throw EstimatorError(command_[0] + " timed out after " + std::to_string(timeout_.count()) + " ms");
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0) {
    throw EstimatorError(command_[0] + " failed with status " +
                         std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1));
  }
  try {
    return {read_kernel(output), EstimateStatus::Ok, {}};
  } catch (const Error& e) {
    throw EstimatorError(command_[0] + " produced no usable kernel: " + e.what());
  }
}

}  // namespace regionsel
