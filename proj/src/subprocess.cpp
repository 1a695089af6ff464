#include "polytrans/subprocess.hpp"

#include "polytrans/error.hpp"

#include <cerrno>
#include <csignal>
#include <cstdlib>
#include <cstring>
#include <fcntl.h>
#include <fstream>
#include <sstream>
#include <sys/resource.h>
#include <sys/stat.h>
#include <sys/wait.h>
#include <thread>
#include <unistd.h>
#include <utility>

namespace polytrans {

namespace fs = std::filesystem;

namespace {

// Reads at most `cap` bytes.
std::string slurp(const fs::path& p, std::uint64_t cap) {
    std::ifstream in(p, std::ios::binary);
    if (!in) return {};
    std::string out;
    out.resize(static_cast<std::size_t>(cap));
    in.read(out.data(), static_cast<std::streamsize>(cap));
    out.resize(static_cast<std::size_t>(in.gcount()));
    return out;
}

class ScopedFd {
public:
    explicit ScopedFd(int fd) : fd_(fd) {}
    ~ScopedFd() {
        if (fd_ >= 0) ::close(fd_);
    }
    ScopedFd(const ScopedFd&) = delete;
    ScopedFd& operator=(const ScopedFd&) = delete;
    int get() const noexcept { return fd_; }
    int release() noexcept { return std::exchange(fd_, -1); }

private:
    int fd_;
};

[[noreturn]] void child_fail(int report_fd) {
    const int err = errno;
    [[maybe_unused]] auto n = ::write(report_fd, &err, sizeof err);
    ::_exit(127);
}

}  // namespace

fs::path find_executable(const std::string& name) {
    if (name.empty()) return {};
    if (name.find('/') != std::string::npos)
        return ::access(name.c_str(), X_OK) == 0 ? fs::path(name) : fs::path{};
    const char* path_env = std::getenv("PATH");
    std::istringstream dirs(path_env ? path_env : "/usr/bin:/bin");
    std::string dir;
    while (std::getline(dirs, dir, ':')) {
        if (dir.empty()) dir = ".";
        fs::path candidate = fs::path(dir) / name;
        std::error_code ec;
        if (fs::is_regular_file(candidate, ec) && ::access(candidate.c_str(), X_OK) == 0) return candidate;
    }
    return {};
}

ProcessResult run_process(const std::vector<std::string>& argv, const fs::path& workdir,
                          const std::string& stdin_text, const ProcessLimits& limits) {
    if (argv.empty()) throw ConfigError("empty command line");

    const fs::path in_path = workdir / ".polytrans.stdin";
    const fs::path out_path = workdir / ".polytrans.stdout";
    const fs::path err_path = workdir / ".polytrans.stderr";
    {
        std::ofstream in(in_path, std::ios::binary | std::ios::trunc);
        if (!in) throw WorkspaceError("cannot write " + in_path.string());
        in << stdin_text;
    }

    ScopedFd in_fd(::open(in_path.c_str(), O_RDONLY | O_CLOEXEC));
    ScopedFd out_fd(::open(out_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0600));
    ScopedFd err_fd(::open(err_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC | O_CLOEXEC, 0600));
    if (in_fd.get() < 0 || out_fd.get() < 0 || err_fd.get() < 0)
        throw WorkspaceError("cannot open stdio files in " + workdir.string());

    int report[2];
    if (::pipe2(report, O_CLOEXEC) != 0) throw WorkspaceError(std::string("pipe: ") + std::strerror(errno));
    ScopedFd report_read(report[0]);
    ScopedFd report_write(report[1]);

    std::vector<char*> cargv;
    cargv.reserve(argv.size() + 1);
    for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
    cargv.push_back(nullptr);

    const auto started = std::chrono::steady_clock::now();
    const pid_t pid = ::fork();
    if (pid < 0) throw WorkspaceError(std::string("fork: ") + std::strerror(errno));

    if (pid == 0) {
        ::setpgid(0, 0);
        if (::chdir(workdir.c_str()) != 0) child_fail(report_write.get());
        if (::dup2(in_fd.get(), STDIN_FILENO) < 0 || ::dup2(out_fd.get(), STDOUT_FILENO) < 0 ||
            ::dup2(err_fd.get(), STDERR_FILENO) < 0)
            child_fail(report_write.get());
        rlimit core{0, 0};
        ::setrlimit(RLIMIT_CORE, &core);
        if (limits.output_bytes != 0) {
            rlimit fsize{limits.output_bytes, limits.output_bytes};
            ::setrlimit(RLIMIT_FSIZE, &fsize);
        }
        if (limits.memory_bytes != 0) {
            rlimit as{limits.memory_bytes, limits.memory_bytes};
            ::setrlimit(RLIMIT_AS, &as);
        }
        ::signal(SIGPIPE, SIG_DFL);
        ::execvp(cargv[0], cargv.data());
        child_fail(report_write.get());
    }

    ::setpgid(pid, pid);
    ::close(report_write.release());

    ProcessResult result;
    const auto deadline = started + limits.wall_time;
    int status = 0;
    for (;;) {
        const pid_t r = ::waitpid(pid, &status, WNOHANG);
        if (r == pid) break;
        if (r < 0 && errno != EINTR) break;
        if (std::chrono::steady_clock::now() >= deadline) {
            ::kill(-pid, SIGKILL);
            ::kill(pid, SIGKILL);
            while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
            }
            result.timed_out = true;
            break;
        }
        std::this_thread::sleep_for(std::chrono::milliseconds{2});
    }
    // Reap stragglers the program may have forked into its group.
    ::kill(-pid, SIGKILL);
    result.wall_time =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started);

    int child_errno = 0;
    if (::read(report_read.get(), &child_errno, sizeof child_errno) == static_cast<ssize_t>(sizeof child_errno)) {
        result.exec_failed = true;
        result.stderr_text = std::string("exec ") + argv[0] + ": " + std::strerror(child_errno);
        return result;
    }

    if (!result.timed_out) {
        if (WIFEXITED(status)) result.exit_code = WEXITSTATUS(status);
        if (WIFSIGNALED(status)) result.term_signal = WTERMSIG(status);
    }
    const std::uint64_t cap = limits.output_bytes != 0 ? limits.output_bytes : (64ull << 20);
    result.stdout_text = slurp(out_path, cap);
    result.stderr_text = slurp(err_path, cap);
    return result;
}

}  // namespace polytrans
