#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace polytrans {

struct ProcessLimits {
    std::chrono::milliseconds wall_time{10'000};
    std::uint64_t memory_bytes = 0;               // address-space cap, 0 = none
    std::uint64_t output_bytes = 64ull << 20;     // per stream file-size cap
};

struct ProcessResult {
    int exit_code = -1;
    int term_signal = 0;
    bool timed_out = false;
    bool exec_failed = false;
    std::string stdout_text;
    std::string stderr_text;
    std::chrono::milliseconds wall_time{0};

    bool success() const noexcept {
        return !timed_out && !exec_failed && term_signal == 0 && exit_code == 0;
    }
};

/// Runs argv[0] (PATH-resolved) in `workdir` in its own process group,
/// feeding `stdin_text`. On timeout the whole group is SIGKILLed.
ProcessResult run_process(const std::vector<std::string>& argv, const std::filesystem::path& workdir,
                          const std::string& stdin_text, const ProcessLimits& limits);

/// PATH lookup; returns empty when not found. Paths containing '/' are
/// checked directly.
std::filesystem::path find_executable(const std::string& name);

}  // namespace polytrans
