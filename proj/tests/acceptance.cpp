// One line per acceptance criterion; exit status 1 if any fails.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <thread>

#include "scenarios.hpp"

using namespace torper::cli;

namespace {

struct Criterion {
    int number;
    const char* title;
    const char* scenario;
};

constexpr Criterion kCriteria[] = {
    {1, "Gauss-sum vanishing and magnitude law, p = 5, 7", "gauss-sum-law"},
    {2, "stationary phase shift, p = 5", "stationary-phase"},
    {3, "epsilon quotients and unitarity, p = 5", "epsilon-quotient"},
    {4, "matrix coefficient closed form vs oracle, c(pi) = 4", "mc-closed-form"},
    {5, "vanishing for d != k, p = 5, 7, c(pi) = 2..4", "vanishing"},
    {6, "inert even value, p = 5, 13", "inert-even-value"},
    {7, "level-k twists when (-1/q) = -1, p = 7", "deep-twist"},
    {8, "ramified odd value and the non-square case", "ramified-value"},
    {9, "principal series values, mu levels 2 and 3", "principal-series-value"},
    {10, "twist identity with level-1 chi", "twist-identity"},
    {11, "decay slope of spherical translates", "decay"},
    {12, "dichotomy sweep over the pool", "dichotomy-sweep"},
};

}  // namespace

int main() {
    unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("TORPER_JOBS")) jobs = static_cast<unsigned>(std::max(1, std::atoi(env)));

    int failed = 0;
    const auto start = std::chrono::steady_clock::now();
    for (const auto& c : kCriteria) {
        const auto t0 = std::chrono::steady_clock::now();
        std::string note;
        bool ok = false;
        try {
            auto reports = run_all(c.scenario, Overrides{}, jobs);
            std::size_t pass = 0;
            for (const auto& r : reports) {
                pass += r.verdict == "pass";
                if (r.verdict != "pass" && note.empty()) note = " first failure: " + r.params.dump();
            }
            ok = !reports.empty() && pass == reports.size();
            note = " [" + std::to_string(pass) + "/" + std::to_string(reports.size()) + " reports]" + note;
        } catch (const std::exception& e) {
            note = std::string(" [error: ") + e.what() + "]";
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("criterion %2d %s  %s%s (%.1f s)\n", c.number, ok ? "PASS" : "FAIL", c.title, note.c_str(), secs);
        std::fflush(stdout);
        failed += !ok;
    }
    const double total = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%d of %zu criteria passed in %.1f s\n", static_cast<int>(std::size(kCriteria)) - failed,
                std::size(kCriteria), total);
    return failed == 0 ? 0 : 1;
}
