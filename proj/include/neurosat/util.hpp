#pragma once
// Shared helpers: always-on invariant checks, file I/O, deterministic float
// formatting, and a slot-indexed parallel_for.

#include <atomic>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <functional>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <thread>
#include <vector>

namespace neurosat {

#ifdef NEUROSAT_FLOAT32
using real = float;
#else
using real = double;
#endif

struct CheckError : std::logic_error {
    using std::logic_error::logic_error;
};

// Invariant check that survives NDEBUG. Use for contract violations that
// tests are required to observe.
#define NS_CHECK(cond, msg)                                        \
    do {                                                           \
        if (!(cond)) throw ::neurosat::CheckError(msg);            \
    } while (0)

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, const std::string& bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("short write: " + path);
}

// Shortest round-trip decimal form; byte-stable for a given double.
inline std::string fmt_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw std::runtime_error("fmt_double failed");
    return std::string(buf, ptr);
}

// Runs fn(i) for i in [0, n). Work items must be independent and write only
// to their own slots so the result is identical for any thread count.
inline void parallel_for(std::int64_t n, int threads,
                         const std::function<void(std::int64_t)>& fn) {
    if (threads <= 1 || n <= 1) {
        for (std::int64_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::vector<std::thread> pool;
    std::atomic<bool> failed{false};
    std::string error;
    std::mutex err_mu;
    int n_threads = static_cast<int>(std::min<std::int64_t>(threads, n));
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int t = 0; t < n_threads; ++t) {
        pool.emplace_back([&] {
            std::int64_t i;
            while ((i = next.fetch_add(1)) < n) {
                if (failed.load(std::memory_order_relaxed)) return;
                try {
                    fn(i);
                } catch (const std::exception& e) {
                    std::scoped_lock lk(err_mu);
                    if (!failed.exchange(true)) error = e.what();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    if (failed) throw std::runtime_error("parallel_for worker failed: " + error);
}

}  // namespace neurosat
