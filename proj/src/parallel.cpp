#include "deeposets/parallel.hpp"

#include <algorithm>
#include <exception>
#include <thread>
#include <vector>

namespace deeposets {

void parallel_shards(
    std::size_t count, int threads,
    const std::function<void(int, std::size_t, std::size_t)>& fn) {
  if (count == 0) return;
  const std::size_t workers =
      std::min<std::size_t>(std::max(threads, 1), count);
  if (workers == 1) {
    fn(0, 0, count);
    return;
  }

  // Contiguous shards, remainder spread over the leading workers, so the
  // shard layout is a pure function of (count, threads).
  const std::size_t base = count / workers;
  const std::size_t extra = count % workers;
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers - 1);

  std::size_t begin = 0;
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t end = begin + base + (w < extra ? 1 : 0);
    auto run = [&fn, &errors, w, begin, end]() {
      try {
        fn(static_cast<int>(w), begin, end);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    };
    if (w + 1 == workers) {
      run();  // last shard on the calling thread
    } else {
      pool.emplace_back(run);
    }
    begin = end;
  }
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace deeposets
