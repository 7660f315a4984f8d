#pragma once

#include <cstddef>
#include <functional>

namespace deeposets {

// Splits [0, count) into at most `threads` contiguous shards and runs
// fn(worker, begin, end) for each. With threads <= 1 (or a single shard)
// everything runs inline on the calling thread, giving strictly sequential
// semantics. Exceptions from workers are rethrown on the caller.
void parallel_shards(
    std::size_t count, int threads,
    const std::function<void(int worker, std::size_t begin, std::size_t end)>&
        fn);

}  // namespace deeposets
