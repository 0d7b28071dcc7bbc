#ifndef SURPLUS_PARALLEL_H_
#define SURPLUS_PARALLEL_H_

#include <cstddef>
#include <functional>

namespace surplus {

// Runs body(i) for i in [0, count) on up to `jobs` threads. Each index runs
// exactly once; callers write results into slot i so that output never
// depends on scheduling. If any body throws, the exception from the lowest
// failing index is rethrown after all workers finish.
void parallel_for(std::size_t count, int jobs,
                  const std::function<void(std::size_t)>& body);

}  // namespace surplus

#endif  // SURPLUS_PARALLEL_H_
