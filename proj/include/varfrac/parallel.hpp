#pragma once

#include <cstddef>
#include <exception>
#include <functional>

namespace varfrac {

// Runs body(i) for i in [0, count) on up to hardware_concurrency threads.
// Calls made from inside a worker run serially. The first exception thrown
// by any body is rethrown on the calling thread.
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& body);

} // namespace varfrac
