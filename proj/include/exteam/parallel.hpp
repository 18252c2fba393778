// Copyright 2026 The exteam Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef EXTEAM_PARALLEL_HPP_
#define EXTEAM_PARALLEL_HPP_

#include <algorithm>
#include <cstddef>
#include <exception>
#include <vector>

#include <omp.h>

namespace exteam {

// Default number of items per reduction chunk. Results depend on the chunk
// size but never on the number of threads.
inline constexpr std::size_t kDefaultChunkSize = 4096;

void set_num_threads(int threads);
int num_threads();

// Evaluates f(i) for i in [0, n) in parallel and stores results in order.
// out[i] = f(i). Exceptions cannot cross the parallel region; the one from
// the lowest index is rethrown afterwards.
template <class T, class F>
std::vector<T> parallel_map(std::size_t n, F&& f) {
  std::vector<T> out(n);
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic, 1) if (count > 1)
  for (long long i = 0; i < count; ++i) {
    const auto k = static_cast<std::size_t>(i);
    try {
      out[k] = f(k);
    } catch (...) {
      errors[k] = std::current_exception();
    }
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

// Sum of f(i) over [0, n). Each fixed-size chunk is summed serially and the
// chunk partials are added in chunk order, so the result is bitwise stable
// across thread counts.
template <class F>
double chunked_sum(std::size_t n, std::size_t chunk, F&& f) {
  chunk = std::max<std::size_t>(chunk, 1);
  const std::size_t chunks = (n + chunk - 1) / chunk;
  std::vector<double> partial = parallel_map<double>(chunks, [&](std::size_t c) {
    double s = 0.0;
    const std::size_t end = std::min(n, (c + 1) * chunk);
    for (std::size_t i = c * chunk; i < end; ++i) s += f(i);
    return s;
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return total;
}

}  // namespace exteam

#endif  // EXTEAM_PARALLEL_HPP_
