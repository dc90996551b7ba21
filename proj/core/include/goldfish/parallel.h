/* Copyright 2026 The Goldfish Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef GOLDFISH_PARALLEL_H_
#define GOLDFISH_PARALLEL_H_

#include <cstddef>
#include <cstdint>
#include <functional>

namespace goldfish {

// Worker cap: GOLDFISH_THREADS if set and positive, else the hardware
// concurrency (at least 1).
std::size_t worker_limit();

// Runs task(i) for i in [0, n) on up to worker_limit() threads. Tasks must
// write only to their own slot. The first exception (lowest index) is
// rethrown after all workers finish.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& task);

// SplitMix64 finalizer; combines a run seed with task coordinates so that
// every client / shard / round gets an independent, schedule-free stream.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                       std::uint64_t c = 0);

}  // namespace goldfish

#endif  // GOLDFISH_PARALLEL_H_
