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

#ifndef GOLDFISH_SELFCHECK_H_
#define GOLDFISH_SELFCHECK_H_

#include <ostream>

namespace goldfish {

// Fast invariant suite behind `goldfish verify`: gradients against finite
// differences, shard algebra identities, aggregation equivalence, statistics
// reference values and serialization round trips. Prints one line per check
// and returns true iff all pass.
bool run_selfcheck(std::ostream& out);

}  // namespace goldfish

#endif  // GOLDFISH_SELFCHECK_H_
