// Copyright 2026 The userside authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef USERSIDE_USERSIDE_HPP
#define USERSIDE_USERSIDE_HPP

// Umbrella header pulling in the whole toolkit.

#include "userside/core.hpp"     // IWYU pragma: export
#include "userside/csv.hpp"      // IWYU pragma: export
#include "userside/eval.hpp"     // IWYU pragma: export
#include "userside/ingest.hpp"   // IWYU pragma: export
#include "userside/network.hpp"  // IWYU pragma: export
#include "userside/provider.hpp" // IWYU pragma: export
#include "userside/rank.hpp"     // IWYU pragma: export
#include "userside/recover.hpp"  // IWYU pragma: export
#include "userside/rng.hpp"      // IWYU pragma: export
#include "userside/walk.hpp"     // IWYU pragma: export

#endif  // USERSIDE_USERSIDE_HPP
