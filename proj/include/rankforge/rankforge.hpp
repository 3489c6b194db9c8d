// Copyright 2026 The RankForge Authors. All Rights Reserved.
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

#ifndef RANKFORGE_RANKFORGE_HPP_
#define RANKFORGE_RANKFORGE_HPP_

#include "rankforge/analysis.hpp"
#include "rankforge/common.hpp"
#include "rankforge/dataset.hpp"
#include "rankforge/gbrt.hpp"
#include "rankforge/losses.hpp"
#include "rankforge/metrics.hpp"
#include "rankforge/simulate.hpp"

#endif  // RANKFORGE_RANKFORGE_HPP_
