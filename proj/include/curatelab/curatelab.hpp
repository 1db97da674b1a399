// Copyright 2026 The Curatelab Authors.
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

#ifndef CURATELAB_CURATELAB_HPP_
#define CURATELAB_CURATELAB_HPP_

#include "curatelab/attack.hpp"
#include "curatelab/curation.hpp"
#include "curatelab/dist_core.hpp"
#include "curatelab/environment.hpp"
#include "curatelab/errors.hpp"
#include "curatelab/experiment.hpp"
#include "curatelab/feature_map.hpp"
#include "curatelab/format.hpp"
#include "curatelab/retrain_loop.hpp"
#include "curatelab/reward_learning.hpp"
#include "curatelab/rng.hpp"
#include "curatelab/runner.hpp"
#include "curatelab/support.hpp"
#include "curatelab/verification.hpp"

#endif  // CURATELAB_CURATELAB_HPP_
