// Copyright 2026 The drgne Authors.
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

#ifndef DRGNE_DRGNE_HPP_
#define DRGNE_DRGNE_HPP_

#include "drgne/equilibrium_solver.hpp"
#include "drgne/ev_case_study.hpp"
#include "drgne/game_model.hpp"
#include "drgne/io.hpp"
#include "drgne/ni_residual.hpp"
#include "drgne/qp.hpp"
#include "drgne/reformulation.hpp"
#include "drgne/rng.hpp"
#include "drgne/types.hpp"
#include "drgne/wasserstein_drcc.hpp"

#endif  // DRGNE_DRGNE_HPP_
