/*
 * Copyright 2026 The graphnas Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *    http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <functional>
#include <string>

#include "graphnas/autodiff.hpp"

namespace graphnas {

// Builds a scalar objective on `tape`, reading parameters through tape.param().
using Objective = std::function<Var(Tape& tape)>;

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_param;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  std::size_t coordinates = 0;
};

// Compares backward() against central differences with step `h` at every
// coordinate of `point`. Relative error per coordinate is
// |analytic - numeric| / max(1e-8, |analytic| + |numeric|).
// Throws std::domain_error naming the coordinate if the objective is not finite.
GradCheckReport finite_difference_report(const Objective& f, const ParamSet& point, double h = 1e-5);

double finite_difference_check(const Objective& f, const ParamSet& point, double h = 1e-5);

}  // namespace graphnas
