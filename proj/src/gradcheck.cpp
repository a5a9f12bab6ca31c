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

#include "graphnas/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace graphnas {

namespace {

double evaluate(const Objective& f, const ParamSet& params, const std::string& where) {
  Tape tape(&params);
  double v = f(tape).scalar();
  if (!std::isfinite(v)) throw std::domain_error("objective is not finite at " + where);
  return v;
}

}  // namespace

GradCheckReport finite_difference_report(const Objective& f, const ParamSet& point, double h) {
  if (!(h > 0.0)) throw std::invalid_argument("finite difference step must be positive");

  Gradients analytic;
  {
    Tape tape(&point);
    Var loss = f(tape);
    if (!std::isfinite(loss.scalar())) throw std::domain_error("objective is not finite at the base point");
    analytic = tape.backward(loss);
  }

  GradCheckReport report;
  ParamSet probe = point;
  for (std::size_t p = 0; p < probe.size(); ++p) {
    for (std::size_t i = 0; i < probe[p].size(); ++i) {
      const std::string where = point.name(p) + "[" + std::to_string(i) + "]";
      const double saved = probe[p][i];
      probe[p][i] = saved + h;
      const double up = evaluate(f, probe, where + " + h");
      probe[p][i] = saved - h;
      const double down = evaluate(f, probe, where + " - h");
      probe[p][i] = saved;

      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[p][i];
      const double err = std::abs(a - numeric) / std::max(1e-8, std::abs(a) + std::abs(numeric));
      if (report.coordinates == 0 || err > report.max_relative_error) {
        report.max_relative_error = err;
        report.worst_param = point.name(p);
        report.worst_index = i;
        report.analytic = a;
        report.numeric = numeric;
      }
      ++report.coordinates;
    }
  }
  return report;
}

double finite_difference_check(const Objective& f, const ParamSet& point, double h) {
  return finite_difference_report(f, point, h).max_relative_error;
}

}  // namespace graphnas
