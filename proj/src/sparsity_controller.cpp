/* Copyright 2026 The DeepSelective Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License. */

#include "deepselective/sparsity_controller.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "deepselective/errors.hpp"

namespace deepselective {

void PidConfig::validate() const {
  if (!(tau_min > 0.0) || !(tau_max >= tau_min)) {
    throw ParameterError("PID clamp must satisfy 0 < tau_min <= tau_max");
  }
  if (!(tau0 > 0.0) || !std::isfinite(tau0)) throw ParameterError("tau0 must be positive");
  if (!std::isfinite(kp) || !std::isfinite(ki) || !std::isfinite(kd)) {
    throw ParameterError("PID gains must be finite");
  }
}

PidState PidState::initial(const PidConfig& config) {
  config.validate();
  PidState s;
  s.config = config;
  s.tau = std::clamp(config.tau0, config.tau_min, config.tau_max);
  return s;
}

PidState update_tau(PidState state, double error) {
  if (!std::isfinite(error)) throw NumericalError("update_tau: non-finite error signal");
  const auto& c = state.config;
  state.error_integral += error;
  const double next = state.tau + c.kp * error + c.ki * state.error_integral +
                      c.kd * (error - state.prev_error);
  state.prev_error = error;
  state.tau = std::clamp(next, c.tau_min, c.tau_max);
  state.history.push_back({state.history.size() + 1, error, next, state.tau});
  return state;
}

double error_signal(double pred_loss, double align_loss) { return pred_loss + align_loss; }

std::string tau_trajectory_csv(const PidState& state) {
  std::ostringstream os;
  os.precision(17);
  os << "epoch,e_t,tau_t\n";
  for (const auto& r : state.history) os << r.step << ',' << r.error << ',' << r.tau << '\n';
  return os.str();
}

}  // namespace deepselective
