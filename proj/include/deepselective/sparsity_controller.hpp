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

// PID feedback on the Gumbel-Softmax temperature:
//   tau_{t+1} = tau_t + kp*e_t + ki*sum_{i<=t} e_i + kd*(e_t - e_{t-1}),  e_{-1} = 0
// followed by a clamp to [tau_min, tau_max].

#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace deepselective {

struct PidConfig {
  double tau0 = 1.0;
  double kp = 0.05;
  double ki = 0.001;
  double kd = 0.01;
  double tau_min = 0.1;
  double tau_max = 5.0;

  void validate() const;
};

struct PidRecord {
  std::size_t step = 0;
  double error = 0.0;
  double tau_unclamped = 0.0;
  double tau = 0.0;
};

struct PidState {
  PidConfig config;
  double tau = 1.0;
  double error_integral = 0.0;
  double prev_error = 0.0;
  std::vector<PidRecord> history;

  static PidState initial(const PidConfig& config);
};

// One controller step. Throws NumericalError for non-finite error.
PidState update_tau(PidState state, double error);

// e_t: prediction error plus alignment error.
double error_signal(double pred_loss, double align_loss);

// CSV with columns epoch,e_t,tau_t.
std::string tau_trajectory_csv(const PidState& state);

}  // namespace deepselective
