// Copyright 2026 The f2f Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef F2F_SCENE_HPP_
#define F2F_SCENE_HPP_

#include "f2f/camera.hpp"
#include "f2f/core.hpp"
#include "f2f/sh.hpp"

namespace f2f {

/// The full unknown vector: identity alpha, albedo beta, expression delta,
/// illumination gamma, rigid pose and camera intrinsics kappa.
struct SceneParams {
  VecX alpha;
  VecX beta;
  VecX delta;
  Illumination gamma;
  RigidPose pose;
  CameraIntrinsics kappa;

  static SceneParams zero(int d_id, int d_alb, int d_exp) {
    SceneParams p;
    p.alpha = VecX::Zero(d_id);
    p.beta = VecX::Zero(d_alb);
    p.delta = VecX::Zero(d_exp);
    return p;
  }
};

struct EnergyWeights {
  double w_col = 1.0;
  double w_lan = 10.0;
  double w_reg = 2.5e-5;
};

/// One observed 2D feature: pixel position, detection confidence and the
/// model vertex it corresponds to.
struct LandmarkObservation {
  Vec2 position = Vec2::Zero();
  double confidence = 1.0;
  int vertex_id = 0;
};

}  // namespace f2f

#endif  // F2F_SCENE_HPP_
