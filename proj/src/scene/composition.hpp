// Copyright 2026 The shiftlab Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <vector>

#include "shiftlab/scene/action.hpp"

namespace shiftlab::scene::detail {

struct Vec2 {
  double x = 0;
  double y = 0;
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(Vec2 a, double s) { return {a.x * s, a.y * s}; }

/// Shape primitive in canvas-width units, origin at the canvas centre, +y down.
struct Primitive {
  enum class Kind { kEllipse, kCapsule };
  Kind kind = Kind::kEllipse;
  Vec2 a;              // ellipse centre, capsule start
  Vec2 b;              // capsule end
  Vec2 radii;          // ellipse semi-axes
  double angle = 0;    // ellipse orientation, radians
  double radius = 0;   // capsule radius
  double shade = 1.0;  // multiplier on the skin colour

  // Derived by finalize(): trig of `angle` and a bounding circle.
  double cos_angle = 1.0;
  double sin_angle = 0.0;
  Vec2 bound_centre;
  double bound_radius = 0;

  void finalize();
};

/// Signed distance, negative inside. Ellipses use a first-order approximation.
double signed_distance(const Primitive& p, Vec2 q);

/// Primitives in back-to-front paint order for one frame of the motion cycle.
std::vector<Primitive> compose(ActionId action, int frame);

}  // namespace shiftlab::scene::detail
