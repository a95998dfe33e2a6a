// Copyright 2026 The shiftlab Authors
// SPDX-License-Identifier: Apache-2.0

#include "composition.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace shiftlab::scene::detail {

namespace {

constexpr double kMotionAmplitude = 0.045;
constexpr double kFingerRadius = 0.019;
constexpr double kStatic = 0.88;
constexpr double kMoving = 1.08;

double deg(double d) { return d * std::numbers::pi / 180.0; }

Vec2 unit(double angle_deg) { return {std::cos(deg(angle_deg)), std::sin(deg(angle_deg))}; }

Primitive ellipse(Vec2 c, double rx, double ry, double angle_deg, double shade) {
  Primitive p;
  p.kind = Primitive::Kind::kEllipse;
  p.a = c;
  p.radii = {rx, ry};
  p.angle = deg(angle_deg);
  p.shade = shade;
  return p;
}

Primitive capsule(Vec2 a, Vec2 b, double r, double shade) {
  Primitive p;
  p.kind = Primitive::Kind::kCapsule;
  p.a = a;
  p.b = b;
  p.radius = r;
  p.shade = shade;
  return p;
}

/// Parallel fingers rooted along a line perpendicular to `dir_deg`.
void add_fingers(std::vector<Primitive>& out, Vec2 root, double dir_deg, double spacing,
                 std::initializer_list<double> lengths, double shade) {
  const Vec2 d = unit(dir_deg);
  const Vec2 n{-d.y, d.x};
  const double mid = 0.5 * (static_cast<double>(lengths.size()) - 1.0);
  int i = 0;
  for (double len : lengths) {
    const Vec2 a = root + n * ((i - mid) * spacing);
    out.push_back(capsule(a, a + d * len, kFingerRadius, shade * (i % 2 == 0 ? 1.0 : 0.95)));
    ++i;
  }
}

void translate(std::vector<Primitive>& prims, size_t from, Vec2 offset) {
  for (size_t i = from; i < prims.size(); ++i) {
    prims[i].a = prims[i].a + offset;
    prims[i].b = prims[i].b + offset;
  }
}

std::vector<Primitive> rub_palm(Vec2 m) {
  std::vector<Primitive> p;
  p.push_back(capsule({-0.075, 0.31}, {-0.065, 0.16}, 0.05, kStatic));
  p.push_back(ellipse({-0.065, 0.06}, 0.068, 0.12, 0, kStatic));
  p.push_back(capsule({-0.115, 0.07}, {-0.18, -0.03}, 0.024, kStatic));
  add_fingers(p, {-0.07, -0.03}, -92, 0.032, {0.19, 0.22, 0.21, 0.17}, kStatic);
  const size_t moving = p.size();
  p.push_back(capsule({0.075, 0.31}, {0.065, 0.16}, 0.05, kMoving));
  p.push_back(ellipse({0.065, 0.06}, 0.068, 0.12, 0, kMoving));
  p.push_back(capsule({0.115, 0.07}, {0.18, -0.03}, 0.024, kMoving));
  add_fingers(p, {0.07, -0.03}, -88, 0.032, {0.17, 0.21, 0.22, 0.19}, kMoving);
  translate(p, moving, m);
  return p;
}

std::vector<Primitive> rub_back(double s) {
  std::vector<Primitive> p;
  p.push_back(capsule({0.0, 0.32}, {0.0, 0.17}, 0.055, kStatic));
  p.push_back(ellipse({0.0, 0.06}, 0.1, 0.13, 0, kStatic));
  p.push_back(capsule({0.09, 0.09}, {0.18, 0.0}, 0.024, kStatic));
  add_fingers(p, {0.0, -0.04}, -90, 0.038, {0.18, 0.21, 0.2, 0.16}, kStatic);
  const size_t moving = p.size();
  const Vec2 axis = unit(-62);
  p.push_back(capsule({-0.2, 0.25}, {-0.08, 0.1}, 0.05, kMoving));
  p.push_back(ellipse({-0.02, 0.0}, 0.08, 0.115, 28, kMoving));
  add_fingers(p, {0.03, -0.09}, -62, 0.034, {0.14, 0.16, 0.15, 0.12}, kMoving);
  translate(p, moving, axis * s);
  return p;
}

std::vector<Primitive> rub_fingers_interlaced(double s) {
  std::vector<Primitive> p;
  p.push_back(capsule({-0.13, 0.32}, {-0.11, 0.17}, 0.05, kStatic));
  p.push_back(ellipse({-0.11, 0.04}, 0.065, 0.13, 0, kStatic));
  const size_t moving_palm = p.size();
  p.push_back(capsule({0.13, 0.32}, {0.11, 0.17}, 0.05, kMoving));
  p.push_back(ellipse({0.11, 0.04}, 0.065, 0.13, 0, kMoving));
  translate(p, moving_palm, {s, 0});
  const double ys[] = {-0.1, -0.04, 0.02, 0.08};
  for (int i = 0; i < 4; ++i) {
    p.push_back(capsule({-0.09, ys[i]}, {0.17, ys[i] + 0.01}, kFingerRadius, kStatic));
    const Vec2 off{s, 0};
    p.push_back(capsule(Vec2{0.09, ys[i] + 0.03} + off, Vec2{-0.17, ys[i] + 0.04} + off, kFingerRadius,
                        kMoving));
  }
  return p;
}

std::vector<Primitive> rub_thumb(Vec2 m) {
  std::vector<Primitive> p;
  p.push_back(capsule({0.09, 0.32}, {0.075, 0.17}, 0.05, kStatic));
  p.push_back(ellipse({0.075, 0.05}, 0.085, 0.12, 0, kStatic));
  add_fingers(p, {0.085, -0.05}, -90, 0.034, {0.17, 0.2, 0.19, 0.15}, kStatic);
  p.push_back(capsule({0.01, 0.05}, {-0.1, -0.03}, 0.027, kStatic));
  const size_t moving = p.size();
  p.push_back(capsule({-0.21, 0.22}, {-0.14, 0.05}, 0.05, kMoving));
  p.push_back(ellipse({-0.11, -0.02}, 0.078, 0.066, -15, kMoving));
  for (int i = 0; i < 4; ++i) {
    const double t = i / 3.0;
    p.push_back(capsule({-0.17 + 0.1 * t, -0.085 - 0.012 * t}, {-0.15 + 0.1 * t, -0.065 - 0.012 * t}, 0.024,
                        kMoving * (i % 2 == 0 ? 1.0 : 0.95)));
  }
  translate(p, moving, m);
  return p;
}

std::vector<Primitive> rub_tips(Vec2 m) {
  std::vector<Primitive> p;
  p.push_back(capsule({-0.3, 0.16}, {-0.14, 0.12}, 0.05, kStatic));
  p.push_back(ellipse({0.0, 0.11}, 0.13, 0.08, 0, kStatic));
  add_fingers(p, {0.11, 0.11}, 5, 0.03, {0.13, 0.15, 0.14, 0.11}, kStatic);
  const size_t moving = p.size();
  p.push_back(capsule({0.0, -0.38}, {0.0, -0.26}, 0.05, kMoving));
  p.push_back(ellipse({0.0, -0.2}, 0.085, 0.07, 0, kMoving));
  const Vec2 tips[] = {{-0.04, 0.04}, {-0.013, 0.03}, {0.013, 0.03}, {0.04, 0.04}, {0.0, 0.065}};
  for (const Vec2& t : tips) {
    p.push_back(capsule({t.x * 1.8, -0.15}, t, kFingerRadius, kMoving));
  }
  for (const Vec2& t : tips) p.push_back(capsule(t, t, 0.024, kMoving * 1.06));
  translate(p, moving, m);
  return p;
}

}  // namespace

void Primitive::finalize() {
  cos_angle = std::cos(angle);
  sin_angle = std::sin(angle);
  if (kind == Kind::kCapsule) {
    bound_centre = (a + b) * 0.5;
    bound_radius = 0.5 * std::hypot(b.x - a.x, b.y - a.y) + radius;
  } else {
    bound_centre = a;
    bound_radius = std::max(radii.x, radii.y);
  }
}

double signed_distance(const Primitive& p, Vec2 q) {
  if (p.kind == Primitive::Kind::kCapsule) {
    const Vec2 pa = q - p.a;
    const Vec2 ba = p.b - p.a;
    const double bb = ba.x * ba.x + ba.y * ba.y;
    const double h = bb > 0 ? std::clamp((pa.x * ba.x + pa.y * ba.y) / bb, 0.0, 1.0) : 0.0;
    const Vec2 d = pa - ba * h;
    return std::hypot(d.x, d.y) - p.radius;
  }
  const Vec2 r = q - p.a;
  const double c = p.cos_angle;
  const double s = p.sin_angle;
  const double lx = c * r.x + s * r.y;
  const double ly = -s * r.x + c * r.y;
  const double k0 = std::hypot(lx / p.radii.x, ly / p.radii.y);
  const double k1 = std::hypot(lx / (p.radii.x * p.radii.x), ly / (p.radii.y * p.radii.y));
  if (k1 == 0.0) return -std::min(p.radii.x, p.radii.y);
  return k0 * (k0 - 1.0) / k1;
}

std::vector<Primitive> compose(ActionId action, int frame) {
  const double phase = 2.0 * std::numbers::pi * frame / 20.0;
  const Vec2 circle{kMotionAmplitude * std::cos(phase), kMotionAmplitude * std::sin(phase)};
  const double swing = kMotionAmplitude * std::sin(phase);
  std::vector<Primitive> prims;
  switch (action) {
    case ActionId::kRubPalm:
      prims = rub_palm(circle);
      break;
    case ActionId::kRubBack:
      prims = rub_back(swing);
      break;
    case ActionId::kRubFingersInterlaced:
      prims = rub_fingers_interlaced(swing);
      break;
    case ActionId::kRubThumb:
      prims = rub_thumb(circle);
      break;
    case ActionId::kRubTips:
      prims = rub_tips(circle);
      break;
  }
  for (auto& p : prims) p.finalize();
  return prims;
}

}  // namespace shiftlab::scene::detail
