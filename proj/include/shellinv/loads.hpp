#pragma once

#include "shellinv/common.hpp"

namespace shellinv {

/// Patch boundary edges in the parent domain: West/East are xi = 0/1,
/// South/North are eta = 0/1.
enum class Side { West, East, South, North };

/// Loads tagged Preload are ramped to full value in a first phase and then
/// held; Main records ramp with the continuation factor afterwards.
enum class LoadStage { Main, Preload };

struct PointLoad {
  int node = -1;                       // control-point index; < 0 means parametric
  int elem = -1;                       // parametric application point
  Vector2d xi = Vector2d::Zero();
  Vector3d direction = Vector3d::UnitZ();
  double value = 0.0;                  // N
  LoadStage stage = LoadStage::Main;
};

/// Uniform edge traction t * direction. Dead load; per_reference selects
/// integration over the reference or the current edge length.
struct EdgeTraction {
  Side side = Side::East;
  Vector3d direction = Vector3d::UnitZ();
  double value = 0.0;                  // N/mm
  bool per_reference = true;
  LoadStage stage = LoadStage::Main;
};

/// Distributed bending moment m_tau along an edge, acting through the current
/// surface normal (follower). per_reference selects the reference-length or
/// current-length density.
struct EdgeMoment {
  Side side = Side::West;
  double value = 0.0;                  // N*mm/mm
  bool per_reference = true;
  LoadStage stage = LoadStage::Main;
};

/// Lateral pressure along the current normal over the whole surface (follower).
struct Pressure {
  double value = 0.0;                  // N/mm^2
  LoadStage stage = LoadStage::Main;
};

/// Constant body force per reference area (dead).
struct BodyForce {
  Vector3d value = Vector3d::Zero();   // N/mm^2
  LoadStage stage = LoadStage::Main;
};

struct LoadSet {
  std::vector<PointLoad> point_loads;
  std::vector<EdgeTraction> tractions;
  std::vector<EdgeMoment> moments;
  std::vector<Pressure> pressures;
  std::vector<BodyForce> body_forces;
};

/// One prescribed-displacement record: a set of dofs driven to value * ramp.
/// A record can serve as a design variable in the inverse problem.
struct DirichletSet {
  std::vector<int> dofs;               // global dof indices, 3*node + component
  double value = 0.0;                  // mm, at full ramp
  LoadStage stage = LoadStage::Main;
};

}  // namespace shellinv
