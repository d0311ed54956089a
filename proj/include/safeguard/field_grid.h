// Copyright 2026 The SafeGuardPF Authors
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

#ifndef SAFEGUARD_FIELD_GRID_H_
#define SAFEGUARD_FIELD_GRID_H_

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <optional>
#include <ostream>
#include <vector>

#include "safeguard/core.h"
#include "safeguard/field.h"
#include "safeguard/world.h"

namespace safeguard {

struct Rect {
  double x_min = 0.0;
  double x_max = 0.0;
  double y_min = 0.0;
  double y_max = 0.0;
};

enum class FieldMode { kRepulsion, kTotal };

struct FieldCell {
  Vec2 position;
  Vec2 force;
  double d = kNoObstacle;
  // False where the distance is undefined (cell inside or on an obstacle).
  bool valid = false;
};

struct FieldGrid {
  std::size_t nx = 0;
  std::size_t ny = 0;
  std::vector<FieldCell> cells;  // row-major, y outer

  const FieldCell& at(std::size_t ix, std::size_t iy) const {
    return cells.at(iy * nx + ix);
  }
};

// Samples the field a point robot (of the params' radius) would feel at
// every grid node of `region`, spacing `resolution`. Nodes run from the
// region's minimum corner; a degenerate region yields a single node.
inline FieldGrid SampleFieldGrid(const Rect& region, double resolution,
                                 const std::vector<Obstacle>& obstacles,
                                 std::optional<Vec2> goal,
                                 const FieldGains& gains,
                                 const RobotParams& params, FieldMode mode) {
  if (!(resolution > 0.0) || !std::isfinite(resolution)) {
    throw Error("SampleFieldGrid: resolution must be > 0");
  }
  if (!(region.x_max >= region.x_min) || !(region.y_max >= region.y_min) ||
      !std::isfinite(region.x_min + region.x_max + region.y_min +
                     region.y_max)) {
    throw Error("SampleFieldGrid: empty region");
  }
  if (mode == FieldMode::kTotal && !goal) {
    throw Error("SampleFieldGrid: total field needs a goal");
  }
  FieldGrid grid;
  grid.nx = static_cast<std::size_t>(
                std::floor((region.x_max - region.x_min) / resolution + 1e-9)) +
            1;
  grid.ny = static_cast<std::size_t>(
                std::floor((region.y_max - region.y_min) / resolution + 1e-9)) +
            1;
  grid.cells.reserve(grid.nx * grid.ny);

  WorldState world;
  world.robots.resize(1);
  world.robot_radii = {params.radius};
  world.obstacles = obstacles;
  for (std::size_t iy = 0; iy < grid.ny; ++iy) {
    for (std::size_t ix = 0; ix < grid.nx; ++ix) {
      FieldCell cell;
      cell.position = {region.x_min + static_cast<double>(ix) * resolution,
                       region.y_min + static_cast<double>(iy) * resolution};
      world.robots[0].pose.position = cell.position;
      const Perception per = ClosestObstaclePoint(0, world, goal);
      const Contact nearest = FindContacts(0, world).nearest;
      cell.d = per.d;
      cell.valid = !nearest.found || nearest.clearance > 0.0;
      if (cell.valid) {
        cell.force = mode == FieldMode::kRepulsion
                         ? Repulsion(per, gains, params).value
                         : TotalField(per, gains, params).value;
      }
      grid.cells.push_back(cell);
    }
  }
  return grid;
}

// CSV with columns x,y,fx,fy at 9 significant digits; invalid cells carry
// nan forces.
inline void WriteFieldCsv(std::ostream& out, const FieldGrid& grid) {
  out << "x,y,fx,fy\n";
  char buf[128];
  for (const FieldCell& c : grid.cells) {
    if (c.valid) {
      std::snprintf(buf, sizeof(buf), "%.9g,%.9g,%.9g,%.9g\n", c.position.x,
                    c.position.y, c.force.x, c.force.y);
    } else {
      std::snprintf(buf, sizeof(buf), "%.9g,%.9g,nan,nan\n", c.position.x,
                    c.position.y);
    }
    out << buf;
  }
}

}  // namespace safeguard

#endif  // SAFEGUARD_FIELD_GRID_H_
