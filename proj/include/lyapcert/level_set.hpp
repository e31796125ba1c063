#pragma once

#include <array>
#include <vector>

#include "lyapcert/grid.hpp"

namespace lyapcert {

// One connected piece of a level set before it has been classified.
struct Component {
  int dimension = 2;
  double level = 0.0;  // level actually contoured (after any nudge)
  GridSpec grid;       // grid the piece was extracted on
  std::vector<Vec> vertices;
  std::vector<std::array<int, 2>> segments;   // dimension 2
  std::vector<std::array<int, 3>> triangles;  // dimension 3
  // Vertices lying on grid edges in the box boundary.
  std::vector<bool> on_box_boundary;

  bool touches_box() const;
};

struct LevelExtraction {
  double requested_level = 0.0;
  double level = 0.0;         // contoured level
  bool nudged = false;        // level moved off a node value
  bool grid_shifted = false;  // origin moved by 1e-6 cell as a second resort
  std::vector<Component> components;
};

// Marching squares (n=2) or face-decider marching cubes (n=3) with linear
// interpolation along grid edges. Components are returned in order of their
// lowest vertex, and vertices are numbered by grid edge (node index, then
// axis), followed by cube-centre vertices in cube order.
LevelExtraction extract_level(const SampleGrid& grid, double level);

inline std::vector<Component> extract_level_components(const SampleGrid& grid, double level) {
  return extract_level(grid, level).components;
}

}  // namespace lyapcert
