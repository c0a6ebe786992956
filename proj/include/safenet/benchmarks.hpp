#pragma once

#include "safenet/model.hpp"

namespace safenet {

// Chain of unit masses connected to their graph neighbors by uncertain
// spring/damper pairs, one force input per mass, discretized by forward
// Euler. Per-agent state (position, velocity); per-edge parameters
// (stiffness k_ij, damping d_ij), each within ±gamma of its nominal value.
struct ChainParams {
  int num_agents = 3;
  double mass = 1.0;
  double stiffness = 2.0;
  double damping = 1.0;
  double dt = 0.05;
  double gamma = 0.2;      // relative half-width of each parameter interval
  double pos_max = 1.0;    // |position_i| bound
  double vel_max = 3.0;    // |velocity_i| bound
  double input_max = 1.0;  // |u_i| bound
};

NetworkModel build_mass_spring_damper_chain(const ChainParams& params);

// Planar point masses on a line graph with uncertain own drag and uncertain
// velocity-coupling to neighbors, a single shared-axis thrust input per
// agent, forward-Euler discretized. Per-agent state (x, ẋ, y, ẏ); parameters
// (drag a_i, coupling d_ij per edge). Positions are constrained to the
// diamond |x_i| + |y_i| <= pos_max; sampling pins velocities at zero so
// partition seeds and coverage samples live on the zero-velocity slice.
struct PlanarParams {
  int num_agents = 4;
  double mass = 1.0;
  double drag = 0.1;
  double coupling = 0.5;
  double dt = 0.05;
  double gamma = 0.15;
  double pos_max = 10.0;   // |x_i| + |y_i| bound
  double input_max = 5.0;  // |u_i| bound
};

NetworkModel build_planar_coupled_masses(const PlanarParams& params);

}  // namespace safenet
