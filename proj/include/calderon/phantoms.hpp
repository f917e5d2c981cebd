#pragma once

#include <string>

#include "calderon/forward.hpp"

namespace cald {

/// Potential phantoms, continuous on the closed cylinder: smooth truncation
/// pushes every profile to zero before the lateral rim and the caps when
/// requested (keeps q in C(M) after the zero extension).
struct PhantomSpec {
  std::string type = "zero";  // zero | constant | gaussian | two_bump | separable
  double amplitude = 1.0;
  double value = 0.0;        // constant
  double x1_center = 0.0;
  double tx = 0.0, ty = 0.0;  // transversal center
  double sigma = 0.25;        // transversal width
  double sigma_x1 = 0.7;      // longitudinal width
  double x0 = 0.0;            // separable: raised-cosine center
  double width = 0.5;         // separable: raised-cosine full half-width
  bool truncate = true;
  bool cap_rolloff = true;    // also roll off toward the caps
  double rolloff = 0.18;      // smooth truncation zone width

  static PhantomSpec from_json_text(const std::string& text);
};

VecXc phantom_field(const ManifoldGrid& grid, const PhantomSpec& spec);

/// C^2 smoothstep, 0 at t<=0 and 1 at t>=1.
double smoothstep(double t);

}  // namespace cald
