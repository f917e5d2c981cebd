#include "calderon/phantoms.hpp"

#include <cmath>
#include <numbers>

#include <nlohmann/json.hpp>

namespace cald {

double smoothstep(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

PhantomSpec PhantomSpec::from_json_text(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  PhantomSpec s;
  s.type = j.value("type", s.type);
  s.amplitude = j.value("amplitude", s.amplitude);
  s.value = j.value("value", s.value);
  s.x1_center = j.value("x1_center", s.x1_center);
  s.tx = j.value("tx", s.tx);
  s.ty = j.value("ty", s.ty);
  s.sigma = j.value("sigma", s.sigma);
  s.sigma_x1 = j.value("sigma_x1", s.sigma_x1);
  s.x0 = j.value("x0", s.x0);
  s.width = j.value("width", s.width);
  s.truncate = j.value("truncate", s.truncate);
  s.cap_rolloff = j.value("cap_rolloff", s.cap_rolloff);
  s.rolloff = j.value("rolloff", s.rolloff);
  return s;
}

VecXc phantom_field(const ManifoldGrid& grid, const PhantomSpec& spec) {
  VecXc q = VecXc::Zero(grid.num_nodes());
  const double a = grid.config().x1a, b = grid.config().x1b;

  auto truncation = [&](double x1, double rho) {
    if (!spec.truncate) return 1.0;
    const double drim = (1.0 - rho) / spec.rolloff;
    double t = smoothstep(drim);
    if (spec.cap_rolloff) {
      const double dcap = std::min(x1 - a, b - x1) / spec.rolloff;
      t *= smoothstep(dcap);
    }
    return t;
  };

  for (int i = 0; i < grid.n1(); ++i)
    for (int m = 0; m < grid.nrho(); ++m)
      for (int l = 0; l < grid.ntheta(); ++l) {
        const double x1 = grid.x1(i);
        const Vec2 x = grid.trans_point(m, l);
        double v = 0.0;
        if (spec.type == "zero") {
          v = 0.0;
        } else if (spec.type == "constant") {
          v = spec.value;
        } else if (spec.type == "gaussian") {
          const double dt2 = (x - Vec2(spec.tx, spec.ty)).squaredNorm();
          const double dx = x1 - spec.x1_center;
          v = spec.amplitude * std::exp(-dt2 / (spec.sigma * spec.sigma)) *
              std::exp(-dx * dx / (spec.sigma_x1 * spec.sigma_x1)) *
              truncation(x1, grid.rho(m));
        } else if (spec.type == "two_bump") {
          const double d1 = (x - Vec2(spec.tx, spec.ty)).squaredNorm();
          const double d2 = (x + Vec2(spec.tx, spec.ty)).squaredNorm();
          const double dx = x1 - spec.x1_center;
          v = spec.amplitude *
              (std::exp(-d1 / (spec.sigma * spec.sigma)) -
               0.6 * std::exp(-d2 / (spec.sigma * spec.sigma))) *
              std::exp(-dx * dx / (spec.sigma_x1 * spec.sigma_x1)) *
              truncation(x1, grid.rho(m));
        } else if (spec.type == "separable") {
          // raised cosine in x1 times a transversal gaussian
          const double u = (x1 - spec.x0) / spec.width;
          const double p =
              std::abs(u) < 1.0 ? 0.5 * (1.0 + std::cos(std::numbers::pi * u)) : 0.0;
          const double w = std::exp(-(x - Vec2(spec.tx, spec.ty)).squaredNorm() /
                                    (spec.sigma * spec.sigma));
          v = spec.amplitude * p * w * (spec.truncate ? smoothstep((1.0 - grid.rho(m)) / spec.rolloff) : 1.0);
        } else {
          throw InvalidConfig("unknown phantom type '" + spec.type + "'");
        }
        q[grid.node(i, m, l)] = v;
      }
  return q;
}

}  // namespace cald
