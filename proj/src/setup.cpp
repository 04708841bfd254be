#include "boltzinv/setup.hpp"

#include "boltzinv/errors.hpp"
#include "boltzinv/spaces.hpp"

namespace boltzinv {

RadialFunction weight_function(const RadialFunction& f, double c_beta, double C_beta, double delta, double alpha) {
  Eigen::ArrayXd v = f.values.abs() / c_beta + C_beta * delta / rho_weight(f.grid->nodes(), alpha);
  return RadialFunction(f.grid, std::move(v), std::min(f.tail_exponent, alpha));
}

GridPtr default_grid(const LJTypeParams& p) { return make_grid(RadialGrid::hybrid(p.r0, 20.0 * p.r0)); }

ModelSetup make_setup(const Potential& u, double beta, GridPtr grid, const SetupOptions& opt) {
  const auto cert = certify_lj_type(u, u.params(), *grid);
  if (!cert.pass) throw DomainError("potential is not of Lennard-Jones type: " + cert.message);
  ModelSetup s{.potential = u, .beta = beta, .grid = grid, .u = u.sample(grid)};
  s.f = mayer_function(s.u, beta);
  s.mayer = c_beta_bound(s.f);
  if (s.mayer.degenerate) throw DomainError("Mayer function vanishes identically");
  s.B = opt.B ? *opt.B : estimate_stability_constant(u, opt.stability).B_hat;
  s.window = gas_phase_bounds(s.mayer.c_beta, s.B, beta);
  s.radius = perturbation_radius(s.u, u.params(), beta, s.mayer.c_beta, s.mayer.l1, s.B, opt.radius);
  s.c_rho = embedding_constant_c_rho(s.alpha());
  s.w = weight_function(s.f, s.mayer.c_beta, s.radius.C_beta, s.radius.delta0, s.alpha());
  return s;
}

}  // namespace boltzinv
