#pragma once

#include <optional>

#include "boltzinv/potentials.hpp"
#include "boltzinv/stability.hpp"

namespace boltzinv {

/// Everything derived from one potential at one temperature: the sampled
/// potential, Mayer function, c_beta, stability estimate, gas-phase window,
/// perturbation radius and the weight function w.
struct ModelSetup {
  Potential potential;
  double beta = 1.0;
  GridPtr grid;
  RadialFunction u{};
  RadialFunction f{};
  MayerBound mayer{};
  double B = 0.0;
  GasPhaseBounds window{};
  PerturbationRadius radius{};
  double c_rho = 0.0;
  RadialFunction w{};

  const LJTypeParams& params() const { return potential.params(); }
  double alpha() const { return params().alpha; }
  EnsembleParams ensemble(double z) const { return make_ensemble(beta, z, mayer.c_beta, B); }
};

struct SetupOptions {
  StabilitySearchConfig stability;
  PerturbationRadiusOptions radius;
  /// Use this B instead of searching when set.
  std::optional<double> B;
};

/// w = |f| / c_beta + C_beta delta / rho.
RadialFunction weight_function(const RadialFunction& f, double c_beta, double C_beta, double delta, double alpha);

/// Default grid for a potential: hybrid layout out to 20 r0.
GridPtr default_grid(const LJTypeParams& p);

ModelSetup make_setup(const Potential& u, double beta, GridPtr grid, const SetupOptions& opt = {});

}  // namespace boltzinv
