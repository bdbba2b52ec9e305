#pragma once

#include <complex>

/// Laguerre-Gauss modes in transverse momentum space.
///
/// Convention (shared by the closed-form T coefficients and the quadrature
/// oracle):
///
///   LG_p^l(q) = w sqrt(p! / (2 pi (p+|l|)!)) (-1)^p (|q| w / sqrt 2)^|l|
///               L_p^|l|(w^2 |q|^2 / 2) exp(-w^2 |q|^2 / 4) exp(i l phi_q)
///
/// so LG_0^0(0) = w / sqrt(2 pi), the azimuthal phase is exp(+i l phi) with no
/// extra i^l factor, and expanding the Laguerre polynomial gives
///
///   LG_p^l(q) = sum_u T_u^{p,l} / u! |q|^{2u+|l|} exp(-w^2 |q|^2 / 4) exp(i l phi_q).
namespace lgspdc {

struct LGIndex {
  int p = 0;    // radial, >= 0
  int ell = 0;  // azimuthal / OAM

  friend bool operator==(const LGIndex&, const LGIndex&) = default;
};

struct BeamSpec {
  double waist = 0.0;              // m
  double center_wavelength = 0.0;  // m
};

/// n! for 0 <= n <= 64 from a table built once.
double factorial(int n);

std::complex<double> lg_momentum_amplitude(LGIndex mode, double waist, double qx, double qy);

/// Radial part only (the exp(i l phi) factor dropped), |q| = rho.
double lg_radial(LGIndex mode, double waist, double rho);

/// T_u^{p,l} = sqrt(p!(p+|l|)!/pi) (w/sqrt2)^{2u+|l|+1} (-1)^{p+u} / ((p-u)!(|l|+u)!).
/// Throws IndexError unless 0 <= u <= p.
double t_coefficient(int u, int p, int ell, double waist);

}  // namespace lgspdc
