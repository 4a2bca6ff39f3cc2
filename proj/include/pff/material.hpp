#ifndef PFF_MATERIAL_HPP
#define PFF_MATERIAL_HPP

// Constitutive point for the AT2 phase field model with the volumetric-
// deviatoric (Amor) split. Units are N, mm, MPa throughout, so a toughness
// given in kJ/m^2 is numerically the same in N/mm.

#include "pff/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <string>

namespace pff
{

struct MaterialParams
{
    double E = 600.0;     // MPa
    double nu = 0.2;      // -
    double Gc = 0.13;     // N/mm
    double ell = 0.5;     // mm
    double kappa = 1e-7;  // residual stiffness

    double bulk_modulus() const { return E / (3.0 * (1.0 - 2.0 * nu)); }
    double shear_modulus() const { return E / (2.0 * (1.0 + nu)); }

    void validate() const
    {
        auto fail = [](const std::string& m) { throw ParameterError(m); };
        if (!(E > 0.0) || !std::isfinite(E))
            fail("E must be positive");
        if (!(nu > -1.0 && nu < 0.5))
            fail("nu must lie in (-1, 0.5), got " + std::to_string(nu));
        if (!(Gc > 0.0) || !std::isfinite(Gc))
            fail("Gc must be positive");
        if (!(ell > 0.0) || !std::isfinite(ell))
            fail("ell must be positive");
        if (!(kappa >= 0.0 && kappa < 1e-2))
            fail("kappa must lie in [0, 1e-2)");
    }
};

/// Per-quadrature-point state. H is the committed history field.
struct QuadState
{
    double H = 0.0;
    double phi = 0.0;
    double psi_plus = 0.0;
    double psi_minus = 0.0;
};

template <int NV>
using Voigt = Eigen::Matrix<double, NV, 1>;
template <int NV>
using VoigtMatrix = Eigen::Matrix<double, NV, NV>;

template <int NV>
struct SplitResult
{
    double psi_plus = 0.0;
    double psi_minus = 0.0;
    Voigt<NV> sigma0_plus;
    Voigt<NV> sigma0_minus;
    VoigtMatrix<NV> C0_plus;
    VoigtMatrix<NV> C0_minus;
};

namespace detail
{

// m = (1,1,1,0,...): the identity in Voigt form.
template <int NV>
Voigt<NV> voigt_identity()
{
    Voigt<NV> m = Voigt<NV>::Zero();
    m.template head<3>().setOnes();
    return m;
}

// Deviatoric stiffness 2 mu (I - m m^T / 3) on the normal block, mu on the
// engineering-shear diagonal.
template <int NV>
VoigtMatrix<NV> deviatoric_stiffness(double mu)
{
    VoigtMatrix<NV> C = VoigtMatrix<NV>::Zero();
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            C(i, j) = 2.0 * mu * ((i == j ? 1.0 : 0.0) - 1.0 / 3.0);
    for (int i = 3; i < NV; ++i)
        C(i, i) = mu;
    return C;
}

} // namespace detail

/// Undamaged isotropic stiffness C0 in Voigt form.
template <int NV>
VoigtMatrix<NV> elastic_stiffness(const MaterialParams& p)
{
    const Voigt<NV> m = detail::voigt_identity<NV>();
    return p.bulk_modulus() * m * m.transpose() + detail::deviatoric_stiffness<NV>(p.shear_modulus());
}

/// Volumetric-deviatoric split. tr(eps) = 0 belongs to the tensile branch.
template <int NV>
SplitResult<NV> split(const Voigt<NV>& eps, const MaterialParams& p)
{
    const double K = p.bulk_modulus();
    const double mu = p.shear_modulus();
    const Voigt<NV> m = detail::voigt_identity<NV>();
    const double tr = eps.template head<3>().sum();

    Voigt<NV> dev = eps;
    dev.template head<3>().array() -= tr / 3.0;
    // eps':eps' with engineering shear: normal^2 + gamma^2 / 2
    const double dev2 = dev.template head<3>().squaredNorm() + 0.5 * dev.template tail<NV - 3>().squaredNorm();
    Voigt<NV> s_dev = 2.0 * mu * dev;
    s_dev.template tail<NV - 3>() = mu * dev.template tail<NV - 3>();

    SplitResult<NV> r;
    const VoigtMatrix<NV> C_vol = K * m * m.transpose();
    const VoigtMatrix<NV> C_dev = detail::deviatoric_stiffness<NV>(mu);
    if (tr >= 0.0) {
        r.psi_plus = 0.5 * K * tr * tr + mu * dev2;
        r.psi_minus = 0.0;
        r.sigma0_plus = K * tr * m + s_dev;
        r.sigma0_minus.setZero();
        r.C0_plus = C_vol + C_dev;
        r.C0_minus.setZero();
    } else {
        r.psi_plus = mu * dev2;
        r.psi_minus = 0.5 * K * tr * tr;
        r.sigma0_plus = s_dev;
        r.sigma0_minus = K * tr * m;
        r.C0_plus = C_dev;
        r.C0_minus = C_vol;
    }
    return r;
}

/// Tensile energy only (cheaper than the full split).
template <int NV>
double tensile_energy(const Voigt<NV>& eps, const MaterialParams& p)
{
    const double tr = eps.template head<3>().sum();
    Voigt<NV> dev = eps;
    dev.template head<3>().array() -= tr / 3.0;
    const double dev2 = dev.template head<3>().squaredNorm() + 0.5 * dev.template tail<NV - 3>().squaredNorm();
    const double vol = tr >= 0.0 ? 0.5 * p.bulk_modulus() * tr * tr : 0.0;
    return vol + p.shear_modulus() * dev2;
}

/// g(phi) = (1 - phi)^2 + kappa
inline double degradation(double phi, double kappa) { return (1.0 - phi) * (1.0 - phi) + kappa; }

/// Cauchy stress g(phi) sigma0+ + sigma0-.
template <int NV>
Voigt<NV> stress(const Voigt<NV>& eps, double phi, const MaterialParams& p)
{
    const SplitResult<NV> s = split<NV>(eps, p);
    return degradation(phi, p.kappa) * s.sigma0_plus + s.sigma0_minus;
}

inline QuadState update_history(QuadState state, double psi_plus)
{
    state.H = std::max(state.H, psi_plus);
    return state;
}

struct HeatSource
{
    double r = 0.0;
    double dr_dphi = 0.0;
};

/// Nonlinear source of the steady heat-conduction form of the phase field
/// equation (unit conductivity, temperature = phi).
inline HeatSource heat_source(double phi, double H, const MaterialParams& p)
{
    HeatSource s;
    s.r = 2.0 * (1.0 - phi) * H / (p.ell * p.Gc) - phi / (p.ell * p.ell);
    s.dr_dphi = -2.0 * H / (p.ell * p.Gc) - 1.0 / (p.ell * p.ell);
    return s;
}

/// Peak stress of the homogeneous 1D AT2 solution.
inline double critical_stress(const MaterialParams& p)
{
    return std::sqrt(27.0 * p.E * p.Gc / (256.0 * p.ell));
}

/// Strain at which the homogeneous 1D stress peaks.
inline double critical_strain(const MaterialParams& p) { return std::sqrt(p.Gc / (3.0 * p.E * p.ell)); }

struct Homogeneous1D
{
    double phi = 0.0;
    double sigma = 0.0;
};

/// Closed-form homogeneous 1D response under monotone loading (H = E eps^2 / 2).
inline Homogeneous1D homogeneous_1d(const MaterialParams& p, double eps)
{
    const double a = p.E * eps * eps * p.ell;
    Homogeneous1D r;
    r.phi = a / (p.Gc + a);
    r.sigma = (1.0 - r.phi) * (1.0 - r.phi) * p.E * eps;
    return r;
}

} // namespace pff

#endif // PFF_MATERIAL_HPP
