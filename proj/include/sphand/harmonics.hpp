#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "sphand/geometry.hpp"

namespace sphand {

using Complex = std::complex<double>;

// Degree ell >= 0, order m in [-ell, ell].
struct HarmonicIndex {
    int ell = 0;
    int m = 0;
};

// Associated Legendre polynomial P_l^m(x) with the Condon-Shortley factor
// (-1)^m, evaluated by upward recurrence in l from P_m^m.
// Requires 0 <= m <= ell and |x| <= 1.
double assoc_legendre(int ell, int m, double x);

// Orthonormal complex spherical harmonic
//   Y_l^m(theta, phi) = sqrt((l-m)! (2l+1) / ((l+m)! 4 pi)) e^{i m phi} P_l^m(cos theta)
// for m >= 0; negative orders via Y_l^{-m} = (-1)^m conj(Y_l^m).
// Requires theta in [0, pi] and phi in [0, 2*pi).
Complex sph_harm(HarmonicIndex idx, double theta, double phi);

// Validated ascending degree list, e.g. {1, 2}.
std::vector<int> normalize_degrees(std::vector<int> degrees);

// Number of (ell, m) pairs: sum over ell of (2*ell + 1).
std::size_t harmonic_count(const std::vector<int>& degrees);

// Flattened (ell, m) order: degrees ascending, m from -ell to ell.
std::vector<HarmonicIndex> harmonic_order(const std::vector<int>& degrees);

// Complex values per (frame, body, center [, neighbor], (ell, m)).
// LSHR keeps one value per neighbor (basis functions at the neighbor's
// angles, self-pairs exactly zero); LSHT aggregates the neighborhood into
// per-center coefficients.
struct HarmonicCoefficients {
    enum class Kind { lshr, lsht };

    Kind kind = Kind::lshr;
    std::vector<int> degrees;
    std::vector<int> subset; // center joint ids (also the neighbor ids for lshr)
    int frames = 0;
    int bodies = 0;
    int centers = 0;
    int neighbors = 0; // == centers for lshr, 1 for lsht
    std::vector<Complex> values; // [t][m][center][neighbor][harm]

    std::size_t n_harm() const { return harmonic_count(degrees); }

    std::size_t index(int t, int m, int center, int neighbor, std::size_t harm) const {
        return (((static_cast<std::size_t>(t) * bodies + m) * centers + center) * neighbors +
                neighbor) *
                   n_harm() +
               harm;
    }
    const Complex& at(int t, int m, int center, int neighbor, std::size_t harm) const {
        return values[index(t, m, center, neighbor, harm)];
    }
};

// Basis-function embedding: Y_l^m at each (center, neighbor) pair's angles.
HarmonicCoefficients lshr_embed(const LocalSphericalField& field, const std::vector<int>& degrees);

// Point-sample transform of the radius-weighted neighborhood:
//   a_l^m(t, v) = sum over neighbors w != v of r * conj(Y_l^m(theta, phi)).
// With normalize, the sum is divided by the neighbor count.
HarmonicCoefficients lsht_transform(const LocalSphericalField& field,
                                    const std::vector<int>& degrees, bool normalize = false);

enum class ComplexFormat { real, imaginary, magnitude, phase, real_and_imag, mag_and_phase };

ComplexFormat complex_format_from_string(const std::string& s);
std::string complex_format_to_string(ComplexFormat f);
int format_parts(ComplexFormat f); // 1 or 2
std::vector<std::string> format_part_names(ComplexFormat f);

// Real view of complex values, part-major: with two parts the output is
// [part0 of every value, then part1 of every value]. Phase is atan2(im, re)
// in (-pi, pi], with the phase of an exact zero defined as 0.
std::vector<double> complex_format(const std::vector<Complex>& values, ComplexFormat format);

// Per-degree power: for each leading index of coeffs and each ell in its
// degree list, sum over m of |a_l^m|^2. Layout [t][m][center][neighbor][ell].
std::vector<double> power_spectrum(const HarmonicCoefficients& coeffs);

// ---------------------------------------------------------------------------
// Property verifiers (shared by the test suites and the verify subcommand)
// ---------------------------------------------------------------------------

// Max |<Y_lm, Y_l'm'> - delta| over all pairs with degrees <= max_ell,
// by Gauss-Legendre (cos theta) x trapezoidal (phi) quadrature.
double verify_orthonormality(int max_ell = 2, int gauss_nodes = 32, int phi_nodes = 64);

// Max | |Y(theta, phi+alpha)| - |Y(theta, phi)| | over random triples,
// degrees 1..max_ell.
double verify_azimuthal_invariance(int samples = 10000, int max_ell = 2,
                                   std::uint64_t seed = 20230108);

// Max per-degree power-spectrum deviation of lsht_transform output between
// a random joint cloud and its Haar-rotated copies.
double verify_so3_spectrum(int rotations = 100, int joints = 8,
                           std::uint64_t seed = 20230108);

// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

} // namespace sphand
