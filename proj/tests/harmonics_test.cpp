#include <cmath>
#include <random>
#include <stdexcept>

#include "gtest/gtest.h"
#include "sphand/errors.hpp"
#include "sphand/geometry.hpp"
#include "sphand/harmonics.hpp"

using namespace sphand;

namespace {

constexpr double kPi = 3.14159265358979323846;

LocalSphericalField single_neighbor_field(double r, double theta, double phi) {
    LocalSphericalField field;
    field.frames = 1;
    field.bodies = 1;
    field.subset = {0, 1};
    field.points.assign(4, SphericalPoint{});
    field.points[field.index(0, 0, 0, 1)] = {r, theta, phi};
    field.points[field.index(0, 0, 1, 0)] = {r, kPi - theta, phi}; // unused by the tests
    return field;
}

} // namespace

TEST(AssocLegendre, ClosedFormValues) {
    EXPECT_NEAR(assoc_legendre(0, 0, 0.3), 1.0, 1e-15);
    EXPECT_NEAR(assoc_legendre(1, 1, 0.5), -std::sqrt(0.75), 1e-12);
    EXPECT_NEAR(assoc_legendre(2, 0, 0.5), -0.125, 1e-12);
    EXPECT_NEAR(assoc_legendre(1, 0, -0.7), -0.7, 1e-15);
    EXPECT_NEAR(assoc_legendre(2, 2, 0.2), 3.0 * (1 - 0.04), 1e-12);
}

TEST(AssocLegendre, RecurrenceMatchesClosedFormsUpToDegreeTwo) {
    for (double x = -1.0; x <= 1.0; x += 0.05) {
        const double s = std::sqrt(1 - x * x);
        EXPECT_NEAR(assoc_legendre(0, 0, x), 1.0, 1e-13);
        EXPECT_NEAR(assoc_legendre(1, 0, x), x, 1e-13);
        EXPECT_NEAR(assoc_legendre(1, 1, x), -s, 1e-13);
        EXPECT_NEAR(assoc_legendre(2, 0, x), 0.5 * (3 * x * x - 1), 1e-13);
        EXPECT_NEAR(assoc_legendre(2, 1, x), -3 * x * s, 1e-13);
        EXPECT_NEAR(assoc_legendre(2, 2, x), 3 * (1 - x * x), 1e-13);
    }
}

TEST(AssocLegendre, HigherDegreesMatchFrozenReferenceValues) {
    // Independently computed with a standard special-function library.
    struct Case {
        int ell, m;
        double x, expected;
    };
    const Case cases[] = {
        {3, 2, 0.3, 4.095000000000001e+00},   {4, 1, -0.6, -5.760000000000002e-01},
        {5, 0, 0.8, -3.995199999999999e-01},  {3, 3, 0.25, -1.361595707651045e+01},
        {6, 4, 0.5, 4.651171874999999e+02},
    };
    for (const Case& c : cases)
        EXPECT_NEAR(assoc_legendre(c.ell, c.m, c.x), c.expected,
                    1e-10 * std::max(1.0, std::abs(c.expected)));
}

TEST(AssocLegendre, DomainErrors) {
    EXPECT_THROW(assoc_legendre(1, 2, 0.0), std::domain_error);
    EXPECT_THROW(assoc_legendre(2, -1, 0.0), std::domain_error);
    EXPECT_THROW(assoc_legendre(2, 0, 1.5), std::domain_error);
    EXPECT_THROW(assoc_legendre(2, 0, -1.0000001), std::domain_error);
}

TEST(SphHarm, ClosedFormValues) {
    const Complex y00 = sph_harm({0, 0}, 1.234, 2.345);
    EXPECT_NEAR(y00.real(), 0.28209479177387814, 1e-12);
    EXPECT_NEAR(y00.imag(), 0.0, 1e-12);

    const Complex y10 = sph_harm({1, 0}, 0.0, 0.0);
    EXPECT_NEAR(y10.real(), 0.4886025119029199, 1e-12);
    EXPECT_NEAR(y10.imag(), 0.0, 1e-12);

    const Complex y11 = sph_harm({1, 1}, kPi / 2, 0.0);
    EXPECT_NEAR(y11.real(), -0.3454941494713355, 1e-12);
    EXPECT_NEAR(y11.imag(), 0.0, 1e-12);
}

TEST(SphHarm, MatchesFrozenReferenceValues) {
    // Independently computed with a standard special-function library.
    struct Case {
        int ell, m;
        double theta, phi, re, im;
    };
    const Case cases[] = {
        {1, 0, 0.7, 2.1, 3.737038139165246e-01, 0.0},
        {1, 1, 1.3, 0.4, -3.066246273238429e-01, -1.296388131306369e-01},
        {2, -1, 2.9, 5.8, -1.589187294617001e-01, -8.337928938325587e-02},
        {2, 2, 0.6, 1.9, -9.740955209885621e-02, -7.535175229925176e-02},
        {2, 0, 1.1, 3.3, -1.207166501597705e-01, 0.0},
        {1, -1, 2.4, 0.9, 1.450642337839510e-01, -1.828038862754894e-01},
    };
    for (const Case& c : cases) {
        const Complex y = sph_harm({c.ell, c.m}, c.theta, c.phi);
        EXPECT_NEAR(y.real(), c.re, 1e-12);
        EXPECT_NEAR(y.imag(), c.im, 1e-12);
    }
}

TEST(SphHarm, MagnitudeIndependentOfLongitude) {
    const double base = std::abs(sph_harm({1, 1}, kPi / 2, 0.0));
    for (double phi : {1.0, 2.0, 3.0})
        EXPECT_NEAR(std::abs(sph_harm({1, 1}, kPi / 2, phi)), base, 1e-13);
}

TEST(SphHarm, ConjugationSymmetry) {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u_theta(0.0, kPi);
    std::uniform_real_distribution<double> u_phi(0.0, 2 * kPi);
    for (int i = 0; i < 500; ++i) {
        const double theta = u_theta(rng), phi = u_phi(rng);
        for (int ell = 0; ell <= 3; ++ell)
            for (int m = 0; m <= ell; ++m) {
                const Complex pos = sph_harm({ell, m}, theta, phi);
                const Complex neg = sph_harm({ell, -m}, theta, phi);
                const Complex expected = (m % 2 == 0 ? 1.0 : -1.0) * std::conj(pos);
                EXPECT_NEAR(neg.real(), expected.real(), 1e-12);
                EXPECT_NEAR(neg.imag(), expected.imag(), 1e-12);
            }
    }
}

TEST(SphHarm, DomainErrors) {
    EXPECT_THROW(sph_harm({1, 2}, 0.5, 0.5), std::domain_error);
    EXPECT_THROW(sph_harm({1, 0}, -0.1, 0.0), std::domain_error);
    EXPECT_THROW(sph_harm({1, 0}, 3.5, 0.0), std::domain_error);
    EXPECT_THROW(sph_harm({1, 0}, 0.5, -0.1), std::domain_error);
    EXPECT_THROW(sph_harm({1, 0}, 0.5, 7.0), std::domain_error);
}

TEST(DegreeLists, NormalizeCountAndOrder) {
    EXPECT_EQ(normalize_degrees({2, 1}), (std::vector<int>{1, 2}));
    EXPECT_EQ(normalize_degrees({1, 1, 2}), (std::vector<int>{1, 2}));
    EXPECT_THROW(normalize_degrees({}), ConfigError);
    EXPECT_THROW(normalize_degrees({-1}), ConfigError);

    EXPECT_EQ(harmonic_count({1, 2}), 8u);
    EXPECT_EQ(harmonic_count({0}), 1u);
    EXPECT_EQ(harmonic_count({0, 1, 2}), 9u);

    const std::vector<HarmonicIndex> order = harmonic_order({1, 2});
    ASSERT_EQ(order.size(), 8u);
    EXPECT_EQ(order[0].ell, 1);
    EXPECT_EQ(order[0].m, -1);
    EXPECT_EQ(order[2].ell, 1);
    EXPECT_EQ(order[2].m, 1);
    EXPECT_EQ(order[3].ell, 2);
    EXPECT_EQ(order[3].m, -2);
    EXPECT_EQ(order[7].m, 2);
}

TEST(LshrEmbed, SingleNeighborMatchesBasisFunction) {
    const LocalSphericalField field = single_neighbor_field(2.5, 0.0, 0.0);
    const HarmonicCoefficients coeffs = lshr_embed(field, {1, 2});
    // (ell=1, m=0) sits at flat index 1 in the (1,-1),(1,0),(1,1),... order.
    const Complex value = coeffs.at(0, 0, 0, 1, 1);
    EXPECT_NEAR(value.real(), 0.4886025119029199, 1e-12);
    EXPECT_NEAR(value.imag(), 0.0, 1e-12);
    // The embedding uses angles only; the radius must not enter.
    const HarmonicCoefficients unit = lshr_embed(single_neighbor_field(1.0, 0.0, 0.0), {1, 2});
    for (std::size_t k = 0; k < 8; ++k)
        EXPECT_EQ(coeffs.at(0, 0, 0, 1, k), unit.at(0, 0, 0, 1, k));
}

TEST(LshrEmbed, SelfPairsAreExactZeros) {
    std::mt19937_64 rng(23);
    SkeletonSequence seq = SkeletonSequence::zeros(2, 1, 4);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (double& x : seq.coords) x = gauss(rng);
    const LocalSphericalField field = to_local(seq, {0, 1, 2, 3}, Axis::y);
    const HarmonicCoefficients coeffs = lshr_embed(field, {1, 2});
    for (int t = 0; t < 2; ++t)
        for (int v = 0; v < 4; ++v)
            for (std::size_t k = 0; k < coeffs.n_harm(); ++k) {
                const Complex z = coeffs.at(t, 0, v, v, k);
                EXPECT_EQ(z.real(), 0.0);
                EXPECT_EQ(z.imag(), 0.0);
            }
}

TEST(LshrEmbed, MagnitudesInvariantUnderUpAxisRotation) {
    std::mt19937_64 rng(29);
    SkeletonSequence seq = SkeletonSequence::zeros(3, 1, 6);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (double& x : seq.coords) x = gauss(rng);
    const std::vector<int> subset{0, 1, 2, 3, 4, 5};

    const HarmonicCoefficients base = lshr_embed(to_local(seq, subset, Axis::y), {1, 2});
    std::uniform_real_distribution<double> u_angle(0.0, 2 * kPi);
    for (int i = 0; i < 5; ++i) {
        const SkeletonSequence rot = rotate(seq, Rotation::about_axis(Axis::y, u_angle(rng)));
        const HarmonicCoefficients turned = lshr_embed(to_local(rot, subset, Axis::y), {1, 2});
        for (std::size_t k = 0; k < base.values.size(); ++k)
            EXPECT_NEAR(std::abs(base.values[k]), std::abs(turned.values[k]), 1e-10);
    }
}

TEST(LshtTransform, SingleNeighborIsConjugateBasisFunction) {
    const double theta = 1.1, phi = 2.2;
    const LocalSphericalField field = single_neighbor_field(1.0, theta, phi);
    const HarmonicCoefficients coeffs = lsht_transform(field, {1, 2});
    const std::vector<HarmonicIndex> order = harmonic_order({1, 2});
    for (std::size_t k = 0; k < order.size(); ++k) {
        const Complex expected = std::conj(sph_harm(order[k], theta, phi));
        const Complex got = coeffs.at(0, 0, 0, 0, k);
        EXPECT_NEAR(got.real(), expected.real(), 1e-12);
        EXPECT_NEAR(got.imag(), expected.imag(), 1e-12);
    }
}

TEST(LshtTransform, AntipodalUnitNeighborsCancelDegreeOne) {
    // Center joint 0 with neighbors straight up and straight down.
    SkeletonSequence seq = SkeletonSequence::zeros(1, 1, 3);
    seq.at(0, 0, 1)[2] = 1.0;
    seq.at(0, 0, 2)[2] = -1.0;
    const LocalSphericalField field = to_local(seq, {0, 1, 2}, Axis::z);
    const HarmonicCoefficients coeffs = lsht_transform(field, {1});
    // a_1^0 = sqrt(3/4pi) * (1 + (-1)) = 0.
    const Complex a10 = coeffs.at(0, 0, 0, 0, 1);
    EXPECT_NEAR(a10.real(), 0.0, 1e-12);
    EXPECT_NEAR(a10.imag(), 0.0, 1e-12);
}

TEST(LshtTransform, LinearInTheRadii) {
    LocalSphericalField field;
    field.frames = 1;
    field.bodies = 1;
    field.subset = {0, 1, 2};
    field.points.assign(9, SphericalPoint{});
    field.points[field.index(0, 0, 0, 1)] = {1.5, 0.8, 1.2};
    field.points[field.index(0, 0, 0, 2)] = {0.7, 2.1, 4.4};

    LocalSphericalField scaled = field;
    const double c = 3.25;
    for (SphericalPoint& p : scaled.points) p.r *= c;

    const HarmonicCoefficients a = lsht_transform(field, {1, 2});
    const HarmonicCoefficients b = lsht_transform(scaled, {1, 2});
    for (std::size_t k = 0; k < a.n_harm(); ++k) {
        EXPECT_NEAR(b.at(0, 0, 0, 0, k).real(), c * a.at(0, 0, 0, 0, k).real(), 1e-12);
        EXPECT_NEAR(b.at(0, 0, 0, 0, k).imag(), c * a.at(0, 0, 0, 0, k).imag(), 1e-12);
    }
}

TEST(LshtTransform, NormalizeDividesByNeighborCount) {
    SkeletonSequence seq = SkeletonSequence::zeros(1, 1, 4);
    std::mt19937_64 rng(31);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (double& x : seq.coords) x = gauss(rng);
    const LocalSphericalField field = to_local(seq, {0, 1, 2, 3}, Axis::y);
    const HarmonicCoefficients sum = lsht_transform(field, {1, 2}, false);
    const HarmonicCoefficients mean = lsht_transform(field, {1, 2}, true);
    for (std::size_t k = 0; k < sum.values.size(); ++k) {
        EXPECT_NEAR(mean.values[k].real(), sum.values[k].real() / 3.0, 1e-12);
        EXPECT_NEAR(mean.values[k].imag(), sum.values[k].imag() / 3.0, 1e-12);
    }
}

TEST(ComplexFormatOp, ValuesAndLayout) {
    const std::vector<Complex> values{{3.0, 4.0}, {0.0, 0.0}, {-1.0, 1.0}};

    const std::vector<double> mag = complex_format(values, ComplexFormat::magnitude);
    ASSERT_EQ(mag.size(), 3u);
    EXPECT_NEAR(mag[0], 5.0, 1e-15);
    EXPECT_EQ(mag[1], 0.0);

    const std::vector<double> phase = complex_format(values, ComplexFormat::phase);
    EXPECT_EQ(phase[1], 0.0); // degenerate convention
    EXPECT_NEAR(phase[2], 3 * kPi / 4, 1e-12);

    const std::vector<double> ri = complex_format(values, ComplexFormat::real_and_imag);
    ASSERT_EQ(ri.size(), 6u);
    EXPECT_EQ(ri[0], 3.0);
    EXPECT_EQ(ri[2], -1.0);
    EXPECT_EQ(ri[3], 4.0); // imaginary block follows every real
    EXPECT_EQ(ri[5], 1.0);

    EXPECT_EQ(format_parts(ComplexFormat::magnitude), 1);
    EXPECT_EQ(format_parts(ComplexFormat::mag_and_phase), 2);
    EXPECT_THROW(complex_format_from_string("octonion"), ConfigError);
    EXPECT_EQ(complex_format_from_string("mag"), ComplexFormat::magnitude);
    EXPECT_EQ(complex_format_from_string("real-imag"), ComplexFormat::real_and_imag);
}

TEST(PowerSpectrum, ZeroAndSingleEntry) {
    HarmonicCoefficients coeffs;
    coeffs.kind = HarmonicCoefficients::Kind::lsht;
    coeffs.degrees = {1, 2};
    coeffs.subset = {0};
    coeffs.frames = 1;
    coeffs.bodies = 1;
    coeffs.centers = 1;
    coeffs.neighbors = 1;
    coeffs.values.assign(8, Complex{0.0, 0.0});

    std::vector<double> spectrum = power_spectrum(coeffs);
    ASSERT_EQ(spectrum.size(), 2u);
    EXPECT_EQ(spectrum[0], 0.0);
    EXPECT_EQ(spectrum[1], 0.0);

    coeffs.values[1] = Complex{0.5, 0.0}; // (ell=1, m=0)
    spectrum = power_spectrum(coeffs);
    EXPECT_NEAR(spectrum[0], 0.25, 1e-15);
    EXPECT_EQ(spectrum[1], 0.0);
}

TEST(PowerSpectrum, InvariantUnderRotateAndRecompute) {
    std::mt19937_64 rng(37);
    SkeletonSequence seq = SkeletonSequence::zeros(1, 1, 8);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (double& x : seq.coords) x = gauss(rng);
    const std::vector<int> subset{0, 1, 2, 3, 4, 5, 6, 7};

    const std::vector<double> base =
        power_spectrum(lsht_transform(to_local(seq, subset, Axis::y), {1, 2}));
    for (int i = 0; i < 10; ++i) {
        const Rotation r = sample_rotation(rng, RotationMode::so3_uniform);
        const std::vector<double> turned =
            power_spectrum(lsht_transform(to_local(rotate(seq, r), subset, Axis::y), {1, 2}));
        ASSERT_EQ(turned.size(), base.size());
        for (std::size_t k = 0; k < base.size(); ++k) EXPECT_NEAR(base[k], turned[k], 1e-8);
    }
}

TEST(Verifiers, MeetTheirTolerances) {
    EXPECT_LT(verify_orthonormality(), 1e-9);
    EXPECT_LT(verify_azimuthal_invariance(), 1e-12);
    EXPECT_LT(verify_so3_spectrum(), 1e-8);
}

TEST(GaussLegendre, IntegratesLowPolynomialsExactly) {
    std::vector<double> nodes, weights;
    gauss_legendre(8, nodes, weights);
    ASSERT_EQ(nodes.size(), 8u);
    double sum = 0.0, quad = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        sum += weights[i];
        quad += weights[i] * nodes[i] * nodes[i];
    }
    EXPECT_NEAR(sum, 2.0, 1e-13);       // integral of 1 over [-1, 1]
    EXPECT_NEAR(quad, 2.0 / 3.0, 1e-13); // integral of x^2
}
