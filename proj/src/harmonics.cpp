#include "sphand/harmonics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>
#include <stdexcept>

#include "sphand/errors.hpp"

namespace sphand {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

double assoc_legendre(int ell, int m, double x) {
    if (ell < 0 || m < 0 || m > ell)
        throw std::domain_error("assoc_legendre: need 0 <= m <= ell, got ell=" +
                                std::to_string(ell) + " m=" + std::to_string(m));
    if (!(std::abs(x) <= 1.0))
        throw std::domain_error("assoc_legendre: |x| must be <= 1");

    // P_m^m = (-1)^m (2m-1)!! (1-x^2)^{m/2}, Condon-Shortley included.
    double pmm = 1.0;
    if (m > 0) {
        const double s = std::sqrt((1.0 - x) * (1.0 + x));
        double fact = 1.0;
        for (int i = 0; i < m; ++i) {
            pmm *= -fact * s;
            fact += 2.0;
        }
    }
    if (ell == m) return pmm;

    // P_{m+1}^m = x (2m+1) P_m^m
    double pmm1 = x * (2.0 * m + 1.0) * pmm;
    if (ell == m + 1) return pmm1;

    // (l-m) P_l^m = x (2l-1) P_{l-1}^m - (l+m-1) P_{l-2}^m
    double pll = 0.0;
    for (int l = m + 2; l <= ell; ++l) {
        pll = (x * (2.0 * l - 1.0) * pmm1 - (l + m - 1.0) * pmm) / (l - m);
        pmm = pmm1;
        pmm1 = pll;
    }
    return pll;
}

namespace {

double sph_norm(int ell, int m) {
    // sqrt((l-m)! (2l+1) / ((l+m)! 4 pi)); the factorial ratio as a product.
    double ratio = 1.0;
    for (int k = ell - m + 1; k <= ell + m; ++k) ratio *= k;
    return std::sqrt((2.0 * ell + 1.0) / (4.0 * kPi * ratio));
}

} // namespace

Complex sph_harm(HarmonicIndex idx, double theta, double phi) {
    if (idx.ell < 0 || std::abs(idx.m) > idx.ell)
        throw std::domain_error("sph_harm: order out of range for degree " +
                                std::to_string(idx.ell));
    if (!(theta >= 0.0 && theta <= kPi))
        throw std::domain_error("sph_harm: theta must be in [0, pi]");
    if (!(phi >= 0.0 && phi < kTwoPi))
        throw std::domain_error("sph_harm: phi must be in [0, 2*pi)");

    if (idx.m < 0) {
        const Complex y = sph_harm({idx.ell, -idx.m}, theta, phi);
        const double sign = (idx.m % 2 == 0) ? 1.0 : -1.0;
        return sign * std::conj(y);
    }

    const double p = assoc_legendre(idx.ell, idx.m, std::cos(theta));
    const double n = sph_norm(idx.ell, idx.m);
    const double arg = idx.m * phi;
    return Complex(n * p * std::cos(arg), n * p * std::sin(arg));
}

std::vector<int> normalize_degrees(std::vector<int> degrees) {
    if (degrees.empty()) throw ConfigError("degree set must not be empty");
    std::set<int> unique(degrees.begin(), degrees.end());
    for (int d : unique)
        if (d < 0) throw ConfigError("degrees must be nonnegative");
    return std::vector<int>(unique.begin(), unique.end());
}

std::size_t harmonic_count(const std::vector<int>& degrees) {
    std::size_t n = 0;
    for (int d : degrees) n += 2 * static_cast<std::size_t>(d) + 1;
    return n;
}

std::vector<HarmonicIndex> harmonic_order(const std::vector<int>& degrees) {
    std::vector<HarmonicIndex> out;
    out.reserve(harmonic_count(degrees));
    for (int d : degrees)
        for (int m = -d; m <= d; ++m) out.push_back({d, m});
    return out;
}

HarmonicCoefficients lshr_embed(const LocalSphericalField& field,
                                const std::vector<int>& degrees) {
    HarmonicCoefficients out;
    out.kind = HarmonicCoefficients::Kind::lshr;
    out.degrees = normalize_degrees(degrees);
    out.subset = field.subset;
    out.frames = field.frames;
    out.bodies = field.bodies;
    out.centers = static_cast<int>(field.subset.size());
    out.neighbors = out.centers;
    const auto order = harmonic_order(out.degrees);
    const std::size_t k = order.size();
    out.values.assign(static_cast<std::size_t>(out.frames) * out.bodies * out.centers *
                          out.neighbors * k,
                      Complex(0.0, 0.0));

    for (int t = 0; t < out.frames; ++t)
        for (int m = 0; m < out.bodies; ++m)
            for (int v = 0; v < out.centers; ++v)
                for (int w = 0; w < out.neighbors; ++w) {
                    if (v == w) continue; // self-pair stays exactly zero
                    const SphericalPoint& p = field.at(t, m, v, w);
                    const std::size_t base = out.index(t, m, v, w, 0);
                    for (std::size_t h = 0; h < k; ++h)
                        out.values[base + h] = sph_harm(order[h], p.theta, p.phi);
                }
    return out;
}

HarmonicCoefficients lsht_transform(const LocalSphericalField& field,
                                    const std::vector<int>& degrees, bool normalize) {
    HarmonicCoefficients out;
    out.kind = HarmonicCoefficients::Kind::lsht;
    out.degrees = normalize_degrees(degrees);
    out.subset = field.subset;
    out.frames = field.frames;
    out.bodies = field.bodies;
    out.centers = static_cast<int>(field.subset.size());
    out.neighbors = 1;
    const auto order = harmonic_order(out.degrees);
    const std::size_t k = order.size();
    out.values.assign(static_cast<std::size_t>(out.frames) * out.bodies * out.centers * k,
                      Complex(0.0, 0.0));

    const int s = static_cast<int>(field.subset.size());
    const double scale = normalize ? 1.0 / static_cast<double>(s - 1) : 1.0;

    for (int t = 0; t < out.frames; ++t)
        for (int m = 0; m < out.bodies; ++m)
            for (int v = 0; v < out.centers; ++v) {
                const std::size_t base = out.index(t, m, v, 0, 0);
                for (int w = 0; w < s; ++w) {
                    if (w == v) continue;
                    const SphericalPoint& p = field.at(t, m, v, w);
                    for (std::size_t h = 0; h < k; ++h)
                        out.values[base + h] +=
                            p.r * std::conj(sph_harm(order[h], p.theta, p.phi));
                }
                if (normalize)
                    for (std::size_t h = 0; h < k; ++h) out.values[base + h] *= scale;
            }
    return out;
}

ComplexFormat complex_format_from_string(const std::string& s) {
    if (s == "real" || s == "re") return ComplexFormat::real;
    if (s == "imaginary" || s == "imag" || s == "im") return ComplexFormat::imaginary;
    if (s == "magnitude" || s == "mag") return ComplexFormat::magnitude;
    if (s == "phase") return ComplexFormat::phase;
    if (s == "real_and_imag" || s == "real-imag") return ComplexFormat::real_and_imag;
    if (s == "mag_and_phase" || s == "mag-phase") return ComplexFormat::mag_and_phase;
    throw ConfigError("unknown complex format '" + s + "'");
}

std::string complex_format_to_string(ComplexFormat f) {
    switch (f) {
        case ComplexFormat::real: return "real";
        case ComplexFormat::imaginary: return "imaginary";
        case ComplexFormat::magnitude: return "magnitude";
        case ComplexFormat::phase: return "phase";
        case ComplexFormat::real_and_imag: return "real_and_imag";
        default: return "mag_and_phase";
    }
}

int format_parts(ComplexFormat f) {
    return (f == ComplexFormat::real_and_imag || f == ComplexFormat::mag_and_phase) ? 2 : 1;
}

std::vector<std::string> format_part_names(ComplexFormat f) {
    switch (f) {
        case ComplexFormat::real: return {"re"};
        case ComplexFormat::imaginary: return {"im"};
        case ComplexFormat::magnitude: return {"mag"};
        case ComplexFormat::phase: return {"phase"};
        case ComplexFormat::real_and_imag: return {"re", "im"};
        default: return {"mag", "phase"};
    }
}

namespace {

double phase_of(const Complex& c) {
    if (c.real() == 0.0 && c.imag() == 0.0) return 0.0;
    double p = std::atan2(c.imag(), c.real());
    if (p == -kPi) p = kPi; // range is (-pi, pi]
    return p;
}

double part_value(const Complex& c, const std::string& part) {
    if (part == "re") return c.real();
    if (part == "im") return c.imag();
    if (part == "mag") return std::abs(c);
    return phase_of(c);
}

} // namespace

std::vector<double> complex_format(const std::vector<Complex>& values, ComplexFormat format) {
    const auto parts = format_part_names(format);
    std::vector<double> out;
    out.reserve(values.size() * parts.size());
    for (const auto& part : parts)
        for (const Complex& c : values) out.push_back(part_value(c, part));
    return out;
}

std::vector<double> power_spectrum(const HarmonicCoefficients& coeffs) {
    const std::size_t k = coeffs.n_harm();
    const std::size_t leading = coeffs.values.size() / k;
    const std::size_t n_deg = coeffs.degrees.size();
    std::vector<double> out(leading * n_deg, 0.0);

    for (std::size_t i = 0; i < leading; ++i) {
        std::size_t h = 0;
        for (std::size_t d = 0; d < n_deg; ++d) {
            const int count = 2 * coeffs.degrees[d] + 1;
            double power = 0.0;
            for (int j = 0; j < count; ++j, ++h) power += std::norm(coeffs.values[i * k + h]);
            out[i * n_deg + d] = power;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Verifiers
// ---------------------------------------------------------------------------

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.resize(n);
    weights.resize(n);
    const int half = (n + 1) / 2;
    for (int i = 0; i < half; ++i) {
        // Newton on P_n with the Tricomi initial guess.
        double x = std::cos(kPi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = x;
            for (int l = 2; l <= n; ++l) {
                const double p2 = ((2.0 * l - 1.0) * x * p1 - (l - 1.0) * p0) / l;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
}

double verify_orthonormality(int max_ell, int gauss_nodes, int phi_nodes) {
    std::vector<double> x, w;
    gauss_legendre(gauss_nodes, x, w);

    std::vector<int> degrees;
    for (int d = 0; d <= max_ell; ++d) degrees.push_back(d);
    const auto order = harmonic_order(degrees);
    const std::size_t k = order.size();

    // Tabulate Y at every quadrature node.
    std::vector<Complex> table(static_cast<std::size_t>(gauss_nodes) * phi_nodes * k);
    for (int i = 0; i < gauss_nodes; ++i) {
        const double theta = std::acos(std::clamp(x[i], -1.0, 1.0));
        for (int j = 0; j < phi_nodes; ++j) {
            const double phi = kTwoPi * j / phi_nodes;
            for (std::size_t h = 0; h < k; ++h)
                table[(static_cast<std::size_t>(i) * phi_nodes + j) * k + h] =
                    sph_harm(order[h], theta, phi);
        }
    }

    const double phi_weight = kTwoPi / phi_nodes;
    double worst = 0.0;
    for (std::size_t a = 0; a < k; ++a)
        for (std::size_t b = 0; b < k; ++b) {
            Complex acc(0.0, 0.0);
            for (int i = 0; i < gauss_nodes; ++i) {
                Complex phi_sum(0.0, 0.0);
                for (int j = 0; j < phi_nodes; ++j) {
                    const std::size_t base = (static_cast<std::size_t>(i) * phi_nodes + j) * k;
                    phi_sum += table[base + a] * std::conj(table[base + b]);
                }
                acc += w[i] * phi_weight * phi_sum;
            }
            const double expected = (a == b) ? 1.0 : 0.0;
            worst = std::max(worst, std::abs(acc - Complex(expected, 0.0)));
        }
    return worst;
}

double verify_azimuthal_invariance(int samples, int max_ell, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u01(0.0, 1.0);

    std::vector<int> degrees;
    for (int d = 1; d <= max_ell; ++d) degrees.push_back(d);
    const auto order = harmonic_order(degrees);

    double worst = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double theta = std::acos(1.0 - 2.0 * u01(rng));
        const double phi = u01(rng) * kTwoPi;
        const double alpha = u01(rng) * kTwoPi;
        double shifted = std::fmod(phi + alpha, kTwoPi);
        if (shifted < 0.0) shifted += kTwoPi;
        if (shifted >= kTwoPi) shifted = 0.0;
        for (const auto& idx : order) {
            const double m0 = std::abs(sph_harm(idx, theta, phi));
            const double m1 = std::abs(sph_harm(idx, theta, shifted));
            worst = std::max(worst, std::abs(m1 - m0));
        }
    }
    return worst;
}

double verify_so3_spectrum(int rotations, int joints, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> coord(-1.0, 1.0);

    // One random cloud as a single-frame "hand".
    SkeletonSequence seq = SkeletonSequence::zeros(1, 1, joints);
    for (double& c : seq.coords) c = coord(rng);

    std::vector<int> subset(joints);
    for (int i = 0; i < joints; ++i) subset[i] = i;
    const std::vector<int> degrees = {1, 2};

    const auto reference =
        power_spectrum(lsht_transform(to_local(seq, subset, Axis::z), degrees));

    double worst = 0.0;
    for (int i = 0; i < rotations; ++i) {
        const Rotation r = sample_rotation(rng, RotationMode::so3_uniform);
        const auto rotated =
            power_spectrum(lsht_transform(to_local(rotate(seq, r), subset, Axis::z), degrees));
        for (std::size_t j = 0; j < reference.size(); ++j)
            worst = std::max(worst, std::abs(rotated[j] - reference[j]));
    }
    return worst;
}

} // namespace sphand
