#include "sinkwatch/rope.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "sinkwatch/error.hpp"

namespace sinkwatch {

FrequencySpectrum FrequencySpectrum::from_frequencies(std::vector<double> freqs, double base)
{
    for (std::size_t i = 0; i < freqs.size(); ++i) {
        require(std::isfinite(freqs[i]) && freqs[i] >= 0.0,
                "frequency " + std::to_string(i) + " must be finite and non-negative");
    }
    FrequencySpectrum spec;
    spec.base = base;
    spec.dim = static_cast<int>(2 * freqs.size());
    spec.freqs = std::move(freqs);
    return spec;
}

FrequencySpectrum make_frequencies(double base, int dim)
{
    require(dim >= 2, "rotary dim must be >= 2, got " + std::to_string(dim));
    require(dim % 2 == 0, "rotary dim must be even, got " + std::to_string(dim));
    require(std::isfinite(base) && base > 0.0, "RoPE base must be positive and finite");

    FrequencySpectrum spec;
    spec.base = base;
    spec.dim = dim;
    spec.freqs.resize(static_cast<std::size_t>(dim / 2));
    for (int i = 0; i < dim / 2; ++i) {
        spec.freqs[static_cast<std::size_t>(i)] = std::pow(base, -2.0 * i / dim);
    }
    return spec;
}

double rotation_angle(std::int64_t position, double omega, AngleMode mode)
{
    if (mode == AngleMode::Direct) return static_cast<double>(position) * omega;
    constexpr long double two_pi = 2.0L * std::numbers::pi_v<long double>;
    const long double angle = static_cast<long double>(position) * static_cast<long double>(omega);
    return static_cast<double>(std::fmod(angle, two_pi));
}

void rotate_into(std::span<const double> vec, std::int64_t position, const FrequencySpectrum& spec,
                 std::span<double> out, AngleMode mode)
{
    require(vec.size() == static_cast<std::size_t>(spec.dim),
            "vector length " + std::to_string(vec.size()) + " does not match rotary dim " +
                std::to_string(spec.dim));
    require(out.size() == vec.size(), "output span has the wrong length");
    for (std::size_t i = 0; i < spec.freqs.size(); ++i) {
        const double angle = rotation_angle(position, spec.freqs[i], mode);
        const double c = std::cos(angle);
        const double s = std::sin(angle);
        const double x = vec[2 * i];
        const double y = vec[2 * i + 1];
        out[2 * i] = c * x - s * y;
        out[2 * i + 1] = s * x + c * y;
    }
}

RotatedVector rotate(std::span<const double> vec, std::int64_t position, const FrequencySpectrum& spec,
                     AngleMode mode)
{
    RotatedVector r;
    r.position = position;
    r.values.resize(vec.size());
    rotate_into(vec, position, spec, r.values, mode);
    return r;
}

double dot(std::span<const double> a, std::span<const double> b)
{
    require(a.size() == b.size(), "dot product of vectors with different lengths");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

double relative_score(std::span<const double> q, std::span<const double> k, std::int64_t m, std::int64_t n,
                      const FrequencySpectrum& spec)
{
    require(q.size() == k.size(), "query and key lengths differ");
    const auto qr = rotate(q, m, spec);
    const auto kr = rotate(k, n, spec);
    return dot(qr.values, kr.values);
}

double relative_offset_score(std::span<const double> q, std::span<const double> k, std::int64_t offset,
                             const FrequencySpectrum& spec)
{
    require(q.size() == k.size(), "query and key lengths differ");
    const auto kr = rotate(k, offset, spec);
    return dot(q, kr.values);
}

} // namespace sinkwatch
