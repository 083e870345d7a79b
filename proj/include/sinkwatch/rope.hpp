#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace sinkwatch {

// Angular frequencies of one rotary axis: freqs[i] = base^(-2i/dim), i = 0..dim/2-1.
//
// Spectra built by make_frequencies() are "canonical" (freqs[0] == 1, strictly
// decreasing for base > 1). Extension strategies and tests may build arbitrary
// spectra through from_frequencies(); those carry base == 0 when no single base
// generates them.
struct FrequencySpectrum {
    double base = 0.0;
    int dim = 0;
    std::vector<double> freqs;

    [[nodiscard]] std::size_t size() const noexcept { return freqs.size(); }
    [[nodiscard]] bool canonical() const noexcept { return base > 0.0; }

    // Accepts any finite, non-negative frequencies (zeros allowed so that the
    // positional mechanism can be switched off in degenerate experiments).
    static FrequencySpectrum from_frequencies(std::vector<double> freqs, double base = 0.0);

    friend bool operator==(const FrequencySpectrum&, const FrequencySpectrum&) = default;
};

FrequencySpectrum make_frequencies(double base, int dim);

struct RotatedVector {
    std::vector<double> values;
    std::int64_t position = 0;
};

enum class AngleMode {
    Direct,  // angle = position * omega in double; loses precision once |p*omega| ~ 2^52
    Reduced, // angle reduced modulo 2*pi in extended precision before cos/sin
};

double rotation_angle(std::int64_t position, double omega, AngleMode mode = AngleMode::Direct);

RotatedVector rotate(std::span<const double> vec, std::int64_t position, const FrequencySpectrum& spec,
                     AngleMode mode = AngleMode::Direct);

// Allocation-free variant used by the attention kernels; out.size() must equal vec.size().
void rotate_into(std::span<const double> vec, std::int64_t position, const FrequencySpectrum& spec,
                 std::span<double> out, AngleMode mode = AngleMode::Direct);

double dot(std::span<const double> a, std::span<const double> b);

// <R(m) q, R(n) k>
double relative_score(std::span<const double> q, std::span<const double> k, std::int64_t m, std::int64_t n,
                      const FrequencySpectrum& spec);

// <q, R(offset) k>; relative_score(q, k, m, n) == relative_offset_score(q, k, n - m).
double relative_offset_score(std::span<const double> q, std::span<const double> k, std::int64_t offset,
                             const FrequencySpectrum& spec);

} // namespace sinkwatch
