#pragma once

#include <span>
#include <vector>

namespace urbanpulse {

struct ButterworthParams {
  int order = 4;
  // Cutoff frequency in cycles per sample (per minute), below Nyquist (0.5).
  double cutoff = 1.0 / 120.0;
};

// One direct-form-II-transposed second-order section. First-order sections
// use b2 = a2 = 0.
struct Biquad {
  double b0 = 1, b1 = 0, b2 = 0;
  double a1 = 0, a2 = 0;
};

// Digital low-pass Butterworth design by the bilinear transform with the
// cutoff pre-warped. Throws SpecError on order < 1 or cutoff outside (0, 0.5).
std::vector<Biquad> design_butterworth_lowpass(const ButterworthParams& params);

// |H(f)|^2 of the designed filter at `frequency` cycles/sample:
// 1 / (1 + (tan(pi f) / tan(pi fc))^(2 order)).
double butterworth_power_gain(double frequency, const ButterworthParams& params);

// Zero-phase (forward then backward) filtering of one period of a periodic
// signal. The result is the steady-state response to the infinite periodic
// extension, so no edge transients appear and each Fourier component is
// scaled by exactly butterworth_power_gain.
std::vector<double> filtfilt_circular(std::span<const double> period,
                                      const ButterworthParams& params);

}  // namespace urbanpulse
