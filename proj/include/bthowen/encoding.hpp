#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "bthowen/bit_vector.hpp"

namespace bthowen {

/// Inverse of the standard normal CDF (Wichura's PPND16 rational
/// approximation, absolute error well below 1e-9 over (0, 1)).
inline double inverse_normal_cdf(double p) {
  if (!(p > 0.0 && p < 1.0)) {
    throw std::invalid_argument("inverse_normal_cdf: p must lie in (0, 1)");
  }
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    const double num =
        (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
              6.7265770927008700853e4) * r + 4.5921953931549871457e4) * r +
            1.3731693765509461125e4) * r + 1.9715909503065514427e3) * r +
          1.3314166789178437745e2) * r + 3.3871328727963666080e0);
    const double den =
        (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
              3.9307895800092710610e4) * r + 2.1213794301586595867e4) * r +
            5.3941960214247511077e3) * r + 6.8718700749205790830e2) * r +
          4.2313330701600911252e1) * r + 1.0);
    return q * num / den;
  }
  double r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double value;
  if (r <= 5.0) {
    r -= 1.6;
    const double num =
        (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
              2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
            3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
          4.63033784615654529590e0) * r + 1.42343711074968357734e0);
    const double den =
        (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
              1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
            6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
          2.05319162663775882187e0) * r + 1.0);
    value = num / den;
  } else {
    r -= 5.0;
    const double num =
        (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
              1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
            2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
          5.46378491116411436990e0) * r + 6.65790464350110377720e0);
    const double den =
        (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
              1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
            1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
          5.99832206555887937690e-1) * r + 1.0);
    value = num / den;
  }
  return (q < 0.0) ? -value : value;
}

/// Per-feature Gaussian thermometer encoder. Each feature gets t thresholds
/// placed at the equal-probability quantiles of a normal fitted to the
/// training data; a value encodes as the unary pattern of thresholds it
/// exceeds.
class ThermometerEncoder {
 public:
  ThermometerEncoder() = default;

  /// Reassembles an encoder from stored state. thresholds is row-major,
  /// feature_count rows of bits_per_input ascending values.
  ThermometerEncoder(size_t feature_count, uint32_t bits_per_input,
                     std::vector<double> thresholds)
      : feature_count_(feature_count),
        bits_per_input_(bits_per_input),
        thresholds_(std::move(thresholds)) {
    if (feature_count_ == 0 || bits_per_input_ == 0) {
      throw std::invalid_argument("ThermometerEncoder: empty shape");
    }
    if (thresholds_.size() != feature_count_ * bits_per_input_) {
      throw std::invalid_argument("ThermometerEncoder: threshold count mismatch");
    }
  }

  /// Fits per-feature thresholds from row-major training data
  /// (sample_count x feature_count). Threshold i of feature f is
  /// mean_f + stddev_f * Phi^-1((i+1) / (t+1)); stddev is the population
  /// form. A constant feature yields t identical thresholds.
  static ThermometerEncoder fit(const std::vector<double>& features,
                                size_t sample_count, size_t feature_count,
                                uint32_t bits_per_input) {
    if (bits_per_input == 0) throw std::invalid_argument("fit: bits_per_input must be >= 1");
    if (sample_count < 2) throw std::invalid_argument("fit: need at least 2 samples");
    if (feature_count == 0) throw std::invalid_argument("fit: need at least 1 feature");
    if (features.size() != sample_count * feature_count) {
      throw std::invalid_argument("fit: feature matrix size mismatch");
    }

    std::vector<double> mean(feature_count, 0.0);
    for (size_t s = 0; s < sample_count; ++s) {
      for (size_t f = 0; f < feature_count; ++f) {
        const double v = features[s * feature_count + f];
        if (!std::isfinite(v)) throw std::invalid_argument("fit: non-finite feature value");
        mean[f] += v;
      }
    }
    for (double& m : mean) m /= static_cast<double>(sample_count);

    std::vector<double> variance(feature_count, 0.0);
    for (size_t s = 0; s < sample_count; ++s) {
      for (size_t f = 0; f < feature_count; ++f) {
        const double d = features[s * feature_count + f] - mean[f];
        variance[f] += d * d;
      }
    }

    const uint32_t t = bits_per_input;
    std::vector<double> quantiles(t);
    for (uint32_t i = 0; i < t; ++i) {
      quantiles[i] = inverse_normal_cdf(static_cast<double>(i + 1) /
                                        static_cast<double>(t + 1));
    }

    std::vector<double> thresholds(feature_count * t);
    for (size_t f = 0; f < feature_count; ++f) {
      const double sigma = std::sqrt(variance[f] / static_cast<double>(sample_count));
      for (uint32_t i = 0; i < t; ++i) {
        thresholds[f * t + i] = mean[f] + sigma * quantiles[i];
      }
    }
    return ThermometerEncoder(feature_count, t, std::move(thresholds));
  }

  /// Encodes one sample into the first feature_count*t bits of out.
  /// Bit f*t + i is 1 iff sample[f] is strictly above threshold i of
  /// feature f, so each feature group is a prefix of ones.
  void encode(const double* sample, size_t sample_len, BitVector& out) const {
    if (sample_len != feature_count_) {
      throw std::invalid_argument("encode: sample length mismatch");
    }
    if (out.size() < encoded_bits()) {
      throw std::invalid_argument("encode: output vector too small");
    }
    const uint32_t t = bits_per_input_;
    for (size_t f = 0; f < feature_count_; ++f) {
      const double v = sample[f];
      const double* row = &thresholds_[f * t];
      for (uint32_t i = 0; i < t; ++i) {
        out.set(f * t + i, v > row[i]);
      }
    }
  }

  BitVector encode(const std::vector<double>& sample) const {
    BitVector out(encoded_bits());
    encode(sample.data(), sample.size(), out);
    return out;
  }

  bool fitted() const { return feature_count_ != 0; }
  size_t feature_count() const { return feature_count_; }
  uint32_t bits_per_input() const { return bits_per_input_; }
  size_t encoded_bits() const { return feature_count_ * bits_per_input_; }
  double threshold(size_t feature, uint32_t index) const {
    return thresholds_[feature * bits_per_input_ + index];
  }
  const std::vector<double>& thresholds() const { return thresholds_; }

 private:
  size_t feature_count_ = 0;
  uint32_t bits_per_input_ = 0;
  std::vector<double> thresholds_;
};

}  // namespace bthowen
