#pragma once

#include <cstddef>

#include "fedrkg/matrix.hpp"
#include "fedrkg/rng.hpp"

namespace fedrkg {

// L2 clipping plus Gaussian noise on item-embedding gradients. The user
// embedding and gate never leave the device and are not sanitized.
struct PrivacyConfig {
  bool enabled = false;
  double clip_threshold = 0.1;  // C
  double noise_stddev = 0.001;  // sigma
  double delta = 1e-5;          // reported only; the accountant is external

  friend bool operator==(const PrivacyConfig&, const PrivacyConfig&) = default;
};

// Scales grad by min(1, C / ||grad||_2); the norm is over all entries.
void clip_gradient(Matrix& grad, double clip_threshold);

// Adds i.i.d. Normal(0, sigma^2) to every entry of grad.
void add_noise(Matrix& grad, double sigma, Rng& rng);

// Worst-case L2 movement of the item embeddings between two consecutive
// sync points, for adjacent datasets: 2 * eta * T_int * E * C.
double sensitivity_bound(double eta, std::size_t guidance_interval,
                         std::size_t local_epochs, double clip_threshold);

}  // namespace fedrkg
