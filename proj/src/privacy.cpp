#include "fedrkg/privacy.hpp"

#include <stdexcept>

namespace fedrkg {

void clip_gradient(Matrix& grad, double clip_threshold) {
  if (clip_threshold <= 0.0)
    throw std::runtime_error("clip threshold must be positive");
  const double norm = grad.frobenius_norm();
  if (norm <= clip_threshold) return;  // zero gradient passes through here
  const double scale = clip_threshold / norm;
  for (std::size_t i = 0; i < grad.rows(); ++i)
    for (double& v : grad.row(i)) v *= scale;
}

void add_noise(Matrix& grad, double sigma, Rng& rng) {
  if (sigma < 0.0) throw std::runtime_error("noise stddev must be >= 0");
  if (sigma == 0.0) return;
  for (std::size_t i = 0; i < grad.rows(); ++i)
    for (double& v : grad.row(i)) v += rng.normal(0.0, sigma);
}

double sensitivity_bound(double eta, std::size_t guidance_interval,
                         std::size_t local_epochs, double clip_threshold) {
  return 2.0 * eta * static_cast<double>(guidance_interval) *
         static_cast<double>(local_epochs) * clip_threshold;
}

}  // namespace fedrkg
