#include "buckforge/error.hpp"

#include <fmt/core.h>

namespace buckforge {

InvalidParameter::InvalidParameter(std::string field, const std::string& reason)
    : std::invalid_argument(fmt::format("invalid `{}`: {}", field, reason)), field_(std::move(field)) {}

SingularMatrix::SingularMatrix(double determinant)
    : std::runtime_error(fmt::format("averaged state matrix is singular (det = {:.17g})", determinant)),
      determinant_(determinant) {}

PoleOnImaginaryAxis::PoleOnImaginaryAxis(double omega)
    : std::domain_error(fmt::format("transfer function has a pole on the imaginary axis at omega = {:.17g} rad/s", omega)),
      omega_(omega) {}

TargetUnreachable::TargetUnreachable(double target_pm, double observed_min, double observed_max)
    : std::runtime_error(fmt::format(
          "phase margin target {:.4g} deg unreachable; observed range [{:.4g}, {:.4g}] deg over the kp bracket",
          target_pm, observed_min, observed_max)),
      target_(target_pm),
      observed_min_(observed_min),
      observed_max_(observed_max) {}

}  // namespace buckforge
