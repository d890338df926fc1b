#pragma once

#include <stdexcept>
#include <string>

namespace buckforge {

// Bad user-supplied value. `field()` names the offending parameter.
class InvalidParameter : public std::invalid_argument {
public:
    InvalidParameter(std::string field, const std::string& reason);

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

// Averaged state matrix cannot be inverted.
class SingularMatrix : public std::runtime_error {
public:
    explicit SingularMatrix(double determinant);

    double determinant() const noexcept { return determinant_; }

private:
    double determinant_;
};

// Transfer function evaluated exactly on a pole lying on the imaginary axis.
class PoleOnImaginaryAxis : public std::domain_error {
public:
    explicit PoleOnImaginaryAxis(double omega);

    double omega() const noexcept { return omega_; }

private:
    double omega_;
};

class UnsupportedDegree : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Step trajectory has not reached steady state within its window.
class NotSettled : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Phase-margin target cannot be met anywhere in the searched gain bracket.
class TargetUnreachable : public std::runtime_error {
public:
    TargetUnreachable(double target_pm, double observed_min, double observed_max);

    double target() const noexcept { return target_; }
    double observed_min() const noexcept { return observed_min_; }
    double observed_max() const noexcept { return observed_max_; }

private:
    double target_;
    double observed_min_;
    double observed_max_;
};

}  // namespace buckforge
