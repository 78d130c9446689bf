#pragma once

#include "certkit/bounds.hpp"
#include "certkit/transport.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace certkit {

struct Interval {
    double lo = 0.0;
    double hi = 0.0;
    bool contains(const Interval& other) const { return other.lo >= lo && other.hi <= hi; }
};

/// Continuous piecewise-linear function through (knots[i], values[i]); its
/// domain is [knots.front(), knots.back()].
struct PiecewiseLinear {
    std::vector<double> knots;
    std::vector<double> values;
};

/// c0 + c1 t + c2 t^2 + c3 t^3 (degree at most 3).
struct Polynomial {
    std::vector<double> coeffs;
};

/// Univariate component g_j. Every query below is closed-form exact.
class UnivariateComponent {
public:
    UnivariateComponent(PiecewiseLinear pwl);
    UnivariateComponent(Polynomial poly, Interval domain);

    const Interval& domain() const noexcept { return domain_; }
    bool is_piecewise_linear() const noexcept { return std::holds_alternative<PiecewiseLinear>(kind_); }
    const PiecewiseLinear* pwl() const { return std::get_if<PiecewiseLinear>(&kind_); }
    const Polynomial* poly() const { return std::get_if<Polynomial>(&kind_); }

    double operator()(double t) const;
    double derivative(double t) const;  // right derivative at knots

    /// Same function shifted down by `offset`.
    UnivariateComponent shifted(double offset) const;

private:
    std::variant<PiecewiseLinear, Polynomial> kind_;
    Interval domain_;
};

/// Mean of g under the uniform probability measure on the interval.
double component_integral(const UnivariateComponent& g, Interval interval);
/// Largest |g'| on the interval.
double component_lipschitz(const UnivariateComponent& g, Interval interval);
/// (min, max) of g on the interval.
std::pair<double, double> component_range(const UnivariateComponent& g, Interval interval);

enum class Monotonicity { Increasing, Decreasing, Constant, None };
const char* to_string(Monotonicity m);

struct MonotoneCheck {
    Monotonicity direction;
    // For Monotonicity::None, two points where the slope has opposite signs.
    std::optional<std::pair<double, double>> sign_change;
};

MonotoneCheck component_monotonicity(const UnivariateComponent& g, Interval interval);

struct AdditiveTerm {
    std::size_t coordinate;
    UnivariateComponent g;
};

/// f(x) = c + sum_j g_j(x_j) over the product of the reference intervals, with
/// the uniform product reference measure. Coordinates without a term carry the
/// zero function.
class AdditiveModel {
public:
    AdditiveModel(double constant, std::vector<Interval> reference, std::vector<AdditiveTerm> terms);

    double constant() const noexcept { return constant_; }
    std::size_t dim() const noexcept { return reference_.size(); }
    const std::vector<Interval>& reference() const noexcept { return reference_; }
    const std::vector<AdditiveTerm>& terms() const noexcept { return terms_; }
    std::size_t sparsity() const noexcept { return terms_.size(); }
    const UnivariateComponent* component(std::size_t coordinate) const;

    double operator()(std::span<const double> x) const;

    /// Every component integrates to zero against its reference measure.
    bool is_centered(double tol = 1e-9) const;

private:
    double constant_;
    std::vector<Interval> reference_;
    std::vector<AdditiveTerm> terms_;
};

AdditiveModel parse_additive_model(std::istream& in);
AdditiveModel load_additive_model(const std::string& path);
void write_additive_model(std::ostream& out, const AdditiveModel& m);

/// Moves each component's reference mean into the constant. The function is
/// unchanged.
AdditiveModel center_model(const AdditiveModel& m);

/// Sum over components of component_lipschitz on the box coordinates.
double additive_lipschitz_l1(const AdditiveModel& m, const BoxSet& box);

/// Exact (inf, sup) of f over the box, by separability.
std::pair<double, double> product_sup_inf(const AdditiveModel& m, const BoxSet& box);

struct EndpointCertificate {
    std::vector<double> vertex;
    double value;
    std::vector<std::pair<std::size_t, Monotonicity>> directions;
};

/// Maximizing vertex when every component is monotone on the box. Constant
/// components and free coordinates pick the right endpoint. Throws
/// ErrorCode::NonMonotone naming the coordinate and a sign-change witness.
EndpointCertificate monotone_endpoint_certificate(const AdditiveModel& m, const BoxSet& box);

struct IdentifiabilityResidual {
    double const_diff;
    double max_component_diff;
};

/// Compares two centered representations component by component on a
/// `grid_per_dim`-point grid of each reference interval.
IdentifiabilityResidual identifiability_residual(const AdditiveModel& a, const AdditiveModel& b,
                                                 std::size_t grid_per_dim);

/// Shift-risk certificate with L_f = additive_lipschitz_l1; the per-component
/// constants are recorded on the certificate.
RiskCertificate additive_shift_certificate(const AdditiveModel& m, const BoxSet& box, double rho, double l_loss,
                                           double train_risk = 0.0, bool covariate_shift_assumed = true);

/// The box given by the reference intervals.
BoxSet reference_box(const AdditiveModel& m);

}  // namespace certkit
