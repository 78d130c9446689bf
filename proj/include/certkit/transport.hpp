#pragma once

#include "certkit/network.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace certkit {

/// One-dimensional covariates with optional labels in {-1, +1}.
struct EmpiricalSample {
    std::vector<double> xs;
    std::optional<std::vector<int>> ys;

    EmpiricalSample() = default;
    explicit EmpiricalSample(std::vector<double> x);
    EmpiricalSample(std::vector<double> x, std::vector<int> y);

    std::size_t size() const noexcept { return xs.size(); }
    bool labeled() const noexcept { return ys.has_value(); }
};

/// CSV with header `x` or `x,y`.
EmpiricalSample parse_sample(std::istream& in);
EmpiricalSample load_sample(const std::string& path);
void write_sample(std::ostream& out, const EmpiricalSample& s);

enum class LossKind { Hinge, ZeroOne };

/// Lipschitz constant of the loss in its score argument; nullopt for 0-1.
std::optional<double> loss_lipschitz(LossKind loss);
double loss_value(LossKind loss, double score, int label);

/// Exact W1 between the two empirical measures via their quantile functions.
double w1_empirical_1d(const EmpiricalSample& a, const EmpiricalSample& b);

/// Exact W1 by solving the transport LP over coupling matrices with the
/// transportation simplex (north-west-corner start, integer-scaled masses).
/// Independent of sorting; limited to 64 points per side.
double w1_lp_oracle(const EmpiricalSample& a, const EmpiricalSample& b);
constexpr std::size_t kLpOracleMaxSize = 64;

struct AffinePredictor {
    double w = 0.0;
    double b = 0.0;
    double operator()(double x) const { return w * x + b; }
};

double empirical_risk(const AffinePredictor& f, const EmpiricalSample& s, LossKind loss);
/// For networks with one input and one output.
double empirical_risk(const Network& f, const EmpiricalSample& s, LossKind loss);

struct RiskCertificate {
    double train_risk = 0.0;
    double rho = 0.0;
    double sensitivity = 0.0;  // L_loss * L_f
    double certified_shift_risk = 0.0;
    bool covariate_shift_assumed = false;
    // (coordinate, L_j) when the sensitivity came from an additive model.
    std::vector<std::pair<std::size_t, double>> component_sensitivity;

    /// The bound only means something when the covariate-shift gate is closed.
    bool vacuous() const noexcept { return !covariate_shift_assumed; }
};

/// certified_shift_risk = train_risk + rho * (l_loss * l_f).
RiskCertificate shift_certificate(double train_risk, double rho, double l_loss, double l_f,
                                  bool covariate_shift_assumed);

/// Throws unless the certificate's covariate-shift gate is closed.
const RiskCertificate& require_stamped(const RiskCertificate& cert);

/// Flat `key=value` record of a risk certificate.
std::string serialize(const RiskCertificate& cert);

struct ShiftCheck {
    double lhs;  // risk on target points carrying the coupled training labels
    double rhs;  // train risk + W1 * L_loss * l_f
    double w1;
};

/// Couples the sorted training points with the sorted target points (equal
/// sizes), carries labels across and compares the transported risk with the
/// certified bound.
ShiftCheck empirical_shift_check(const AffinePredictor& f, const EmpiricalSample& train,
                                 const EmpiricalSample& target, LossKind loss, double l_f);

struct ShiftFlipScenario {
    EmpiricalSample train;   // uniform on [0, 1], all labels +1
    EmpiricalSample target;  // train shifted by rho, truncated to [0, 1], labels -1
    AffinePredictor f;       // f = 0, which predicts +1
    double risk_train = 0.0;
    double risk_target = 0.0;
    double w1 = 0.0;
    bool covariate_shift_assumed = false;
};

ShiftFlipScenario shift_flip_construction(double rho, std::size_t n, std::uint64_t seed);

}  // namespace certkit
