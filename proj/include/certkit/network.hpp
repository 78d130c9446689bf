#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace certkit {

// Dense row-major matrix. Rows index output units, columns index inputs.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<const double> row(std::size_t r) const {
        return {data_.data() + r * cols_, cols_};
    }
    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }

    std::span<const double> data() const noexcept { return data_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

enum class Activation { ReLU, Identity };

struct AffineLayer {
    Matrix weight;
    std::vector<double> bias;
    Activation activation = Activation::Identity;

    std::size_t in_width() const noexcept { return weight.cols(); }
    std::size_t out_width() const noexcept { return weight.rows(); }
};

// Input-space norm used for Lipschitz statements. Outputs are always measured
// in the Euclidean norm.
enum class NormKind { L1, L2, LInf };

/// Feedforward network z_l = act(W_l z_{l-1} + b_l). Immutable once built; the
/// constructor enforces that layer widths chain, every parameter is finite and
/// the last layer is affine (no ReLU).
class Network {
public:
    explicit Network(std::vector<AffineLayer> layers);

    std::size_t input_dim() const noexcept { return layers_.front().in_width(); }
    std::size_t output_dim() const noexcept { return layers_.back().out_width(); }
    std::size_t depth() const noexcept { return layers_.size(); }
    const std::vector<AffineLayer>& layers() const noexcept { return layers_; }
    const AffineLayer& layer(std::size_t i) const { return layers_[i]; }

    /// Number of hidden ReLU units s.
    std::size_t hidden_units() const noexcept;
    std::size_t hidden_layers() const noexcept;

private:
    std::vector<AffineLayer> layers_;
};

Network parse_network(std::istream& in);
Network load_network(const std::string& path);
void write_network(std::ostream& out, const Network& net);
void save_network(const std::string& path, const Network& net);

std::vector<double> evaluate(const Network& net, std::span<const double> x);

/// One entry per hidden ReLU unit, layer-major; true iff the preactivation is
/// strictly positive.
std::vector<bool> activation_pattern(const Network& net, std::span<const double> x);

/// M = sum over layers of in_width * out_width. Biases are not counted.
std::uint64_t param_count(const Network& net);

/// Sound (not tight) global Lipschitz bound of x -> f(x) from `norm` on the
/// input to the Euclidean norm on the output. The first factor is an upper
/// bound on ||W_1||_{norm->2}; every later factor is the Frobenius norm, which
/// dominates the spectral norm. ReLU is 1-Lipschitz.
double global_lipschitz_upper(const Network& net, NormKind norm);

/// Upper bound on the induced operator norm ||W||_{norm->2}: exact max column
/// 2-norm for L1, Frobenius for L2, and the 2-norm of the row 1-norms for LInf.
double operator_norm_upper(const Matrix& w, NormKind norm);

}  // namespace certkit
