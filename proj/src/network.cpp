#include "certkit/network.hpp"

#include "certkit/error.hpp"
#include "text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace certkit {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return "invalid_argument";
        case ErrorCode::Parse: return "parse";
        case ErrorCode::DimensionMismatch: return "dimension_mismatch";
        case ErrorCode::NonFinite: return "non_finite";
        case ErrorCode::Io: return "io";
        case ErrorCode::Domain: return "domain";
        case ErrorCode::NonMonotone: return "non_monotone";
        case ErrorCode::NotCentered: return "not_centered";
    }
    return "unknown";
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows * cols)
        throw Error(ErrorCode::DimensionMismatch, "matrix data size does not match shape");
}

Network::Network(std::vector<AffineLayer> layers) : layers_(std::move(layers)) {
    if (layers_.empty()) throw Error(ErrorCode::InvalidArgument, "network needs at least one layer");
    for (std::size_t l = 0; l < layers_.size(); ++l) {
        const auto& layer = layers_[l];
        if (layer.in_width() == 0 || layer.out_width() == 0)
            throw Error(ErrorCode::DimensionMismatch, "layer " + std::to_string(l + 1) + " has zero width");
        if (layer.bias.size() != layer.out_width())
            throw Error(ErrorCode::DimensionMismatch,
                        "layer " + std::to_string(l + 1) + " bias length differs from weight rows");
        if (l > 0 && layer.in_width() != layers_[l - 1].out_width())
            throw Error(ErrorCode::DimensionMismatch,
                        "layer " + std::to_string(l + 1) + " expects width " +
                            std::to_string(layer.in_width()) + " but previous layer has width " +
                            std::to_string(layers_[l - 1].out_width()));
        const auto finite = [](double v) { return std::isfinite(v); };
        if (!std::all_of(layer.weight.data().begin(), layer.weight.data().end(), finite) ||
            !std::all_of(layer.bias.begin(), layer.bias.end(), finite))
            throw Error(ErrorCode::NonFinite, "layer " + std::to_string(l + 1) + " has a non-finite parameter");
    }
    if (layers_.back().activation != Activation::Identity)
        throw Error(ErrorCode::InvalidArgument, "final layer must not apply ReLU");
}

std::size_t Network::hidden_units() const noexcept {
    std::size_t s = 0;
    for (const auto& layer : layers_)
        if (layer.activation == Activation::ReLU) s += layer.out_width();
    return s;
}

std::size_t Network::hidden_layers() const noexcept {
    return static_cast<std::size_t>(std::count_if(
        layers_.begin(), layers_.end(), [](const AffineLayer& l) { return l.activation == Activation::ReLU; }));
}

namespace {

struct LineReader {
    std::istream& in;
    std::size_t line_no = 0;

    // Next non-blank line, or throws a parse error naming `what`.
    std::string next(const char* what) {
        std::string line;
        while (std::getline(in, line)) {
            ++line_no;
            if (!text::trim(line).empty()) return line;
        }
        throw Error(ErrorCode::Parse, std::string("unexpected end of file, expected ") + what);
    }

    [[noreturn]] void fail(const std::string& msg) const {
        throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) + ": " + msg);
    }
};

std::vector<double> parse_row(LineReader& reader, std::size_t expected, const char* what) {
    const std::string line = reader.next(what);
    const auto tokens = text::split_ws(line);
    if (tokens.size() != expected)
        throw Error(ErrorCode::DimensionMismatch, "line " + std::to_string(reader.line_no) + ": expected " +
                                                      std::to_string(expected) + " values in " + what +
                                                      ", found " + std::to_string(tokens.size()));
    std::vector<double> row(expected);
    for (std::size_t i = 0; i < expected; ++i) {
        if (!text::parse_double(tokens[i], row[i])) reader.fail("malformed number '" + std::string(tokens[i]) + "'");
        if (!std::isfinite(row[i]))
            throw Error(ErrorCode::NonFinite, "line " + std::to_string(reader.line_no) + ": non-finite value");
    }
    return row;
}

}  // namespace

Network parse_network(std::istream& in) {
    LineReader reader{in};
    if (text::trim(reader.next("header")) != "relu-net v1") reader.fail("expected header 'relu-net v1'");

    const std::string dims_line = reader.next("dims line");
    const auto dims_tokens = text::split_ws(dims_line);
    if (dims_tokens.size() < 3 || dims_tokens[0] != "dims") reader.fail("expected 'dims d0 d1 ... dL' with L >= 1");
    std::vector<std::size_t> dims;
    for (std::size_t i = 1; i < dims_tokens.size(); ++i) {
        long long d = 0;
        if (!text::parse_int(dims_tokens[i], d) || d <= 0) reader.fail("dimensions must be positive integers");
        dims.push_back(static_cast<std::size_t>(d));
    }

    std::vector<AffineLayer> layers;
    for (std::size_t l = 1; l < dims.size(); ++l) {
        const std::string head_line = reader.next("layer header");
        const auto head = text::split_ws(head_line);
        long long index = 0;
        if (head.size() != 3 || head[0] != "layer" || !text::parse_int(head[1], index) ||
            index != static_cast<long long>(l))
            reader.fail("expected 'layer " + std::to_string(l) + " relu|identity'");
        AffineLayer layer;
        if (head[2] == "relu") layer.activation = Activation::ReLU;
        else if (head[2] == "identity") layer.activation = Activation::Identity;
        else reader.fail("unknown activation '" + std::string(head[2]) + "'");

        std::vector<double> weights;
        weights.reserve(dims[l] * dims[l - 1]);
        for (std::size_t r = 0; r < dims[l]; ++r) {
            const auto row = parse_row(reader, dims[l - 1], "weight row");
            weights.insert(weights.end(), row.begin(), row.end());
        }
        layer.weight = Matrix(dims[l], dims[l - 1], std::move(weights));
        layer.bias = parse_row(reader, dims[l], "bias");
        layers.push_back(std::move(layer));
    }
    std::string trailing;
    while (std::getline(in, trailing))
        if (!text::trim(trailing).empty()) throw Error(ErrorCode::Parse, "trailing content after last layer");
    return Network(std::move(layers));
}

Network load_network(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open network file '" + path + "'");
    return parse_network(in);
}

void write_network(std::ostream& out, const Network& net) {
    out << "relu-net v1\n";
    out << "dims " << net.input_dim();
    for (const auto& layer : net.layers()) out << ' ' << layer.out_width();
    out << '\n';
    for (std::size_t l = 0; l < net.depth(); ++l) {
        const auto& layer = net.layer(l);
        out << "layer " << (l + 1) << (layer.activation == Activation::ReLU ? " relu\n" : " identity\n");
        for (std::size_t r = 0; r < layer.out_width(); ++r) {
            const auto row = layer.weight.row(r);
            for (std::size_t c = 0; c < row.size(); ++c) out << (c ? " " : "") << text::format_double(row[c]);
            out << '\n';
        }
        for (std::size_t r = 0; r < layer.bias.size(); ++r) out << (r ? " " : "") << text::format_double(layer.bias[r]);
        out << '\n';
    }
}

void save_network(const std::string& path, const Network& net) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorCode::Io, "cannot write network file '" + path + "'");
    write_network(out, net);
}

namespace {

void check_input(const Network& net, std::span<const double> x) {
    if (x.size() != net.input_dim())
        throw Error(ErrorCode::DimensionMismatch, "input has length " + std::to_string(x.size()) +
                                                      ", network expects " + std::to_string(net.input_dim()));
}

std::vector<double> affine(const AffineLayer& layer, std::span<const double> z) {
    std::vector<double> s(layer.out_width());
    for (std::size_t r = 0; r < s.size(); ++r) {
        const auto row = layer.weight.row(r);
        double acc = layer.bias[r];
        for (std::size_t c = 0; c < row.size(); ++c) acc += row[c] * z[c];
        s[r] = acc;
    }
    return s;
}

}  // namespace

std::vector<double> evaluate(const Network& net, std::span<const double> x) {
    check_input(net, x);
    std::vector<double> z(x.begin(), x.end());
    for (const auto& layer : net.layers()) {
        z = affine(layer, z);
        if (layer.activation == Activation::ReLU)
            for (auto& v : z) v = std::max(v, 0.0);
    }
    return z;
}

std::vector<bool> activation_pattern(const Network& net, std::span<const double> x) {
    check_input(net, x);
    std::vector<bool> pattern;
    pattern.reserve(net.hidden_units());
    std::vector<double> z(x.begin(), x.end());
    for (const auto& layer : net.layers()) {
        z = affine(layer, z);
        if (layer.activation != Activation::ReLU) continue;
        for (auto& v : z) {
            pattern.push_back(v > 0.0);
            v = std::max(v, 0.0);
        }
    }
    return pattern;
}

std::uint64_t param_count(const Network& net) {
    std::uint64_t m = 0;
    for (const auto& layer : net.layers())
        m += static_cast<std::uint64_t>(layer.in_width()) * layer.out_width();
    return m;
}

double operator_norm_upper(const Matrix& w, NormKind norm) {
    switch (norm) {
        case NormKind::L1: {
            double best = 0.0;
            for (std::size_t c = 0; c < w.cols(); ++c) {
                double sq = 0.0;
                for (std::size_t r = 0; r < w.rows(); ++r) sq += w(r, c) * w(r, c);
                best = std::max(best, std::sqrt(sq));
            }
            return best;
        }
        case NormKind::L2: {
            double sq = 0.0;
            for (double v : w.data()) sq += v * v;
            return std::sqrt(sq);
        }
        case NormKind::LInf: {
            double sq = 0.0;
            for (std::size_t r = 0; r < w.rows(); ++r) {
                double row_l1 = 0.0;
                for (double v : w.row(r)) row_l1 += std::abs(v);
                sq += row_l1 * row_l1;
            }
            return std::sqrt(sq);
        }
    }
    return 0.0;
}

double global_lipschitz_upper(const Network& net, NormKind norm) {
    double bound = operator_norm_upper(net.layer(0).weight, norm);
    for (std::size_t l = 1; l < net.depth(); ++l) bound *= operator_norm_upper(net.layer(l).weight, NormKind::L2);
    return bound;
}

}  // namespace certkit
