#include "certkit/transport.hpp"

#include "certkit/error.hpp"
#include "text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <queue>
#include <random>
#include <sstream>

namespace certkit {

namespace {

void check_labels(const std::vector<int>& ys) {
    for (int y : ys)
        if (y != 1 && y != -1) throw Error(ErrorCode::InvalidArgument, "labels must be -1 or +1");
}

}  // namespace

EmpiricalSample::EmpiricalSample(std::vector<double> x) : xs(std::move(x)) {
    if (xs.empty()) throw Error(ErrorCode::InvalidArgument, "sample must be nonempty");
}

EmpiricalSample::EmpiricalSample(std::vector<double> x, std::vector<int> y) : xs(std::move(x)), ys(std::move(y)) {
    if (xs.empty()) throw Error(ErrorCode::InvalidArgument, "sample must be nonempty");
    if (ys->size() != xs.size()) throw Error(ErrorCode::DimensionMismatch, "labels and covariates differ in length");
    check_labels(*ys);
}

EmpiricalSample parse_sample(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    auto next = [&]() -> bool {
        while (std::getline(in, line)) {
            ++line_no;
            if (!text::trim(line).empty()) return true;
        }
        return false;
    };
    if (!next()) throw Error(ErrorCode::Parse, "sample file is empty");
    const auto header = text::split(text::trim(line), ',');
    bool labeled = false;
    if (header.size() == 1 && header[0] == "x") labeled = false;
    else if (header.size() == 2 && header[0] == "x" && header[1] == "y") labeled = true;
    else throw Error(ErrorCode::Parse, "sample header must be 'x' or 'x,y'");

    std::vector<double> xs;
    std::vector<int> ys;
    while (next()) {
        const auto fields = text::split(text::trim(line), ',');
        if (fields.size() != (labeled ? 2u : 1u))
            throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) + ": wrong number of fields");
        double x = 0.0;
        if (!text::parse_double(fields[0], x))
            throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) + ": malformed number");
        if (!std::isfinite(x)) throw Error(ErrorCode::NonFinite, "line " + std::to_string(line_no) + ": non-finite value");
        xs.push_back(x);
        if (labeled) {
            long long y = 0;
            if (!text::parse_int(fields[1], y) || (y != 1 && y != -1))
                throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) + ": label must be -1 or +1");
            ys.push_back(static_cast<int>(y));
        }
    }
    if (xs.empty()) throw Error(ErrorCode::InvalidArgument, "sample must be nonempty");
    return labeled ? EmpiricalSample(std::move(xs), std::move(ys)) : EmpiricalSample(std::move(xs));
}

EmpiricalSample load_sample(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open sample file '" + path + "'");
    return parse_sample(in);
}

void write_sample(std::ostream& out, const EmpiricalSample& s) {
    out << (s.labeled() ? "x,y\n" : "x\n");
    for (std::size_t i = 0; i < s.size(); ++i) {
        out << text::format_double(s.xs[i]);
        if (s.labeled()) out << ',' << (*s.ys)[i];
        out << '\n';
    }
}

std::optional<double> loss_lipschitz(LossKind loss) {
    if (loss == LossKind::Hinge) return 1.0;
    return std::nullopt;
}

double loss_value(LossKind loss, double score, int label) {
    switch (loss) {
        case LossKind::Hinge: return std::max(0.0, 1.0 - label * score);
        case LossKind::ZeroOne: {
            const int predicted = score >= 0.0 ? 1 : -1;  // sign(0) = +1
            return predicted == label ? 0.0 : 1.0;
        }
    }
    return 0.0;
}

double w1_empirical_1d(const EmpiricalSample& a, const EmpiricalSample& b) {
    if (a.xs.empty() || b.xs.empty()) throw Error(ErrorCode::InvalidArgument, "W1 needs nonempty samples");
    std::vector<double> x = a.xs, y = b.xs;
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const std::size_t n = x.size(), m = y.size();
    if (n == m) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) total += std::abs(x[i] - y[i]);
        return total / static_cast<double>(n);
    }
    // Integrate |F^-1 - G^-1| over (0, 1) in units of 1/(n m): the i-th atom of
    // x covers (i m, (i+1) m], the j-th atom of y covers (j n, (j+1) n].
    double total = 0.0;
    std::uint64_t pos = 0;
    std::size_t i = 0, j = 0;
    while (i < n && j < m) {
        const std::uint64_t end_x = (i + 1) * static_cast<std::uint64_t>(m);
        const std::uint64_t end_y = (j + 1) * static_cast<std::uint64_t>(n);
        const std::uint64_t next = std::min(end_x, end_y);
        total += static_cast<double>(next - pos) * std::abs(x[i] - y[j]);
        pos = next;
        if (end_x == next) ++i;
        if (end_y == next) ++j;
    }
    return total / (static_cast<double>(n) * static_cast<double>(m));
}

double w1_lp_oracle(const EmpiricalSample& a, const EmpiricalSample& b) {
    const std::size_t n = a.size(), m = b.size();
    if (n == 0 || m == 0) throw Error(ErrorCode::InvalidArgument, "W1 needs nonempty samples");
    if (n > kLpOracleMaxSize || m > kLpOracleMaxSize)
        throw Error(ErrorCode::Domain, "LP oracle is limited to " + std::to_string(kLpOracleMaxSize) + " points per side");

    auto cost = [&](std::size_t i, std::size_t j) { return std::abs(a.xs[i] - b.xs[j]); };

    // Masses scaled by n*m: every source ships m units, every sink takes n.
    struct Cell {
        std::size_t i, j;
        long long flow;
    };
    std::vector<Cell> basis;
    {
        std::vector<long long> supply(n, static_cast<long long>(m)), demand(m, static_cast<long long>(n));
        std::size_t i = 0, j = 0;
        for (;;) {
            const long long q = std::min(supply[i], demand[j]);
            basis.push_back({i, j, q});
            supply[i] -= q;
            demand[j] -= q;
            if (i == n - 1 && j == m - 1) break;
            if (supply[i] == 0 && i < n - 1) ++i;
            else ++j;
        }
    }

    std::vector<double> u(n), v(m);
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj(n + m);  // (neighbour node, basis index)
    const std::size_t max_iter = 200000;
    for (std::size_t iter = 0;; ++iter) {
        if (iter > max_iter) throw Error(ErrorCode::Domain, "transport simplex did not converge");
        for (auto& list : adj) list.clear();
        for (std::size_t k = 0; k < basis.size(); ++k) {
            adj[basis[k].i].push_back({n + basis[k].j, k});
            adj[n + basis[k].j].push_back({basis[k].i, k});
        }
        // Potentials u_i + v_j = c_ij on the spanning tree.
        std::vector<bool> seen(n + m, false);
        std::vector<std::size_t> stack{0};
        seen[0] = true;
        u[0] = 0.0;
        while (!stack.empty()) {
            const std::size_t node = stack.back();
            stack.pop_back();
            for (const auto& [other, k] : adj[node]) {
                if (seen[other]) continue;
                seen[other] = true;
                const double c = cost(basis[k].i, basis[k].j);
                if (other >= n) v[other - n] = c - u[node];
                else u[other] = c - v[node - n];
                stack.push_back(other);
            }
        }

        // Bland's rule: first cell (row-major) with negative reduced cost.
        std::vector<std::vector<bool>> in_basis(n, std::vector<bool>(m, false));
        for (const auto& cell : basis) in_basis[cell.i][cell.j] = true;
        std::size_t ei = n, ej = m;
        for (std::size_t i = 0; i < n && ei == n; ++i)
            for (std::size_t j = 0; j < m; ++j) {
                if (in_basis[i][j]) continue;
                const double reduced = cost(i, j) - u[i] - v[j];
                if (reduced < -1e-12 * (1.0 + std::abs(cost(i, j)))) {
                    ei = i;
                    ej = j;
                    break;
                }
            }
        if (ei == n) break;

        // Tree path from column ej back to row ei.
        std::vector<std::size_t> parent_edge(n + m, SIZE_MAX), parent(n + m, SIZE_MAX);
        std::queue<std::size_t> frontier;
        frontier.push(n + ej);
        std::vector<bool> visited(n + m, false);
        visited[n + ej] = true;
        while (!frontier.empty()) {
            const std::size_t node = frontier.front();
            frontier.pop();
            if (node == ei) break;
            for (const auto& [other, k] : adj[node]) {
                if (visited[other]) continue;
                visited[other] = true;
                parent[other] = node;
                parent_edge[other] = k;
                frontier.push(other);
            }
        }
        std::vector<std::size_t> path;  // basis indices from column ej to row ei
        for (std::size_t node = ei; node != n + ej; node = parent[node]) path.push_back(parent_edge[node]);
        std::reverse(path.begin(), path.end());

        // Odd positions along the cycle (first path edge, third, ...) lose flow.
        long long theta = -1;
        std::size_t leaving = SIZE_MAX;
        for (std::size_t p = 0; p < path.size(); p += 2) {
            const auto& cell = basis[path[p]];
            const bool better = theta < 0 || cell.flow < theta ||
                                (cell.flow == theta && (cell.i < basis[leaving].i ||
                                                        (cell.i == basis[leaving].i && cell.j < basis[leaving].j)));
            if (better) {
                theta = cell.flow;
                leaving = path[p];
            }
        }
        for (std::size_t p = 0; p < path.size(); ++p) basis[path[p]].flow += (p % 2 == 0) ? -theta : theta;
        basis[leaving] = Cell{ei, ej, theta};
    }

    double total = 0.0;
    for (const auto& cell : basis) total += static_cast<double>(cell.flow) * cost(cell.i, cell.j);
    return total / (static_cast<double>(n) * static_cast<double>(m));
}

namespace {

template <typename Score>
double mean_loss(Score&& score, const EmpiricalSample& s, LossKind loss) {
    if (!s.labeled()) throw Error(ErrorCode::InvalidArgument, "empirical risk needs labels");
    double total = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) total += loss_value(loss, score(s.xs[i]), (*s.ys)[i]);
    return total / static_cast<double>(s.size());
}

}  // namespace

double empirical_risk(const AffinePredictor& f, const EmpiricalSample& s, LossKind loss) {
    return mean_loss(f, s, loss);
}

double empirical_risk(const Network& f, const EmpiricalSample& s, LossKind loss) {
    if (f.input_dim() != 1 || f.output_dim() != 1)
        throw Error(ErrorCode::DimensionMismatch, "risk on 1-D samples needs a scalar network");
    return mean_loss([&f](double x) { return evaluate(f, std::span<const double>(&x, 1))[0]; }, s, loss);
}

RiskCertificate shift_certificate(double train_risk, double rho, double l_loss, double l_f,
                                  bool covariate_shift_assumed) {
    if (!std::isfinite(train_risk) || !std::isfinite(rho) || !std::isfinite(l_loss) || !std::isfinite(l_f))
        throw Error(ErrorCode::NonFinite, "certificate inputs must be finite");
    if (rho < 0.0) throw Error(ErrorCode::InvalidArgument, "rho must be nonnegative");
    if (l_loss < 0.0 || l_f < 0.0) throw Error(ErrorCode::InvalidArgument, "Lipschitz constants must be nonnegative");
    RiskCertificate cert;
    cert.train_risk = train_risk;
    cert.rho = rho;
    cert.sensitivity = l_loss * l_f;
    cert.certified_shift_risk = cert.train_risk + cert.rho * cert.sensitivity;
    cert.covariate_shift_assumed = covariate_shift_assumed;
    return cert;
}

const RiskCertificate& require_stamped(const RiskCertificate& cert) {
    if (cert.vacuous())
        throw Error(ErrorCode::Domain, "covariate shift is not assumed; the shift-risk bound does not apply");
    return cert;
}

std::string serialize(const RiskCertificate& cert) {
    std::ostringstream out;
    out << "train_risk=" << text::format_double(cert.train_risk) << '\n';
    out << "rho=" << text::format_double(cert.rho) << '\n';
    out << "sensitivity=" << text::format_double(cert.sensitivity) << '\n';
    out << "certified_shift_risk=" << text::format_double(cert.certified_shift_risk) << '\n';
    out << "covariate_shift_assumed=" << (cert.covariate_shift_assumed ? "true" : "false") << '\n';
    out << "status=" << (cert.vacuous() ? "vacuous" : "certified") << '\n';
    for (const auto& [j, l] : cert.component_sensitivity)
        out << "component." << j << ".lipschitz=" << text::format_double(l) << '\n';
    return out.str();
}

ShiftCheck empirical_shift_check(const AffinePredictor& f, const EmpiricalSample& train,
                                 const EmpiricalSample& target, LossKind loss, double l_f) {
    if (!train.labeled()) throw Error(ErrorCode::InvalidArgument, "training sample needs labels");
    if (train.size() != target.size())
        throw Error(ErrorCode::DimensionMismatch, "sorted coupling needs equal sample sizes");
    const auto l_loss = loss_lipschitz(loss);
    if (!l_loss) throw Error(ErrorCode::Domain, "loss has no Lipschitz constant");

    std::vector<std::size_t> src(train.size());
    std::iota(src.begin(), src.end(), 0);
    std::stable_sort(src.begin(), src.end(), [&](std::size_t p, std::size_t q) { return train.xs[p] < train.xs[q]; });
    std::vector<double> dst = target.xs;
    std::sort(dst.begin(), dst.end());

    double transported = 0.0;
    for (std::size_t k = 0; k < src.size(); ++k) transported += loss_value(loss, f(dst[k]), (*train.ys)[src[k]]);
    ShiftCheck check;
    check.lhs = transported / static_cast<double>(src.size());
    check.w1 = w1_empirical_1d(train, target);
    check.rhs = empirical_risk(f, train, loss) + check.w1 * (*l_loss) * l_f;
    return check;
}

ShiftFlipScenario shift_flip_construction(double rho, std::size_t n, std::uint64_t seed) {
    if (!(rho > 0.0) || !std::isfinite(rho)) throw Error(ErrorCode::InvalidArgument, "rho must be positive");
    if (n < 1) throw Error(ErrorCode::InvalidArgument, "n must be at least 1");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> xs(n), shifted(n);
    for (std::size_t i = 0; i < n; ++i) {
        xs[i] = unit(rng);
        shifted[i] = std::min(xs[i] + rho, 1.0);
    }
    ShiftFlipScenario s;
    s.train = EmpiricalSample(std::move(xs), std::vector<int>(n, 1));
    s.target = EmpiricalSample(std::move(shifted), std::vector<int>(n, -1));
    s.f = AffinePredictor{0.0, 0.0};
    s.risk_train = empirical_risk(s.f, s.train, LossKind::ZeroOne);
    s.risk_target = empirical_risk(s.f, s.target, LossKind::ZeroOne);
    s.w1 = w1_empirical_1d(s.train, s.target);
    s.covariate_shift_assumed = false;
    return s;
}

}  // namespace certkit
