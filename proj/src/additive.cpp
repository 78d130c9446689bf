#include "certkit/additive.hpp"

#include "certkit/error.hpp"
#include "text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>

namespace certkit {

namespace {

bool finite_all(const std::vector<double>& v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double poly_eval(const std::vector<double>& c, double t) {
    double acc = 0.0;
    for (std::size_t k = c.size(); k-- > 0;) acc = acc * t + c[k];
    return acc;
}

double poly_coeff(const std::vector<double>& c, std::size_t k) { return k < c.size() ? c[k] : 0.0; }

double poly_derivative(const std::vector<double>& c, double t) {
    return poly_coeff(c, 1) + 2.0 * poly_coeff(c, 2) * t + 3.0 * poly_coeff(c, 3) * t * t;
}

// Segments of a piecewise-linear function with positive-length overlap with
// [lo, hi], as (slope, overlap_lo, overlap_hi).
struct Segment {
    double slope, lo, hi;
};

std::vector<Segment> overlapping_segments(const PiecewiseLinear& p, Interval iv) {
    std::vector<Segment> out;
    for (std::size_t k = 0; k + 1 < p.knots.size(); ++k) {
        const double a = std::max(iv.lo, p.knots[k]);
        const double b = std::min(iv.hi, p.knots[k + 1]);
        if (b > a)
            out.push_back({(p.values[k + 1] - p.values[k]) / (p.knots[k + 1] - p.knots[k]), a, b});
    }
    return out;
}

void check_interval(const UnivariateComponent& g, Interval iv) {
    if (!(iv.lo <= iv.hi)) throw Error(ErrorCode::InvalidArgument, "interval has lo > hi");
    if (!g.domain().contains(iv)) throw Error(ErrorCode::Domain, "interval lies outside the component domain");
}

}  // namespace

UnivariateComponent::UnivariateComponent(PiecewiseLinear pwl) : kind_(std::move(pwl)) {
    const auto& p = std::get<PiecewiseLinear>(kind_);
    if (p.knots.size() < 2 || p.knots.size() != p.values.size())
        throw Error(ErrorCode::InvalidArgument, "piecewise-linear component needs >= 2 knots with matching values");
    if (!finite_all(p.knots) || !finite_all(p.values)) throw Error(ErrorCode::NonFinite, "component values must be finite");
    for (std::size_t k = 0; k + 1 < p.knots.size(); ++k)
        if (!(p.knots[k] < p.knots[k + 1])) throw Error(ErrorCode::InvalidArgument, "knots must be strictly increasing");
    domain_ = {p.knots.front(), p.knots.back()};
}

UnivariateComponent::UnivariateComponent(Polynomial poly, Interval domain) : kind_(std::move(poly)), domain_(domain) {
    const auto& c = std::get<Polynomial>(kind_).coeffs;
    if (c.empty() || c.size() > 4) throw Error(ErrorCode::InvalidArgument, "polynomial degree must be 0..3");
    if (!finite_all(c)) throw Error(ErrorCode::NonFinite, "polynomial coefficients must be finite");
    if (!std::isfinite(domain.lo) || !std::isfinite(domain.hi) || domain.lo > domain.hi)
        throw Error(ErrorCode::InvalidArgument, "invalid polynomial domain");
}

double UnivariateComponent::operator()(double t) const {
    t = std::clamp(t, domain_.lo, domain_.hi);
    if (const auto* p = pwl()) {
        auto it = std::upper_bound(p->knots.begin(), p->knots.end(), t);
        std::size_t k = it == p->knots.begin() ? 0 : static_cast<std::size_t>(it - p->knots.begin()) - 1;
        if (k + 1 >= p->knots.size()) return p->values.back();
        const double w = (t - p->knots[k]) / (p->knots[k + 1] - p->knots[k]);
        return p->values[k] + w * (p->values[k + 1] - p->values[k]);
    }
    return poly_eval(poly()->coeffs, t);
}

double UnivariateComponent::derivative(double t) const {
    if (const auto* p = pwl()) {
        auto it = std::upper_bound(p->knots.begin(), p->knots.end(), t);
        std::size_t k = it == p->knots.begin() ? 0 : static_cast<std::size_t>(it - p->knots.begin()) - 1;
        k = std::min(k, p->knots.size() - 2);
        return (p->values[k + 1] - p->values[k]) / (p->knots[k + 1] - p->knots[k]);
    }
    return poly_derivative(poly()->coeffs, t);
}

UnivariateComponent UnivariateComponent::shifted(double offset) const {
    if (const auto* p = pwl()) {
        PiecewiseLinear q = *p;
        for (auto& v : q.values) v -= offset;
        return UnivariateComponent(std::move(q));
    }
    Polynomial q = *poly();
    q.coeffs[0] -= offset;
    return UnivariateComponent(std::move(q), domain_);
}

double component_integral(const UnivariateComponent& g, Interval iv) {
    check_interval(g, iv);
    if (iv.lo == iv.hi) return g(iv.lo);
    const double width = iv.hi - iv.lo;
    if (const auto* p = g.pwl()) {
        double area = 0.0;
        for (const auto& s : overlapping_segments(*p, iv)) area += 0.5 * (g(s.lo) + g(s.hi)) * (s.hi - s.lo);
        return area / width;
    }
    const auto& c = g.poly()->coeffs;
    auto antiderivative = [&c](double t) {
        double acc = 0.0;
        for (std::size_t k = c.size(); k-- > 0;) acc = acc * t + c[k] / static_cast<double>(k + 1);
        return acc * t;
    };
    return (antiderivative(iv.hi) - antiderivative(iv.lo)) / width;
}

double component_lipschitz(const UnivariateComponent& g, Interval iv) {
    check_interval(g, iv);
    if (const auto* p = g.pwl()) {
        if (iv.lo == iv.hi) return std::abs(g.derivative(iv.lo));
        double best = 0.0;
        for (const auto& s : overlapping_segments(*p, iv)) best = std::max(best, std::abs(s.slope));
        return best;
    }
    const auto& c = g.poly()->coeffs;
    double best = std::max(std::abs(poly_derivative(c, iv.lo)), std::abs(poly_derivative(c, iv.hi)));
    const double c2 = poly_coeff(c, 2), c3 = poly_coeff(c, 3);
    if (c3 != 0.0) {
        const double t = -c2 / (3.0 * c3);  // g'' = 0
        if (t > iv.lo && t < iv.hi) best = std::max(best, std::abs(poly_derivative(c, t)));
    }
    return best;
}

namespace {

// Stationary points of a cubic/quadratic strictly inside the interval.
std::vector<double> critical_points(const std::vector<double>& c, Interval iv) {
    std::vector<double> roots;
    const double a = 3.0 * poly_coeff(c, 3), b = 2.0 * poly_coeff(c, 2), k = poly_coeff(c, 1);
    if (a != 0.0) {
        const double disc = b * b - 4.0 * a * k;
        if (disc >= 0.0) {
            const double sq = std::sqrt(disc);
            roots = {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)};
        }
    } else if (b != 0.0) {
        roots = {-k / b};
    }
    std::vector<double> inside;
    for (double r : roots)
        if (r > iv.lo && r < iv.hi) inside.push_back(r);
    return inside;
}

}  // namespace

std::pair<double, double> component_range(const UnivariateComponent& g, Interval iv) {
    check_interval(g, iv);
    std::vector<double> probes{iv.lo, iv.hi};
    if (const auto* p = g.pwl()) {
        for (double t : p->knots)
            if (t > iv.lo && t < iv.hi) probes.push_back(t);
    } else {
        for (double t : critical_points(g.poly()->coeffs, iv)) probes.push_back(t);
    }
    double lo = g(probes[0]), hi = lo;
    for (double t : probes) {
        lo = std::min(lo, g(t));
        hi = std::max(hi, g(t));
    }
    return {lo, hi};
}

const char* to_string(Monotonicity m) {
    switch (m) {
        case Monotonicity::Increasing: return "increasing";
        case Monotonicity::Decreasing: return "decreasing";
        case Monotonicity::Constant: return "constant";
        case Monotonicity::None: return "none";
    }
    return "?";
}

MonotoneCheck component_monotonicity(const UnivariateComponent& g, Interval iv) {
    check_interval(g, iv);
    if (iv.lo == iv.hi) return {Monotonicity::Constant, std::nullopt};
    std::optional<double> up, down;  // a point with positive / negative slope
    if (const auto* p = g.pwl()) {
        for (const auto& s : overlapping_segments(*p, iv)) {
            const double mid = 0.5 * (s.lo + s.hi);
            if (s.slope > 0.0 && !up) up = mid;
            if (s.slope < 0.0 && !down) down = mid;
        }
    } else {
        // g' is at most quadratic: its extremes on the interval sit at the
        // endpoints or at the vertex.
        const auto& c = g.poly()->coeffs;
        std::vector<double> probes{iv.lo, iv.hi};
        if (poly_coeff(c, 3) != 0.0) {
            const double t = -poly_coeff(c, 2) / (3.0 * poly_coeff(c, 3));
            if (t > iv.lo && t < iv.hi) probes.push_back(t);
        }
        for (double t : probes) {
            const double d = poly_derivative(c, t);
            if (d > 0.0 && !up) up = t;
            if (d < 0.0 && !down) down = t;
        }
    }
    if (up && down) return {Monotonicity::None, std::make_pair(*up, *down)};
    if (up) return {Monotonicity::Increasing, std::nullopt};
    if (down) return {Monotonicity::Decreasing, std::nullopt};
    return {Monotonicity::Constant, std::nullopt};
}

AdditiveModel::AdditiveModel(double constant, std::vector<Interval> reference, std::vector<AdditiveTerm> terms)
    : constant_(constant), reference_(std::move(reference)), terms_(std::move(terms)) {
    if (!std::isfinite(constant_)) throw Error(ErrorCode::NonFinite, "model constant must be finite");
    if (reference_.empty()) throw Error(ErrorCode::InvalidArgument, "model dimension must be positive");
    for (const auto& r : reference_)
        if (!std::isfinite(r.lo) || !std::isfinite(r.hi) || !(r.lo < r.hi))
            throw Error(ErrorCode::InvalidArgument, "reference intervals must be finite with lo < hi");
    std::sort(terms_.begin(), terms_.end(),
              [](const AdditiveTerm& a, const AdditiveTerm& b) { return a.coordinate < b.coordinate; });
    for (std::size_t k = 0; k < terms_.size(); ++k) {
        const auto j = terms_[k].coordinate;
        if (j >= reference_.size()) throw Error(ErrorCode::DimensionMismatch, "component coordinate out of range");
        if (k > 0 && terms_[k - 1].coordinate == j)
            throw Error(ErrorCode::InvalidArgument, "duplicate component for coordinate " + std::to_string(j));
        if (!terms_[k].g.domain().contains(reference_[j]))
            throw Error(ErrorCode::Domain, "component " + std::to_string(j) + " does not cover its reference interval");
    }
}

const UnivariateComponent* AdditiveModel::component(std::size_t coordinate) const {
    for (const auto& t : terms_)
        if (t.coordinate == coordinate) return &t.g;
    return nullptr;
}

double AdditiveModel::operator()(std::span<const double> x) const {
    if (x.size() != dim()) throw Error(ErrorCode::DimensionMismatch, "input length does not match model dimension");
    double v = constant_;
    for (const auto& t : terms_) v += t.g(x[t.coordinate]);
    return v;
}

bool AdditiveModel::is_centered(double tol) const {
    for (const auto& t : terms_)
        if (std::abs(component_integral(t.g, reference_[t.coordinate])) > tol) return false;
    return true;
}

AdditiveModel parse_additive_model(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    auto next = [&]() -> bool {
        while (std::getline(in, line)) {
            ++line_no;
            if (!text::trim(line).empty()) return true;
        }
        return false;
    };
    auto fail = [&](const std::string& msg) -> void {
        throw Error(ErrorCode::Parse, "line " + std::to_string(line_no) + ": " + msg);
    };
    auto number = [&](std::string_view tok) {
        double v = 0.0;
        if (!text::parse_double(tok, v)) fail("malformed number '" + std::string(tok) + "'");
        if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "line " + std::to_string(line_no) + ": non-finite value");
        return v;
    };
    auto index = [&](std::string_view tok) {
        long long v = 0;
        if (!text::parse_int(tok, v) || v < 0) fail("malformed index '" + std::string(tok) + "'");
        return static_cast<std::size_t>(v);
    };

    if (!next() || text::trim(line) != "additive v1") fail("expected header 'additive v1'");
    if (!next()) fail("expected 'dim d'");
    auto toks = text::split_ws(line);
    if (toks.size() != 2 || toks[0] != "dim") fail("expected 'dim d'");
    const std::size_t d = index(toks[1]);
    if (d == 0) fail("dimension must be positive");
    if (!next()) fail("expected 'const c'");
    toks = text::split_ws(line);
    if (toks.size() != 2 || toks[0] != "const") fail("expected 'const c'");
    const double c = number(toks[1]);

    std::vector<std::optional<Interval>> refs(d);
    std::map<std::size_t, PiecewiseLinear> pwls;
    std::map<std::size_t, Polynomial> polys;
    auto claim = [&](std::size_t j) {
        if (j >= d) fail("coordinate " + std::to_string(j) + " out of range");
        if (pwls.count(j) || polys.count(j)) fail("duplicate component for coordinate " + std::to_string(j));
    };
    while (next()) {
        toks = text::split_ws(line);
        if (toks[0] == "ref") {
            if (toks.size() != 4) fail("expected 'ref j lo hi'");
            const std::size_t j = index(toks[1]);
            if (j >= d) fail("coordinate out of range");
            refs[j] = Interval{number(toks[2]), number(toks[3])};
        } else if (toks[0] == "pwl") {
            if (toks.size() != 3) fail("expected 'pwl j n'");
            const std::size_t j = index(toks[1]);
            claim(j);
            const std::size_t n = index(toks[2]);
            PiecewiseLinear p;
            for (std::size_t k = 0; k < n; ++k) {
                if (!next()) fail("missing knot line");
                const auto kv = text::split_ws(line);
                if (kv.size() != 2) fail("expected 't v'");
                p.knots.push_back(number(kv[0]));
                p.values.push_back(number(kv[1]));
            }
            pwls[j] = std::move(p);
        } else if (toks[0] == "poly") {
            if (toks.size() < 4) fail("expected 'poly j k c0 ... ck'");
            const std::size_t j = index(toks[1]);
            claim(j);
            const std::size_t k = index(toks[2]);
            if (k > 3) fail("polynomial degree must be at most 3");
            if (toks.size() != k + 4) fail("expected " + std::to_string(k + 1) + " coefficients");
            Polynomial p;
            for (std::size_t i = 0; i <= k; ++i) p.coeffs.push_back(number(toks[3 + i]));
            polys[j] = std::move(p);
        } else {
            fail("unknown record '" + std::string(toks[0]) + "'");
        }
    }
    std::vector<Interval> reference;
    for (std::size_t j = 0; j < d; ++j) {
        if (!refs[j]) throw Error(ErrorCode::Parse, "missing 'ref' line for coordinate " + std::to_string(j));
        reference.push_back(*refs[j]);
    }
    std::vector<AdditiveTerm> terms;
    for (auto& [j, p] : pwls) terms.push_back({j, UnivariateComponent(std::move(p))});
    for (auto& [j, p] : polys) terms.push_back({j, UnivariateComponent(std::move(p), reference[j])});
    return AdditiveModel(c, std::move(reference), std::move(terms));
}

AdditiveModel load_additive_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::Io, "cannot open model file '" + path + "'");
    return parse_additive_model(in);
}

void write_additive_model(std::ostream& out, const AdditiveModel& m) {
    out << "additive v1\n";
    out << "dim " << m.dim() << '\n';
    out << "const " << text::format_double(m.constant()) << '\n';
    for (std::size_t j = 0; j < m.dim(); ++j)
        out << "ref " << j << ' ' << text::format_double(m.reference()[j].lo) << ' '
            << text::format_double(m.reference()[j].hi) << '\n';
    for (const auto& t : m.terms()) {
        if (const auto* p = t.g.pwl()) {
            out << "pwl " << t.coordinate << ' ' << p->knots.size() << '\n';
            for (std::size_t k = 0; k < p->knots.size(); ++k)
                out << text::format_double(p->knots[k]) << ' ' << text::format_double(p->values[k]) << '\n';
        } else {
            const auto& c = t.g.poly()->coeffs;
            out << "poly " << t.coordinate << ' ' << (c.size() - 1);
            for (double v : c) out << ' ' << text::format_double(v);
            out << '\n';
        }
    }
}

AdditiveModel center_model(const AdditiveModel& m) {
    double c = m.constant();
    std::vector<AdditiveTerm> terms;
    for (const auto& t : m.terms()) {
        const double mean = component_integral(t.g, m.reference()[t.coordinate]);
        terms.push_back({t.coordinate, t.g.shifted(mean)});
        c += mean;
    }
    return AdditiveModel(c, m.reference(), std::move(terms));
}

namespace {

Interval box_interval(const AdditiveModel& m, const BoxSet& box, std::size_t j) {
    if (box.dim() != m.dim()) throw Error(ErrorCode::DimensionMismatch, "box dimension does not match the model");
    return {box.lo(j), box.hi(j)};
}

}  // namespace

double additive_lipschitz_l1(const AdditiveModel& m, const BoxSet& box) {
    if (box.dim() != m.dim()) throw Error(ErrorCode::DimensionMismatch, "box dimension does not match the model");
    double total = 0.0;
    for (const auto& t : m.terms()) total += component_lipschitz(t.g, box_interval(m, box, t.coordinate));
    return total;
}

std::pair<double, double> product_sup_inf(const AdditiveModel& m, const BoxSet& box) {
    if (box.dim() != m.dim()) throw Error(ErrorCode::DimensionMismatch, "box dimension does not match the model");
    double lo = m.constant(), hi = m.constant();
    for (const auto& t : m.terms()) {
        const auto [glo, ghi] = component_range(t.g, box_interval(m, box, t.coordinate));
        lo += glo;
        hi += ghi;
    }
    return {lo, hi};
}

EndpointCertificate monotone_endpoint_certificate(const AdditiveModel& m, const BoxSet& box) {
    if (box.dim() != m.dim()) throw Error(ErrorCode::DimensionMismatch, "box dimension does not match the model");
    EndpointCertificate cert;
    cert.vertex = box.hi();
    for (const auto& t : m.terms()) {
        const auto check = component_monotonicity(t.g, box_interval(m, box, t.coordinate));
        if (check.direction == Monotonicity::None)
            throw Error(ErrorCode::NonMonotone,
                        "component " + std::to_string(t.coordinate) + " is not monotone: slope is positive at " +
                            text::format_double(check.sign_change->first) + " and negative at " +
                            text::format_double(check.sign_change->second));
        if (check.direction == Monotonicity::Decreasing) cert.vertex[t.coordinate] = box.lo(t.coordinate);
        cert.directions.emplace_back(t.coordinate, check.direction);
    }
    cert.value = m(cert.vertex);
    return cert;
}

IdentifiabilityResidual identifiability_residual(const AdditiveModel& a, const AdditiveModel& b,
                                                 std::size_t grid_per_dim) {
    if (a.dim() != b.dim()) throw Error(ErrorCode::DimensionMismatch, "models differ in dimension");
    for (std::size_t j = 0; j < a.dim(); ++j)
        if (a.reference()[j].lo != b.reference()[j].lo || a.reference()[j].hi != b.reference()[j].hi)
            throw Error(ErrorCode::DimensionMismatch, "models differ in reference interval " + std::to_string(j));
    if (!a.is_centered() || !b.is_centered())
        throw Error(ErrorCode::NotCentered, "identifiability needs centered representations");
    if (grid_per_dim < 2) throw Error(ErrorCode::InvalidArgument, "grid needs at least 2 points per dimension");

    IdentifiabilityResidual r{std::abs(a.constant() - b.constant()), 0.0};
    for (std::size_t j = 0; j < a.dim(); ++j) {
        const auto* ga = a.component(j);
        const auto* gb = b.component(j);
        if (!ga && !gb) continue;
        const auto& iv = a.reference()[j];
        for (std::size_t k = 0; k < grid_per_dim; ++k) {
            const double t = iv.lo + (iv.hi - iv.lo) * static_cast<double>(k) / static_cast<double>(grid_per_dim - 1);
            const double diff = (ga ? (*ga)(t) : 0.0) - (gb ? (*gb)(t) : 0.0);
            r.max_component_diff = std::max(r.max_component_diff, std::abs(diff));
        }
    }
    return r;
}

RiskCertificate additive_shift_certificate(const AdditiveModel& m, const BoxSet& box, double rho, double l_loss,
                                           double train_risk, bool covariate_shift_assumed) {
    if (!m.is_centered()) throw Error(ErrorCode::NotCentered, "additive certificate needs a centered model");
    if (box.dim() != m.dim()) throw Error(ErrorCode::DimensionMismatch, "box dimension does not match the model");
    std::vector<std::pair<std::size_t, double>> parts;
    double l_f = 0.0;
    for (const auto& t : m.terms()) {
        const double l = component_lipschitz(t.g, box_interval(m, box, t.coordinate));
        parts.emplace_back(t.coordinate, l);
        l_f += l;
    }
    auto cert = shift_certificate(train_risk, rho, l_loss, l_f, covariate_shift_assumed);
    cert.component_sensitivity = std::move(parts);
    return cert;
}

BoxSet reference_box(const AdditiveModel& m) {
    std::vector<double> lo, hi;
    for (const auto& r : m.reference()) {
        lo.push_back(r.lo);
        hi.push_back(r.hi);
    }
    return BoxSet(std::move(lo), std::move(hi));
}

}  // namespace certkit
