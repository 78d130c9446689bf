#include "certkit/report.hpp"

#include "certkit/additive.hpp"
#include "certkit/bounds.hpp"
#include "certkit/complete.hpp"
#include "certkit/network.hpp"
#include "certkit/transport.hpp"
#include "text.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <random>
#include <set>
#include <sstream>

#ifndef CERTKIT_ASSET_DIR
#define CERTKIT_ASSET_DIR "assets"
#endif

namespace certkit {

using json = nlohmann::ordered_json;

const std::vector<std::string>& job_commands() {
    static const std::vector<std::string> commands{"verify",       "verify-complete", "w1",
                                                   "shift-cert",   "additive",        "sawtooth-demo",
                                                   "attack-demo",  "shift-flip-demo", "reproduce"};
    return commands;
}

int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return 3;
        case ErrorCode::Io: return 4;
        case ErrorCode::Parse:
        case ErrorCode::NonFinite:
        case ErrorCode::DimensionMismatch: return 5;
        case ErrorCode::Domain:
        case ErrorCode::NonMonotone:
        case ErrorCode::NotCentered: return 6;
    }
    return 7;
}

std::string error_record(ErrorCode code, const std::string& message) {
    std::string clean;
    for (char ch : message) {
        if (ch == '\n' || ch == '\r') clean += ' ';
        else if (ch == '"' || ch == '\\') (clean += '\\') += ch;
        else clean += ch;
    }
    return std::string("error code=") + error_code_name(code) + " exit=" + std::to_string(exit_code_for(code)) +
           " message=\"" + clean + "\"";
}

namespace {

// Non-finite doubles have no JSON spelling; they travel as strings.
json num(double v) {
    if (std::isfinite(v)) return v;
    return text::format_double(v);
}

json vec(const std::vector<double>& v) {
    json out = json::array();
    for (double x : v) out.push_back(num(x));
    return out;
}

std::string scalar_text(const json& j) {
    switch (j.type()) {
        case json::value_t::number_float: return text::format_double(j.get<double>());
        case json::value_t::number_integer: return std::to_string(j.get<std::int64_t>());
        case json::value_t::number_unsigned: return std::to_string(j.get<std::uint64_t>());
        case json::value_t::boolean: return j.get<bool>() ? "true" : "false";
        case json::value_t::string: return j.get<std::string>();
        case json::value_t::null: return "null";
        default: return j.dump();
    }
}

void flatten(const json& j, const std::string& key, std::ostream& out) {
    if (j.is_object()) {
        for (const auto& [k, v] : j.items()) flatten(v, key.empty() ? k : key + "." + k, out);
    } else if (j.is_array() && std::none_of(j.begin(), j.end(), [](const json& e) { return e.is_structured(); })) {
        out << key << '=';
        for (std::size_t i = 0; i < j.size(); ++i) out << (i ? "," : "") << scalar_text(j[i]);
        out << '\n';
    } else if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], key + "." + std::to_string(i), out);
    } else {
        out << key << '=' << scalar_text(j) << '\n';
    }
}

}  // namespace

std::string Report::to_text() const {
    std::ostringstream out;
    out << "command=" << command << '\n';
    for (const auto& [k, v] : config) out << "config." << k << '=' << v << '\n';
    flatten(result, "", out);
    out << "status=" << status << '\n';
    out << "exit_code=" << exit_code << '\n';
    out << "toolkit_version=" << kToolkitVersion << '\n';
    out << "deterministic=" << (deterministic ? "true" : "false") << '\n';
    return out.str();
}

std::string Report::to_json() const {
    json j;
    j["command"] = command;
    j["config"] = json::object();
    for (const auto& [k, v] : config) j["config"][k] = v;
    j["result"] = result;
    j["status"] = status;
    j["exit_code"] = exit_code;
    j["toolkit_version"] = kToolkitVersion;
    j["deterministic"] = deterministic;
    return j.dump(2) + "\n";
}

namespace {

// Typed access to the option map; remembers which keys were consumed so
// leftovers can be rejected.
class Options {
public:
    explicit Options(const JobConfig& c) : c_(c) {}

    bool has(const std::string& k) const { return c_.has(k); }

    std::string str(const std::string& k) {
        used_.insert(k);
        auto it = c_.options.find(k);
        if (it == c_.options.end())
            throw Error(ErrorCode::InvalidArgument, "command '" + c_.command + "' requires --" + k);
        return it->second;
    }
    std::string str(const std::string& k, const std::string& fallback) { return has(k) ? str(k) : fallback; }

    double real(const std::string& k) {
        const auto s = str(k);
        double v = 0.0;
        if (!text::parse_double(s, v) || !std::isfinite(v))
            throw Error(ErrorCode::InvalidArgument, "--" + k + " expects a finite number, got '" + s + "'");
        return v;
    }
    double real(const std::string& k, double fallback) { return has(k) ? real(k) : fallback; }

    double positive(const std::string& k, double fallback) {
        const double v = real(k, fallback);
        if (!(v > 0.0)) throw Error(ErrorCode::InvalidArgument, "--" + k + " must be positive");
        return v;
    }

    std::uint64_t count(const std::string& k, std::uint64_t fallback) {
        if (!has(k)) return fallback;
        const auto s = str(k);
        long long v = 0;
        if (!text::parse_int(s, v) || v < 0)
            throw Error(ErrorCode::InvalidArgument, "--" + k + " expects a nonnegative integer, got '" + s + "'");
        return static_cast<std::uint64_t>(v);
    }

    bool flag(const std::string& k) {
        if (!has(k)) return false;
        const auto s = str(k);
        if (s == "true" || s == "1") return true;
        if (s == "false" || s == "0") return false;
        throw Error(ErrorCode::InvalidArgument, "--" + k + " expects true or false");
    }

    void reject_unused() const {
        for (const auto& [k, v] : c_.options)
            if (!used_.count(k))
                throw Error(ErrorCode::InvalidArgument, "unknown option --" + k + " for command '" + c_.command + "'");
    }

private:
    const JobConfig& c_;
    std::set<std::string> used_;
};

std::vector<double> parse_numbers(std::string_view body, bool allow_header) {
    std::vector<double> out;
    bool first = true;
    std::string_view rest = body;
    while (!rest.empty()) {
        const auto nl = rest.find('\n');
        const auto line = text::trim(rest.substr(0, nl));
        rest = nl == std::string_view::npos ? std::string_view{} : rest.substr(nl + 1);
        if (line.empty()) continue;
        std::vector<double> row;
        bool ok = true;
        for (auto tok : text::split(line, ',')) {
            for (auto part : text::split_ws(tok)) {
                double v = 0.0;
                if (!text::parse_double(part, v)) ok = false;
                else row.push_back(v);
            }
        }
        if (!ok && first && allow_header) {
            first = false;
            continue;
        }
        if (!ok) throw Error(ErrorCode::Parse, "malformed number list '" + std::string(line) + "'");
        first = false;
        out.insert(out.end(), row.begin(), row.end());
    }
    for (double v : out)
        if (!std::isfinite(v)) throw Error(ErrorCode::NonFinite, "vector entries must be finite");
    return out;
}

// A vector given either as a file (CSV/whitespace, optional header) or inline
// as a comma list.
std::vector<double> read_vector(const std::string& value) {
    std::ifstream in(value);
    if (in) {
        std::stringstream buf;
        buf << in.rdbuf();
        auto v = parse_numbers(buf.str(), true);
        if (v.empty()) throw Error(ErrorCode::Parse, "no numbers in '" + value + "'");
        return v;
    }
    try {
        auto v = parse_numbers(value, false);
        if (!v.empty()) return v;
    } catch (const Error&) {
    }
    throw Error(ErrorCode::Io, "cannot open '" + value + "' and it is not a number list");
}

BoxSet read_box(Options& o) {
    if (o.has("lo") || o.has("hi")) {
        auto lo = read_vector(o.str("lo"));
        auto hi = read_vector(o.str("hi"));
        if (lo.size() != hi.size()) throw Error(ErrorCode::DimensionMismatch, "--lo and --hi differ in length");
        return BoxSet(std::move(lo), std::move(hi));
    }
    const auto center = read_vector(o.str("center"));
    const double r = o.real("radius");
    if (r < 0.0) throw Error(ErrorCode::InvalidArgument, "--radius must be nonnegative");
    return BoxSet::around(center, r);
}

struct NamedSpec {
    std::string name;
    LinearSpec spec;
};

std::vector<NamedSpec> read_specs(Options& o, const Network& net) {
    std::vector<NamedSpec> specs;
    if (o.has("target-class")) {
        const auto t = o.count("target-class", 0);
        if (t >= net.output_dim()) throw Error(ErrorCode::InvalidArgument, "--target-class out of range");
        for (std::size_t k = 0; k < net.output_dim(); ++k)
            if (k != t)
                specs.push_back({"margin_" + std::to_string(k) + "_vs_" + std::to_string(t),
                                 LinearSpec::margin(net.output_dim(), t, k)});
        return specs;
    }
    LinearSpec s{read_vector(o.str("spec")), o.real("beta", 0.0)};
    if (s.a.size() != net.output_dim())
        throw Error(ErrorCode::DimensionMismatch, "--spec length does not match the network output");
    specs.push_back({"spec", std::move(s)});
    return specs;
}

json network_summary(const Network& net) {
    json j;
    j["inputs"] = net.input_dim();
    j["outputs"] = net.output_dim();
    j["depth"] = net.depth();
    j["hidden_units"] = net.hidden_units();
    j["params"] = param_count(net);
    return j;
}

IntermediateBounds read_intermediate(Options& o) {
    const auto s = o.str("intermediate", "linear");
    if (s == "linear") return IntermediateBounds::BackwardLinear;
    if (s == "interval") return IntermediateBounds::Interval;
    throw Error(ErrorCode::InvalidArgument, "--intermediate must be linear or interval");
}

void set_outcome(Report& r, const std::string& status, int code) {
    r.status = status;
    r.exit_code = code;
}

Report run_verify(Options& o, Report r) {
    const auto net = load_network(o.str("net"));
    const auto box = read_box(o);
    if (box.dim() != net.input_dim()) throw Error(ErrorCode::DimensionMismatch, "box does not match network input");
    const auto specs = read_specs(o, net);
    const auto method = o.str("method", "linear");
    if (method != "linear" && method != "interval")
        throw Error(ErrorCode::InvalidArgument, "--method must be linear or interval");
    BoundOptions bo;
    bo.intermediate = read_intermediate(o);
    const auto threads = static_cast<unsigned>(std::max<std::uint64_t>(1, o.count("threads", 1)));

    std::vector<Certificate> certs;
    if (method == "interval") {
        for (const auto& s : specs) certs.push_back(interval_output_bounds(net, box, s.spec));
    } else {
        std::vector<LinearSpec> plain;
        for (const auto& s : specs) plain.push_back(s.spec);
        certs = linear_output_bounds_batch(net, box, plain, threads, bo);
    }

    r.result["network"] = network_summary(net);
    r.result["method"] = to_string(certs.front().method);
    r.result["K"] = certs.front().passes;
    json list = json::array();
    std::uint64_t ops = 0;
    bool all_safe = true, any_unsafe = false;
    for (std::size_t i = 0; i < certs.size(); ++i) {
        const auto& c = certs[i];
        json e;
        e["name"] = specs[i].name;
        e["upper"] = num(c.upper);
        e["lower"] = num(c.lower);
        e["verdict"] = to_string(c.verdict);
        if (c.witness) e["witness"] = vec(*c.witness);
        e["wall_ops"] = c.wall_ops;
        list.push_back(std::move(e));
        ops += c.wall_ops;
        all_safe = all_safe && c.verdict == Verdict::Safe;
        any_unsafe = any_unsafe || c.verdict == Verdict::Unsafe;
    }
    r.result["certificates"] = std::move(list);
    r.result["wall_ops"] = ops;
    if (any_unsafe) set_outcome(r, "unsafe", 1);
    else if (all_safe) set_outcome(r, "safe", 0);
    else set_outcome(r, "unknown", 2);
    return r;
}

Report run_verify_complete(Options& o, Report r) {
    const auto net = load_network(o.str("net"));
    const auto box = read_box(o);
    if (box.dim() != net.input_dim()) throw Error(ErrorCode::DimensionMismatch, "box does not match network input");
    const auto specs = read_specs(o, net);
    const auto budget = o.count("budget", 100000);
    const double gap = o.positive("gap-tol", 1e-9);
    BabOptions bo;
    bo.threads = static_cast<unsigned>(std::max<std::uint64_t>(1, o.count("threads", 1)));
    bo.bounds.intermediate = read_intermediate(o);

    r.result["network"] = network_summary(net);
    json list = json::array();
    bool all_safe = true, any_unsafe = false;
    std::uint64_t nodes = 0;
    for (const auto& s : specs) {
        const auto res = verify_complete(net, box, s.spec, budget, gap, bo);
        json e;
        e["name"] = s.name;
        e["verdict"] = to_string(res.verdict);
        e["lower"] = num(res.lower);
        e["upper"] = num(res.upper);
        e["nodes_expanded"] = res.nodes_expanded;
        if (res.witness) e["witness"] = vec(*res.witness);
        list.push_back(std::move(e));
        nodes += res.nodes_expanded;
        all_safe = all_safe && res.verdict == BabVerdict::Safe;
        any_unsafe = any_unsafe || res.verdict == BabVerdict::Unsafe;
    }
    r.result["results"] = std::move(list);
    r.result["nodes_expanded"] = nodes;
    if (any_unsafe) set_outcome(r, "unsafe", 1);
    else if (all_safe) set_outcome(r, "safe", 0);
    else set_outcome(r, "budget", 2);
    return r;
}

Report run_w1(Options& o, Report r) {
    const auto a = load_sample(o.str("source"));
    const auto b = load_sample(o.str("target"));
    r.result["n_source"] = a.size();
    r.result["n_target"] = b.size();
    r.result["w1"] = num(w1_empirical_1d(a, b));
    if (o.flag("oracle")) r.result["w1_lp"] = num(w1_lp_oracle(a, b));
    set_outcome(r, "ok", 0);
    return r;
}

LossKind read_loss(Options& o) {
    const auto s = o.str("loss", "hinge");
    if (s == "hinge") return LossKind::Hinge;
    if (s == "zero-one") return LossKind::ZeroOne;
    throw Error(ErrorCode::InvalidArgument, "--loss must be hinge or zero-one");
}

json certificate_json(const RiskCertificate& c) {
    json j;
    j["train_risk"] = num(c.train_risk);
    j["rho"] = num(c.rho);
    j["sensitivity"] = num(c.sensitivity);
    j["certified_shift_risk"] = num(c.certified_shift_risk);
    j["covariate_shift_assumed"] = c.covariate_shift_assumed;
    j["status"] = c.vacuous() ? "vacuous" : "certified";
    for (const auto& [k, l] : c.component_sensitivity)
        j["component"][std::to_string(k)]["lipschitz"] = num(l);
    return j;
}

Report run_shift_cert(Options& o, Report r) {
    const auto train = load_sample(o.str("train"));
    const auto loss = read_loss(o);
    const auto l_loss = loss_lipschitz(loss);
    if (!l_loss) throw Error(ErrorCode::Domain, "the 0-1 loss has no Lipschitz constant; use --loss hinge");

    std::function<double(const EmpiricalSample&)> risk;
    double l_f = 0.0;
    if (o.has("net")) {
        auto net = std::make_shared<Network>(load_network(o.str("net")));
        if (net->input_dim() != 1 || net->output_dim() != 1)
            throw Error(ErrorCode::DimensionMismatch, "shift-cert needs a network with one input and one output");
        l_f = global_lipschitz_upper(*net, NormKind::L2);
        risk = [net, loss](const EmpiricalSample& s) { return empirical_risk(*net, s, loss); };
    } else {
        const AffinePredictor f{o.real("w"), o.real("b", 0.0)};
        l_f = std::abs(f.w);
        risk = [f, loss](const EmpiricalSample& s) { return empirical_risk(f, s, loss); };
    }
    if (o.has("lf")) {
        const double declared = o.real("lf");
        if (declared < l_f) throw Error(ErrorCode::InvalidArgument, "--lf is below the predictor's own Lipschitz bound");
        l_f = declared;
    }

    std::optional<EmpiricalSample> target;
    if (o.has("target")) target = load_sample(o.str("target"));
    double rho = 0.0;
    if (o.has("rho")) {
        rho = o.real("rho");
    } else if (target) {
        rho = w1_empirical_1d(train, *target);
    } else {
        throw Error(ErrorCode::InvalidArgument, "shift-cert needs --rho or --target");
    }
    const auto cert = shift_certificate(risk(train), rho, *l_loss, l_f, o.flag("assume-covariate-shift"));
    r.result["l_loss"] = num(*l_loss);
    r.result["l_f"] = num(l_f);
    if (target) r.result["w1"] = num(w1_empirical_1d(train, *target));
    r.result["certificate"] = certificate_json(cert);

    if (cert.vacuous()) {
        set_outcome(r, "vacuous", 2);
        return r;
    }
    set_outcome(r, "certified", 0);
    if (target && target->labeled()) {
        const double target_risk = risk(*target);
        const bool holds = target_risk <= cert.certified_shift_risk;
        r.result["target_risk"] = num(target_risk);
        r.result["bound_holds"] = holds;
        if (!holds) set_outcome(r, "violated", 1);
    }
    return r;
}

Report run_additive(Options& o, Report r) {
    const auto raw = load_additive_model(o.str("model"));
    const bool was_centered = raw.is_centered();
    const auto m = center_model(raw);
    const auto box = (o.has("lo") || o.has("hi")) ? read_box(o) : reference_box(m);
    if (box.dim() != m.dim()) throw Error(ErrorCode::DimensionMismatch, "box does not match the model dimension");
    const double rho = o.real("rho", 0.0);
    const double l_loss = o.real("loss-lipschitz", 1.0);
    const double train_risk = o.real("train-risk", 0.0);
    const auto cert = additive_shift_certificate(m, box, rho, l_loss, train_risk, o.flag("assume-covariate-shift"));

    json model;
    model["dim"] = m.dim();
    model["sparsity"] = m.sparsity();
    model["constant"] = num(m.constant());
    model["centered_input"] = was_centered;
    r.result["model"] = std::move(model);

    json comps = json::array();
    bool monotone = true;
    for (const auto& t : m.terms()) {
        const Interval iv{box.lo(t.coordinate), box.hi(t.coordinate)};
        const auto [lo, hi] = component_range(t.g, iv);
        const auto mono = component_monotonicity(t.g, iv);
        monotone = monotone && mono.direction != Monotonicity::None;
        json c;
        c["coordinate"] = t.coordinate;
        c["lipschitz"] = num(component_lipschitz(t.g, iv));
        c["min"] = num(lo);
        c["max"] = num(hi);
        c["direction"] = to_string(mono.direction);
        comps.push_back(std::move(c));
    }
    r.result["components"] = std::move(comps);
    r.result["sensitivity_l1"] = num(additive_lipschitz_l1(m, box));
    const auto [inf, sup] = product_sup_inf(m, box);
    r.result["range"]["inf"] = num(inf);
    r.result["range"]["sup"] = num(sup);
    if (monotone) {
        const auto e = monotone_endpoint_certificate(m, box);
        r.result["endpoint"]["vertex"] = vec(e.vertex);
        r.result["endpoint"]["value"] = num(e.value);
    }
    r.result["certificate"] = certificate_json(cert);
    if (cert.vacuous()) set_outcome(r, "vacuous", 2);
    else set_outcome(r, "certified", 0);
    return r;
}

json sawtooth_row(int k, double margin, std::uint64_t budget, double gap, bool& agree) {
    const auto net = make_sawtooth(k);
    const BoxSet unit({0.0}, {1.0});
    const auto pieces = enumerate_pieces_1d(net, unit);
    const double peak = pieces.max_value(LinearSpec{{1.0}, 0.0});
    const LinearSpec spec{{1.0}, peak - margin};
    const auto incomplete = linear_output_bounds(net, unit, spec);
    const auto res = verify_complete(net, unit, spec, budget, gap);
    const bool oracle_violated = peak - spec.beta > 0.0;
    agree = agree && (res.verdict == (oracle_violated ? BabVerdict::Unsafe : BabVerdict::Safe));
    json row;
    row["k"] = k;
    row["relu_units"] = net.hidden_units();
    row["pieces"] = pieces.pieces.size();
    row["max"] = num(peak);
    row["beta"] = num(spec.beta);
    row["bab_verdict"] = to_string(res.verdict);
    row["bab_nodes"] = res.nodes_expanded;
    row["incomplete_upper"] = num(incomplete.upper);
    row["incomplete_gap"] = num(incomplete.upper - (peak - spec.beta));
    return row;
}

Report run_sawtooth_demo(Options& o, Report r) {
    const auto kmin = static_cast<int>(o.count("kmin", 1));
    const auto kmax = static_cast<int>(o.count("kmax", 10));
    if (kmin < 1 || kmax > kMaxSawtooth || kmin > kmax)
        throw Error(ErrorCode::InvalidArgument,
                    "need 1 <= --kmin <= --kmax <= " + std::to_string(kMaxSawtooth));
    const double margin = o.positive("margin", 1e-6);
    const auto budget = o.count("budget", 2000000);
    const double gap = o.positive("gap-tol", 1e-12);
    bool agree = true;
    json rows = json::array();
    for (int k = kmin; k <= kmax; ++k) rows.push_back(sawtooth_row(k, margin, budget, gap, agree));
    r.result["rows"] = std::move(rows);
    r.result["oracle_agreement"] = agree;
    if (agree) set_outcome(r, "ok", 0);
    else set_outcome(r, "budget", 2);
    return r;
}

json attack_json(const AttackReport& a) {
    json j;
    j["epsilon"] = num(a.epsilon);
    j["samples_per_trial"] = a.n_samples_per_trial;
    j["trials"] = a.n_trials;
    j["missed"] = a.n_missed;
    j["empirical_miss_rate"] = num(a.empirical_miss_rate());
    j["predicted_miss_prob"] = num(a.predicted_miss_prob);
    j["standard_error"] = num(a.standard_error());
    const double z = a.standard_error() > 0 ? (a.empirical_miss_rate() - a.predicted_miss_prob) / a.standard_error() : 0.0;
    j["z_score"] = num(z);
    j["within_3se"] = std::abs(z) <= 3.0;
    return j;
}

Report run_attack_demo(Options& o, Report r) {
    const auto a = attack_gap_experiment(o.real("epsilon", 0.01), o.count("samples", 10), o.count("trials", 10000),
                                         o.count("seed", 0));
    r.result = attack_json(a);
    set_outcome(r, "ok", 0);
    return r;
}

json shift_flip_json(double rho, std::size_t n, std::uint64_t seed, bool& ok) {
    const auto s = shift_flip_construction(rho, n, seed);
    const auto cert = shift_certificate(s.risk_train, s.w1, 1.0, std::abs(s.f.w), s.covariate_shift_assumed);
    json j;
    j["rho"] = num(rho);
    j["n"] = n;
    j["risk_train"] = num(s.risk_train);
    j["risk_target"] = num(s.risk_target);
    j["w1"] = num(s.w1);
    j["w1_within_rho"] = s.w1 <= rho + 1e-9;
    j["covariate_shift_assumed"] = s.covariate_shift_assumed;
    bool refused = false;
    try {
        require_stamped(cert);
    } catch (const Error& e) {
        refused = true;
        j["refusal"] = e.what();
    }
    j["certificate_refused"] = refused;
    ok = ok && s.risk_train == 0.0 && s.risk_target == 1.0 && s.w1 <= rho + 1e-9 && refused;
    return j;
}

Report run_shift_flip_demo(Options& o, Report r) {
    bool ok = true;
    r.result = shift_flip_json(o.positive("rho", 0.1), o.count("n", 1000), o.count("seed", 0), ok);
    if (ok) set_outcome(r, "ok", 0);
    else set_outcome(r, "failed", 1);
    return r;
}

// Bundled worked examples. Each entry records its measurements and a pass flag.

json transport_bound(const std::filesystem::path& dir) {
    const auto train = load_sample((dir / "shift_train.csv").string());
    const auto target = load_sample((dir / "shift_target.csv").string());
    const AffinePredictor f{1.5, -0.25};
    const auto check = empirical_shift_check(f, train, target, LossKind::Hinge, std::abs(f.w));
    const double lp = w1_lp_oracle(train, target);
    json j;
    j["n"] = train.size();
    j["w1"] = num(check.w1);
    j["w1_lp"] = num(lp);
    j["transported_risk"] = num(check.lhs);
    j["certified_bound"] = num(check.rhs);
    j["slack"] = num(check.rhs - check.lhs);
    j["pass"] = check.lhs <= check.rhs && std::abs(check.w1 - lp) <= 1e-9;
    return j;
}

json classifier_margins(const std::filesystem::path& dir, std::uint64_t seed) {
    const auto net = load_network((dir / "classifier.net").string());
    const auto x0 = read_vector((dir / "classifier_x0.csv").string());
    const double r = read_vector((dir / "classifier_radius.txt").string()).at(0);
    const auto box = BoxSet::around(x0, r);
    const auto y0 = evaluate(net, x0);
    const auto t = static_cast<std::size_t>(std::max_element(y0.begin(), y0.end()) - y0.begin());
    std::vector<LinearSpec> specs;
    for (std::size_t k = 0; k < net.output_dim(); ++k)
        if (k != t) specs.push_back(LinearSpec::margin(net.output_dim(), t, k));
    const auto certs = linear_output_bounds_batch(net, box, specs);

    // Sampled lower estimates of each violation value must stay under the bound.
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    bool sound = true;
    for (int s = 0; s < 2000; ++s) {
        std::vector<double> x(box.dim());
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = box.lo(i) + unit(rng) * (box.hi(i) - box.lo(i));
        for (std::size_t c = 0; c < specs.size(); ++c)
            sound = sound && spec_value(net, specs[c], x) <= certs[c].upper + 1e-9 * (1.0 + std::abs(certs[c].upper));
    }
    json j;
    j["M"] = param_count(net);
    j["K"] = certs.front().passes;
    j["target_class"] = t;
    j["radius"] = num(r);
    json list = json::array();
    bool all_safe = true;
    std::uint64_t ops = 0;
    for (const auto& c : certs) {
        list.push_back({{"upper", num(c.upper)}, {"verdict", to_string(c.verdict)}});
        all_safe = all_safe && c.verdict == Verdict::Safe;
        ops += c.wall_ops;
    }
    j["certificates"] = std::move(list);
    j["robust"] = all_safe;
    j["wall_ops"] = ops;
    j["sampled_sound"] = sound;
    j["pass"] = param_count(net) == 12000 && certs.size() == 9 && sound;
    return j;
}

json sparse_additive(const std::filesystem::path& dir) {
    const auto m = load_additive_model((dir / "sparse_additive.add").string());
    const auto box = reference_box(m);
    const auto cert = additive_shift_certificate(m, box, 1.0, 1.0, 0.0, true);
    // alpha and beta are read back from the components: g1 = alpha t and
    // g3 = beta (t^2 - 1/3).
    const auto* g1 = m.component(0);
    const auto* g3 = m.component(2);
    const double alpha = g1 ? g1->derivative(0.0) : 0.0;
    const double beta = g3 ? 0.5 * (g3->derivative(1.0) - g3->derivative(0.0)) : 0.0;
    const auto [inf, sup] = product_sup_inf(m, box);
    // Dense grid over the two active coordinates (all others are free).
    double gmin = INFINITY, gmax = -INFINITY;
    std::vector<double> x(m.dim(), 0.0);
    for (int i = 0; i <= 2000; ++i) {
        x[0] = -1.0 + i / 1000.0;
        for (int k = 0; k <= 2000; ++k) {
            x[2] = -1.0 + k / 1000.0;
            const double v = m(x);
            gmin = std::min(gmin, v);
            gmax = std::max(gmax, v);
        }
    }
    json j;
    j["alpha"] = num(alpha);
    j["beta"] = num(beta);
    j["sensitivity"] = num(cert.sensitivity);
    j["closed_form"] = num(std::abs(alpha) + 2.0 * std::abs(beta));
    j["inf"] = num(inf);
    j["sup"] = num(sup);
    j["grid_inf"] = num(gmin);
    j["grid_sup"] = num(gmax);
    j["pass"] = m.is_centered() && m.sparsity() == 2 &&
                std::abs(cert.sensitivity - (std::abs(alpha) + 2.0 * std::abs(beta))) <= 1e-12 &&
                std::abs(inf - gmin) <= 1e-9 && std::abs(sup - gmax) <= 1e-9;
    return j;
}

json attack_example(std::uint64_t seed) {
    auto j = attack_json(attack_gap_experiment(0.01, 10, 10000, seed));
    j["pass"] = j["within_3se"];
    return j;
}

json flip_example(std::uint64_t seed) {
    bool ok = true;
    json j;
    json cases = json::array();
    for (double rho : {0.01, 0.1, 0.5}) cases.push_back(shift_flip_json(rho, 1000, seed, ok));
    j["cases"] = std::move(cases);
    j["pass"] = ok;
    return j;
}

json barrier_example() {
    bool agree = true;
    json rows = json::array();
    for (int k = 2; k <= 10; ++k) rows.push_back(sawtooth_row(k, 1e-6, 2000000, 1e-12, agree));
    bool grows = true;
    for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
        const int k = rows[i]["k"].get<int>();
        if (k >= 4 && k <= 9)
            grows = grows && rows[i + 1]["bab_nodes"].get<double>() >= 1.5 * rows[i]["bab_nodes"].get<double>();
    }
    const bool unknown_at_10 = rows.back()["incomplete_upper"].get<double>() > 0.0;
    json j;
    j["rows"] = std::move(rows);
    j["nodes_grow_1_5x"] = grows;
    j["incomplete_unknown_at_k10"] = unknown_at_10;
    j["pass"] = agree && grows && unknown_at_10;
    return j;
}

Report run_reproduce(Options& o, Report r) {
    const std::filesystem::path dir = o.str("assets", CERTKIT_ASSET_DIR);
    const auto seed = o.count("seed", 0);
    std::vector<std::pair<std::string, std::function<json()>>> examples{
        {"transport_bound", [&] { return transport_bound(dir); }},
        {"classifier_margins", [&] { return classifier_margins(dir, seed); }},
        {"sparse_additive", [&] { return sparse_additive(dir); }},
        {"attack_gap", [&] { return attack_example(seed); }},
        {"shift_flip", [&] { return flip_example(seed); }},
        {"exponential_barrier", [] { return barrier_example(); }},
    };
    json failed = json::array();
    for (const auto& [name, run] : examples) {
        json j = run();
        if (!j["pass"].get<bool>()) failed.push_back(name);
        r.result[name] = std::move(j);
    }
    r.result["passed"] = examples.size() - failed.size();
    r.result["failed"] = std::move(failed);
    if (r.result["failed"].empty()) set_outcome(r, "ok", 0);
    else set_outcome(r, "failed", 1);
    return r;
}

}  // namespace

Report run_job(JobConfig config) {
    static const std::set<std::string> seeded{"attack-demo", "shift-flip-demo", "reproduce"};
    if (seeded.count(config.command)) {
        if (const char* env = std::getenv("CERTKIT_SEED"); env && *env) config.options["seed"] = env;
    }
    Report r;
    r.command = config.command;
    r.config = config.options;
    Options o(config);

    using Runner = Report (*)(Options&, Report);
    static const std::map<std::string, Runner> runners{
        {"verify", run_verify},
        {"verify-complete", run_verify_complete},
        {"w1", run_w1},
        {"shift-cert", run_shift_cert},
        {"additive", run_additive},
        {"sawtooth-demo", run_sawtooth_demo},
        {"attack-demo", run_attack_demo},
        {"shift-flip-demo", run_shift_flip_demo},
        {"reproduce", run_reproduce},
    };
    auto it = runners.find(config.command);
    if (it == runners.end()) throw Error(ErrorCode::InvalidArgument, "unknown command '" + config.command + "'");
    // Any option the runner never read is a typo.
    Report out = it->second(o, std::move(r));
    o.reject_unused();
    return out;
}

}  // namespace certkit
