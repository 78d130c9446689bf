#include "certkit/certkit.h"

#include "certkit/bounds.hpp"
#include "certkit/complete.hpp"
#include "certkit/network.hpp"
#include "certkit/report.hpp"
#include "certkit/transport.hpp"

#include <cstring>
#include <exception>
#include <new>
#include <string>

struct certkit_network {
    certkit::Network net;
};

struct certkit_job {
    certkit::JobConfig config;
};

struct certkit_report {
    std::string text;
    std::string json;
    int exit_code;
};

namespace {

thread_local std::string g_last_error;
thread_local std::string g_last_record;

certkit_status status_for(certkit::ErrorCode code) {
    using certkit::ErrorCode;
    switch (code) {
        case ErrorCode::InvalidArgument: return CERTKIT_ERR_INVALID_ARGUMENT;
        case ErrorCode::Parse: return CERTKIT_ERR_PARSE;
        case ErrorCode::DimensionMismatch: return CERTKIT_ERR_DIMENSION;
        case ErrorCode::NonFinite: return CERTKIT_ERR_NON_FINITE;
        case ErrorCode::Io: return CERTKIT_ERR_IO;
        case ErrorCode::Domain: return CERTKIT_ERR_DOMAIN;
        case ErrorCode::NonMonotone: return CERTKIT_ERR_NON_MONOTONE;
        case ErrorCode::NotCentered: return CERTKIT_ERR_NOT_CENTERED;
    }
    return CERTKIT_ERR_INTERNAL;
}

certkit_status fail(certkit_status s, const std::string& msg) {
    g_last_error = msg;
    return s;
}

// Runs `body`, translating exceptions into status codes.
template <typename F>
certkit_status guard(F&& body) {
    g_last_error.clear();
    g_last_record.clear();
    try {
        body();
        return CERTKIT_OK;
    } catch (const certkit::Error& e) {
        g_last_record = certkit::error_record(e.code(), e.what());
        return fail(status_for(e.code()), e.what());
    } catch (const std::bad_alloc&) {
        g_last_record = "error code=internal exit=7 message=\"out of memory\"";
        return fail(CERTKIT_ERR_INTERNAL, "out of memory");
    } catch (const std::exception& e) {
        g_last_record = std::string("error code=internal exit=7 message=\"") + e.what() + "\"";
        return fail(CERTKIT_ERR_INTERNAL, e.what());
    }
}

certkit::BoxSet make_box(const double* lo, const double* hi, size_t dim) {
    if (!lo || !hi) throw certkit::Error(certkit::ErrorCode::InvalidArgument, "null box bounds");
    return certkit::BoxSet(std::vector<double>(lo, lo + dim), std::vector<double>(hi, hi + dim));
}

certkit::LinearSpec make_spec(const double* a, size_t outputs, double beta) {
    if (!a) throw certkit::Error(certkit::ErrorCode::InvalidArgument, "null spec");
    return certkit::LinearSpec{std::vector<double>(a, a + outputs), beta};
}

void require(bool ok, const char* what) {
    if (!ok) throw certkit::Error(certkit::ErrorCode::InvalidArgument, what);
}

}  // namespace

extern "C" {

const char* certkit_version(void) { return certkit::kToolkitVersion; }

const char* certkit_last_error(void) { return g_last_error.c_str(); }

const char* certkit_last_error_record(void) { return g_last_record.c_str(); }

int certkit_exit_code_for_status(certkit_status status) {
    using certkit::ErrorCode;
    switch (status) {
        case CERTKIT_OK: return 0;
        case CERTKIT_ERR_INVALID_ARGUMENT: return certkit::exit_code_for(ErrorCode::InvalidArgument);
        case CERTKIT_ERR_PARSE: return certkit::exit_code_for(ErrorCode::Parse);
        case CERTKIT_ERR_DIMENSION: return certkit::exit_code_for(ErrorCode::DimensionMismatch);
        case CERTKIT_ERR_NON_FINITE: return certkit::exit_code_for(ErrorCode::NonFinite);
        case CERTKIT_ERR_IO: return certkit::exit_code_for(ErrorCode::Io);
        case CERTKIT_ERR_DOMAIN: return certkit::exit_code_for(ErrorCode::Domain);
        case CERTKIT_ERR_NON_MONOTONE: return certkit::exit_code_for(ErrorCode::NonMonotone);
        case CERTKIT_ERR_NOT_CENTERED: return certkit::exit_code_for(ErrorCode::NotCentered);
        case CERTKIT_ERR_INTERNAL: break;
    }
    return 7;
}

certkit_status certkit_network_load(const char* path, certkit_network** out) {
    return guard([&] {
        require(path && out, "null argument");
        *out = nullptr;
        *out = new certkit_network{certkit::load_network(path)};
    });
}

certkit_status certkit_network_sawtooth(int k, certkit_network** out) {
    return guard([&] {
        require(out, "null argument");
        *out = nullptr;
        *out = new certkit_network{certkit::make_sawtooth(k)};
    });
}

void certkit_network_free(certkit_network* net) { delete net; }

certkit_status certkit_network_dims(const certkit_network* net, size_t* inputs, size_t* outputs, size_t* depth) {
    return guard([&] {
        require(net, "null network");
        if (inputs) *inputs = net->net.input_dim();
        if (outputs) *outputs = net->net.output_dim();
        if (depth) *depth = net->net.depth();
    });
}

certkit_status certkit_network_param_count(const certkit_network* net, uint64_t* out) {
    return guard([&] {
        require(net && out, "null argument");
        *out = certkit::param_count(net->net);
    });
}

certkit_status certkit_network_evaluate(const certkit_network* net, const double* x, size_t n_in, double* y,
                                        size_t n_out) {
    return guard([&] {
        require(net && x && y, "null argument");
        if (n_out != net->net.output_dim())
            throw certkit::Error(certkit::ErrorCode::DimensionMismatch, "output buffer size mismatch");
        const auto r = certkit::evaluate(net->net, std::span<const double>(x, n_in));
        std::memcpy(y, r.data(), r.size() * sizeof(double));
    });
}

certkit_status certkit_network_lipschitz(const certkit_network* net, certkit_norm norm, double* out) {
    return guard([&] {
        require(net && out, "null argument");
        certkit::NormKind kind;
        switch (norm) {
            case CERTKIT_NORM_L1: kind = certkit::NormKind::L1; break;
            case CERTKIT_NORM_L2: kind = certkit::NormKind::L2; break;
            case CERTKIT_NORM_LINF: kind = certkit::NormKind::LInf; break;
            default: throw certkit::Error(certkit::ErrorCode::InvalidArgument, "unknown norm");
        }
        *out = certkit::global_lipschitz_upper(net->net, kind);
    });
}

certkit_status certkit_linear_bounds(const certkit_network* net, const double* lo, const double* hi, size_t dim,
                                     const double* a, size_t outputs, double beta, int interval,
                                     certkit_bound_result* out) {
    return guard([&] {
        require(net && out, "null argument");
        const auto box = make_box(lo, hi, dim);
        const auto spec = make_spec(a, outputs, beta);
        const auto c = interval ? certkit::interval_output_bounds(net->net, box, spec)
                                : certkit::linear_output_bounds(net->net, box, spec);
        out->upper = c.upper;
        out->lower = c.lower;
        out->passes = c.passes;
        out->wall_ops = c.wall_ops;
        out->verdict = c.verdict == certkit::Verdict::Safe     ? CERTKIT_SAFE
                       : c.verdict == certkit::Verdict::Unsafe ? CERTKIT_UNSAFE
                                                               : CERTKIT_UNKNOWN;
    });
}

certkit_status certkit_verify_complete(const certkit_network* net, const double* lo, const double* hi, size_t dim,
                                       const double* a, size_t outputs, double beta, uint64_t node_budget,
                                       double gap_tol, unsigned threads, certkit_bab_result* out,
                                       double* witness) {
    return guard([&] {
        require(net && out, "null argument");
        certkit::BabOptions opts;
        opts.threads = threads;
        const auto r = certkit::verify_complete(net->net, make_box(lo, hi, dim), make_spec(a, outputs, beta),
                                                node_budget, gap_tol, opts);
        out->verdict = r.verdict == certkit::BabVerdict::Safe     ? CERTKIT_SAFE
                       : r.verdict == certkit::BabVerdict::Unsafe ? CERTKIT_UNSAFE
                                                                  : CERTKIT_UNKNOWN;
        out->lower = r.lower;
        out->upper = r.upper;
        out->nodes_expanded = r.nodes_expanded;
        out->has_witness = r.witness.has_value();
        if (witness && r.witness) std::memcpy(witness, r.witness->data(), r.witness->size() * sizeof(double));
    });
}

certkit_status certkit_w1(const double* a, size_t na, const double* b, size_t nb, double* out) {
    return guard([&] {
        require(a && b && out, "null argument");
        *out = certkit::w1_empirical_1d(certkit::EmpiricalSample(std::vector<double>(a, a + na)),
                                        certkit::EmpiricalSample(std::vector<double>(b, b + nb)));
    });
}

certkit_status certkit_job_create(const char* command, certkit_job** out) {
    return guard([&] {
        require(command && out, "null argument");
        *out = new certkit_job{certkit::JobConfig{command, {}}};
    });
}

certkit_status certkit_job_set(certkit_job* job, const char* key, const char* value) {
    return guard([&] {
        require(job && key && value, "null argument");
        job->config.options[key] = value;
    });
}

void certkit_job_free(certkit_job* job) { delete job; }

certkit_status certkit_job_run(const certkit_job* job, certkit_report** out) {
    return guard([&] {
        require(job && out, "null argument");
        *out = nullptr;
        const auto r = certkit::run_job(job->config);
        *out = new certkit_report{r.to_text(), r.to_json(), r.exit_code};
    });
}

const char* certkit_report_text(const certkit_report* report) { return report ? report->text.c_str() : ""; }
const char* certkit_report_json(const certkit_report* report) { return report ? report->json.c_str() : ""; }
int certkit_report_exit_code(const certkit_report* report) { return report ? report->exit_code : 7; }
void certkit_report_free(certkit_report* report) { delete report; }

}  // extern "C"
