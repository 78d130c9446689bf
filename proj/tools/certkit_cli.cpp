// certkit command line: one subcommand per certificate kind. Everything goes
// through the C API; this file only maps flags onto job options.

#include "certkit/certkit.h"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

namespace {

struct Flag {
    const char* name;
    const char* help;
    bool boolean = false;
};

struct Command {
    const char* name;
    const char* help;
    std::vector<Flag> flags;
};

const std::vector<Flag> kBoxFlags{
    {"center", "box center (file or comma list)"},
    {"radius", "l-infinity radius around --center"},
    {"lo", "box lower corner (file or comma list)"},
    {"hi", "box upper corner (file or comma list)"},
};

std::vector<Flag> with_box(std::vector<Flag> flags) {
    flags.insert(flags.begin() + 1, kBoxFlags.begin(), kBoxFlags.end());
    return flags;
}

std::vector<Command> commands() {
    return {
        {"verify", "incomplete certificate for a linear output spec",
         with_box({{"net", "network file"},
                   {"target-class", "emit one margin certificate per other class"},
                   {"spec", "spec coefficients a (file or comma list)"},
                   {"beta", "spec threshold, default 0"},
                   {"method", "linear (default) or interval"},
                   {"intermediate", "hidden-layer bounds: linear (default) or interval"},
                   {"threads", "worker threads for the margin batch"}})},
        {"verify-complete", "branch-and-bound decision of a linear output spec",
         with_box({{"net", "network file"},
                   {"target-class", "decide every margin against this class"},
                   {"spec", "spec coefficients a (file or comma list)"},
                   {"beta", "spec threshold, default 0"},
                   {"budget", "maximum bounded boxes per spec"},
                   {"gap-tol", "stop once the bracket is this narrow"},
                   {"intermediate", "hidden-layer bounds: linear (default) or interval"},
                   {"threads", "parallel node expansion"}})},
        {"w1", "exact 1-D Wasserstein-1 distance between two samples",
         {{"source", "CSV sample"}, {"target", "CSV sample"}, {"oracle", "also solve the transport LP", true}}},
        {"shift-cert", "risk certificate under a Wasserstein shift",
         {{"train", "labeled CSV sample"},
          {"target", "CSV sample; its W1 to --train is the radius unless --rho is given"},
          {"w", "affine predictor slope"},
          {"b", "affine predictor intercept"},
          {"net", "scalar network instead of --w/--b"},
          {"rho", "shift radius"},
          {"lf", "declared Lipschitz constant of the predictor"},
          {"loss", "hinge (default) or zero-one"},
          {"assume-covariate-shift", "the label law is unchanged between the samples", true}}},
        {"additive", "certificates for an additive model",
         {{"model", "additive model file"},
          {"lo", "box lower corner, default the reference box"},
          {"hi", "box upper corner"},
          {"rho", "shift radius, default 0"},
          {"loss-lipschitz", "loss Lipschitz constant, default 1"},
          {"train-risk", "training risk, default 0"},
          {"assume-covariate-shift", "the label law is unchanged under the shift", true}}},
        {"sawtooth-demo", "complete vs incomplete verification on tent-map compositions",
         {{"kmin", "smallest depth, default 1"},
          {"kmax", "largest depth, default 10"},
          {"margin", "threshold sits this far below the maximum"},
          {"budget", "node budget per depth"},
          {"gap-tol", "bracket tolerance"}}},
        {"attack-demo", "random search against a narrow violation region",
         {{"epsilon", "width of the violation region"},
          {"samples", "samples per attack"},
          {"trials", "number of attacks"},
          {"seed", "RNG seed (CERTKIT_SEED overrides)"}}},
        {"shift-flip-demo", "label flip under a small covariate move",
         {{"rho", "shift"}, {"n", "sample size"}, {"seed", "RNG seed (CERTKIT_SEED overrides)"}}},
        {"reproduce", "run every bundled worked example",
         {{"assets", "directory with the bundled example files"}, {"seed", "RNG seed (CERTKIT_SEED overrides)"}}},
    };
}

int report_error(int code, const std::string& record) {
    std::cerr << record << '\n';
    return code;
}

std::string quote(const std::string& s) {
    std::string out;
    for (char ch : s) {
        if (ch == '"' || ch == '\\') out += '\\';
        out += ch == '\n' ? ' ' : ch;
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"certkit: sound certificates for ReLU networks, shift risk and additive models"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(certkit_version()));
    bool json = false;
    std::string output;
    app.add_flag("--json", json, "print the JSON mirror instead of key=value lines");
    app.add_option("--output", output, "also write the key=value report to this file");

    const auto cmds = commands();
    std::map<std::string, std::map<std::string, std::string>> values;
    std::map<std::string, std::map<std::string, bool>> switches;
    std::vector<CLI::App*> subs;
    for (const auto& c : cmds) {
        auto* sub = app.add_subcommand(c.name, c.help);
        subs.push_back(sub);
        for (const auto& f : c.flags) {
            const std::string opt = std::string("--") + f.name;
            if (f.boolean) sub->add_flag(opt, switches[c.name][f.name], f.help);
            else sub->add_option(opt, values[c.name][f.name], f.help);
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return report_error(certkit_exit_code_for_status(CERTKIT_ERR_INVALID_ARGUMENT),
                            "error code=invalid_argument exit=" +
                                std::to_string(certkit_exit_code_for_status(CERTKIT_ERR_INVALID_ARGUMENT)) +
                                " message=\"" + quote(e.what()) + "\"");
    }

    for (std::size_t i = 0; i < cmds.size(); ++i) {
        if (!subs[i]->parsed()) continue;
        const std::string name = cmds[i].name;
        certkit_job* job = nullptr;
        certkit_job_create(name.c_str(), &job);
        for (const auto& f : cmds[i].flags) {
            if (subs[i]->count(std::string("--") + f.name) == 0) continue;
            const std::string v = f.boolean ? (switches[name][f.name] ? "true" : "false") : values[name][f.name];
            certkit_job_set(job, f.name, v.c_str());
        }
        certkit_report* report = nullptr;
        const certkit_status st = certkit_job_run(job, &report);
        certkit_job_free(job);
        if (st != CERTKIT_OK) return report_error(certkit_exit_code_for_status(st), certkit_last_error_record());

        std::fputs(json ? certkit_report_json(report) : certkit_report_text(report), stdout);
        int code = certkit_report_exit_code(report);
        if (!output.empty()) {
            std::ofstream out(output);
            out << certkit_report_text(report);
            if (!out) {
                const int io = certkit_exit_code_for_status(CERTKIT_ERR_IO);
                code = report_error(io, "error code=io exit=" + std::to_string(io) + " message=\"cannot write '" +
                                            quote(output) + "'\"");
            }
        }
        certkit_report_free(report);
        return code;
    }
    return 0;
}
