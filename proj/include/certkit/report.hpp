#pragma once

#include "certkit/error.hpp"

#include <json.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace certkit {

inline constexpr const char* kToolkitVersion = "0.1.0";

/// One certification job: a command name plus its `--flag value` options
/// (without the leading dashes). Boolean flags carry "true".
struct JobConfig {
    std::string command;
    std::map<std::string, std::string> options;

    bool has(const std::string& key) const { return options.count(key) != 0; }
};

/// Commands understood by run_job, in help order.
const std::vector<std::string>& job_commands();

/// Result of a job. `result` holds the payload; the flat text form is the
/// contract and the JSON form mirrors it.
struct Report {
    std::string command;
    std::map<std::string, std::string> config;
    nlohmann::ordered_json result = nlohmann::ordered_json::object();
    std::string status;  // safe, unsafe, unknown, budget, ok, vacuous, failed
    int exit_code = 0;
    bool deterministic = true;

    std::string to_text() const;
    std::string to_json() const;
};

/// Runs the job. Invalid configurations and module failures throw Error.
/// CERTKIT_SEED, when set, replaces the `seed` option.
Report run_job(JobConfig config);

/// Process exit status for a failed job (always > 2).
int exit_code_for(ErrorCode code);

/// `error code=<name> exit=<n> message="<text>"` on a single line.
std::string error_record(ErrorCode code, const std::string& message);

}  // namespace certkit
