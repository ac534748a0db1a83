#pragma once

#include <chrono>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>
#include <sys/types.h>

#include "geopanel/backends.hpp"

namespace geopanel::forecasting {

/// Client side of the newline-delimited JSON bridge protocol. Owns one
/// child process (launched through /bin/sh -c) and keeps at most one request
/// in flight.
///
///   request:  {"id": n, "op": "hello"|"fit_predict"|"shutdown", "payload": {...}}
///   response: {"id": n, "status": "ok"|"error", "payload": {...}}
class BridgeClient {
public:
    BridgeClient(const std::string& command, std::chrono::milliseconds timeout);
    ~BridgeClient();

    BridgeClient(const BridgeClient&) = delete;
    BridgeClient& operator=(const BridgeClient&) = delete;

    /// Sends one request and returns the response payload. Throws BackendError
    /// on timeout, a closed pipe, an id mismatch or an error status.
    nlohmann::json call(const std::string& op, const nlohmann::json& payload);

    nlohmann::json hello();
    std::vector<double> fit_predict(const std::vector<std::string>& feature_names,
                                    const std::vector<std::vector<double>>& train_x,
                                    const std::vector<double>& train_y,
                                    const std::vector<std::vector<double>>& test_x);
    void shutdown();

    /// Sends a raw line and reads one raw response line (protocol testing).
    std::string exchange_raw(const std::string& line);

private:
    void write_line(const std::string& line);
    std::string read_line();
    void terminate();

    pid_t pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::chrono::milliseconds timeout_;
    std::int64_t next_id_ = 1;
    std::string buffer_;
    bool closed_ = false;
};

/// Backend that forwards fit/predict to a bridge process. Fitting performs
/// the hello handshake and caches the training table; every predict call is
/// one stateless fit_predict request.
class ExternalBackend : public Backend {
public:
    ExternalBackend(std::string command, double timeout_seconds);
    std::string id() const override { return "external"; }
    std::unique_ptr<FittedModel> fit(const FeatureTable& train, std::uint64_t seed) const override;

private:
    std::string command_;
    double timeout_seconds_;
};

}  // namespace geopanel::forecasting
