#include "geopanel/bridge_client.hpp"

#include <cerrno>
#include <csignal>
#include <cstring>

#include <fcntl.h>
#include <poll.h>
#include <sys/wait.h>
#include <unistd.h>

namespace geopanel::forecasting {

namespace {

void ignore_sigpipe() {
    static const bool once = [] {
        std::signal(SIGPIPE, SIG_IGN);
        return true;
    }();
    (void)once;
}

}  // namespace

BridgeClient::BridgeClient(const std::string& command, std::chrono::milliseconds timeout)
    : timeout_(timeout) {
    if (command.empty()) throw BackendError("external backend command is empty");
    ignore_sigpipe();
    int in_pipe[2];
    int out_pipe[2];
    if (pipe(in_pipe) != 0) throw BackendError(std::string("pipe failed: ") + std::strerror(errno));
    if (pipe(out_pipe) != 0) {
        close(in_pipe[0]);
        close(in_pipe[1]);
        throw BackendError(std::string("pipe failed: ") + std::strerror(errno));
    }
    pid_ = fork();
    if (pid_ < 0) {
        close(in_pipe[0]);
        close(in_pipe[1]);
        close(out_pipe[0]);
        close(out_pipe[1]);
        throw BackendError(std::string("fork failed: ") + std::strerror(errno));
    }
    if (pid_ == 0) {
        setpgid(0, 0);
        dup2(in_pipe[0], STDIN_FILENO);
        dup2(out_pipe[1], STDOUT_FILENO);
        close(in_pipe[0]);
        close(in_pipe[1]);
        close(out_pipe[0]);
        close(out_pipe[1]);
        execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
        _exit(127);
    }
    setpgid(pid_, pid_);
    close(in_pipe[0]);
    close(out_pipe[1]);
    to_child_ = in_pipe[1];
    from_child_ = out_pipe[0];
    fcntl(to_child_, F_SETFD, FD_CLOEXEC);
    fcntl(from_child_, F_SETFD, FD_CLOEXEC);
}

BridgeClient::~BridgeClient() {
    if (!closed_) {
        try {
            shutdown();
        } catch (...) {
        }
    }
    terminate();
}

void BridgeClient::terminate() {
    if (to_child_ >= 0) close(to_child_);
    if (from_child_ >= 0) close(from_child_);
    to_child_ = from_child_ = -1;
    if (pid_ > 0) {
        int status = 0;
        // Give the child a moment to exit on EOF before killing it.
        for (int i = 0; i < 50; ++i) {
            if (waitpid(pid_, &status, WNOHANG) == pid_) {
                pid_ = -1;
                return;
            }
            usleep(2000);
        }
        kill(-pid_, SIGKILL);
        waitpid(pid_, &status, 0);
        pid_ = -1;
    }
}

void BridgeClient::write_line(const std::string& line) {
    if (to_child_ < 0) throw BackendError("bridge process is not running");
    std::string data = line;
    data += '\n';
    std::size_t sent = 0;
    while (sent < data.size()) {
        const ssize_t n = write(to_child_, data.data() + sent, data.size() - sent);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw BackendError(std::string("bridge write failed: ") + std::strerror(errno));
        }
        sent += static_cast<std::size_t>(n);
    }
}

std::string BridgeClient::read_line() {
    if (from_child_ < 0) throw BackendError("bridge process is not running");
    const auto deadline = std::chrono::steady_clock::now() + timeout_;
    while (true) {
        const auto nl = buffer_.find('\n');
        if (nl != std::string::npos) {
            std::string line = buffer_.substr(0, nl);
            buffer_.erase(0, nl + 1);
            return line;
        }
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
            deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) throw BackendError("bridge response timed out");
        pollfd pfd{from_child_, POLLIN, 0};
        const int rc = poll(&pfd, 1, static_cast<int>(left.count()));
        if (rc < 0) {
            if (errno == EINTR) continue;
            throw BackendError(std::string("bridge poll failed: ") + std::strerror(errno));
        }
        if (rc == 0) throw BackendError("bridge response timed out");
        char chunk[65536];
        const ssize_t n = read(from_child_, chunk, sizeof chunk);
        if (n < 0) {
            if (errno == EINTR) continue;
            throw BackendError(std::string("bridge read failed: ") + std::strerror(errno));
        }
        if (n == 0) throw BackendError("bridge process closed its output");
        buffer_.append(chunk, static_cast<std::size_t>(n));
    }
}

std::string BridgeClient::exchange_raw(const std::string& line) {
    write_line(line);
    return read_line();
}

nlohmann::json BridgeClient::call(const std::string& op, const nlohmann::json& payload) {
    const std::int64_t id = next_id_++;
    const nlohmann::json request{{"id", id}, {"op", op}, {"payload", payload}};
    const std::string line = exchange_raw(request.dump());
    nlohmann::json response;
    try {
        response = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw BackendError(std::string("bridge sent malformed JSON: ") + e.what());
    }
    if (!response.is_object() || !response.contains("id") || response["id"] != id)
        throw BackendError("bridge response id does not match request " + std::to_string(id));
    const auto status = response.value("status", std::string());
    const nlohmann::json body = response.value("payload", nlohmann::json::object());
    if (status != "ok") {
        const std::string message = body.is_object() ? body.value("message", std::string("unknown error"))
                                                     : std::string("unknown error");
        throw BackendError("bridge " + op + " failed: " + message);
    }
    return body;
}

nlohmann::json BridgeClient::hello() { return call("hello", nlohmann::json::object()); }

std::vector<double> BridgeClient::fit_predict(const std::vector<std::string>& feature_names,
                                              const std::vector<std::vector<double>>& train_x,
                                              const std::vector<double>& train_y,
                                              const std::vector<std::vector<double>>& test_x) {
    const nlohmann::json payload{{"feature_names", feature_names},
                                 {"train_x", train_x},
                                 {"train_y", train_y},
                                 {"test_x", test_x}};
    const auto body = call("fit_predict", payload);
    if (!body.contains("pred") || !body["pred"].is_array())
        throw BackendError("bridge fit_predict response lacks a pred array");
    std::vector<double> pred;
    for (const auto& v : body["pred"]) {
        if (!v.is_number()) throw BackendError("bridge returned a non-numeric prediction");
        pred.push_back(v.get<double>());
    }
    if (pred.size() != test_x.size()) throw BackendError("bridge returned the wrong number of predictions");
    return pred;
}

void BridgeClient::shutdown() {
    if (closed_) return;
    closed_ = true;
    call("shutdown", nlohmann::json::object());
}

// ---------------------------------------------------------------------------

namespace {

std::vector<std::vector<double>> rows_of(const FeatureTable& t) {
    std::vector<std::vector<double>> out;
    out.reserve(t.rows());
    for (std::size_t r = 0; r < t.rows(); ++r) {
        const auto row = t.row(r);
        out.emplace_back(row.begin(), row.end());
    }
    return out;
}

class ExternalModel : public FittedModel {
public:
    ExternalModel(std::shared_ptr<BridgeClient> client, const FeatureTable& train)
        : FittedModel(train.schema()),
          client_(std::move(client)),
          train_x_(rows_of(train)),
          train_y_(train.target()) {}

protected:
    std::vector<double> predict_rows(const FeatureTable& rows) const override {
        return client_->fit_predict(schema(), train_x_, train_y_, rows_of(rows));
    }

private:
    std::shared_ptr<BridgeClient> client_;
    std::vector<std::vector<double>> train_x_;
    std::vector<double> train_y_;
};

}  // namespace

ExternalBackend::ExternalBackend(std::string command, double timeout_seconds)
    : command_(std::move(command)), timeout_seconds_(timeout_seconds) {}

std::unique_ptr<FittedModel> ExternalBackend::fit(const FeatureTable& train, std::uint64_t) const {
    if (!train.has_target() || train.rows() == 0) throw DataError("external backend needs training targets");
    auto client = std::make_shared<BridgeClient>(
        command_, std::chrono::milliseconds(static_cast<std::int64_t>(timeout_seconds_ * 1000.0)));
    const auto info = client->hello();
    if (!info.is_object()) throw BackendError("bridge hello returned no payload");
    return std::make_unique<ExternalModel>(std::move(client), train);
}

}  // namespace geopanel::forecasting
