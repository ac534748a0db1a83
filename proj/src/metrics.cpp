#include "geopanel/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace geopanel::evaluation {

namespace {

void check_pair(std::span<const double> y, std::span<const double> yhat) {
    if (y.size() != yhat.size())
        throw std::invalid_argument("metric inputs differ in length (" + std::to_string(y.size()) + " vs " +
                                    std::to_string(yhat.size()) + ")");
    if (y.empty()) throw std::invalid_argument("metric inputs are empty");
    for (std::size_t i = 0; i < y.size(); ++i)
        if (!std::isfinite(y[i]) || !std::isfinite(yhat[i]))
            throw std::invalid_argument("metric inputs must be finite");
}

struct Moments {
    double mean;
    double std;
};

Moments moments(std::span<const double> v) {
    const double n = static_cast<double>(v.size());
    double sum = 0.0;
    for (double e : v) sum += e;
    const double mean = sum / n;
    double ss = 0.0;
    for (double e : v) ss += (e - mean) * (e - mean);
    return {mean, std::sqrt(ss / n)};
}

}  // namespace

double mse(std::span<const double> y, std::span<const double> yhat) {
    check_pair(y, yhat);
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double e = y[i] - yhat[i];
        acc += e * e;
    }
    return acc / static_cast<double>(y.size());
}

double rmse(std::span<const double> y, std::span<const double> yhat) { return std::sqrt(mse(y, yhat)); }

double mae(std::span<const double> y, std::span<const double> yhat) {
    check_pair(y, yhat);
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) acc += std::abs(yhat[i] - y[i]);
    return acc / static_cast<double>(y.size());
}

Refusable mape(std::span<const double> y, std::span<const double> yhat, double zero_tol) {
    check_pair(y, yhat);
    for (double v : y)
        if (std::abs(v) <= zero_tol) return {std::nullopt, "MAPE undefined for this series (zero observation)"};
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) acc += std::abs((yhat[i] - y[i]) / y[i]);
    return {100.0 * acc / static_cast<double>(y.size()), ""};
}

KgeResult kge(std::span<const double> y, std::span<const double> yhat) {
    check_pair(y, yhat);
    KgeResult out;
    if (y.size() < 2) {
        out.refusal = "KGE needs at least 2 points";
        return out;
    }
    const Moments my = moments(y);
    const Moments mp = moments(yhat);
    if (my.std == 0.0) {
        out.refusal = "KGE undefined: observed series has zero variance";
        return out;
    }
    if (mp.std == 0.0) {
        out.refusal = "KGE undefined: predicted series has zero variance";
        return out;
    }
    if (my.mean == 0.0) {
        out.refusal = "KGE undefined: observed mean is zero";
        return out;
    }
    if (mp.mean == 0.0) {
        out.refusal = "KGE undefined: predicted mean is zero";
        return out;
    }
    double cov = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) cov += (yhat[i] - mp.mean) * (y[i] - my.mean);
    cov /= static_cast<double>(y.size());
    const double r = cov / (mp.std * my.std);
    const double beta = mp.mean / my.mean;
    const double gamma = (mp.std / mp.mean) / (my.std / my.mean);
    out.r = r;
    out.beta = beta;
    out.gamma = gamma;
    out.kge = 1.0 - std::sqrt((r - 1.0) * (r - 1.0) + (beta - 1.0) * (beta - 1.0) + (gamma - 1.0) * (gamma - 1.0));
    return out;
}

Metrics score(std::span<const double> y, std::span<const double> yhat) {
    Metrics m;
    m.n = y.size();
    m.mse = mse(y, yhat);
    m.rmse = std::sqrt(m.mse);
    m.mae = mae(y, yhat);
    const auto p = mape(y, yhat);
    m.mape = p.value;
    m.mape_refusal = p.refusal;
    const auto k = kge(y, yhat);
    m.kge = k.kge;
    m.r = k.r;
    m.beta = k.beta;
    m.gamma = k.gamma;
    m.kge_refusal = k.refusal;
    return m;
}

}  // namespace geopanel::evaluation
