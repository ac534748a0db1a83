#include "geopanel/backends.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "geopanel/bridge_client.hpp"

namespace geopanel::forecasting {

std::string_view to_string(BackendId id) {
    switch (id) {
        case BackendId::ridge: return "ridge";
        case BackendId::knn: return "knn";
        case BackendId::naive: return "naive";
        case BackendId::seasonal_naive: return "seasonal_naive";
        case BackendId::external: return "external";
    }
    return "ridge";
}

BackendId parse_backend_id(std::string_view text) {
    if (text == "ridge") return BackendId::ridge;
    if (text == "knn") return BackendId::knn;
    if (text == "naive") return BackendId::naive;
    if (text == "seasonal_naive") return BackendId::seasonal_naive;
    if (text == "external") return BackendId::external;
    throw ConfigError("unknown backend '" + std::string(text) +
                      "' (expected ridge|knn|naive|seasonal_naive|external)");
}

std::string_view to_string(KnnWeighting w) {
    return w == KnnWeighting::uniform ? "uniform" : "inverse_distance";
}

KnnWeighting parse_knn_weighting(std::string_view text) {
    if (text == "uniform") return KnnWeighting::uniform;
    if (text == "inverse_distance") return KnnWeighting::inverse_distance;
    throw ConfigError("unknown knn weighting '" + std::string(text) + "'");
}

void BackendSpec::validate() const {
    switch (id) {
        case BackendId::ridge:
            if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ConfigError("backend.lambda must be >= 0");
            break;
        case BackendId::knn:
            if (k < 1) throw ConfigError("backend.k must be >= 1");
            break;
        case BackendId::seasonal_naive:
            if (period && *period < 1) throw ConfigError("backend.period must be >= 1");
            break;
        case BackendId::external:
            if (!(timeout_seconds > 0.0)) throw ConfigError("backend.timeout_seconds must be > 0");
            if (command.empty())
                throw ConfigError("backend.command is empty (set it in the config or GEOPANEL_BRIDGE_CMD)");
            break;
        case BackendId::naive:
            break;
    }
}

void check_schema(const std::vector<std::string>& expected, const std::vector<std::string>& actual) {
    if (expected == actual) return;
    const std::set<std::string> e(expected.begin(), expected.end());
    const std::set<std::string> a(actual.begin(), actual.end());
    std::string missing, unexpected;
    for (const auto& n : expected)
        if (!a.count(n)) missing += (missing.empty() ? "" : ",") + n;
    for (const auto& n : actual)
        if (!e.count(n)) unexpected += (unexpected.empty() ? "" : ",") + n;
    std::string msg = "prediction rows do not match the training schema";
    if (!missing.empty()) msg += "; missing: " + missing;
    if (!unexpected.empty()) msg += "; unexpected: " + unexpected;
    if (missing.empty() && unexpected.empty()) msg += "; same names in a different order";
    throw SchemaMismatch(msg);
}

std::vector<double> FittedModel::predict(const FeatureTable& rows) const {
    check_schema(schema_, rows.schema());
    auto out = predict_rows(rows);
    if (out.size() != rows.rows()) throw BackendError("backend returned the wrong number of predictions");
    for (double v : out)
        if (!std::isfinite(v)) throw BackendError("backend produced a non-finite prediction");
    return out;
}

// ---------------------------------------------------------------------------
// Standardizer and ridge
// ---------------------------------------------------------------------------

Standardizer Standardizer::fit(const FeatureTable& table) {
    Standardizer s;
    const double n = static_cast<double>(table.rows());
    for (std::size_t c = 0; c < table.cols(); ++c) {
        const double x0 = table.at(0, c);
        double offset = 0.0;
        for (std::size_t r = 0; r < table.rows(); ++r) offset += table.at(r, c) - x0;
        const double mean = x0 + offset / n;
        double ss = 0.0;
        for (std::size_t r = 0; r < table.rows(); ++r) {
            const double d = table.at(r, c) - mean;
            ss += d * d;
        }
        const double sd = std::sqrt(ss / n);
        s.mean.push_back(mean);
        s.scale.push_back(sd > 0.0 ? sd : 1.0);
    }
    return s;
}

Eigen::MatrixXd Standardizer::transform(const FeatureTable& table) const {
    Eigen::MatrixXd z(static_cast<Eigen::Index>(table.rows()), static_cast<Eigen::Index>(table.cols()));
    for (std::size_t r = 0; r < table.rows(); ++r)
        for (std::size_t c = 0; c < table.cols(); ++c)
            z(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                (table.at(r, c) - mean[c]) / scale[c];
    return z;
}

RidgeModel::RidgeModel(std::vector<std::string> schema, Standardizer stats, Eigen::VectorXd beta,
                       double target_mean)
    : FittedModel(std::move(schema)),
      stats_(std::move(stats)),
      beta_(std::move(beta)),
      target_mean_(target_mean) {}

std::vector<double> RidgeModel::coefficients() const {
    std::vector<double> out(static_cast<std::size_t>(beta_.size()));
    for (Eigen::Index j = 0; j < beta_.size(); ++j)
        out[static_cast<std::size_t>(j)] = beta_(j) / stats_.scale[static_cast<std::size_t>(j)];
    return out;
}

double RidgeModel::intercept() const {
    double b0 = target_mean_;
    const auto coef = coefficients();
    for (std::size_t j = 0; j < coef.size(); ++j) b0 -= coef[j] * stats_.mean[j];
    return b0;
}

std::vector<double> RidgeModel::predict_rows(const FeatureTable& rows) const {
    const Eigen::VectorXd pred = stats_.transform(rows) * beta_;
    std::vector<double> out(rows.rows());
    for (std::size_t r = 0; r < rows.rows(); ++r)
        out[r] = target_mean_ + pred(static_cast<Eigen::Index>(r));
    return out;
}

std::unique_ptr<FittedModel> RidgeBackend::fit(const FeatureTable& train, std::uint64_t) const {
    if (train.rows() == 0 || !train.has_target()) throw DataError("ridge needs a nonempty training table with target");
    Standardizer stats = Standardizer::fit(train);
    const Eigen::MatrixXd z = stats.transform(train);
    const auto& y = train.target();
    const double y0 = y.front();
    double offset = 0.0;
    for (double v : y) offset += v - y0;
    const double y_mean = y0 + offset / static_cast<double>(y.size());
    Eigen::VectorXd yc(static_cast<Eigen::Index>(y.size()));
    for (std::size_t r = 0; r < y.size(); ++r) yc(static_cast<Eigen::Index>(r)) = y[r] - y_mean;

    Eigen::VectorXd beta;
    if (lambda_ == 0.0) {
        beta = z.completeOrthogonalDecomposition().solve(yc);
    } else {
        Eigen::MatrixXd gram = z.transpose() * z;
        gram.diagonal().array() += lambda_;
        beta = gram.ldlt().solve(z.transpose() * yc);
    }
    if (!beta.allFinite()) throw BackendError("ridge solve produced non-finite coefficients");
    return std::make_unique<RidgeModel>(train.schema(), std::move(stats), std::move(beta), y_mean);
}

// ---------------------------------------------------------------------------
// k-NN
// ---------------------------------------------------------------------------

namespace {

class KnnModel : public FittedModel {
public:
    KnnModel(std::vector<std::string> schema, Standardizer stats, Eigen::MatrixXd rows,
             std::vector<double> targets, std::size_t k, KnnWeighting weighting)
        : FittedModel(std::move(schema)),
          stats_(std::move(stats)),
          rows_(std::move(rows)),
          targets_(std::move(targets)),
          k_(k),
          weighting_(weighting) {}

protected:
    std::vector<double> predict_rows(const FeatureTable& query) const override {
        const Eigen::MatrixXd q = stats_.transform(query);
        const std::size_t n = targets_.size();
        const std::size_t k = std::min(k_, n);
        std::vector<double> out(query.rows());
        std::vector<std::pair<double, std::size_t>> dist(n);
        for (std::size_t r = 0; r < query.rows(); ++r) {
            for (std::size_t i = 0; i < n; ++i)
                dist[i] = {(rows_.row(static_cast<Eigen::Index>(i)) - q.row(static_cast<Eigen::Index>(r)))
                               .squaredNorm(),
                           i};
            std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k), dist.end());
            const double base = targets_[dist.front().second];
            double acc = 0.0;
            double wsum = 0.0;
            const bool exact = dist.front().first == 0.0;
            for (std::size_t j = 0; j < k; ++j) {
                double w = 1.0;
                if (exact) {
                    if (dist[j].first != 0.0) continue;
                } else if (weighting_ == KnnWeighting::inverse_distance) {
                    w = 1.0 / std::sqrt(dist[j].first);
                }
                acc += w * (targets_[dist[j].second] - base);
                wsum += w;
            }
            out[r] = base + acc / wsum;
        }
        return out;
    }

private:
    Standardizer stats_;
    Eigen::MatrixXd rows_;
    std::vector<double> targets_;
    std::size_t k_;
    KnnWeighting weighting_;
};

/// Per-station training targets keyed by the time they describe (row t -> t + 1).
std::map<std::string, std::map<std::size_t, double>> targets_by_station(const FeatureTable& train) {
    if (!train.has_target() || train.rows() == 0) throw DataError("naive backends need training targets");
    std::map<std::string, std::map<std::size_t, double>> out;
    for (std::size_t r = 0; r < train.rows(); ++r)
        out[train.keys()[r].station][train.keys()[r].time_index + 1] = train.target()[r];
    return out;
}

class NaiveModel : public FittedModel {
public:
    NaiveModel(std::vector<std::string> schema, std::map<std::string, double> last)
        : FittedModel(std::move(schema)), last_(std::move(last)) {}

protected:
    std::vector<double> predict_rows(const FeatureTable& rows) const override {
        std::vector<double> out;
        for (const auto& key : rows.keys()) {
            const auto it = last_.find(key.station);
            if (it == last_.end()) throw BackendError("naive backend has no history for station " + key.station);
            out.push_back(it->second);
        }
        return out;
    }

private:
    std::map<std::string, double> last_;
};

class SeasonalNaiveModel : public FittedModel {
public:
    SeasonalNaiveModel(std::vector<std::string> schema,
                       std::map<std::string, std::map<std::size_t, double>> history, std::size_t period)
        : FittedModel(std::move(schema)), history_(std::move(history)), period_(period) {}

protected:
    std::vector<double> predict_rows(const FeatureTable& rows) const override {
        std::vector<double> out;
        for (const auto& key : rows.keys()) {
            const auto it = history_.find(key.station);
            if (it == history_.end())
                throw BackendError("seasonal_naive backend has no history for station " + key.station);
            const auto& h = it->second;
            const std::size_t forecast_time = key.time_index + 1;
            const std::size_t last = h.rbegin()->first;
            if (forecast_time < period_) throw BackendError("seasonal_naive: no value one period back");
            std::size_t j = forecast_time - period_;
            while (j > last) j -= period_;
            const auto v = h.find(j);
            if (v == h.end())
                throw BackendError("seasonal_naive: history for station " + key.station +
                                   " does not reach back one period");
            out.push_back(v->second);
        }
        return out;
    }

private:
    std::map<std::string, std::map<std::size_t, double>> history_;
    std::size_t period_;
};

}  // namespace

std::unique_ptr<FittedModel> KnnBackend::fit(const FeatureTable& train, std::uint64_t) const {
    if (train.rows() == 0 || !train.has_target()) throw DataError("knn needs a nonempty training table with target");
    Standardizer stats = Standardizer::fit(train);
    Eigen::MatrixXd rows = stats.transform(train);
    return std::make_unique<KnnModel>(train.schema(), std::move(stats), std::move(rows), train.target(), k_,
                                      weighting_);
}

std::unique_ptr<FittedModel> NaiveBackend::fit(const FeatureTable& train, std::uint64_t) const {
    std::map<std::string, double> last;
    for (const auto& [station, h] : targets_by_station(train)) last[station] = h.rbegin()->second;
    return std::make_unique<NaiveModel>(train.schema(), std::move(last));
}

std::unique_ptr<FittedModel> SeasonalNaiveBackend::fit(const FeatureTable& train, std::uint64_t) const {
    auto history = targets_by_station(train);
    for (const auto& [station, h] : history)
        if (h.size() < period_)
            throw DataError("seasonal_naive needs at least one full period of history for station " + station);
    return std::make_unique<SeasonalNaiveModel>(train.schema(), std::move(history), period_);
}

std::unique_ptr<Backend> make_backend(const BackendSpec& spec, std::size_t default_period) {
    spec.validate();
    switch (spec.id) {
        case BackendId::ridge: return std::make_unique<RidgeBackend>(spec.lambda);
        case BackendId::knn: return std::make_unique<KnnBackend>(spec.k, spec.weighting);
        case BackendId::naive: return std::make_unique<NaiveBackend>();
        case BackendId::seasonal_naive:
            return std::make_unique<SeasonalNaiveBackend>(spec.period.value_or(std::max<std::size_t>(1, default_period)));
        case BackendId::external:
            return std::make_unique<ExternalBackend>(spec.command, spec.timeout_seconds);
    }
    throw ConfigError("unsupported backend");
}

}  // namespace geopanel::forecasting
