#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "geopanel/core.hpp"

namespace geopanel::forecasting {

enum class BackendId { ridge, knn, naive, seasonal_naive, external };
enum class KnnWeighting { uniform, inverse_distance };

std::string_view to_string(BackendId id);
BackendId parse_backend_id(std::string_view text);
std::string_view to_string(KnnWeighting w);
KnnWeighting parse_knn_weighting(std::string_view text);

struct BackendSpec {
    BackendId id = BackendId::ridge;
    double lambda = 1.0;
    std::size_t k = 5;
    KnnWeighting weighting = KnnWeighting::inverse_distance;
    std::optional<std::size_t> period;  // seasonal_naive; frequency default when unset
    std::string command;                // external
    double timeout_seconds = 120.0;     // external

    void validate() const;
};

/// A fitted model. predict() checks that the rows carry exactly the
/// training schema (names and order) before delegating.
class FittedModel {
public:
    explicit FittedModel(std::vector<std::string> schema) : schema_(std::move(schema)) {}
    virtual ~FittedModel() = default;

    const std::vector<std::string>& schema() const noexcept { return schema_; }
    std::vector<double> predict(const FeatureTable& rows) const;

protected:
    virtual std::vector<double> predict_rows(const FeatureTable& rows) const = 0;

private:
    std::vector<std::string> schema_;
};

class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string id() const = 0;
    /// Training rows must carry a target. Row (station, t) targets the
    /// station's value at t + 1.
    virtual std::unique_ptr<FittedModel> fit(const FeatureTable& train, std::uint64_t seed) const = 0;
};

/// Builds a built-in or external backend. `default_period` is used by
/// seasonal_naive when the spec leaves the period unset.
std::unique_ptr<Backend> make_backend(const BackendSpec& spec, std::size_t default_period);

/// Throws SchemaMismatch describing missing, unexpected and reordered names.
void check_schema(const std::vector<std::string>& expected, const std::vector<std::string>& actual);

// ---------------------------------------------------------------------------
// Built-in backends
// ---------------------------------------------------------------------------

/// Per-feature z-scoring statistics (population std; constant columns get scale 1).
struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale;

    static Standardizer fit(const FeatureTable& table);
    Eigen::MatrixXd transform(const FeatureTable& table) const;
};

class RidgeModel : public FittedModel {
public:
    RidgeModel(std::vector<std::string> schema, Standardizer stats, Eigen::VectorXd beta,
               double target_mean);

    /// Coefficients and intercept on the original feature scale.
    std::vector<double> coefficients() const;
    double intercept() const;

protected:
    std::vector<double> predict_rows(const FeatureTable& rows) const override;

private:
    Standardizer stats_;
    Eigen::VectorXd beta_;  // on z-scored features
    double target_mean_;
};

/// Closed-form ridge with an unpenalized intercept.
class RidgeBackend : public Backend {
public:
    explicit RidgeBackend(double lambda) : lambda_(lambda) {}
    std::string id() const override { return "ridge"; }
    std::unique_ptr<FittedModel> fit(const FeatureTable& train, std::uint64_t seed) const override;

private:
    double lambda_;
};

class KnnBackend : public Backend {
public:
    KnnBackend(std::size_t k, KnnWeighting weighting) : k_(k), weighting_(weighting) {}
    std::string id() const override { return "knn"; }
    std::unique_ptr<FittedModel> fit(const FeatureTable& train, std::uint64_t seed) const override;

private:
    std::size_t k_;
    KnnWeighting weighting_;
};

/// Repeats each station's last training target.
class NaiveBackend : public Backend {
public:
    std::string id() const override { return "naive"; }
    std::unique_ptr<FittedModel> fit(const FeatureTable& train, std::uint64_t seed) const override;
};

/// Predicts the value `period` steps before the forecast time, cycling
/// through the last observed season beyond the training range.
class SeasonalNaiveBackend : public Backend {
public:
    explicit SeasonalNaiveBackend(std::size_t period) : period_(period) {}
    std::string id() const override { return "seasonal_naive"; }
    std::unique_ptr<FittedModel> fit(const FeatureTable& train, std::uint64_t seed) const override;

private:
    std::size_t period_;
};

}  // namespace geopanel::forecasting
