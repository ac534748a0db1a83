#pragma once

// Naive reference implementations written straight from the definitions.
// They favour obviousness over speed and share no code with the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace oracle {

using Vec = std::vector<double>;

inline Vec window(const Vec& x, std::size_t t, std::size_t w) {
    return Vec(x.begin() + static_cast<long>(t + 1 - w), x.begin() + static_cast<long>(t + 1));
}

inline double mean(const Vec& v) {
    long double s = 0;
    for (double x : v) s += x;
    return static_cast<double>(s / static_cast<long double>(v.size()));
}

inline double pvar(const Vec& v) {
    const long double m = mean(v);
    long double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return static_cast<double>(s / static_cast<long double>(v.size()));
}

inline double pstd(const Vec& v) { return std::sqrt(pvar(v)); }

inline double minimum(const Vec& v) {
    double m = v[0];
    for (double x : v)
        if (x < m) m = x;
    return m;
}

inline double maximum(const Vec& v) {
    double m = v[0];
    for (double x : v)
        if (x > m) m = x;
    return m;
}

inline double percentile(Vec v, double p) {
    // insertion sort keeps this independent of the library's std::sort use
    for (std::size_t i = 1; i < v.size(); ++i)
        for (std::size_t j = i; j > 0 && v[j - 1] > v[j]; --j) std::swap(v[j - 1], v[j]);
    const double pos = p / 100.0 * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

// --- basic statistical features ---

inline double cv(const Vec& x, std::size_t t, std::size_t w, double eps) {
    const Vec win = window(x, t, w);
    return pstd(win) / (mean(win) + eps);
}

inline double iqr(const Vec& x, std::size_t t, std::size_t w) {
    const Vec win = window(x, t, w);
    return percentile(win, 75) - percentile(win, 25);
}

inline std::pair<double, double> cumulative(const Vec& x, std::size_t t, std::size_t w, double eps) {
    double s = 0;
    for (std::size_t j = t + 1 - w; j <= t; ++j) s += x[j];
    return {s, x[t] / (s + eps)};
}

// Least squares via Gaussian elimination on the normal equations (long double).
inline std::vector<long double> polyfit(const Vec& y, int degree) {
    const int m = degree + 1;
    std::vector<std::vector<long double>> a(m, std::vector<long double>(m + 1, 0));
    for (std::size_t i = 0; i < y.size(); ++i) {
        std::vector<long double> pw(m);
        for (int k = 0; k < m; ++k) pw[k] = std::pow(static_cast<long double>(i), k);
        for (int r = 0; r < m; ++r) {
            for (int c = 0; c < m; ++c) a[r][c] += pw[r] * pw[c];
            a[r][m] += pw[r] * y[i];
        }
    }
    for (int col = 0; col < m; ++col) {
        int piv = col;
        for (int r = col + 1; r < m; ++r)
            if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
        std::swap(a[col], a[piv]);
        for (int r = 0; r < m; ++r) {
            if (r == col) continue;
            const long double f = a[r][col] / a[col][col];
            for (int c = col; c <= m; ++c) a[r][c] -= f * a[col][c];
        }
    }
    std::vector<long double> coef(m);
    for (int k = 0; k < m; ++k) coef[k] = a[k][m] / a[k][k];
    return coef;
}

inline std::pair<double, double> trend(const Vec& x, std::size_t t, std::size_t w, int degree) {
    const auto c = polyfit(window(x, t, w), degree);
    long double fit = 0;
    for (int k = 0; k <= degree; ++k) fit += c[k] * std::pow(static_cast<long double>(w - 1), k);
    return {static_cast<double>(c[degree]), static_cast<double>(fit)};
}

struct Cyclic {
    double mean, std, anomaly;
};

inline Cyclic cyclic(const Vec& x, const std::vector<int>& units, std::size_t t, double eps) {
    Vec prior;
    for (std::size_t j = 0; j < t; ++j)
        if (units[j] == units[t]) prior.push_back(x[j]);
    if (prior.size() < 2) return {x[t], 0, 0};
    const double m = mean(prior), s = pstd(prior);
    return {m, s, (x[t] - m) / (s + eps)};
}

inline bool peak_at(const Vec& x, std::size_t j, std::size_t w, double q) {
    if (!(x[j - 1] < x[j])) return false;
    if (!(x[j] >= x[j + 1])) return false;
    Vec win;
    for (std::size_t i = 0; i <= j; ++i)
        if (i + w > j) win.push_back(x[i]);
    return x[j] > percentile(win, q);
}

inline std::pair<double, double> peaks(const Vec& x, std::size_t t, std::size_t w, double q) {
    const double flag = peak_at(x, t - 1, w, q) ? 1.0 : 0.0;
    double steps = static_cast<double>(w);
    for (std::size_t j = 1; j <= t - 1; ++j)
        if (peak_at(x, j, w, q)) steps = std::min(static_cast<double>(w), static_cast<double>(t - j));
    return {flag, steps};
}

struct Dynamics {
    double zscore, trend_dir, relpos;
};

inline Dynamics dynamics(const Vec& x, std::size_t t, std::size_t w, double eps) {
    const Vec win = window(x, t, w);
    const double m = mean(win);
    double dir = 0;
    if (t >= w) {
        const double prev = mean(window(x, t - 1, w));
        dir = m > prev ? 1 : (m < prev ? -1 : 0);
    }
    return {(x[t] - m) / (pstd(win) + eps), dir, (x[t] - minimum(win)) / (maximum(win) - minimum(win) + eps)};
}

// --- regime ---

inline double variance_ratio(const Vec& x, std::size_t t, std::size_t s, std::size_t l, double eps) {
    return pvar(window(x, t, s)) / (pvar(window(x, t, l)) + eps);
}

inline std::vector<std::size_t> thirds(std::size_t n) {
    // hand out points one at a time, earliest segment first
    std::vector<std::size_t> len(3, 0);
    for (std::size_t i = 0; i < n; ++i) len[i % 3] += 1;
    return len;
}

struct Stages {
    double m1, m2, m3, c12, c23;
};

inline Stages stages(const Vec& x, std::size_t t, double eps) {
    const auto len = thirds(t + 1);
    Vec a(x.begin(), x.begin() + static_cast<long>(len[0]));
    Vec b(x.begin() + static_cast<long>(len[0]), x.begin() + static_cast<long>(len[0] + len[1]));
    Vec c(x.begin() + static_cast<long>(len[0] + len[1]), x.begin() + static_cast<long>(t + 1));
    const double m1 = mean(a), m2 = mean(b), m3 = mean(c);
    return {m1, m2, m3, (m2 - m1) / (std::fabs(m1) + eps), (m3 - m2) / (std::fabs(m2) + eps)};
}

// --- spatial ---

inline double pearson(const Vec& a, const Vec& b) {
    if (minimum(a) == maximum(a) || minimum(b) == maximum(b)) return 0;
    const long double ma = mean(a), mb = mean(b);
    long double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return static_cast<double>(sab / std::sqrt(saa * sbb));
}

/// values[s] is a full series; dist is row-major n x n.
struct Geometry {
    std::vector<std::string> ids;
    Vec dist;
    double sigma;
    std::size_t n() const { return ids.size(); }
    double d(std::size_t i, std::size_t j) const { return dist[i * n() + j]; }
    double w(std::size_t i, std::size_t j) const { return std::exp(-d(i, j) / sigma); }

    std::vector<std::size_t> ranked(std::size_t i) const {
        std::vector<std::size_t> out;
        for (std::size_t j = 0; j < n(); ++j)
            if (j != i) out.push_back(j);
        // selection sort on (distance, id)
        for (std::size_t a = 0; a < out.size(); ++a)
            for (std::size_t b = a + 1; b < out.size(); ++b) {
                const auto key = [&](std::size_t s) { return std::make_pair(d(i, s), ids[s]); };
                if (key(out[b]) < key(out[a])) std::swap(out[a], out[b]);
            }
        return out;
    }
};

inline double dwavg(const Geometry& g, const Vec& at_t, std::size_t i) {
    long double num = 0, den = 0;
    for (std::size_t j = 0; j < g.n(); ++j) {
        if (j == i) continue;
        num += g.w(i, j) * at_t[j];
        den += g.w(i, j);
    }
    if (den < 1e-12) {
        Vec others;
        for (std::size_t j = 0; j < g.n(); ++j)
            if (j != i) others.push_back(at_t[j]);
        return mean(others);
    }
    return static_cast<double>(num / den);
}

inline std::pair<double, double> gradient(const Geometry& g, const std::vector<Vec>& series, std::size_t i,
                                          std::size_t t, std::size_t w) {
    const double own = mean(window(series[i], t, w));
    const double nn1 = mean(window(series[g.ranked(i).front()], t, w));
    Vec others;
    for (std::size_t j = 0; j < g.n(); ++j)
        if (j != i) others.push_back(mean(window(series[j], t, w)));
    return {own - nn1, own - mean(others)};
}

struct Sync {
    double mean, std, dev;
};

inline Sync sync(const Vec& at_t, std::size_t i, double eps) {
    const double m = mean(at_t), s = pstd(at_t);
    return {m, s, (at_t[i] - m) / (s + eps)};
}

struct Cross {
    double mean, std, corr;
};

inline Cross cross(const std::vector<Vec>& series, std::size_t i, std::size_t t, std::size_t w) {
    Vec regional, loo, own;
    for (std::size_t u = t + 1 - w; u <= t; ++u) {
        Vec all, others;
        for (std::size_t j = 0; j < series.size(); ++j) {
            all.push_back(series[j][u]);
            if (j != i) others.push_back(series[j][u]);
        }
        regional.push_back(mean(all));
        loo.push_back(mean(others));
        own.push_back(series[i][u]);
    }
    return {mean(regional), pstd(regional), pearson(own, loo)};
}

// --- metrics ---

inline double mse(const Vec& y, const Vec& p) {
    long double s = 0;
    for (std::size_t i = 0; i < y.size(); ++i) s += (y[i] - p[i]) * (y[i] - p[i]);
    return static_cast<double>(s / y.size());
}

inline double mae(const Vec& y, const Vec& p) {
    long double s = 0;
    for (std::size_t i = 0; i < y.size(); ++i) s += std::fabs(y[i] - p[i]);
    return static_cast<double>(s / y.size());
}

inline std::optional<double> mape(const Vec& y, const Vec& p) {
    long double s = 0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (std::fabs(y[i]) <= 1e-9) return std::nullopt;
        s += std::fabs((y[i] - p[i]) / y[i]);
    }
    return static_cast<double>(100.0L * s / y.size());
}

struct Kge {
    double kge, r, beta, gamma;
};

inline std::optional<Kge> kge(const Vec& y, const Vec& p) {
    if (y.size() < 2) return std::nullopt;
    const double my = mean(y), mp = mean(p), sy = pstd(y), sp = pstd(p);
    if (sy == 0 || sp == 0 || my == 0 || mp == 0) return std::nullopt;
    long double cov = 0;
    for (std::size_t i = 0; i < y.size(); ++i) cov += (y[i] - my) * (p[i] - mp);
    cov /= y.size();
    const double r = static_cast<double>(cov / (sy * sp));
    const double beta = mp / my;
    const double gamma = (sp / mp) / (sy / my);
    const double k = 1 - std::sqrt((r - 1) * (r - 1) + (beta - 1) * (beta - 1) + (gamma - 1) * (gamma - 1));
    return Kge{k, r, beta, gamma};
}

// --- misc ---

inline std::string fnv1a64_hex(const std::string& text) {
    unsigned long long h = 14695981039346656037ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i, h >>= 4) out[static_cast<std::size_t>(i)] = digits[h & 0xF];
    return out;
}

inline bool close(double a, double b, double abs_tol) {
    if (std::isnan(a) || std::isnan(b)) return false;
    return std::fabs(a - b) <= abs_tol;
}

inline bool close_rel(double a, double b, double rel_tol) {
    if (std::isnan(a) || std::isnan(b)) return false;
    return std::fabs(a - b) <= rel_tol * std::max({1.0, std::fabs(a), std::fabs(b)});
}

}  // namespace oracle
