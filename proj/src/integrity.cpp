#include "vdll/integrity.hpp"

#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>

namespace vdll {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr int kMaxDof = 64;
constexpr int kMinRaimSatellites = 5;
constexpr int kMinFdeSatellites = 6;
constexpr int kGeometryColumns = 4;

// ln Gamma(dof / 2), exact recursion from Gamma(1) = 1 and Gamma(1/2) = sqrt(pi).
double log_gamma_half(int dof) {
    double a = (dof % 2 == 0) ? 1.0 : 0.5;
    double value = (dof % 2 == 0) ? 0.0 : 0.5 * std::log(kPi);
    while (a < 0.5 * dof) {
        value += std::log(a);
        a += 1.0;
    }
    return value;
}

double lower_gamma_series(double a, double x, double log_prefix) {
    double term = 1.0 / a;
    double sum = term;
    for (int n = 1; n < 1000; ++n) {
        term *= x / (a + n);
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-17) break;
    }
    return sum * std::exp(log_prefix);
}

// Modified Lentz evaluation of the continued fraction for Q(a, x).
double upper_gamma_fraction(double a, double x, double log_prefix) {
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 1000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-17) break;
    }
    return std::exp(log_prefix) * h;
}

void check_dof(int dof) {
    if (dof < 1 || dof > kMaxDof) throw std::invalid_argument("chi-square dof must be in [1, 64]");
}

double chi_square_pdf(int dof, double x) {
    if (x <= 0.0) return 0.0;
    const double a = 0.5 * dof;
    return std::exp((a - 1.0) * std::log(x) - 0.5 * x - a * std::log(2.0) - log_gamma_half(dof));
}

double solve_quantile(int dof, double p) {
    double lo = 0.0;
    double hi = std::max(1.0, static_cast<double>(dof));
    while (chi_square_cdf(dof, hi) < p) {
        lo = hi;
        hi *= 2.0;
    }
    double x = 0.5 * (lo + hi);
    for (int iter = 0; iter < 200; ++iter) {
        const double f = chi_square_cdf(dof, x) - p;
        if (f == 0.0) return x;
        if (f < 0.0) lo = x; else hi = x;

        // Newton step when it stays inside the bracket, otherwise bisect.
        const double slope = chi_square_pdf(dof, x);
        double next = slope > 0.0 ? x - f / slope : lo - 1.0;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - x) <= 1e-13 * std::max(1.0, x)) return next;
        x = next;
    }
    return x;
}

struct Geometry {
    std::vector<int> sv_ids;
    MatrixXd G;
    VectorXd y;
    VectorXd variances;
};

Geometry geometry_of(const MeasurementSet& z, const MeasurementModel& mm, int skip_sv = -1) {
    std::vector<MeasurementEntry> used;
    for (const auto& e : z.entries) {
        if (e.valid && e.sv_id != skip_sv) used.push_back(e);
    }
    const auto m = static_cast<Index>(used.size());
    Geometry g;
    g.G.resize(m, kGeometryColumns);
    g.y.resize(m);
    g.variances.resize(m);
    for (Index i = 0; i < m; ++i) {
        const auto& e = used[static_cast<std::size_t>(i)];
        const Index row = mm.row_of(e.sv_id);
        g.G(i, 0) = mm.jacobian(row, kPosX);
        g.G(i, 1) = mm.jacobian(row, kPosY);
        g.G(i, 2) = mm.jacobian(row, kPosZ);
        g.G(i, 3) = mm.jacobian(row, kClockBias);
        g.y(i) = e.residual;
        g.variances(i) = e.variance;
        g.sv_ids.push_back(e.sv_id);
    }
    return g;
}

ResidualTest residual_test(const Geometry& g) {
    if (g.G.rows() < kMinRaimSatellites) return {};
    return weighted_residual_statistic(g.G, g.y, g.variances);
}

}  // namespace

double chi_square_cdf(int dof, double x) {
    check_dof(dof);
    if (x <= 0.0) return 0.0;
    const double a = 0.5 * dof;
    const double hx = 0.5 * x;
    const double log_prefix = a * std::log(hx) - hx - log_gamma_half(dof);
    if (hx < a + 1.0) return lower_gamma_series(a, hx, log_prefix);
    return 1.0 - upper_gamma_fraction(a, hx, log_prefix);
}

double chi_square_quantile(int dof, double p) {
    check_dof(dof);
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("chi-square quantile needs 0 < p < 1");

    // Thresholds repeat every epoch; memoize per thread.
    thread_local std::map<std::pair<int, double>, double> cache;
    const auto key = std::make_pair(dof, p);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
    const double x = solve_quantile(dof, p);
    cache.emplace(key, x);
    return x;
}

ResidualTest weighted_residual_statistic(const MatrixXd& G, const VectorXd& y, const VectorXd& variances) {
    ResidualTest out;
    const Index m = G.rows();
    out.dof = static_cast<int>(m - G.cols());
    if (out.dof < 1) return out;

    const VectorXd w = variances.cwiseSqrt().cwiseInverse();
    const MatrixXd A = w.asDiagonal() * G;
    const VectorXd b = w.cwiseProduct(y);
    Eigen::ColPivHouseholderQR<MatrixXd> qr(A);
    qr.setThreshold(1e-10);
    if (qr.rank() < G.cols()) return out;

    const VectorXd delta = qr.solve(b);
    out.statistic = (b - A * delta).squaredNorm();
    out.available = true;
    return out;
}

ResidualTest ls_residual_statistic(const MeasurementSet& z, const MeasurementModel& mm) {
    return residual_test(geometry_of(z, mm));
}

const char* to_string(RaimCapability c) {
    switch (c) {
    case RaimCapability::unavailable: return "unavailable";
    case RaimCapability::detect_only: return "detect_only";
    case RaimCapability::detect_and_exclude: return "detect_and_exclude";
    }
    return "unknown";
}

RaimVerdict raim_detect(const MeasurementSet& z, const MeasurementModel& mm, const IntegrityConfig& cfg) {
    RaimVerdict v;
    v.ran = true;
    const Geometry g = geometry_of(z, mm);
    const ResidualTest test = residual_test(g);
    if (!test.available) return v;

    v.statistic = test.statistic;
    v.degrees_of_freedom = test.dof;
    v.threshold = chi_square_quantile(test.dof, 1.0 - cfg.false_alarm_prob);
    v.detected = v.statistic > v.threshold;
    const bool can_exclude = cfg.fde_enabled && g.G.rows() >= kMinFdeSatellites;
    v.capability = can_exclude ? RaimCapability::detect_and_exclude : RaimCapability::detect_only;
    return v;
}

RaimVerdict fde_exclude(const MeasurementSet& z, const MeasurementModel& mm, const IntegrityConfig& cfg) {
    RaimVerdict v = raim_detect(z, mm, cfg);
    if (!v.detected || v.capability != RaimCapability::detect_and_exclude) return v;

    const Geometry full = geometry_of(z, mm);
    int best_sv = -1;
    double best_stat = std::numeric_limits<double>::infinity();
    for (int sv : full.sv_ids) {
        const ResidualTest sub = residual_test(geometry_of(z, mm, sv));
        if (!sub.available) continue;
        const double thr = chi_square_quantile(sub.dof, 1.0 - cfg.false_alarm_prob);
        // sv_ids ascend, so strict < keeps the lowest id on ties.
        if (sub.statistic <= thr && sub.statistic < best_stat) {
            best_stat = sub.statistic;
            best_sv = sv;
        }
    }
    if (best_sv < 0) return v;

    MeasurementSet reduced = z;
    for (auto& e : reduced.entries) {
        if (e.sv_id == best_sv) e.valid = false;
    }
    const RaimVerdict confirm = raim_detect(reduced, mm, cfg);
    if (confirm.detected || confirm.capability == RaimCapability::unavailable) return v;

    v.excluded.insert(best_sv);
    return v;
}

RaimVerdict integrity_check(const MeasurementSet& z, const MeasurementModel& mm, const IntegrityConfig& cfg) {
    if (!cfg.raim_enabled) return {};
    RaimVerdict v = cfg.fde_enabled ? fde_exclude(z, mm, cfg) : raim_detect(z, mm, cfg);
    v.unresolved = v.detected && v.excluded.empty();
    return v;
}

MeasurementSet gate_measurements(const MeasurementSet& z, const RaimVerdict& verdict) {
    MeasurementSet out = z;
    for (auto& e : out.entries) {
        if (!e.valid) continue;
        if (verdict.unresolved) {
            e.valid = false;
            e.status = EntryStatus::unresolved;
        } else if (verdict.excluded.count(e.sv_id) != 0) {
            e.valid = false;
            e.status = EntryStatus::excluded;
        }
    }
    return out;
}

}  // namespace vdll
