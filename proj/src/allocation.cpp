#include "stratify/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <span>
#include <vector>

#include "stratify/error.hpp"

namespace stratify {

namespace {

// Realized variance must sit this far inside the bound so the CV check holds
// after the sqrt/divide round trip.
constexpr double kFeasibilitySlack = 1e-12;

double stratum_variance(double N, double S, double n) {
    return N * N * (1.0 - n / N) * S * S / n;
}

// Projected Newton ascent on the concave dual
//   D(lambda) = 2 sum_h sqrt(c_h sum_g lambda_g a_hg) - sum_g lambda_g,  lambda >= 0,
// whose gradient is the constraint slack sum_h a_hg / n_h - 1. Polishes the
// multiplicative iterate, which can crawl when constraints are nearly co-active.
// Returns true once the projected gradient is below kDualTol.
constexpr double kDualTol = 1e-12;

bool polish_dual(std::vector<double>& lambda, std::span<const double> a, std::span<const double> c,
                 std::size_t H, std::size_t G, int max_iter, int& iterations) {
    std::vector<double> w(H), grad(G), step(G), trial(G), hess(G * G);
    auto weights = [&](std::span<const double> lam, std::vector<double>& out) {
        for (std::size_t h = 0; h < H; ++h) {
            double wh = 0.0;
            for (std::size_t g = 0; g < G; ++g) wh += lam[g] * a[h * G + g];
            out[h] = wh;
        }
    };
    auto dual = [&](std::span<const double> lam) {
        std::vector<double> ww(H);
        weights(lam, ww);
        double d = 0.0;
        for (std::size_t h = 0; h < H; ++h) d += 2.0 * std::sqrt(c[h] * ww[h]);
        for (std::size_t g = 0; g < G; ++g) d -= lam[g];
        return d;
    };

    for (int it = 0; it < max_iter; ++it) {
        weights(lambda, w);
        std::fill(grad.begin(), grad.end(), -1.0);
        for (std::size_t h = 0; h < H; ++h) {
            if (w[h] <= 0.0) continue;
            const double inv_n = std::sqrt(c[h] / w[h]);
            for (std::size_t g = 0; g < G; ++g) grad[g] += a[h * G + g] * inv_n;
        }
        std::vector<std::size_t> free;
        double residual = 0.0;
        for (std::size_t g = 0; g < G; ++g) {
            if (lambda[g] > 0.0 || grad[g] > 0.0) {
                free.push_back(g);
                residual = std::max(residual, std::abs(grad[g]));
            }
        }
        if (residual < kDualTol) return true;
        ++iterations;

        // Negated Hessian on the free set: 0.5 sum_h sqrt(c_h) a_hg a_hk / w_h^1.5.
        const std::size_t F = free.size();
        std::fill(hess.begin(), hess.end(), 0.0);
        for (std::size_t h = 0; h < H; ++h) {
            if (w[h] <= 0.0) continue;
            const double k = 0.5 * std::sqrt(c[h]) / (w[h] * std::sqrt(w[h]));
            for (std::size_t i = 0; i < F; ++i)
                for (std::size_t j = 0; j < F; ++j) hess[i * F + j] += k * a[h * G + free[i]] * a[h * G + free[j]];
        }
        double diag = 0.0;
        for (std::size_t i = 0; i < F; ++i) diag = std::max(diag, hess[i * F + i]);
        for (std::size_t i = 0; i < F; ++i) {
            hess[i * F + i] += 1e-13 * diag;
            step[i] = grad[free[i]];
        }
        // Gaussian elimination with partial pivoting; F is tiny.
        for (std::size_t col = 0; col < F; ++col) {
            std::size_t piv = col;
            for (std::size_t r = col + 1; r < F; ++r)
                if (std::abs(hess[r * F + col]) > std::abs(hess[piv * F + col])) piv = r;
            if (hess[piv * F + col] == 0.0) return false;
            if (piv != col) {
                for (std::size_t j = 0; j < F; ++j) std::swap(hess[col * F + j], hess[piv * F + j]);
                std::swap(step[col], step[piv]);
            }
            for (std::size_t r = col + 1; r < F; ++r) {
                const double f = hess[r * F + col] / hess[col * F + col];
                for (std::size_t j = col; j < F; ++j) hess[r * F + j] -= f * hess[col * F + j];
                step[r] -= f * step[col];
            }
        }
        for (std::size_t i = F; i-- > 0;) {
            for (std::size_t j = i + 1; j < F; ++j) step[i] -= hess[i * F + j] * step[j];
            step[i] /= hess[i * F + i];
        }

        const double base = dual(lambda);
        double t = 1.0;
        bool moved = false;
        for (int halving = 0; halving < 60; ++halving, t *= 0.5) {
            trial = lambda;
            for (std::size_t i = 0; i < F; ++i) trial[free[i]] = std::max(0.0, lambda[free[i]] + t * step[i]);
            if (dual(trial) >= base) {
                moved = trial != lambda;
                break;
            }
        }
        if (!moved) return residual < 1e-9;
        lambda.swap(trial);
    }
    return false;
}

}  // namespace

PrecisionConstraints::PrecisionConstraints(std::size_t domains, std::size_t targets, double value)
    : PrecisionConstraints(domains, targets, std::vector<double>(domains * targets, value)) {}

PrecisionConstraints::PrecisionConstraints(std::size_t domains, std::size_t targets, std::vector<double> values)
    : domains_(domains), targets_(targets), values_(std::move(values)) {
    if (values_.size() != domains_ * targets_)
        throw Error(ErrorKind::LengthMismatch, "constraint matrix has the wrong number of entries");
    for (double u : values_)
        if (!(u >= 0.0) || !std::isfinite(u)) throw Error(ErrorKind::InvalidArgs, "CV limits must be finite and >= 0");
}

void CostModel::validate() const {
    if (!(fixed >= 0.0)) throw Error(ErrorKind::InvalidArgs, "fixed cost must be >= 0");
    if (!(unit > 0.0)) throw Error(ErrorKind::InvalidArgs, "unit cost must be > 0");
    for (double c : atomic_unit_costs)
        if (!(c > 0.0)) throw Error(ErrorKind::InvalidArgs, "atomic unit costs must be > 0");
}

void AllocationSettings::validate() const {
    if (min_units < 1) throw Error(ErrorKind::InvalidArgs, "min_units must be >= 1");
    if (max_iter < 1) throw Error(ErrorKind::InvalidArgs, "max_iter must be >= 1");
    if (!(tol > 0.0)) throw Error(ErrorKind::InvalidArgs, "tol must be > 0");
}

std::vector<double> stratum_unit_costs(const Stratification& strat, const CostModel& cost) {
    std::vector<double> out(strat.size(), cost.unit);
    if (cost.atomic_unit_costs.empty()) return out;
    if (cost.atomic_unit_costs.size() != strat.atoms.size())
        throw Error(ErrorKind::LengthMismatch, "one unit cost per atomic stratum is required");
    for (std::size_t h = 0; h < strat.size(); ++h) {
        double weighted = 0.0;
        for (std::size_t k : strat.strata[h].members) weighted += strat.atoms[k].N * cost.atomic_unit_costs[k];
        out[h] = weighted / strat.strata[h].N;
    }
    return out;
}

std::vector<double> variance_bounds(const Stratification& strat, std::span<const double> cv_limits) {
    const std::size_t G = strat.targets();
    if (cv_limits.size() != G) throw Error(ErrorKind::LengthMismatch, "one CV limit per target is required");
    std::vector<double> V(G, 0.0);
    for (std::size_t g = 0; g < G; ++g) {
        double total = 0.0;
        for (const auto& s : strat.strata) total += s.N * s.M[g];
        if (total == 0.0) throw Error(ErrorKind::ZeroTotal, "target " + std::to_string(g + 1) + " has zero total");
        const double bound = cv_limits[g] * total;
        V[g] = bound * bound;
    }
    return V;
}

ContinuousAllocation bethel_continuous(const Stratification& strat, std::span<const double> variance,
                                       std::span<const double> unit_costs, const AllocationSettings& settings) {
    const std::size_t H = strat.size();
    const std::size_t G = strat.targets();
    if (variance.size() != G) throw Error(ErrorKind::LengthMismatch, "one variance bound per target is required");
    if (unit_costs.size() != H) throw Error(ErrorKind::LengthMismatch, "one unit cost per stratum is required");

    ContinuousAllocation out;
    out.n.assign(H, 0.0);
    out.multipliers.assign(G, 0.0);

    if (std::any_of(variance.begin(), variance.end(), [](double v) { return v <= 0.0; })) {
        for (std::size_t h = 0; h < H; ++h) out.n[h] = strat.strata[h].N;
        return out;
    }

    // Strata whose unconstrained optimum exceeds N_h are taken whole and the
    // problem is re-solved over the rest.
    std::vector<char> census(H, 0);
    std::vector<double> a(H * G), w(H), alpha(G), next(G);
    for (std::size_t round = 0; round <= H; ++round) {
        std::vector<char> active(G, 0);
        std::size_t n_active = 0;
        for (std::size_t g = 0; g < G; ++g) {
            double denom = variance[g];
            for (std::size_t h = 0; h < H; ++h)
                if (!census[h]) denom += strat.strata[h].N * strat.strata[h].S[g] * strat.strata[h].S[g];
            double load = 0.0;
            for (std::size_t h = 0; h < H; ++h) {
                const auto& s = strat.strata[h];
                a[h * G + g] = census[h] ? 0.0 : s.N * s.N * s.S[g] * s.S[g] / denom;
                load += a[h * G + g];
            }
            if (load > 0.0) {
                active[g] = 1;
                ++n_active;
            }
        }

        std::fill(out.n.begin(), out.n.end(), 0.0);
        if (n_active == 0) break;

        for (std::size_t g = 0; g < G; ++g) alpha[g] = active[g] ? 1.0 / static_cast<double>(n_active) : 0.0;

        auto solve_for_alpha = [&] {
            double scale = 0.0;
            for (std::size_t h = 0; h < H; ++h) {
                double wh = 0.0;
                for (std::size_t g = 0; g < G; ++g) wh += alpha[g] * a[h * G + g];
                w[h] = wh;
                scale += std::sqrt(unit_costs[h] * wh);
            }
            for (std::size_t h = 0; h < H; ++h) out.n[h] = std::sqrt(w[h] / unit_costs[h]) * scale;
        };

        out.converged = false;
        for (int it = 0; it < settings.max_iter; ++it) {
            solve_for_alpha();
            ++out.iterations;
            double sum = 0.0;
            for (std::size_t g = 0; g < G; ++g) {
                if (!active[g]) {
                    next[g] = 0.0;
                    continue;
                }
                double ratio = 0.0;
                for (std::size_t h = 0; h < H; ++h)
                    if (out.n[h] > 0.0) ratio += a[h * G + g] / out.n[h];
                next[g] = alpha[g] * ratio * ratio;
                sum += next[g];
            }
            double delta = 0.0;
            for (std::size_t g = 0; g < G; ++g) {
                next[g] /= sum;
                delta = std::max(delta, std::abs(next[g] - alpha[g]));
            }
            alpha.swap(next);
            if (delta < settings.tol) break;
        }
        solve_for_alpha();

        double scale = 0.0;
        for (std::size_t h = 0; h < H; ++h) scale += std::sqrt(unit_costs[h] * w[h]);
        std::vector<double> lambda(G);
        for (std::size_t g = 0; g < G; ++g) lambda[g] = alpha[g] * scale * scale;
        out.converged = polish_dual(lambda, a, unit_costs, H, G, settings.max_iter, out.iterations);
        double total = 0.0;
        for (double l : lambda) total += l;
        for (std::size_t g = 0; g < G; ++g) alpha[g] = total > 0.0 ? lambda[g] / total : 0.0;
        for (std::size_t h = 0; h < H; ++h) {
            double wh = 0.0;
            for (std::size_t g = 0; g < G; ++g) wh += lambda[g] * a[h * G + g];
            out.n[h] = std::sqrt(wh / unit_costs[h]);
        }

        bool grew = false;
        for (std::size_t h = 0; h < H; ++h) {
            if (!census[h] && out.n[h] > strat.strata[h].N) {
                census[h] = 1;
                grew = true;
            }
        }
        if (!grew) break;
    }

    for (std::size_t h = 0; h < H; ++h)
        if (census[h]) out.n[h] = strat.strata[h].N;
    out.multipliers.assign(alpha.begin(), alpha.end());
    return out;
}

Allocation bethel_allocate(const Stratification& strat, std::span<const double> variance, const CostModel& cost,
                           const AllocationSettings& settings) {
    const std::size_t H = strat.size();
    const std::size_t G = strat.targets();
    const auto unit_costs = stratum_unit_costs(strat, cost);
    auto cont = bethel_continuous(strat, variance, unit_costs, settings);

    Allocation out;
    out.continuous = cont.n;
    out.converged = cont.converged;
    out.iterations = cont.iterations;
    for (std::size_t h = 0; h < H; ++h) out.continuous_cost += unit_costs[h] * cont.n[h];

    out.n.resize(H);
    for (std::size_t h = 0; h < H; ++h) {
        const auto N = static_cast<std::int64_t>(std::llround(strat.strata[h].N));
        auto n = static_cast<std::int64_t>(std::ceil(cont.n[h] - 1e-9));
        n = std::max<std::int64_t>(n, std::min<std::int64_t>(settings.min_units, N));
        out.n[h] = std::min(n, N);
    }

    // Greedy repair: raise the stratum giving the largest variance reduction
    // per unit cost on the most violated constraint.
    std::vector<double> var(G, 0.0);
    for (std::size_t g = 0; g < G; ++g)
        for (std::size_t h = 0; h < H; ++h)
            var[g] += stratum_variance(strat.strata[h].N, strat.strata[h].S[g], static_cast<double>(out.n[h]));
    for (;;) {
        std::size_t worst = G;
        double worst_ratio = 1.0;
        for (std::size_t g = 0; g < G; ++g) {
            const double limit = variance[g] * (1.0 - kFeasibilitySlack);
            if (var[g] > limit) {
                const double ratio = limit > 0.0 ? var[g] / limit : std::numeric_limits<double>::infinity();
                if (worst == G || ratio > worst_ratio) {
                    worst = g;
                    worst_ratio = ratio;
                }
            }
        }
        if (worst == G) break;

        std::size_t pick = H;
        double best_gain = 0.0;
        for (std::size_t h = 0; h < H; ++h) {
            const auto& s = strat.strata[h];
            const double n = static_cast<double>(out.n[h]);
            if (n >= s.N) continue;
            const double gain = s.N * s.N * s.S[worst] * s.S[worst] * (1.0 / n - 1.0 / (n + 1.0)) / unit_costs[h];
            if (pick == H || gain > best_gain) {
                pick = h;
                best_gain = gain;
            }
        }
        if (pick == H) break;  // everything is a census; var is exactly zero
        const auto& s = strat.strata[pick];
        const double n = static_cast<double>(out.n[pick]);
        for (std::size_t g = 0; g < G; ++g)
            var[g] += stratum_variance(s.N, s.S[g], n + 1.0) - stratum_variance(s.N, s.S[g], n);
        ++out.n[pick];
        if (out.n[pick] == static_cast<std::int64_t>(std::llround(s.N))) {
            // Recompute exactly so a full census contributes exactly zero.
            std::fill(var.begin(), var.end(), 0.0);
            for (std::size_t g = 0; g < G; ++g)
                for (std::size_t h = 0; h < H; ++h)
                    var[g] += stratum_variance(strat.strata[h].N, strat.strata[h].S[g],
                                               static_cast<double>(out.n[h]));
        }
    }

    for (auto n : out.n) out.total_n += n;
    out.cost = total_cost(out.n, unit_costs, cost.fixed);
    out.realized_cv = realized_cv(strat, out.n);
    return out;
}

Allocation allocate_for_cv(const Stratification& strat, std::span<const double> cv_limits, const CostModel& cost,
                           const AllocationSettings& settings) {
    const auto V = variance_bounds(strat, cv_limits);
    return bethel_allocate(strat, V, cost, settings);
}

std::vector<double> realized_cv(const Stratification& strat, std::span<const std::int64_t> n) {
    const std::size_t H = strat.size();
    const std::size_t G = strat.targets();
    if (n.size() != H) throw Error(ErrorKind::AllocationMismatch, "one sample size per stratum is required");
    for (std::size_t h = 0; h < H; ++h)
        if (n[h] < 1 || static_cast<double>(n[h]) > strat.strata[h].N)
            throw Error(ErrorKind::AllocationMismatch, "sample size outside [1, N_h] in stratum " + std::to_string(h + 1));
    std::vector<double> cv(G, 0.0);
    for (std::size_t g = 0; g < G; ++g) {
        double total = 0.0, var = 0.0;
        for (std::size_t h = 0; h < H; ++h) {
            const auto& s = strat.strata[h];
            total += s.N * s.M[g];
            var += stratum_variance(s.N, s.S[g], static_cast<double>(n[h]));
        }
        if (total == 0.0) throw Error(ErrorKind::ZeroTotal, "target " + std::to_string(g + 1) + " has zero total");
        cv[g] = std::sqrt(std::max(0.0, var)) / std::abs(total);
    }
    return cv;
}

double total_cost(std::span<const std::int64_t> n, std::span<const double> unit_costs, double fixed) {
    if (n.size() != unit_costs.size()) throw Error(ErrorKind::LengthMismatch, "one unit cost per stratum is required");
    double c = fixed;
    for (std::size_t h = 0; h < n.size(); ++h) c += unit_costs[h] * static_cast<double>(n[h]);
    return c;
}

double total_cost(std::span<const std::int64_t> n, const CostModel& cost, const Stratification& strat) {
    return total_cost(n, stratum_unit_costs(strat, cost), cost.fixed);
}

void write_allocation(std::ostream& out, const Stratification& strat, const Allocation& alloc) {
    out << "STRATUM_ID,N_h,n_h\n";
    for (std::size_t h = 0; h < strat.size(); ++h)
        out << (h + 1) << ',' << static_cast<std::int64_t>(std::llround(strat.strata[h].N)) << ',' << alloc.n[h]
            << '\n';
    const auto precision = out.precision(10);
    out << "# CV";
    for (double cv : alloc.realized_cv) out << ',' << cv;
    out << '\n';
    out.precision(precision);
}

}  // namespace stratify
