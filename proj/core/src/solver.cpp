#include "phaseret/solver.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <limits>
#include <random>
#include <utility>

#include "phaseret/fft.hpp"

namespace phaseret {

namespace {
constexpr double kTwoPi = 6.283185307179586476925287;
constexpr double kPi = 3.141592653589793238462643;
}  // namespace

Algorithm algorithm_from_name(const std::string& name) {
    if (name == "er") return Algorithm::er;
    if (name == "hio") return Algorithm::hio;
    if (name == "oss") return Algorithm::oss;
    if (name == "gps-r") return Algorithm::gps_r;
    if (name == "gps-f") return Algorithm::gps_f;
    if (name == "gps-rf") return Algorithm::gps_rf;
    throw std::invalid_argument("unknown algorithm: " + name);
}

std::string algorithm_name(Algorithm a) {
    switch (a) {
        case Algorithm::er: return "er";
        case Algorithm::hio: return "hio";
        case Algorithm::oss: return "oss";
        case Algorithm::gps_r: return "gps-r";
        case Algorithm::gps_f: return "gps-f";
        case Algorithm::gps_rf: return "gps-rf";
    }
    return "?";
}

double sigma_at(const Schedule& schedule, int iteration) {
    if (iteration < 0) throw std::invalid_argument("sigma_at: negative iteration");
    const auto& bp = schedule.sigma_breakpoints;
    if (bp.empty() || bp.front().start_iteration != 0)
        throw std::invalid_argument("sigma_at: schedule must start at iteration 0");
    double sigma = bp.front().sigma;
    for (const auto& p : bp) {
        if (p.start_iteration <= iteration) sigma = p.sigma;
        else break;
    }
    return sigma;
}

namespace {

std::vector<double> linspace(double a, double b, int count) {
    std::vector<double> out(count);
    for (int i = 0; i < count; ++i)
        out[i] = (count == 1) ? a : a + (b - a) * double(i) / double(count - 1);
    return out;
}

void validate_sigma(const std::vector<SigmaBreakpoint>& bp) {
    if (bp.empty() || bp.front().start_iteration != 0)
        throw std::invalid_argument("Schedule: sigma breakpoints must start at 0");
    for (std::size_t i = 0; i < bp.size(); ++i) {
        if (bp[i].sigma < 0.0)
            throw std::invalid_argument("Schedule: sigma must be >= 0");
        if (i > 0 && bp[i].start_iteration <= bp[i - 1].start_iteration)
            throw std::invalid_argument("Schedule: sigma breakpoints must be increasing");
    }
}

// Heat time for which the variance-2*gamma Gaussian transfer function equals
// the exp(-k^2/(2 alpha^2)) low-pass on a square lattice of side m.
double heat_gamma_from_alpha(double alpha, int m) {
    return double(m) * double(m) / (8.0 * kPi * kPi * alpha * alpha);
}

}  // namespace

Schedule resolve_schedule(const Schedule& in, Algorithm alg, Lattice lat, double s) {
    if (in.stages < 1) throw std::invalid_argument("Schedule: stages must be >= 1");
    if (in.iters_per_stage < 0)
        throw std::invalid_argument("Schedule: iterations must be >= 0");

    Schedule out = in;
    if (out.sigma_breakpoints.empty())
        out.sigma_breakpoints = {{0, 0.01}, {400, 0.1}};
    validate_sigma(out.sigma_breakpoints);

    const int m = std::max(lat.n1, lat.n2);
    const bool wants_alpha = (alg == Algorithm::gps_r || alg == Algorithm::oss);

    // Every default filter ladder follows the OSS convention: cutoffs fall
    // linearly from 2m to m/10, so smoothing strengthens stage by stage.
    // Early stages run with a nearly inactive filter (free exploration),
    // late stages converge under strong smoothing.
    if (out.filter_per_stage.empty()) {
        switch (alg) {
            case Algorithm::gps_r:
            case Algorithm::oss:
                out.filter_per_stage = linspace(2.0 * m, m / 10.0, out.stages);
                break;
            case Algorithm::gps_f:
            case Algorithm::gps_rf: {
                // gamma equivalent of the same cutoff ladder:
                // exp(-s*gamma*r^2) == exp(-r^2/(2 alpha^2))
                const auto alphas = linspace(2.0 * m, m / 10.0, out.stages);
                out.filter_per_stage.resize(out.stages);
                for (int l = 0; l < out.stages; ++l)
                    out.filter_per_stage[l] =
                        1.0 / (2.0 * s * alphas[l] * alphas[l]);
                break;
            }
            case Algorithm::er:
            case Algorithm::hio:
                out.filter_per_stage.assign(out.stages, 0.0);
                break;
        }
    }
    if (int(out.filter_per_stage.size()) != out.stages)
        throw std::invalid_argument("Schedule: filter list length must equal stages");
    for (double f : out.filter_per_stage) {
        if (wants_alpha ? !(f > 0.0) : f < 0.0)
            throw std::invalid_argument("Schedule: invalid filter value");
    }
    // Smoothing must strengthen (or hold) across stages: cutoffs fall,
    // gamma weights rise.
    for (std::size_t i = 1; i < out.filter_per_stage.size(); ++i) {
        const double prev = out.filter_per_stage[i - 1], cur = out.filter_per_stage[i];
        if ((alg == Algorithm::gps_r || alg == Algorithm::oss) && cur > prev)
            throw std::invalid_argument("Schedule: cutoffs must be nonincreasing");
        if ((alg == Algorithm::gps_f || alg == Algorithm::gps_rf) && cur < prev)
            throw std::invalid_argument("Schedule: gps-f gammas must be nondecreasing");
    }

    if (alg == Algorithm::gps_rf) {
        if (out.alpha_per_stage.empty())
            out.alpha_per_stage = linspace(2.0 * m, m / 10.0, out.stages);
        if (int(out.alpha_per_stage.size()) != out.stages)
            throw std::invalid_argument("Schedule: alpha list length must equal stages");
        for (std::size_t i = 0; i < out.alpha_per_stage.size(); ++i) {
            if (!(out.alpha_per_stage[i] > 0.0))
                throw std::invalid_argument("Schedule: alpha must be > 0");
            if (i > 0 && out.alpha_per_stage[i] > out.alpha_per_stage[i - 1])
                throw std::invalid_argument(
                    "Schedule: gps-rf cutoffs must be nonincreasing");
        }
    }
    return out;
}

double rf_factor(const Field& z, const MagnitudeData& data) {
    if (z.lattice != data.lattice)
        throw std::invalid_argument("rf_factor: lattice mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        if (!data.measured[i]) continue;
        num += std::abs(std::abs(z.v[i]) - data.b[i]);
        den += data.b[i];
    }
    if (den == 0.0)
        throw std::invalid_argument("rf_factor: measured magnitudes are all zero");
    return num / den;
}

namespace {

Field random_phase_start(const MagnitudeData& data, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    Field z(data.lattice);
    for (std::size_t i = 0; i < z.size(); ++i) {
        const double theta = kTwoPi * uni(rng);
        z.v[i] = data.measured[i] ? std::polar(data.b[i], theta) : cplx(0.0, 0.0);
    }
    return z;
}

void warn_step_sizes(const SolverConfig& c) {
    if (c.s * c.t > 1.0 + 1e-12)
        std::cerr << "warning: s*t = " << c.s * c.t
                  << " > 1 may destabilize the primal-dual iteration\n";
}

void check_finite_or_throw(const Field& f, int iteration) {
    if (!all_finite(f)) throw DivergenceError(iteration);
}

struct BestTracker {
    double rf = std::numeric_limits<double>::infinity();
    Field estimate;  // Fourier-domain iterate stored at the best monitored rf

    bool offer(double rf_k, const Field& est) {
        if (rf_k < rf) {
            rf = rf_k;
            estimate = est;
            return true;
        }
        return false;
    }
};

RunRecord finish(BestTracker&& best, std::vector<double>&& trace, int iters,
                 SolverConfig&& echo) {
    RunRecord rec;
    rec.rf_trace = std::move(trace);
    rec.best_rf = best.rf;
    rec.final_image = idft2(best.estimate);
    rec.best_iterate = std::move(best.estimate);
    rec.iterations_run = iters;
    rec.config_echo = std::move(echo);
    return rec;
}

}  // namespace

RunRecord run_gps(const MagnitudeData& data, const SupportMask& support,
                  const SolverConfig& config, GpsVariant variant, const Field* init,
                  const IterObserver& observer) {
    if (data.lattice != support.lattice)
        throw std::invalid_argument("run_gps: lattice mismatch");
    if (!(config.t > 0.0) || !(config.s > 0.0))
        throw std::invalid_argument("run_gps: step sizes must be positive");
    warn_step_sizes(config);

    const Lattice lat = data.lattice;
    const Algorithm alg = variant == GpsVariant::real      ? Algorithm::gps_r
                          : variant == GpsVariant::fourier ? Algorithm::gps_f
                                                           : Algorithm::gps_rf;
    SolverConfig echo = config;
    echo.algorithm = alg;
    echo.schedule = resolve_schedule(config.schedule, alg, lat, config.s);
    const Schedule& sched = echo.schedule;
    const double t = config.t, s = config.s;
    const int m = std::max(lat.n1, lat.n2);

    const RadialMap rmap = radial_map(lat);
    const bool smooth_r = variant != GpsVariant::fourier;
    const bool smooth_f = variant != GpsVariant::real;

    Field z = init ? dft2(*init) : random_phase_start(data, config.seed);
    Field y(lat);

    std::vector<double> trace;
    BestTracker best;
    // Snapshot of the internal state at the best iteration; stages restart here.
    Field z_snap = z, y_snap = y;

    const int total = sched.total_iterations();
    if (total == 0) {
        const double rf0 = rf_factor(dft2(proj_object(idft2(z), support)), data);
        trace.push_back(rf0);
        best.offer(rf0, z);
        return finish(std::move(best), std::move(trace), 0, std::move(echo));
    }
    trace.reserve(total);

    int it = 0;
    for (int l = 0; l < sched.stages; ++l) {
        z = z_snap;
        y = y_snap;
        Field fy = dft2(y);

        // GPS-R's stage parameter is a low-pass cutoff; convert to heat time.
        const double stage_filter = sched.filter_per_stage[l];
        const double gamma_f = smooth_f ? stage_filter : 0.0;
        double gamma_r = 0.0;
        if (smooth_r) {
            const double alpha =
                (variant == GpsVariant::real) ? stage_filter : sched.alpha_per_stage[l];
            gamma_r = heat_gamma_from_alpha(alpha, m);
        }

        for (int k = 0; k < sched.iters_per_stage; ++k, ++it) {
            const double sigma = sigma_at(sched, it);
            const FidelityWeight w{sigma, t, s};

            // tentative data-side point the prox acts on
            Field tentative(lat);
            for (std::size_t i = 0; i < tentative.size(); ++i)
                tentative.v[i] = z.v[i] - t * fy.v[i];

            Field z_next = prox_magnitude(tentative, data, w);

            Field overshoot(lat);
            for (std::size_t i = 0; i < overshoot.size(); ++i)
                overshoot.v[i] = 2.0 * z_next.v[i] - z.v[i];
            Field back = idft2(overshoot);
            Field y_in(lat);
            for (std::size_t i = 0; i < y_in.size(); ++i)
                y_in.v[i] = y.v[i] + s * back.v[i];
            Field y_next = proj_support_dual(y_in, support);
            if (smooth_f) y_next = smooth_dual_fourier(y_next, rmap, gamma_f, s);
            if (smooth_r) y_next = smooth_dual_real(y_next, gamma_r, s);

            check_finite_or_throw(z_next, it);
            check_finite_or_throw(y_next, it);

            z = std::move(z_next);
            y = std::move(y_next);
            fy = dft2(y);

            // Monitored R_F: the misfit of the support-projected image
            // estimate. The raw primal's own misfit is not comparable across
            // stages (sigma scales how hard the prox pins z to the sphere,
            // and at sigma = 0 it vanishes identically), so best-tracking on
            // it locks onto early heavily-smoothed iterates. The projected
            // estimate measures joint feasibility on one scale for every
            // stage, and the baselines monitor the same quantity.
            Field est = proj_object(idft2(z), support);
            Field zest = dft2(est);
            const double rf = rf_factor(zest, data);
            if (!std::isfinite(rf)) throw DivergenceError(it);
            trace.push_back(rf);
            if (observer)
                observer(IterEvent{it, l, sigma, stage_filter, rf, tentative, z, y, zest});
            if (best.offer(rf, z)) {
                z_snap = z;
                y_snap = y;
            }
        }
    }
    return finish(std::move(best), std::move(trace), total, std::move(echo));
}

RunRecord run_baseline(const MagnitudeData& data, const SupportMask& support,
                       const SolverConfig& config, const Field* init,
                       const IterObserver& observer) {
    if (data.lattice != support.lattice)
        throw std::invalid_argument("run_baseline: lattice mismatch");
    const Algorithm alg = config.algorithm;
    if (alg != Algorithm::er && alg != Algorithm::hio && alg != Algorithm::oss)
        throw std::invalid_argument("run_baseline: not a baseline algorithm");
    if (!(config.beta > 0.0) || config.beta > 1.0)
        throw std::invalid_argument("run_baseline: beta must be in (0, 1]");

    const Lattice lat = data.lattice;
    SolverConfig echo = config;
    echo.schedule = resolve_schedule(config.schedule, alg, lat, config.s);
    const Schedule& sched = echo.schedule;
    const double beta = config.beta;

    // Real-space iterate; the seeded start is the real part of the
    // random-phase spectrum used by run_gps.
    Field u(lat);
    if (init) {
        u = *init;
        for (auto& x : u.v) x = cplx(x.real(), 0.0);
    } else {
        u = idft2(random_phase_start(data, config.seed));
        for (auto& x : u.v) x = cplx(x.real(), 0.0);
    }

    std::vector<double> trace;
    BestTracker best;
    Field u_snap = u;

    const int total = sched.total_iterations();
    if (total == 0) {
        const double rf0 = rf_factor(dft2(proj_object(u, support)), data);
        trace.push_back(rf0);
        best.offer(rf0, dft2(u));
        return finish(std::move(best), std::move(trace), 0, std::move(echo));
    }
    trace.reserve(total);

    int it = 0;
    for (int l = 0; l < sched.stages; ++l) {
        u = u_snap;
        const double alpha = sched.filter_per_stage[l];

        for (int k = 0; k < sched.iters_per_stage; ++k, ++it) {
            Field zf = dft2(u);

            // magnitude projection with missing-data passthrough
            Field zp(lat);
            for (std::size_t i = 0; i < zp.size(); ++i) {
                if (!data.measured[i]) {
                    zp.v[i] = zf.v[i];
                } else {
                    const double m = std::abs(zf.v[i]);
                    zp.v[i] = (m == 0.0) ? cplx(data.b[i], 0.0) : zf.v[i] * (data.b[i] / m);
                }
            }
            Field up = idft2(zp);
            for (auto& x : up.v) x = cplx(x.real(), 0.0);

            // Monitored R_F is the misfit of the feasible object estimate:
            // HIO's u is a driver whose outside-support residue never decays,
            // so its own misfit plateaus long after the estimate has locked
            // in.  The recorded iterate stays the on-sphere spectrum zp; its
            // inverse is the reconstruction as the algorithm produces it,
            // out-of-support residue included.
            Field est = proj_object(up, support);
            Field zest = dft2(est);
            const double rf = rf_factor(zest, data);
            if (!std::isfinite(rf)) throw DivergenceError(it);
            trace.push_back(rf);
            if (observer)
                observer(IterEvent{it, l, 0.0, alpha, rf, zf, zp, u, zest});
            if (best.offer(rf, zp)) u_snap = u;

            Field u_next(lat);
            if (alg == Algorithm::er) {
                u_next = std::move(est);  // ER's next iterate is exactly the estimate
            } else {
                for (std::size_t i = 0; i < u.size(); ++i) {
                    const bool ok = support.inside[i] && up.v[i].real() >= 0.0;
                    const double val = ok ? up.v[i].real()
                                          : u.v[i].real() - beta * up.v[i].real();
                    u_next.v[i] = cplx(val, 0.0);
                }
                if (alg == Algorithm::oss) {
                    Field smoothed = gaussian_lowpass(u_next, alpha, Domain::real);
                    for (std::size_t i = 0; i < u_next.size(); ++i)
                        if (!support.inside[i])
                            u_next.v[i] = cplx(smoothed.v[i].real(), 0.0);
                }
            }
            check_finite_or_throw(u_next, it);
            u = std::move(u_next);
        }
    }
    return finish(std::move(best), std::move(trace), total, std::move(echo));
}

RunRecord run(const MagnitudeData& data, const SupportMask& support,
              const SolverConfig& config, const Field* init, const IterObserver& observer) {
    switch (config.algorithm) {
        case Algorithm::gps_r:
            return run_gps(data, support, config, GpsVariant::real, init, observer);
        case Algorithm::gps_f:
            return run_gps(data, support, config, GpsVariant::fourier, init, observer);
        case Algorithm::gps_rf:
            return run_gps(data, support, config, GpsVariant::real_fourier, init, observer);
        default:
            return run_baseline(data, support, config, init, observer);
    }
}

}  // namespace phaseret
