#include "experiments.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "eigerr/csv.hpp"
#include "eigerr/error.hpp"
#include "eigerr/estimators.hpp"
#include "eigerr/graph.hpp"
#include "eigerr/hdensity.hpp"
#include "eigerr/parallel.hpp"
#include "eigerr/rng.hpp"
#include "eigerr/spectral.hpp"
#include "eigerr/stats.hpp"
#include "eigerr/wishart.hpp"

namespace eigerr::cli {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

// Seed streams: graph m -> {0, m}; bootstrap of matrix m under setting c -> {1, m, c}.
std::uint64_t graph_seed(const ExperimentConfig& cfg, std::size_t m) { return child_seed(cfg.seed, {0, m}); }
std::uint64_t bootstrap_seed(const ExperimentConfig& cfg, std::size_t m, std::size_t c) {
    return child_seed(cfg.seed, {1, m, c});
}

bool samples_wishart(const std::string& name) {
    return name.empty() || name == "bootstrap-vs-hhat" || name == "fh-density" || name == "bound-scatter" ||
           name == "bootstrap-discrepancy";
}

struct Spectrum {
    std::vector<double> eigenvalues;
    bool connected = true;
};

std::vector<Spectrum> ensemble_spectra(const ExperimentConfig& cfg, std::size_t count) {
    std::vector<Spectrum> out(count);
    parallel_for(count, cfg.threads, [&](std::size_t m) {
        const auto g = sample_regular_graph(cfg.p, cfg.k, graph_seed(cfg, m));
        const Vector ev = eigenvalues_sym(laplacian_matrix(g));
        out[m] = {std::vector<double>(ev.data(), ev.data() + ev.size()), is_connected(g)};
    });
    return out;
}

// Bulk spectra: every eigenvalue except the Laplacian's zero mode.
std::vector<std::vector<double>> bulk_pools(const std::vector<Spectrum>& spectra) {
    std::vector<std::vector<double>> pools;
    for (const auto& s : spectra) pools.emplace_back(s.eigenvalues.begin() + 1, s.eigenvalues.end());
    return pools;
}

std::size_t disconnected_count(const std::vector<Spectrum>& spectra) {
    return static_cast<std::size_t>(std::count_if(spectra.begin(), spectra.end(), [](const auto& s) { return !s.connected; }));
}

SpectralDensity resolve_density(const ExperimentConfig& cfg, const std::vector<std::vector<double>>& pools) {
    if (cfg.density == "mckay") return SpectralDensity::mckay(cfg.k);
    return estimate_density(pools, cfg.bin_width);
}

double density_at(const SpectralDensity& rho, double lambda) {
    const double v = rho(lambda);
    if (!(v > 0.0)) throw numeric_error("spectral density vanishes at lambda0 = " + format_double(lambda));
    return v;
}

struct Outputs {
    fs::path dir;
    std::vector<std::string> names;

    std::string path(const std::string& name) {
        names.push_back(name);
        return (dir / name).string();
    }
};

struct WindowGap {
    std::size_t matrix;
    GapRecord gap;
};

void write_window_gaps(const std::string& path, const std::vector<WindowGap>& gaps) {
    CsvWriter csv(path, {"matrix", "index", "lambda", "s_minus", "s_plus"});
    for (const auto& w : gaps) csv.row() << w.matrix << w.gap.index << w.gap.lambda << w.gap.s_minus << w.gap.s_plus;
}

std::vector<WindowGap> window_gaps(const ExperimentConfig& cfg, const std::vector<Spectrum>& spectra) {
    std::vector<WindowGap> out;
    for (std::size_t m = 0; m < spectra.size(); ++m)
        for (const auto& g : extract_gap_records(spectra[m].eigenvalues, cfg.lambda0, cfg.delta)) out.push_back({m, g});
    return out;
}

// Median h of the semi-analytical density, by bisection on F_H in log h.
double f_H_median(const HDensityParams& q) {
    double lo = std::log(1e-3 * q.h_scale()), hi = std::log(1e6 * q.h_scale());
    for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        (F_H(std::exp(mid), q) < 0.5 ? lo : hi) = mid;
    }
    return std::exp(0.5 * (lo + hi));
}

// Edges shared by every h-vs-f_H comparison: 40 geometric bins over [0.5, 1000] (lambda p rho)^2.
std::vector<double> h_edges(const HDensityParams& q) { return geometric_grid(0.5 * q.h_scale(), 1e3 * q.h_scale(), 41); }

std::vector<double> fh_plot_grid(const HDensityParams& q, double top = 1e4) {
    return geometric_grid(0.2 * q.h_scale(), top * q.h_scale(), 161);
}

// ---------------------------------------------------------------------------

json run_density(const ExperimentConfig& cfg, Outputs& out) {
    const auto spectra = ensemble_spectra(cfg, cfg.M);
    const auto emp = estimate_density(bulk_pools(spectra), cfg.bin_width);
    const McKayDensity mck{cfg.k, static_cast<double>(cfg.k)};
    const double lo = std::min(emp.lower(), mck.lower()), hi = std::max(emp.upper(), mck.upper());

    CsvWriter csv(out.path("density.csv"), {"lambda", "rho_empirical", "rho_mckay"});
    const std::size_t points = 801;
    for (std::size_t i = 0; i < points; ++i) {
        const double x = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
        csv.row() << x << emp(x) << mck(x);
    }

    return {{"bin_width", emp.bin_width},
            {"l1_to_mckay", l1_distance(emp, mck, lo, hi)},
            {"disconnected_graphs", disconnected_count(spectra)}};
}

json run_spacing(const ExperimentConfig& cfg, Outputs& out) {
    const auto spectra = ensemble_spectra(cfg, cfg.M);
    const auto rho = resolve_density(cfg, bulk_pools(spectra));
    const double rho0 = density_at(rho, cfg.lambda0);
    const auto gaps = window_gaps(cfg, spectra);
    if (gaps.empty()) throw numeric_error("spacing: no eigenvalues in the window");
    write_window_gaps(out.path("gaps.csv"), gaps);

    const double p = cfg.p;
    std::vector<double> ps;
    for (const auto& w : gaps) ps.push_back(p * w.gap.s_plus);

    // 40 bins over [0, 4) mean spacings
    const std::size_t bins = 40;
    const double width = 4.0 / rho0 / static_cast<double>(bins);
    std::vector<double> counts(bins, 0.0);
    for (double x : ps)
        if (x < width * static_cast<double>(bins)) counts[static_cast<std::size_t>(x / width)] += 1.0;
    CsvWriter csv(out.path("spacing.csv"), {"ps", "empirical", "surmise"});
    const double total = static_cast<double>(ps.size());
    for (std::size_t b = 0; b < bins; ++b) {
        const double c = width * (static_cast<double>(b) + 0.5);
        csv.row() << c << counts[b] / (total * width) << wigner_surmise_pdf(c, rho0);
    }
    return {{"records", gaps.size()},
            {"rho_lambda0", rho0},
            {"ks_statistic", ks_statistic(ps, [&](double x) { return wigner_surmise_cdf(x, rho0); })},
            {"disconnected_graphs", disconnected_count(spectra)}};
}

json run_joint_gaps(const ExperimentConfig& cfg, Outputs& out) {
    const auto spectra = ensemble_spectra(cfg, cfg.M);
    const auto rho = resolve_density(cfg, bulk_pools(spectra));
    const double a = cfg.p * density_at(rho, cfg.lambda0);
    const auto gaps = window_gaps(cfg, spectra);
    if (gaps.empty()) throw numeric_error("joint-gaps: no eigenvalues in the window");
    write_window_gaps(out.path("gaps.csv"), gaps);

    std::vector<std::pair<double, double>> pairs;
    for (const auto& w : gaps) pairs.emplace_back(w.gap.s_minus, w.gap.s_plus);

    // 12 x 12 cells of a quarter mean spacing, in unit-mean coordinates
    const std::size_t bins = 12;
    const double cell = 0.25;
    std::vector<double> counts(bins * bins, 0.0);
    for (auto [sm, sp] : pairs) {
        const double xm = a * sm / cell, xp = a * sp / cell;
        if (xm < bins && xp < bins) counts[static_cast<std::size_t>(xm) * bins + static_cast<std::size_t>(xp)] += 1.0;
    }
    CsvWriter csv(out.path("joint.csv"), {"x_minus", "x_plus", "empirical", "surmise"});
    const double total = static_cast<double>(pairs.size());
    for (std::size_t i = 0; i < bins; ++i)
        for (std::size_t j = 0; j < bins; ++j) {
            const double xm = cell * (static_cast<double>(i) + 0.5), xp = cell * (static_cast<double>(j) + 0.5);
            csv.row() << xm << xp << counts[i * bins + j] / (total * cell * cell) << joint_gap_pdf(xm, xp, 1.0);
        }
    return {{"records", gaps.size()},
            {"rho_lambda0", a / cfg.p},
            {"joint_l1", joint_gap_l1(pairs, a, bins, cell)},
            {"disconnected_graphs", disconnected_count(spectra)}};
}

struct HhatAccuracy {
    double log_pearson = 0.0;
    double median_rel_err_lower = 0.0;
    double median_rel_err_lower_uncorrected = 0.0;
};

HhatAccuracy hhat_accuracy(const std::vector<HValue>& hv) {
    std::vector<double> lx, ly;
    std::vector<std::pair<double, const HValue*>> by_h;
    for (const auto& v : hv) {
        if (!(*v.h_hat > 0.0)) continue;
        lx.push_back(std::log(*v.h_exact));
        ly.push_back(std::log(*v.h_hat));
        by_h.emplace_back(*v.h_exact, &v);
    }
    if (by_h.size() < 4) throw numeric_error("hhat-vs-h: too few bulk indices");
    std::sort(by_h.begin(), by_h.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
    std::vector<double> corr, unc;
    for (std::size_t i = 0; i < by_h.size() / 2; ++i) {
        const auto& v = *by_h[i].second;
        corr.push_back(std::abs(*v.h_hat - *v.h_exact) / *v.h_exact);
        unc.push_back(std::abs(*v.h_hat_uncorrected - *v.h_exact) / *v.h_exact);
    }
    return {pearson(lx, ly), median(corr), median(unc)};
}

json run_hhat_vs_h(const ExperimentConfig& cfg, Outputs& out) {
    const auto spectra = ensemble_spectra(cfg, cfg.M);
    const auto rho = resolve_density(cfg, bulk_pools(spectra));
    const auto& ev = spectra[0].eigenvalues;
    const auto hv = h_values(Eigen::Map<const Vector>(ev.data(), static_cast<Eigen::Index>(ev.size())), rho);
    write_estimator_csv(out.path("hhat.csv"), hv);
    const auto acc = hhat_accuracy(hv);
    return {{"indices", hv.size()},
            {"log_pearson", acc.log_pearson},
            {"median_rel_err_lower_half", acc.median_rel_err_lower},
            {"median_rel_err_lower_half_uncorrected", acc.median_rel_err_lower_uncorrected}};
}

json run_bootstrap_vs_hhat(const ExperimentConfig& cfg, Outputs& out) {
    auto spectra = ensemble_spectra(cfg, cfg.M);
    const auto rho = resolve_density(cfg, bulk_pools(spectra));
    const auto pop = laplacian(sample_regular_graph(cfg.p, cfg.k, graph_seed(cfg, 0)));
    const auto hv = h_values(pop.eigenvalues, rho);

    BootstrapConfig bc;
    bc.replicates = cfg.R;
    bc.n = as_count(cfg.n.front());
    bc.seed = bootstrap_seed(cfg, 0, 0);
    bc.threads = cfg.threads;
    const auto boot = bootstrap_error(pop, bc);
    write_estimator_csv(out.path("bootstrap.csv"), hv, &boot);

    std::vector<double> dev;
    for (const auto& v : hv)
        if (*v.h_exact <= 2.0 * static_cast<double>(bc.n) && *v.h_hat > 0.0)
            dev.push_back(std::abs(boot.mean_n_residual(static_cast<Eigen::Index>(v.index)) - *v.h_hat) / *v.h_hat);
    json s{{"indices", hv.size()}, {"indices_in_regime", dev.size()}, {"pairing_mismatches", boot.pairing_mismatches}};
    s["median_rel_dev_vs_h_hat"] = dev.empty() ? json(nullptr) : json(median(dev));
    return s;
}

// Window records of one matrix with optional bootstrap columns per setting.
struct MatrixWindow {
    std::vector<GapRecord> gaps;
    std::vector<double> h_exact;
    std::vector<std::vector<std::pair<double, double>>> boot;  // [setting][record] -> (n mean, n std)
    std::size_t pairing_mismatches = 0;
    bool connected = true;
    std::vector<double> bulk;
};

struct BootSetting {
    std::size_t R;
    std::uint64_t n;
};

std::vector<MatrixWindow> ensemble_windows(const ExperimentConfig& cfg, const std::vector<BootSetting>& settings) {
    std::vector<MatrixWindow> out(cfg.M);
    parallel_for(cfg.M, cfg.threads, [&](std::size_t m) {
        const auto g = sample_regular_graph(cfg.p, cfg.k, graph_seed(cfg, m));
        const auto pop = laplacian(g);
        auto& w = out[m];
        w.connected = is_connected(g);
        const auto ev = as_span(pop.eigenvalues);
        w.bulk.assign(ev.begin() + 1, ev.end());
        w.gaps = extract_gap_records(ev, cfg.lambda0, cfg.delta);
        for (const auto& gr : w.gaps) w.h_exact.push_back(h_exact(ev, gr.index));
        for (std::size_t c = 0; c < settings.size(); ++c) {
            auto& col = w.boot.emplace_back();
            if (w.gaps.empty()) continue;
            BootstrapConfig bc;
            bc.replicates = settings[c].R;
            bc.n = settings[c].n;
            bc.seed = bootstrap_seed(cfg, m, c);
            bc.threads = 1;
            const auto b = bootstrap_error(pop, bc);
            w.pairing_mismatches += b.pairing_mismatches;
            for (const auto& gr : w.gaps) {
                const auto i = static_cast<Eigen::Index>(gr.index);
                col.emplace_back(b.mean_n_residual(i), b.std_n_residual(i));
            }
        }
    });
    return out;
}

struct EnsembleH {
    HDensityParams q;
    std::vector<double> h_exact;
    std::vector<double> h_hat;
    std::size_t disconnected = 0;
    std::size_t pairing_mismatches = 0;
};

EnsembleH ensemble_h(const ExperimentConfig& cfg, const std::vector<MatrixWindow>& windows) {
    std::vector<std::vector<double>> pools;
    for (const auto& w : windows) pools.push_back(w.bulk);
    const auto rho = resolve_density(cfg, pools);
    EnsembleH e{HDensityParams(cfg.lambda0, static_cast<std::size_t>(cfg.p), density_at(rho, cfg.lambda0)), {}, {}, 0, 0};
    for (const auto& w : windows) {
        e.disconnected += w.connected ? 0 : 1;
        e.pairing_mismatches += w.pairing_mismatches;
        for (std::size_t r = 0; r < w.gaps.size(); ++r) {
            const auto& g = w.gaps[r];
            e.h_exact.push_back(w.h_exact[r]);
            e.h_hat.push_back(h_hat(g.lambda, g.s_minus, g.s_plus, cfg.p * rho(g.lambda)));
        }
    }
    if (e.h_exact.empty()) throw numeric_error("no eigenvalues in the window across the ensemble");
    return e;
}

void write_h_empirical(const std::string& path, const std::vector<MatrixWindow>& windows, const EnsembleH& e) {
    CsvWriter csv(path, {"matrix", "index", "lambda", "h_exact", "h_hat"});
    std::size_t flat = 0;
    for (std::size_t m = 0; m < windows.size(); ++m)
        for (const auto& g : windows[m].gaps) {
            csv.row() << m << g.index << g.lambda << e.h_exact[flat] << e.h_hat[flat];
            ++flat;
        }
}

std::vector<double> write_bootstrap_window(const std::string& path, const std::vector<MatrixWindow>& windows,
                                           const EnsembleH& e, std::size_t setting, std::uint64_t n) {
    CsvWriter csv(path, {"matrix", "index", "lambda", "h_exact", "h_hat", "n_mean_error", "n_std_error",
                         "regime_violation"});
    std::vector<double> values;
    std::size_t flat = 0;
    for (std::size_t m = 0; m < windows.size(); ++m)
        for (std::size_t r = 0; r < windows[m].gaps.size(); ++r, ++flat) {
            const auto& g = windows[m].gaps[r];
            const auto [mean, sd] = windows[m].boot[setting][r];
            values.push_back(mean);
            csv.row() << m << g.index << g.lambda << e.h_exact[flat] << e.h_hat[flat] << mean << sd
                      << regime_violation(static_cast<double>(n), e.h_exact[flat]);
        }
    return values;
}

json h_summary(const EnsembleH& e, const std::vector<double>& sample) {
    const auto edges = h_edges(e.q);
    return {{"l1_to_f_H", binned_l1(sample, edges, [&](double h) { return F_H(h, e.q); })}, {"median", median(sample)}};
}

json run_fh_density(const ExperimentConfig& cfg, Outputs& out) {
    std::vector<BootSetting> settings;
    if (cfg.R >= 1) settings.push_back({cfg.R, as_count(cfg.n.front())});
    const auto windows = ensemble_windows(cfg, settings);
    const auto e = ensemble_h(cfg, windows);
    write_hdensity_csv(out.path("fh.csv"), e.q, fh_plot_grid(e.q));
    write_h_empirical(out.path("h_empirical.csv"), windows, e);
    const auto boot = write_bootstrap_window(out.path("bootstrap.csv"), windows, e, 0, settings.front().n);

    return {{"records", e.h_exact.size()},
            {"rho_lambda0", e.q.rho},
            {"f_H_median", f_H_median(e.q)},
            {"h_exact", h_summary(e, e.h_exact)},
            {"h_hat", h_summary(e, e.h_hat)},
            {"bootstrap", h_summary(e, boot)},
            {"pairing_mismatches", e.pairing_mismatches},
            {"disconnected_graphs", e.disconnected}};
}

json run_bootstrap_discrepancy(const ExperimentConfig& cfg, Outputs& out) {
    const std::vector<BootSetting> settings{{cfg.R, as_count(cfg.n.front())}, {1, as_count(cfg.n.back())}};
    const auto windows = ensemble_windows(cfg, settings);
    const auto e = ensemble_h(cfg, windows);
    write_hdensity_csv(out.path("fh.csv"), e.q, fh_plot_grid(e.q));
    write_h_empirical(out.path("h_empirical.csv"), windows, e);
    json s{{"records", e.h_exact.size()},
           {"rho_lambda0", e.q.rho},
           {"f_H_median", f_H_median(e.q)},
           {"h_exact", h_summary(e, e.h_exact)}};
    json boots = json::array();
    for (std::size_t c = 0; c < settings.size(); ++c) {
        const auto name = "bootstrap_R" + std::to_string(settings[c].R) + "_n" + std::to_string(settings[c].n) + ".csv";
        const auto v = write_bootstrap_window(out.path(name), windows, e, c, settings[c].n);
        auto b = h_summary(e, v);
        b["R"] = settings[c].R;
        b["n"] = settings[c].n;
        boots.push_back(b);
    }
    s["bootstrap"] = boots;
    s["pairing_mismatches"] = e.pairing_mismatches;
    s["disconnected_graphs"] = e.disconnected;
    return s;
}

json run_tail(const ExperimentConfig& cfg, Outputs& out) {
    double rho0;
    if (cfg.density == "mckay") {
        rho0 = density_at(SpectralDensity::mckay(cfg.k), cfg.lambda0);
    } else {
        rho0 = density_at(resolve_density(cfg, bulk_pools(ensemble_spectra(cfg, cfg.M))), cfg.lambda0);
    }
    const HDensityParams q(cfg.lambda0, static_cast<std::size_t>(cfg.p), rho0);
    const auto grid = default_tail_grid(q);
    const auto rep = tail_report(q, grid);

    {
        CsvWriter csv(out.path("tail.csv"), {"h", "f_H", "f_H_asymptotic", "plateau"});
        for (std::size_t i = 0; i < rep.h.size(); ++i)
            csv.row() << rep.h[i] << rep.f[i] << tail::f_H_asymptotic(rep.h[i], q) << rep.plateau[i];
    }
    write_hdensity_csv(out.path("fh.csv"), q, fh_plot_grid(q, 1e5));

    json s{{"rho_lambda0", rho0},
           {"slope", rep.fitted_slope},
           {"window", {rep.h_lo, rep.h_hi}},
           {"plateau_spread", rep.plateau_ratio_spread},
           {"u1_relative_error", rep.u1_relative_error},
           {"u2_relative_error", rep.u2_relative_error},
           {"asymptotic_ratio", rep.asymptotic_ratio}};
    std::ofstream(out.path("tail.json")) << s.dump(2) << '\n';
    return s;
}

json run_bound_scatter(const ExperimentConfig& cfg, Outputs& out) {
    const auto pop = laplacian(sample_regular_graph(cfg.p, cfg.k, graph_seed(cfg, 0)));
    const auto h = h_exact_all(as_span(pop.eigenvalues));
    CsvWriter csv(out.path("scatter.csv"), {"n", "replicate", "index", "lambda", "h_exact", "residual", "n_residual"});
    std::size_t above_two = 0, deep = 0, saturated = 0;
    double max_residual = 0.0;
    json per_n = json::array();
    for (std::size_t c = 0; c < cfg.n.size(); ++c) {
        BootstrapConfig bc;
        bc.replicates = cfg.R;
        bc.n = as_count(cfg.n[c]);
        bc.seed = bootstrap_seed(cfg, 0, c);
        bc.threads = cfg.threads;
        const auto b = bootstrap_error(pop, bc);
        const double n = static_cast<double>(bc.n);
        std::size_t deep_n = 0, sat_n = 0;
        for (Eigen::Index r = 0; r < b.residuals.rows(); ++r)
            for (Eigen::Index i = 0; i < b.residuals.cols(); ++i) {
                const double res = b.residuals(r, i);
                const auto hi = h[static_cast<std::size_t>(i)];
                csv.row() << bc.n << static_cast<long long>(r) << static_cast<long long>(i) << pop.eigenvalues(i) << hi << res << n * res;
                max_residual = std::max(max_residual, res);
                above_two += res > 2.0 ? 1 : 0;
                if (hi > 10.0 * 2.0 * n) {
                    ++deep_n;
                    sat_n += res >= 1.5 ? 1 : 0;
                }
            }
        deep += deep_n;
        saturated += sat_n;
        json entry{{"n", bc.n}, {"deep_samples", deep_n}, {"pairing_mismatches", b.pairing_mismatches}};
        entry["saturated_fraction"] = deep_n ? json(static_cast<double>(sat_n) / static_cast<double>(deep_n)) : json(nullptr);
        per_n.push_back(entry);
    }
    json s{{"max_residual", max_residual}, {"residuals_above_2", above_two}, {"deep_samples", deep}};
    s["saturated_fraction"] = deep ? json(static_cast<double>(saturated) / static_cast<double>(deep)) : json(nullptr);
    s["per_n"] = per_n;
    return s;
}

using Runner = json (*)(const ExperimentConfig&, Outputs&);

const std::map<std::string, Runner>& runners() {
    static const std::map<std::string, Runner> table{
        {"density", run_density},
        {"spacing", run_spacing},
        {"joint-gaps", run_joint_gaps},
        {"hhat-vs-h", run_hhat_vs_h},
        {"bootstrap-vs-hhat", run_bootstrap_vs_hhat},
        {"fh-density", run_fh_density},
        {"tail", run_tail},
        {"bound-scatter", run_bound_scatter},
        {"bootstrap-discrepancy", run_bootstrap_discrepancy},
    };
    return table;
}

}  // namespace

const std::vector<std::string>& experiment_names() {
    static const std::vector<std::string> names{"density",   "spacing",       "joint-gaps",
                                                "hhat-vs-h", "bootstrap-vs-hhat", "fh-density",
                                                "tail",      "bound-scatter", "bootstrap-discrepancy"};
    return names;
}

ExperimentConfig default_config(const std::string& experiment) {
    ExperimentConfig c;
    c.experiment = experiment;
    if (experiment.empty()) return c;
    require(runners().count(experiment) == 1, "unknown experiment '" + experiment + "'");
    if (experiment == "density") {
        c.p = 500;
    } else if (experiment == "spacing" || experiment == "joint-gaps") {
        c.density = "mckay";
    } else if (experiment == "hhat-vs-h") {
        c.p = 100;
    } else if (experiment == "bootstrap-vs-hhat") {
        c.p = 100;
        c.n = {1e7};
        c.R = 100;
    } else if (experiment == "tail") {
        c.p = 2000;
        c.M = 20;
        c.density = "mckay";
    } else if (experiment == "bound-scatter") {
        c.p = 200;
        c.k = 5;
        c.lambda0 = 5.0;  // bulk center; the k = 5 spectrum ends near 9.
        c.n = {1e3, 1e4, 1e5};
        c.R = 100;
        c.M = 1;
    } else if (experiment == "bootstrap-discrepancy") {
        c.n = {1e7, 1e10};
    }
    return c;
}

std::uint64_t as_count(double n) {
    require(std::isfinite(n) && n >= 1.0 && n <= 9.007199254740992e15 && std::floor(n) == n,
            "sample size n must be a positive integer below 2^53, got " + format_double(n));
    return static_cast<std::uint64_t>(n);
}

void check_config(const ExperimentConfig& cfg) {
    require(cfg.experiment.empty() || runners().count(cfg.experiment) == 1, "unknown experiment '" + cfg.experiment + "'");
    require(cfg.k >= 2, "k must be >= 2");
    require(cfg.p > cfg.k, "p must exceed k");
    require((static_cast<long long>(cfg.p) * cfg.k) % 2 == 0, "p*k must be even");
    require(!cfg.n.empty(), "at least one sample size n is required");
    for (double n : cfg.n) require(as_count(n) >= static_cast<std::uint64_t>(cfg.p), "n must be >= p");
    require(cfg.R >= 1, "R must be >= 1");
    require(cfg.M >= 1, "M must be >= 1");
    require(cfg.delta > 0.0 && std::isfinite(cfg.delta), "delta must be positive");
    require(cfg.lambda0 > 0.0 && std::isfinite(cfg.lambda0), "lambda0 must be positive");
    require(cfg.threads >= 1, "threads must be >= 1");
    require(cfg.density == "empirical" || cfg.density == "mckay", "density must be 'empirical' or 'mckay'");
    require(!cfg.bin_width || (*cfg.bin_width > 0.0 && std::isfinite(*cfg.bin_width)), "bin width must be positive");
    require(!cfg.out.empty(), "output directory must be set");
}

json to_json(const ExperimentConfig& cfg) {
    json n = json::array();
    for (double v : cfg.n) n.push_back(as_count(v));
    json j{{"experiment", cfg.experiment},
           {"p", cfg.p},
           {"k", cfg.k},
           {"n", n},
           {"R", cfg.R},
           {"M", cfg.M},
           {"lambda0", cfg.lambda0},
           {"delta", cfg.delta},
           {"seed", cfg.seed},
           {"out", cfg.out.string()},
           {"threads", cfg.threads},
           {"density", cfg.density}};
    j["bin_width"] = cfg.bin_width ? json(*cfg.bin_width) : json(nullptr);
    return j;
}

json ValidationReport::to_json() const {
    json w = json::array();
    for (const auto& x : warnings) w.push_back({{"code", x.code}, {"message", x.message}});
    return {{"warnings", w},
            {"pilot_records", pilot_records},
            {"pilot_h_hat_q90", pilot_h_hat_q90},
            {"records_per_width", {{"half", records_per_width_half}, {"base", records_per_width}, {"double", records_per_width_double}}}};
}

ValidationReport validate(const ExperimentConfig& cfg) {
    check_config(cfg);
    ValidationReport rep;
    const auto g = sample_regular_graph(cfg.p, cfg.k, graph_seed(cfg, 0));
    const Vector ev = eigenvalues_sym(laplacian_matrix(g));
    const auto span = as_span(ev);

    auto per_width = [&](double delta) {
        return static_cast<double>(extract_gap_records(span, cfg.lambda0, delta).size()) / (2.0 * delta);
    };
    const auto gaps = extract_gap_records(span, cfg.lambda0, cfg.delta);
    rep.pilot_records = gaps.size();
    rep.records_per_width = per_width(cfg.delta);
    rep.records_per_width_half = per_width(0.5 * cfg.delta);
    rep.records_per_width_double = per_width(2.0 * cfg.delta);

    if (gaps.empty()) {
        rep.warnings.push_back({"empty_window", "pilot matrix has no eigenvalues within delta of lambda0"});
        return rep;
    }
    for (double other : {rep.records_per_width_half, rep.records_per_width_double}) {
        if (std::abs(other / rep.records_per_width - 1.0) > 0.2) {
            std::ostringstream msg;
            msg << "records per unit window width move from " << format_double(rep.records_per_width) << " to "
                << format_double(other) << " when delta is halved or doubled";
            rep.warnings.push_back({"delta_sensitivity", msg.str()});
            break;
        }
    }

    const auto rho = SpectralDensity::mckay(cfg.k);
    std::vector<double> hs;
    for (const auto& gr : gaps) hs.push_back(h_hat(gr.lambda, gr.s_minus, gr.s_plus, cfg.p * rho(gr.lambda)));
    rep.pilot_h_hat_q90 = quantile(hs, 0.9);
    if (samples_wishart(cfg.experiment)) {
        const double n_min = *std::min_element(cfg.n.begin(), cfg.n.end());
        if (regime_violation(n_min, rep.pilot_h_hat_q90))
            rep.warnings.push_back({"regime_violation", "n = " + format_double(n_min) + " is below half the pilot h_hat 90th percentile " +
                                                            format_double(rep.pilot_h_hat_q90)});
    }
    return rep;
}

std::string sha256_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path.string());
    std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
    if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw std::runtime_error("sha256 init failed");
    std::array<char, 1 << 16> buf;
    while (in) {
        in.read(buf.data(), buf.size());
        if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
    }
    std::array<unsigned char, EVP_MAX_MD_SIZE> md;
    unsigned len = 0;
    EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
    static constexpr char hex[] = "0123456789abcdef";
    std::string s;
    for (unsigned i = 0; i < len; ++i) {
        s += hex[md[i] >> 4];
        s += hex[md[i] & 15];
    }
    return s;
}

RunResult run(const ExperimentConfig& cfg) {
    require(!cfg.experiment.empty(), "run needs an experiment name");
    const auto start = std::chrono::steady_clock::now();
    RunResult res;
    res.report = validate(cfg);

    fs::create_directories(cfg.out);
    Outputs out{cfg.out, {}};
    res.summary = runners().at(cfg.experiment)(cfg, out);
    const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    json outputs = json::array();
    for (const auto& name : out.names) outputs.push_back({{"path", name}, {"sha256", sha256_file(cfg.out / name)}});
    json manifest{{"experiment", cfg.experiment}, {"config", to_json(cfg)}, {"outputs", outputs}, {"wall_time_s", wall}};
    manifest["warnings"] = res.report.to_json()["warnings"];
    manifest["summary"] = res.summary;
    res.manifest = cfg.out / "manifest.json";
    std::ofstream(res.manifest) << manifest.dump(2) << '\n';
    return res;
}

}  // namespace eigerr::cli
