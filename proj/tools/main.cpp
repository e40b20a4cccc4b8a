#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "eigerr/error.hpp"
#include "experiments.hpp"

namespace {

using eigerr::cli::ExperimentConfig;

enum Exit { kOk = 0, kConfigError = 1, kRuntimeError = 2 };

int fail(int code, const std::string& kind, const std::string& message) {
    nlohmann::ordered_json rec{{"error", {{"kind", kind}, {"message", message}}}};
    std::cerr << rec.dump() << '\n';
    return code;
}

// Flags override the experiment defaults; each flag also reads EIGERR_<NAME>.
struct Flags {
    std::optional<int> p, k;
    std::vector<double> n;
    std::optional<std::size_t> R, M;
    std::optional<double> lambda0, delta, bin_width;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out, density;
    std::optional<unsigned> threads;

    void attach(CLI::App& app) {
        app.add_option("--p", p, "matrix size")->envname("EIGERR_P");
        app.add_option("--k", k, "graph degree")->envname("EIGERR_K");
        app.add_option("--n", n, "sample size(s), comma separated")->delimiter(',')->envname("EIGERR_N");
        app.add_option("--R", R, "Wishart replicates per matrix")->envname("EIGERR_R");
        app.add_option("--M", M, "matrices per ensemble")->envname("EIGERR_M");
        app.add_option("--lambda0", lambda0, "window center")->envname("EIGERR_LAMBDA0");
        app.add_option("--delta", delta, "window half-width")->envname("EIGERR_DELTA");
        app.add_option("--seed", seed, "master seed")->envname("EIGERR_SEED");
        app.add_option("--out", out, "output directory")->envname("EIGERR_OUT");
        app.add_option("--threads", threads, "worker threads")->envname("EIGERR_THREADS");
        app.add_option("--density", density, "spectral density: empirical or mckay")->envname("EIGERR_DENSITY");
        app.add_option("--bin-width", bin_width, "histogram width for the empirical density")
            ->envname("EIGERR_BIN_WIDTH");
    }

    ExperimentConfig apply(const std::string& experiment) const {
        auto c = eigerr::cli::default_config(experiment);
        if (p) c.p = *p;
        if (k) c.k = *k;
        if (!n.empty()) c.n = n;
        if (R) c.R = *R;
        if (M) c.M = *M;
        if (lambda0) c.lambda0 = *lambda0;
        if (delta) c.delta = *delta;
        if (seed) c.seed = *seed;
        if (out) c.out = *out;
        if (threads) c.threads = *threads;
        if (density) c.density = *density;
        if (bin_width) c.bin_width = bin_width;
        return c;
    }
};

std::string experiment_list() {
    std::string s;
    for (const auto& name : eigerr::cli::experiment_names()) s += (s.empty() ? "" : ", ") + name;
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Eigenvector error estimates for sample covariance matrices"};
    app.require_subcommand(1);

    std::string run_name, validate_name;
    Flags run_flags, validate_flags;
    auto* run = app.add_subcommand("run", "run an experiment and write CSVs plus manifest.json");
    run->add_option("experiment", run_name, "one of: " + experiment_list())->required();
    run_flags.attach(*run);
    auto* val = app.add_subcommand("validate", "check a configuration and print a warning report");
    val->add_option("experiment", validate_name, "experiment whose defaults to use");
    validate_flags.attach(*val);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail(kConfigError, "config", e.what());
    }

    try {
        if (*run) {
            const auto res = eigerr::cli::run(run_flags.apply(run_name));
            for (const auto& w : res.report.warnings) std::cerr << "warning " << w.code << ": " << w.message << '\n';
            std::cout << res.manifest.string() << '\n';
        } else {
            std::cout << eigerr::cli::validate(validate_flags.apply(validate_name)).to_json().dump(2) << '\n';
        }
    } catch (const eigerr::config_error& e) {
        return fail(kConfigError, "config", e.what());
    } catch (const std::exception& e) {
        return fail(kRuntimeError, "runtime", e.what());
    }
    return kOk;
}
