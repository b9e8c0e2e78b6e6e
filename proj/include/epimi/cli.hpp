#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace epimi {

inline constexpr const char* kToolName = "epimi";
inline constexpr const char* kToolVersion = "0.1.0";

// Sub-master derivation tags.  Each command derives the master seed for an
// independent random subsystem as derive_submaster(--seed, tag); publishing
// the tags makes every CSV value reproducible from the library alone.
namespace seed_tag {
inline constexpr std::uint64_t kData = 1;       // synthetic dataset draws
inline constexpr std::uint64_t kBootstrap = 2;  // bootstrap / grid ensembles
inline constexpr std::uint64_t kMcmc = 3;       // posterior chains
inline constexpr std::uint64_t kFisher = 4;     // Fisher feature draws
inline constexpr std::uint64_t kActive = 5;     // active-learning runs
inline constexpr std::uint64_t kInfluence = 6;  // influence-cache training
// The size sweep derives per-n sub-masters as (base tag + index into --n-grid).
inline constexpr std::uint64_t kSweepData = 0x100;
inline constexpr std::uint64_t kSweepBootstrap = 0x200;
inline constexpr std::uint64_t kSweepMcmc = 0x300;
}  // namespace seed_tag

// Every tunable the CLI accepts, with the defaults the commands assume.  One
// flat struct keeps the meta sidecar honest: the effective configuration that
// gets echoed is exactly this object after flag/config-file resolution.
struct RunConfig {
    std::string command;
    std::uint64_t seed = 0;
    std::string model = "binary-logistic";
    int bootstrap = 100;       // bootstrap replicates B
    int seeds = 5;             // training-seed models S
    std::string weights = "dirichlet";
    std::vector<long> n_grid = {100, 400, 1600};
    long mcmc_steps = 60000;
    long mcmc_burn_in = 10000;
    long mcmc_thinning = 25;
    double damping = 1e-5;
    int budget = 30;
    std::string out;           // empty -> "<command>.csv"
    int threads = 1;

    // model / training knobs
    std::vector<int> hidden = {16};
    std::string optimizer = "newton";
    int max_iterations = 100;
    double step_size = 0.1;
    int epochs = 500;
    double init_scale = 0.5;
    int trailing_layers = 2;

    // synthetic-data knobs
    long train_n = 1000;
    double theta0_intercept = 0.5;
    double theta0_slope = 1.5;
    std::vector<double> x_grid;  // empty -> command-specific default
    long fisher_draws = 200000;
    std::string scorer = "bootstrap-mi";
    int classes = 4;
    long pool_size = 400;
    long test_size = 800;
    long init_per_class = 2;
    double mixture_radius = 3.0;
    double mixture_noise = 1.0;

    // positional dataset paths (estimate/decompose/influence)
    std::string train_csv;
    std::string test_csv;
};

// Runs one fully-resolved command; returns the process exit code (0 ok,
// 2 validation failure, 3 numerical failure).  Record rows land in
// config.out and the run metadata in "<out>.meta.json".
int run_command(const RunConfig& config);

// Full argv entry point: parses flags (plus optional --config key=value
// file), dispatches, maps errors to exit codes.
int run_cli(int argc, const char* const* argv);

}  // namespace epimi
