#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "smrm/io.hpp"
#include "smrm/path_eval.hpp"
#include "smrm/synthetic.hpp"

namespace smrm {

inline constexpr const char* kVersion = "0.1.0";

/// Every field is also a config-file key and a --flag of the same name.
struct RunConfig {
    std::string input;
    std::string output = "smrm_out";
    std::string missing_token = "NA";
    std::string response_columns;
    std::string predictor_columns;
    std::string scale = "raw";

    double split_ratio = 0.8;
    std::uint64_t split_seed = 1;

    double lambda1 = 0.1;
    double lambda1_high = 1.0;
    double lambda1_low = 6.5e-3;
    int lambda1_points = 200;
    double r = 1.0;
    std::string r_values = "3,2,1,0.75,0.5,0.225,0.2,0.175,0.1";
    std::string lambda2_mode = "adjusted";

    int cv_folds = 5;
    std::uint64_t cv_seed = 1;
    int cv_grid_points = 100;
    double cv_grid_ratio = 1e-4;
    double lasso_tol = 1e-7;

    double epsilon = 1e-4;
    int max_em_iter = 200;
    double inner_tol = 1e-6;
    int inner_max_iter = 1000;
    double glasso_tol = 1e-4;
    int glasso_max_iter = 100;
    int threads = 1;
    bool svg = true;

    Index sim_n = 200;
    Index sim_p = 5;
    Index sim_q = 4;
    double sim_coef_sparsity = 0.5;
    Index sim_edges = 3;
    double sim_edge_min = 0.5;
    double sim_edge_max = 1.0;
    double sim_diag_margin = 0.2;
    double sim_noise = 1.0;
    std::string sim_mechanism = "mcar";
    double sim_missing_rate = 0.3;
    std::uint64_t sim_seed = 1;

    IngestConfig ingest() const;
    SmrmConfig solver() const;
    BaselineConfig baseline() const;
    SyntheticSpec synthetic() const;
    /// Typed cross-field checks; throws invalid_argument.
    void validate(const std::string& subcommand) const;
};

/// Parses `smrm <subcommand> [--config file] [--key value ...]`, runs it and
/// returns the exit status. Diagnostics go to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Runs one subcommand with a fully resolved configuration. Returns the list
/// of written files.
std::vector<std::filesystem::path> run(const std::string& subcommand, const RunConfig& config, std::ostream& log);

}  // namespace smrm
