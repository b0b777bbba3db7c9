#pragma once

#include <cstdint>
#include <string>

#include "smrm/core_types.hpp"
#include "smrm/random.hpp"

namespace smrm {

enum class Mechanism { none, mcar, mar };

std::string_view to_string(Mechanism m);
Mechanism parse_mechanism(std::string_view text);

/// Where the true precision's edges go: uniformly among all pairs, along the
/// chain (0,1), (1,2), ..., or inside consecutive groups of `group_size`
/// responses, group by group.
enum class EdgePattern { random, chain, groups };

std::string_view to_string(EdgePattern e);
EdgePattern parse_edge_pattern(std::string_view text);

struct SyntheticSpec {
    Index n = 200;
    Index p = 5;
    Index q = 4;
    /// Fraction of coefficients set to zero.
    double coef_sparsity = 0.5;
    /// Nonzero off-diagonal pairs of the true precision.
    Index n_edges = 3;
    EdgePattern pattern = EdgePattern::random;
    Index group_size = 3;
    double edge_min = 0.5;
    double edge_max = 1.0;
    /// Diagonal is the absolute off-diagonal row sum plus this margin.
    double diag_margin = 0.2;
    /// Scales the error covariance by noise^2.
    double noise = 1.0;
    Mechanism mechanism = Mechanism::mcar;
    /// Expected fraction of missing responses (MAR: in columns 2..q).
    double missing_rate = 0.3;
    std::uint64_t seed = 1;
    int max_retries = 100;

    void validate() const;
};

struct SyntheticData {
    Dataset data;
    ModelParams truth;
    int retries = 0;
};

/// X ~ N(0, 1); rows of E ~ N(0, K^{-1}); Y = b0 + X B + E, then masked.
/// MCAR hides each entry independently. MAR keeps the first response
/// complete and hides the others with probability increasing in its rank.
/// A mask with a fully missing column is redrawn.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

double standard_normal(Rng& rng);

}  // namespace smrm
