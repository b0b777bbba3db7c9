#include "smrm/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

namespace smrm {

std::string_view to_string(Mechanism m) {
    switch (m) {
        case Mechanism::none: return "none";
        case Mechanism::mcar: return "mcar";
        case Mechanism::mar: return "mar";
    }
    return "none";
}

Mechanism parse_mechanism(std::string_view text) {
    if (text == "none") return Mechanism::none;
    if (text == "mcar") return Mechanism::mcar;
    if (text == "mar") return Mechanism::mar;
    throw Error(ErrorCode::invalid_argument, "unknown missingness mechanism '" + std::string(text) + "'");
}

std::string_view to_string(EdgePattern e) {
    switch (e) {
        case EdgePattern::random: return "random";
        case EdgePattern::chain: return "chain";
        case EdgePattern::groups: return "groups";
    }
    return "random";
}

EdgePattern parse_edge_pattern(std::string_view text) {
    if (text == "random") return EdgePattern::random;
    if (text == "chain") return EdgePattern::chain;
    if (text == "groups") return EdgePattern::groups;
    throw Error(ErrorCode::invalid_argument, "unknown edge pattern '" + std::string(text) + "'");
}

void SyntheticSpec::validate() const {
    if (n < 2 || p < 1 || q < 1) throw Error(ErrorCode::invalid_argument, "synthetic sizes need n >= 2, p >= 1, q >= 1");
    if (!(coef_sparsity >= 0 && coef_sparsity <= 1)) throw Error(ErrorCode::invalid_argument, "coef_sparsity must lie in [0, 1]");
    if (!(missing_rate >= 0 && missing_rate <= 1)) throw Error(ErrorCode::invalid_argument, "missing_rate must lie in [0, 1]");
    if (n_edges < 0 || n_edges > q * (q - 1) / 2) throw Error(ErrorCode::invalid_argument, "n_edges exceeds q(q-1)/2");
    if (pattern == EdgePattern::chain && n_edges > q - 1) throw Error(ErrorCode::invalid_argument, "a chain has at most q - 1 edges");
    if (pattern == EdgePattern::groups) {
        if (group_size < 2) throw Error(ErrorCode::invalid_argument, "group_size must be at least 2");
        const Index full = q / group_size, rest = q % group_size;
        if (n_edges > full * group_size * (group_size - 1) / 2 + rest * (rest - 1) / 2) {
            throw Error(ErrorCode::invalid_argument, "n_edges exceeds the within-group pairs");
        }
    }
    if (!(edge_min > 0 && edge_max >= edge_min)) throw Error(ErrorCode::invalid_argument, "need 0 < edge_min <= edge_max");
    if (!(diag_margin > 0)) throw Error(ErrorCode::invalid_argument, "diag_margin must be positive");
    if (!(noise > 0)) throw Error(ErrorCode::invalid_argument, "noise must be positive");
    if (mechanism == Mechanism::mar && q < 2) throw Error(ErrorCode::invalid_argument, "MAR needs q >= 2");
}

double standard_normal(Rng& rng) {
    // Box-Muller on our own uniforms so the stream is library independent.
    double u1 = uniform01(rng);
    while (u1 <= 0.0) u1 = uniform01(rng);
    const double u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

namespace {

double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

double signed_magnitude(Rng& rng, double lo, double hi) {
    const double v = uniform(rng, lo, hi);
    return (rng() & 1u) ? v : -v;
}

Matrix true_precision(const SyntheticSpec& spec, Rng& rng) {
    const Index q = spec.q;
    std::vector<std::pair<Index, Index>> pairs;
    if (spec.pattern == EdgePattern::chain) {
        for (Index a = 0; a + 1 < q; ++a) pairs.emplace_back(a, a + 1);
    } else if (spec.pattern == EdgePattern::groups) {
        for (Index start = 0; start < q; start += spec.group_size) {
            const Index end = std::min(q, start + spec.group_size);
            for (Index a = start; a < end; ++a)
                for (Index b = a + 1; b < end; ++b) pairs.emplace_back(a, b);
        }
    } else {
        for (Index a = 0; a < q; ++a)
            for (Index b = a + 1; b < q; ++b) pairs.emplace_back(a, b);
        seeded_shuffle(pairs, rng);
    }
    Matrix K = Matrix::Zero(q, q);
    for (Index e = 0; e < spec.n_edges; ++e) {
        const auto [a, b] = pairs[static_cast<std::size_t>(e)];
        K(a, b) = K(b, a) = signed_magnitude(rng, spec.edge_min, spec.edge_max);
    }
    for (Index l = 0; l < q; ++l) K(l, l) = K.row(l).cwiseAbs().sum() + spec.diag_margin;
    return K / (spec.noise * spec.noise);
}

BoolMatrix draw_mask(const SyntheticSpec& spec, const Matrix& Y, Rng& rng) {
    BoolMatrix mask = BoolMatrix::Constant(spec.n, spec.q, true);
    if (spec.mechanism == Mechanism::mcar) {
        for (Index i = 0; i < spec.n; ++i)
            for (Index l = 0; l < spec.q; ++l) mask(i, l) = uniform01(rng) >= spec.missing_rate;
    } else if (spec.mechanism == Mechanism::mar) {
        std::vector<Index> order(static_cast<std::size_t>(spec.n));
        std::iota(order.begin(), order.end(), Index{0});
        std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return Y(a, 0) < Y(b, 0); });
        std::vector<double> prob(static_cast<std::size_t>(spec.n));
        for (Index rank = 0; rank < spec.n; ++rank) {
            const double pr = 2.0 * spec.missing_rate * (static_cast<double>(rank) + 0.5) / static_cast<double>(spec.n);
            prob[static_cast<std::size_t>(order[static_cast<std::size_t>(rank)])] = std::min(1.0, pr);
        }
        for (Index i = 0; i < spec.n; ++i)
            for (Index l = 1; l < spec.q; ++l) mask(i, l) = uniform01(rng) >= prob[static_cast<std::size_t>(i)];
    }
    return mask;
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const Index n = spec.n, p = spec.p, q = spec.q;

    ModelParams truth;
    truth.K = true_precision(spec, rng);
    truth.b0.resize(q);
    for (Index l = 0; l < q; ++l) truth.b0(l) = uniform(rng, -1.0, 1.0);
    truth.B = Matrix::Zero(p, q);
    for (Index j = 0; j < p; ++j)
        for (Index l = 0; l < q; ++l)
            if (uniform01(rng) >= spec.coef_sparsity) truth.B(j, l) = signed_magnitude(rng, 0.5, 1.5);

    Matrix X(n, p);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < p; ++j) X(i, j) = standard_normal(rng);

    // K = L L^T, so e = L^{-T} z has covariance K^{-1}.
    const Eigen::LLT<Matrix> llt(truth.K);
    Matrix Z(q, n);
    for (Index i = 0; i < n; ++i)
        for (Index l = 0; l < q; ++l) Z(l, i) = standard_normal(rng);
    const Matrix E = llt.matrixU().solve(Z).transpose();
    const Matrix Y = truth.predict(X) + E;

    SyntheticData out;
    for (int attempt = 0;; ++attempt) {
        BoolMatrix mask = draw_mask(spec, Y, rng);
        bool ok = true;
        for (Index l = 0; l < q; ++l) ok = ok && mask.col(l).count() > 0;
        if (ok) {
            out.data.X = X;
            out.data.Y = MaskedMatrix(Y, mask);
            out.retries = attempt;
            break;
        }
        if (attempt >= spec.max_retries) {
            throw Error(ErrorCode::fully_missing_column,
                        "missingness draw left a response fully missing after " + std::to_string(attempt + 1) + " attempts");
        }
    }
    for (Index j = 0; j < p; ++j) out.data.predictor_names.push_back("x" + std::to_string(j + 1));
    out.truth = std::move(truth);
    return out;
}

}  // namespace smrm
