#include "topkfs/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace topkfs {

double temperature_at(const TemperatureSchedule& sched, long step) {
    if (step < 0) throw std::invalid_argument("temperature_at: negative step");
    return std::max(sched.tau_min, sched.tau0 * std::exp(-sched.rate * static_cast<double>(step)));
}

int k_at(const SparsitySchedule& sched, long step) {
    if (step < 0) throw std::invalid_argument("k_at: negative step");
    if (sched.k_final < 1 || sched.k_final > sched.d)
        throw std::invalid_argument("k_at: k_final " + std::to_string(sched.k_final) +
                                    " outside [1, " + std::to_string(sched.d) + "]");
    if (step < sched.warmup_steps) return sched.d;
    const long t = step - sched.warmup_steps;
    if (sched.decay_steps <= 0 || t >= sched.decay_steps) return sched.k_final;
    const double frac = static_cast<double>(t) / static_cast<double>(sched.decay_steps);
    const double ratio = static_cast<double>(sched.k_final) / static_cast<double>(sched.d);
    const long k = std::llround(static_cast<double>(sched.d) * std::pow(ratio, frac));
    return static_cast<int>(std::clamp<long>(k, sched.k_final, sched.d));
}

Tensor pairwise_abs_diff(Tape& tape, const Tensor& s) {
    if (s.rank() != 1 || s.dim(0) < 1)
        throw std::invalid_argument("pairwise_abs_diff: expected non-empty vector, got " +
                                    s.shape_str());
    const int d = s.dim(0);
    Tensor out = Tensor::zeros({d, d}, s.requires_grad());
    auto sv = s.values();
    auto ov = out.mutable_values();
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            ov[static_cast<std::size_t>(i) * d + j] = std::abs(sv[i] - sv[j]);

    if (!out.requires_grad()) return out;
    tape.record({s}, out, [ss = s.storage(), os = out.storage(), d] {
        const auto& g = os->adjoint;
        const auto& sv = ss->values;
        auto& gs = ss->adjoint;
        for (int i = 0; i < d; ++i) {
            for (int j = 0; j < d; ++j) {
                const double diff = sv[i] - sv[j];
                if (diff == 0.0) continue;  // subgradient 0 at ties
                const double sg = diff > 0.0 ? 1.0 : -1.0;
                const double gij = g[static_cast<std::size_t>(i) * d + j];
                gs[i] += gij * sg;
                gs[j] -= gij * sg;
            }
        }
    });
    return out;
}

RelaxedPermutation relaxed_permutation(Tape& tape, const Tensor& s, double tau) {
    if (!(tau > 0.0))
        throw std::invalid_argument("relaxed_permutation: tau must be positive, got " +
                                    std::to_string(tau));
    const int d = s.dim(0);
    Tensor diffs = pairwise_abs_diff(tape, s);
    Tensor row_sums = reduce_sum(tape, diffs, 1);  // (A_s * 1)_n

    // Row coefficients (d+1-2m) for m = 1..d.
    std::vector<double> coef(static_cast<std::size_t>(d));
    for (int m = 1; m <= d; ++m) coef[m - 1] = static_cast<double>(d + 1 - 2 * m);
    Tensor coef_col = Tensor::from({d, 1}, std::move(coef));

    Tensor outer = matmul(tape, coef_col, reshape(tape, s, {1, d}));
    Tensor logits = scale(tape, sub(tape, outer, row_sums), 1.0 / tau);
    return RelaxedPermutation{softmax_rows(tape, logits), tau};
}

Tensor topk_relaxed_mask(Tape& tape, const RelaxedPermutation& perm, int k) {
    const int d = perm.pi.dim(0);
    if (k < 1 || k > d)
        throw std::invalid_argument("topk_relaxed_mask: k " + std::to_string(k) +
                                    " outside [1, " + std::to_string(d) + "]");
    std::vector<double> selector(static_cast<std::size_t>(d), 0.0);
    std::fill(selector.begin(), selector.begin() + k, 1.0);
    Tensor row = matmul(tape, Tensor::from({1, d}, std::move(selector)), perm.pi);
    return reshape(tape, row, {d});
}

Tensor gumbel_perturb(Tape& tape, const Tensor& s, Rng& rng, double scale) {
    if (scale < 0.0) throw std::invalid_argument("gumbel_perturb: negative scale");
    if (scale == 0.0) return s;
    const int d = s.dim(0);
    std::vector<double> noise(static_cast<std::size_t>(d));
    for (double& v : noise) v = scale * rng.gumbel();
    return add(tape, s, Tensor::from({d}, std::move(noise)));
}

std::vector<int> topk_indices(std::span<const double> values, int k) {
    const int d = static_cast<int>(values.size());
    if (k < 1 || k > d)
        throw std::invalid_argument("topk_indices: k " + std::to_string(k) + " outside [1, " +
                                    std::to_string(d) + "]");
    std::vector<int> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (values[a] != values[b]) return values[a] > values[b];
        return a < b;
    });
    order.resize(static_cast<std::size_t>(k));
    return order;
}

Tensor straight_through(Tape& tape, const Tensor& relaxed,
                        std::span<const double> hard_values) {
    if (relaxed.numel() != hard_values.size())
        throw std::invalid_argument("straight_through: size mismatch");
    Tensor out = Tensor::from(relaxed.shape(),
                              std::vector<double>(hard_values.begin(), hard_values.end()),
                              relaxed.requires_grad());
    if (!out.requires_grad()) return out;
    tape.record({relaxed}, out, [rs = relaxed.storage(), os = out.storage()] {
        auto& gr = rs->adjoint;
        const auto& g = os->adjoint;
        for (std::size_t i = 0; i < g.size(); ++i) gr[i] += g[i];
    });
    return out;
}

SelectionMask straight_through_mask(Tape& tape, const Tensor& s, double tau, int k, Rng* rng,
                                    double noise_scale) {
    const int d = s.dim(0);
    if (k < 1 || k > d)
        throw std::invalid_argument("straight_through_mask: k " + std::to_string(k) +
                                    " outside [1, " + std::to_string(d) + "]");

    Tensor perturbed = (rng != nullptr && noise_scale > 0.0)
                           ? gumbel_perturb(tape, s, *rng, noise_scale)
                           : s;

    SelectionMask mask;
    mask.k = k;
    mask.perturbed_scores = perturbed;
    mask.hard.assign(static_cast<std::size_t>(d), 0.0);
    for (int idx : topk_indices(perturbed.values(), k)) mask.hard[static_cast<std::size_t>(idx)] = 1.0;

    RelaxedPermutation perm = relaxed_permutation(tape, perturbed, tau);
    mask.relaxed = topk_relaxed_mask(tape, perm, k);
    mask.st = straight_through(tape, mask.relaxed, mask.hard);
    return mask;
}

double pl_log_prob(std::span<const double> scores, std::span<const int> ranking) {
    const std::size_t d = scores.size();
    if (ranking.size() != d) throw std::invalid_argument("pl_log_prob: ranking length mismatch");
    std::vector<bool> seen(d, false);
    for (int r : ranking) {
        if (r < 0 || static_cast<std::size_t>(r) >= d || seen[static_cast<std::size_t>(r)])
            throw std::invalid_argument("pl_log_prob: ranking is not a permutation");
        seen[static_cast<std::size_t>(r)] = true;
    }

    std::vector<bool> taken(d, false);
    double log_p = 0.0;
    for (std::size_t m = 0; m < d; ++m) {
        // log-sum-exp over the items still available at step m
        double mx = -std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < d; ++j)
            if (!taken[j]) mx = std::max(mx, scores[j]);
        double denom = 0.0;
        for (std::size_t j = 0; j < d; ++j)
            if (!taken[j]) denom += std::exp(scores[j] - mx);
        const int pick = ranking[m];
        log_p += scores[static_cast<std::size_t>(pick)] - (mx + std::log(denom));
        taken[static_cast<std::size_t>(pick)] = true;
    }
    return log_p;
}

}  // namespace topkfs
