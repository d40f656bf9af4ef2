#pragma once

#include <span>
#include <vector>

#include "topkfs/autodiff.hpp"
#include "topkfs/rng.hpp"
#include "topkfs/tensor.hpp"

namespace topkfs {

/// tau(t) = max(tau_min, tau0 * exp(-rate * t)); nonincreasing in t.
struct TemperatureSchedule {
    double tau0 = 4.0;
    double rate = 0.0;
    double tau_min = 0.05;
};

double temperature_at(const TemperatureSchedule& sched, long step);

/// Subset-size annealing: k stays at d for warmup_steps, then decays
/// geometrically to k_final over decay_steps and stays there.
struct SparsitySchedule {
    int d = 0;
    int k_final = 0;
    long warmup_steps = 0;
    long decay_steps = 0;
};

int k_at(const SparsitySchedule& sched, long step);

/// Row-stochastic relaxation of the permutation that sorts the scores in
/// descending order. Row m concentrates on the index of the m-th largest
/// score as tau -> 0.
struct RelaxedPermutation {
    Tensor pi;  // [d x d]
    double tau = 0.0;
};

/// A[i,j] = |s_i - s_j|; symmetric, zero diagonal, subgradient 0 at ties.
Tensor pairwise_abs_diff(Tape& tape, const Tensor& s);

/// Row m (1-based) of the result is softmax(((d+1-2m)*s - A_s*1) / tau).
RelaxedPermutation relaxed_permutation(Tape& tape, const Tensor& s, double tau);

/// Sum of the top k rows of pi; entries in (0,k), total k, differentiable.
Tensor topk_relaxed_mask(Tape& tape, const RelaxedPermutation& perm, int k);

/// s + scale * g with g_j ~ Gumbel(0,1). The noise is a constant in the
/// backward pass. scale == 0 returns s itself.
Tensor gumbel_perturb(Tape& tape, const Tensor& s, Rng& rng, double scale);

/// Indices of the k largest entries, ranked by descending value; ties are
/// broken toward the lowest index.
std::vector<int> topk_indices(std::span<const double> values, int k);

/// Forward value is `hard_values`; the gradient is routed to `relaxed`
/// unchanged. Equivalent to hard + (relaxed - stop_gradient(relaxed)).
Tensor straight_through(Tape& tape, const Tensor& relaxed,
                        std::span<const double> hard_values);

struct SelectionMask {
    std::vector<double> hard;  // 0/1 indicator, exactly k ones
    Tensor relaxed;            // top-k row sum of the relaxed permutation
    Tensor st;                 // forward == hard, backward == relaxed
    Tensor perturbed_scores;   // the scores both masks were computed from
    int k = 0;
};

/// Full selection operator: optional Gumbel perturbation of the scores,
/// hard top-k indicator on the perturbed scores, relaxed mask on the same
/// scores, and the straight-through combination of the two. Pass rng ==
/// nullptr or noise_scale == 0 for deterministic (evaluation) selection.
SelectionMask straight_through_mask(Tape& tape, const Tensor& s, double tau, int k,
                                    Rng* rng, double noise_scale);

/// Plackett-Luce log-likelihood of `ranking` under weights exp(s_j):
/// log P = sum_m [ s_{r_m} - log sum_{j in S_m} exp(s_j) ] with S_m the
/// items not ranked before step m.
double pl_log_prob(std::span<const double> scores, std::span<const int> ranking);

}  // namespace topkfs
