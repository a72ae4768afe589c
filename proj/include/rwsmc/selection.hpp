#pragma once

#include <span>
#include <vector>

#include "rwsmc/rng.hpp"

namespace rwsmc {

// Selection functions over [N]_0 from log weights h^{1:N}, with h^0 = 0
// implicit. p must have room for N + 1 entries. Entries of h may be -inf.
// For both functions p_0 is the complement of the other entries.
void boltzmann(std::span<const double> h, std::span<double> p);
void rosenbluth_teller(std::span<const double> h, std::span<double> p);
std::vector<double> boltzmann(std::span<const double> h);
std::vector<double> rosenbluth_teller(std::span<const double> h);

// Same, from full log weights lw^{0:N}; h^n = lw^n - lw^0. Needs a finite lw^0.
// scratch must hold N entries.
void boltzmann_full(std::span<const double> lw, std::span<double> p, std::span<double> scratch);
void rosenbluth_teller_full(std::span<const double> lw, std::span<double> p,
                            std::span<double> scratch);

// Inverse-CDF draw in ascending index order.
int sample_index(std::span<const double> p, Rng& rng);
int sample_index(std::span<const double> p, double u);

// log sum exp(v); -inf for an empty or all -inf input.
double log_sum_exp(std::span<const double> v);

double effective_sample_size(std::span<const double> w);

}  // namespace rwsmc
