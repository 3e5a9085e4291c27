#pragma once

#include "mvlab/linalg.hpp"

namespace mvlab::stats {

// Survival function of the Kolmogorov distribution,
// Q(lambda) = 2 sum_{k>=1} (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_q(double lambda);

struct KsResult {
  double statistic;  // sup |F1 - F2|
  double p_value;    // asymptotic, with the usual small-sample correction
};

// Two-sample Kolmogorov-Smirnov test.
KsResult ks_two_sample(Vector a, Vector b);

double median(Vector values);
// q in [0, 1]; linear interpolation between order statistics.
double quantile(Vector values, double q);

}  // namespace mvlab::stats
