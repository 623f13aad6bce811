#ifndef PLAN2VEC_STATS_HPP
#define PLAN2VEC_STATS_HPP

#include <utility>
#include <vector>

namespace plan2vec {

// Wilson score interval for a binomial proportion (z = 1.96).
struct WilsonInterval {
  double lo = 0, hi = 0;
};
WilsonInterval wilson_interval(int successes, int n, double z = 1.96);

// Spearman rank correlation with average ranks on ties.
double spearman(const std::vector<double>& xs, const std::vector<double>& ys);

// Least-squares slope of log(y) against log(x); the growth exponent of y in x.
double loglog_exponent(const std::vector<double>& xs, const std::vector<double>& ys);

double median(std::vector<double> values);

std::vector<double> moving_average(const std::vector<double>& values, int window);

}  // namespace plan2vec

#endif
