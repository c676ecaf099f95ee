#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <vector>

#include "pcd/optimizer.hpp"

#include <omp.h>

using namespace pcd;

int main(int argc, char** argv) {
  const int harmonics = argc > 1 ? std::atoi(argv[1]) : 3;
  const std::size_t population = argc > 2 ? std::strtoul(argv[2], nullptr, 10) : 140;

  ProblemSetup setup;
  const HarmonicBasis basis{harmonics, 1.0};
  const StageObjective objective(basis, setup, basis.period(), 24, 1e3);
  std::vector<double> lower, upper;
  ControlParams::point_bounds(basis, setup.zero_start, setup.zero_drift, lower, upper);

  std::mt19937_64 rng(7);
  std::vector<std::vector<double>> points(population, std::vector<double>(lower.size()));
  for (auto& p : points)
    for (std::size_t i = 0; i < p.size(); ++i)
      p[i] = lower[i] + (upper[i] - lower[i]) * std::uniform_real_distribution<double>(0, 1)(rng);

  Objective f = [&](std::span<const double> x) { return objective(x); };
  std::vector<double> serial(population), parallel(population);

  auto time = [&](auto&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  const double ts = time([&] { evaluate_population_serial(f, points, serial); });
  const double tp = time([&] { evaluate_population(f, points, parallel); });

  const bool same = serial == parallel;
  std::printf("K=%d population=%zu threads=%d\n", harmonics, population, omp_get_max_threads());
  std::printf("serial   %.4f s\nparallel %.4f s\nspeedup  %.2fx\nidentical %s\n", ts, tp, ts / tp,
              same ? "yes" : "no");
  return same ? 0 : 1;
}
