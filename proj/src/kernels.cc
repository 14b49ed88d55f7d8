#include "cdnroute/kernels.h"

#include <tuple>

#ifdef CDNROUTE_HAS_OPENMP
#include <omp.h>
#endif

namespace cdnroute::kernels {

namespace {

// Strict "better candidate" order: more negative first, then smaller cell.
bool better(const Candidate& a, const Candidate& b) {
  return std::tie(a.reduced_cost, a.cell) < std::tie(b.reduced_cost, b.cell);
}

long cell_count(const CostMatrix& cost) {
  return static_cast<long>(cost.rows()) * cost.cols();
}

}  // namespace

void reduced_cost_matrix_serial(const CostMatrix& cost,
                                std::span<const Cost> u,
                                std::span<const Cost> v, CostMatrix& out) {
  out = CostMatrix(cost.rows(), cost.cols());
  for (int i = 0; i < cost.rows(); ++i) {
    for (int j = 0; j < cost.cols(); ++j) {
      out(i, j) = cost(i, j) - u[i] - v[j];
    }
  }
}

void reduced_cost_matrix_parallel(const CostMatrix& cost,
                                  std::span<const Cost> u,
                                  std::span<const Cost> v, CostMatrix& out) {
  if (cell_count(cost) < kParallelThreshold) {
    reduced_cost_matrix_serial(cost, u, v, out);
    return;
  }
  out = CostMatrix(cost.rows(), cost.cols());
  const int rows = cost.rows();
  const int cols = cost.cols();
#pragma omp parallel for schedule(static)
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      out(i, j) = cost(i, j) - u[i] - v[j];
    }
  }
}

std::optional<Candidate> most_negative_serial(
    const CostMatrix& cost, std::span<const Cost> u, std::span<const Cost> v,
    const Matrix<std::uint8_t>& basic) {
  std::optional<Candidate> best;
  for (int i = 0; i < cost.rows(); ++i) {
    for (int j = 0; j < cost.cols(); ++j) {
      if (basic(i, j)) continue;
      const Cost rc = cost(i, j) - u[i] - v[j];
      if (rc >= 0) continue;
      Candidate c{{i, j}, rc};
      if (!best || better(c, *best)) best = c;
    }
  }
  return best;
}

std::optional<Candidate> most_negative_parallel(
    const CostMatrix& cost, std::span<const Cost> u, std::span<const Cost> v,
    const Matrix<std::uint8_t>& basic) {
  if (cell_count(cost) < kParallelThreshold) {
    return most_negative_serial(cost, u, v, basic);
  }
  std::optional<Candidate> best;
  const int rows = cost.rows();
  const int cols = cost.cols();
#pragma omp parallel
  {
    std::optional<Candidate> local;
#pragma omp for schedule(static) nowait
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) {
        if (basic(i, j)) continue;
        const Cost rc = cost(i, j) - u[i] - v[j];
        if (rc >= 0) continue;
        Candidate c{{i, j}, rc};
        if (!local || better(c, *local)) local = c;
      }
    }
#pragma omp critical(cdnroute_most_negative)
    {
      if (local && (!best || better(*local, *best))) best = local;
    }
  }
  return best;
}

std::optional<Candidate> first_negative(const CostMatrix& cost,
                                        std::span<const Cost> u,
                                        std::span<const Cost> v,
                                        const Matrix<std::uint8_t>& basic) {
  for (int i = 0; i < cost.rows(); ++i) {
    for (int j = 0; j < cost.cols(); ++j) {
      if (basic(i, j)) continue;
      const Cost rc = cost(i, j) - u[i] - v[j];
      if (rc < 0) return Candidate{{i, j}, rc};
    }
  }
  return std::nullopt;
}

int max_threads() {
#ifdef CDNROUTE_HAS_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace cdnroute::kernels
