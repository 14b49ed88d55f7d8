#ifndef CDNROUTE_KERNELS_H_
#define CDNROUTE_KERNELS_H_

// Data-parallel inner loops. Each kernel has an OpenMP version and a serial
// reference with identical results (ties are broken on (i, j), so the
// reduction order never changes the answer).

#include <optional>
#include <span>

#include "cdnroute/tp_core.h"

namespace cdnroute::kernels {

struct Candidate {
  Cell cell;
  Cost reduced_cost = 0;

  bool operator==(const Candidate&) const = default;
};

// Below this many cells the parallel kernels run the serial loop.
inline constexpr long kParallelThreshold = 1 << 14;

// Fills out(i, j) = cost(i, j) - u[i] - v[j].
void reduced_cost_matrix_serial(const CostMatrix& cost,
                                std::span<const Cost> u,
                                std::span<const Cost> v, CostMatrix& out);
void reduced_cost_matrix_parallel(const CostMatrix& cost,
                                  std::span<const Cost> u,
                                  std::span<const Cost> v, CostMatrix& out);

// Most negative reduced cost over non-basic cells; ties go to the smallest
// (i, j). Empty when every reduced cost is >= 0.
std::optional<Candidate> most_negative_serial(
    const CostMatrix& cost, std::span<const Cost> u, std::span<const Cost> v,
    const Matrix<std::uint8_t>& basic);
std::optional<Candidate> most_negative_parallel(
    const CostMatrix& cost, std::span<const Cost> u, std::span<const Cost> v,
    const Matrix<std::uint8_t>& basic);

// Smallest (i, j) with a negative reduced cost (Bland's rule).
std::optional<Candidate> first_negative(const CostMatrix& cost,
                                        std::span<const Cost> u,
                                        std::span<const Cost> v,
                                        const Matrix<std::uint8_t>& basic);

// Number of threads OpenMP would use; 1 when built without OpenMP.
int max_threads();

}  // namespace cdnroute::kernels

#endif  // CDNROUTE_KERNELS_H_
