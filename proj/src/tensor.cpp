#include "asl/tensor.hpp"

#include <algorithm>

#include <Eigen/Core>

namespace asl::detail {

namespace {

template <typename T>
using MatMap =
    Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic,
                                   Eigen::RowMajor>>;
template <typename T>
using MutMatMap =
    Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic,
                             Eigen::RowMajor>>;

}  // namespace

template <typename T>
void gemm(bool trans_a, bool trans_b, std::size_t m, std::size_t n,
          std::size_t k, const T* a, const T* b, T beta, T* c) {
  const auto em = static_cast<Eigen::Index>(m);
  const auto en = static_cast<Eigen::Index>(n);
  const auto ek = static_cast<Eigen::Index>(k);

  MatMap<T> am(a, trans_a ? ek : em, trans_a ? em : ek);
  MatMap<T> bm(b, trans_b ? en : ek, trans_b ? ek : en);
  MutMatMap<T> cm(c, em, en);

  // Computes output rows [row0, row0+rows). Row blocks of C are independent,
  // so the OpenMP split below cannot change any output bit: every C element
  // is produced by exactly one Eigen evaluation whose accumulation order
  // does not depend on the chunking of the other rows.
  auto block = [&](std::size_t row0, std::size_t rows) {
    auto cblk = cm.middleRows(static_cast<Eigen::Index>(row0),
                              static_cast<Eigen::Index>(rows));
    auto compute = [&](const auto& lhs) {
      if (trans_b) {
        if (beta == T(0))
          cblk.noalias() = lhs * bm.transpose();
        else
          cblk.noalias() = lhs * bm.transpose() + beta * cblk;
      } else {
        if (beta == T(0))
          cblk.noalias() = lhs * bm;
        else
          cblk.noalias() = lhs * bm + beta * cblk;
      }
    };
    if (trans_a) {
      compute(am.middleCols(static_cast<Eigen::Index>(row0),
                            static_cast<Eigen::Index>(rows))
                  .transpose());
    } else {
      compute(am.middleRows(static_cast<Eigen::Index>(row0),
                            static_cast<Eigen::Index>(rows)));
    }
  };

  // Fixed 64-row chunks: the partition depends only on m, never on the
  // thread count, which keeps results byte-identical across machines with
  // different core counts.
  constexpr std::size_t kChunk = 64;
  const bool parallel = m > kChunk && m * n * k > (1u << 20);
  if (!parallel) {
    block(0, m);
    return;
  }
  const std::size_t chunks = (m + kChunk - 1) / kChunk;
#pragma omp parallel for schedule(static)
  for (long long i = 0; i < static_cast<long long>(chunks); ++i) {
    const std::size_t row0 = static_cast<std::size_t>(i) * kChunk;
    block(row0, std::min(kChunk, m - row0));
  }
}

template void gemm<float>(bool, bool, std::size_t, std::size_t, std::size_t,
                          const float*, const float*, float, float*);
template void gemm<double>(bool, bool, std::size_t, std::size_t, std::size_t,
                           const double*, const double*, double, double*);

}  // namespace asl::detail
