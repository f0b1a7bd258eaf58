#pragma once

namespace sanet::detail {

/// Row-major double GEMM: C = op(A) * op(B) (+ C when accumulate).
/// op(X) is X or its transpose; lda/ldb are the leading dimensions of the
/// stored (untransposed) matrices. Single-threaded and deterministic:
/// the accumulation order depends only on the problem size.
void gemm(bool trans_a, bool trans_b, int m, int n, int k, const double* a,
          int lda, const double* b, int ldb, double* c, int ldc,
          bool accumulate);

}  // namespace sanet::detail
