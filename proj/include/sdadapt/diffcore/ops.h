// diffcore/ops.h

// Copyright 2026  The sdadapt Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SDADAPT_DIFFCORE_OPS_H_
#define SDADAPT_DIFFCORE_OPS_H_

#include <cstddef>
#include <vector>

#include "sdadapt/base/random.h"
#include "sdadapt/diffcore/array.h"

namespace sdadapt {

// Linear algebra. All matrices are rank-2, row-major.
DiffArray MatMul(const DiffArray& a, const DiffArray& b);         // a[m×k]·b[k×n]
DiffArray MatMulNT(const DiffArray& a, const DiffArray& b);       // a[m×k]·b[n×k]ᵀ
DiffArray Transpose(const DiffArray& a);

// Elementwise arithmetic on equal shapes.
DiffArray Add(const DiffArray& a, const DiffArray& b);
DiffArray Sub(const DiffArray& a, const DiffArray& b);
DiffArray Hadamard(const DiffArray& a, const DiffArray& b);
DiffArray Scale(const DiffArray& a, double factor);

// Row broadcasting: x[T×m] with v[m] applied to every row.
DiffArray AddRow(const DiffArray& x, const DiffArray& v);
DiffArray MulRow(const DiffArray& x, const DiffArray& v);

DiffArray Sigmoid(const DiffArray& x);
// Exact GELU, x·Φ(x) with the erf-based normal CDF.
DiffArray Gelu(const DiffArray& x);

/// Normalizes over the last axis with the population variance, then applies
/// gamma and beta.
DiffArray LayerNorm(const DiffArray& x, const DiffArray& gamma, const DiffArray& beta,
                    double eps);

/// Row-wise log-softmax over the last axis, computed as x − logsumexp(x).
DiffArray LogSoftmax(const DiffArray& x);
DiffArray Softmax(const DiffArray& x);

/// Strided valid convolution over time. x is [T×Cin]; kernel is
/// [Cout×K×Cin]; bias (optional, may be undefined) is [Cout]. Output is
/// [T'×Cout] with T' = floor((T − K)/stride) + 1.
DiffArray Conv1d(const DiffArray& x, const DiffArray& kernel, const DiffArray& bias,
                 std::size_t stride);
std::size_t Conv1dOutputLength(std::size_t length, std::size_t kernel, std::size_t stride);

/// Inverted dropout: survivors are scaled by 1/(1−p). Identity (the same
/// handle) when training is false or p == 0.
DiffArray Dropout(const DiffArray& x, double p, Rng& rng, bool training);

DiffArray SliceCols(const DiffArray& x, std::size_t begin, std::size_t count);
DiffArray ConcatCols(const std::vector<DiffArray>& parts);

DiffArray Sum(const DiffArray& x);
DiffArray Mean(const DiffArray& x);
// Sum of scalars.
DiffArray AddN(const std::vector<DiffArray>& scalars);

}  // namespace sdadapt

#endif  // SDADAPT_DIFFCORE_OPS_H_
