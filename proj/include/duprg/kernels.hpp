#pragma once

// Data-parallel inner loops used by the autoencoder and the classifier.
//
// Every kernel has an OpenMP version (namespace duprg::kernels) and a serial
// reference (namespace duprg::kernels::reference). Each output element is
// produced by exactly one thread with the same summation order as the serial
// code, so both versions return bitwise-identical results regardless of the
// thread count.

#include "duprg/matrix.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace duprg::kernels {

/// out = in * weight^T + bias.  in: n x k, weight: m x k, bias: m, out: n x m.
void linear_forward(const Matrix& in, const Matrix& weight, std::span<const double> bias, Matrix& out);

/// grad_weight = grad_out^T * in, grad_bias = column sums of grad_out.
void linear_backward_params(const Matrix& grad_out, const Matrix& in, Matrix& grad_weight,
                            std::span<double> grad_bias);

/// grad_in = grad_out * weight.
void linear_backward_input(const Matrix& grad_out, const Matrix& weight, Matrix& grad_in);

/// In-place ReLU; keeps the pre-activation untouched by writing into `act`.
void relu(const Matrix& pre, Matrix& act);

/// grad *= (pre > 0)
void relu_backward(const Matrix& pre, Matrix& grad);

/// Index of the row of `reps` with the highest cosine similarity to each row of
/// `queries`. `rep_norms` holds the Euclidean norm of every rep row. Ties resolve
/// to the lowest index.
std::vector<std::size_t> argmax_cosine(const Matrix& queries, const Matrix& reps,
                                       std::span<const double> rep_norms);

namespace reference {

void linear_forward(const Matrix& in, const Matrix& weight, std::span<const double> bias, Matrix& out);
void linear_backward_params(const Matrix& grad_out, const Matrix& in, Matrix& grad_weight,
                            std::span<double> grad_bias);
void linear_backward_input(const Matrix& grad_out, const Matrix& weight, Matrix& grad_in);
void relu(const Matrix& pre, Matrix& act);
void relu_backward(const Matrix& pre, Matrix& grad);
std::vector<std::size_t> argmax_cosine(const Matrix& queries, const Matrix& reps,
                                       std::span<const double> rep_norms);

} // namespace reference

/// Number of threads the parallel kernels will use (1 when built without OpenMP).
int max_threads();

} // namespace duprg::kernels
