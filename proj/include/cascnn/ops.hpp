#pragma once

#include "cascnn/tensor.hpp"

namespace cascnn {

// Elementwise arithmetic on identically shaped tensors.
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);

// Multiply every element by a constant.
Tensor scale(const Tensor& a, double factor);

Tensor relu(const Tensor& a);  // subgradient at 0 is 0
Tensor sigmoid(const Tensor& a);

// Sum of all elements, as a scalar tensor.
Tensor sum(const Tensor& a);

// Same data, new shape of identical total size.
Tensor reshape(const Tensor& a, Shape shape);

// Same-padded 2-D convolution. input: C_in x H x W, weight: C_out x C_in x k x k
// (k odd, square), bias: C_out. Output keeps H x W; the zero padding width is
// (k - 1) / 2 on every side.
Tensor conv2d_same(const Tensor& input, const Tensor& weight, const Tensor& bias);

// Per-position linear map across channels. input: C_in x H x W,
// weight: C_out x C_in, bias: C_out. Equals conv2d_same with k = 1.
Tensor conv1x1(const Tensor& input, const Tensor& weight, const Tensor& bias);

// Mean over the spatial positions of each channel. C x H x W -> C.
Tensor global_avg_pool(const Tensor& input);

// Affine map: weight (n_out x n_in) * input (n_in) + bias (n_out).
Tensor dense(const Tensor& input, const Tensor& weight, const Tensor& bias);

// Multiply channel c of x (C x H x W) by s[c].
Tensor scale_channels(const Tensor& x, const Tensor& s);

// out[i, j] = m[i, j] + v[i] for m: H x W, v: H.
Tensor broadcast_rows(const Tensor& m, const Tensor& v);

// out[c, i, j] = x[c, i, j] + v[i] for x: C x H x W, v: H. Reduces to
// broadcast_rows on the single channel when C = 1.
Tensor add_row_vector(const Tensor& x, const Tensor& v);

}  // namespace cascnn
