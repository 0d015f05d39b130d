#include "cascnn/ops.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace cascnn {

namespace {

using detail::Node;
using NodePtr = std::shared_ptr<Node>;

Tensor make_node(Shape shape, std::vector<double> values, std::vector<NodePtr> parents,
                 std::function<void(Node&)> backprop) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->values = std::move(values);
  node->parents = std::move(parents);
  node->backprop = std::move(backprop);
  return Tensor::wrap(std::move(node));
}

void require_defined(const Tensor& t, const char* op) {
  if (!t.defined()) throw UsageError(std::string(op) + ": undefined tensor operand");
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() == b.shape()) return;
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.size() != sb.size()) {
    throw DimensionError(std::string(op) + ": rank mismatch, " + std::to_string(sa.size()) +
                         " vs " + std::to_string(sb.size()));
  }
  for (std::size_t axis = 0; axis < sa.size(); ++axis) {
    if (sa[axis] != sb[axis]) {
      throw DimensionError(std::string(op) + ": axis " + std::to_string(axis) + " mismatch, " +
                           std::to_string(sa[axis]) + " vs " + std::to_string(sb[axis]));
    }
  }
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  require_defined(a, "add");
  require_defined(b, "add");
  require_same_shape(a, b, "add");
  std::vector<double> out(a.size());
  const double* pa = a.data();
  const double* pb = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = pa[i] + pb[i];
  return make_node(a.shape(), std::move(out), {a.node(), b.node()}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    for (std::size_t i = 0; i < self.size(); ++i) {
      pa.seed[i] += self.seed[i];
      pb.seed[i] += self.seed[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_defined(a, "sub");
  require_defined(b, "sub");
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.size());
  const double* pa = a.data();
  const double* pb = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = pa[i] - pb[i];
  return make_node(a.shape(), std::move(out), {a.node(), b.node()}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    for (std::size_t i = 0; i < self.size(); ++i) {
      pa.seed[i] += self.seed[i];
      pb.seed[i] -= self.seed[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_defined(a, "mul");
  require_defined(b, "mul");
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.size());
  const double* pa = a.data();
  const double* pb = b.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = pa[i] * pb[i];
  // When a and b alias the same node both updates land on it, which yields
  // the correct 2x factor for squares.
  return make_node(a.shape(), std::move(out), {a.node(), b.node()}, [](Node& self) {
    Node& pa = *self.parents[0];
    Node& pb = *self.parents[1];
    for (std::size_t i = 0; i < self.size(); ++i) {
      pa.seed[i] += self.seed[i] * pb.values[i];
      pb.seed[i] += self.seed[i] * pa.values[i];
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  require_defined(a, "scale");
  std::vector<double> out(a.size());
  const double* pa = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = pa[i] * factor;
  return make_node(a.shape(), std::move(out), {a.node()}, [factor](Node& self) {
    Node& pa = *self.parents[0];
    for (std::size_t i = 0; i < self.size(); ++i) pa.seed[i] += self.seed[i] * factor;
  });
}

Tensor relu(const Tensor& a) {
  require_defined(a, "relu");
  std::vector<double> out(a.size());
  const double* pa = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = pa[i] > 0.0 ? pa[i] : 0.0;
  return make_node(a.shape(), std::move(out), {a.node()}, [](Node& self) {
    Node& pa = *self.parents[0];
    for (std::size_t i = 0; i < self.size(); ++i) {
      if (pa.values[i] > 0.0) pa.seed[i] += self.seed[i];
    }
  });
}

Tensor sigmoid(const Tensor& a) {
  require_defined(a, "sigmoid");
  std::vector<double> out(a.size());
  const double* pa = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = 1.0 / (1.0 + std::exp(-pa[i]));
  return make_node(a.shape(), std::move(out), {a.node()}, [](Node& self) {
    Node& pa = *self.parents[0];
    for (std::size_t i = 0; i < self.size(); ++i) {
      double s = self.values[i];
      pa.seed[i] += self.seed[i] * s * (1.0 - s);
    }
  });
}

Tensor sum(const Tensor& a) {
  require_defined(a, "sum");
  double total = 0.0;
  const double* pa = a.data();
  for (std::size_t i = 0; i < a.size(); ++i) total += pa[i];
  return make_node({1}, {total}, {a.node()}, [](Node& self) {
    Node& pa = *self.parents[0];
    for (std::size_t i = 0; i < pa.size(); ++i) pa.seed[i] += self.seed[0];
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  require_defined(a, "reshape");
  std::size_t total = 1;
  for (std::size_t extent : shape) total *= extent;
  if (total != a.size()) {
    throw DimensionError("reshape: target holds " + std::to_string(total) +
                         " elements, source has " + std::to_string(a.size()));
  }
  return make_node(std::move(shape), a.values(), {a.node()}, [](Node& self) {
    Node& pa = *self.parents[0];
    for (std::size_t i = 0; i < self.size(); ++i) pa.seed[i] += self.seed[i];
  });
}

Tensor conv2d_same(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  require_defined(input, "conv2d_same");
  require_defined(weight, "conv2d_same");
  require_defined(bias, "conv2d_same");
  if (input.rank() != 3) {
    throw DimensionError("conv2d_same: input must be rank 3 (C x H x W), got rank " +
                         std::to_string(input.rank()));
  }
  if (weight.rank() != 4) {
    throw DimensionError("conv2d_same: weight must be rank 4 (C_out x C_in x k x k), got rank " +
                         std::to_string(weight.rank()));
  }
  const Shape& is = input.shape();
  const Shape& ws = weight.shape();
  const std::size_t c_in = is[0], height = is[1], width = is[2];
  const std::size_t c_out = ws[0], k = ws[2];
  if (ws[2] != ws[3]) {
    throw DimensionError("conv2d_same: kernel must be square, axes 2 and 3 are " +
                         std::to_string(ws[2]) + " x " + std::to_string(ws[3]));
  }
  if (k % 2 == 0) {
    throw DimensionError("conv2d_same: kernel size must be odd, axis 2 extent is " +
                         std::to_string(k));
  }
  if (ws[1] != c_in) {
    throw DimensionError("conv2d_same: weight axis 1 (" + std::to_string(ws[1]) +
                         ") must match input axis 0 (" + std::to_string(c_in) + ")");
  }
  if (bias.rank() != 1 || bias.shape()[0] != c_out) {
    throw DimensionError("conv2d_same: bias axis 0 must have extent " + std::to_string(c_out));
  }

  const long pad = static_cast<long>(k - 1) / 2;
  const double* in = input.data();
  const double* w = weight.data();
  const double* b = bias.data();
  std::vector<double> out(c_out * height * width);
  for (std::size_t c = 0; c < c_out; ++c) {
    for (std::size_t x = 0; x < height; ++x) {
      for (std::size_t y = 0; y < width; ++y) {
        double acc = b[c];
        for (std::size_t m = 0; m < c_in; ++m) {
          for (std::size_t p = 0; p < k; ++p) {
            const long ix = static_cast<long>(x + p) - pad;
            if (ix < 0 || ix >= static_cast<long>(height)) continue;
            for (std::size_t q = 0; q < k; ++q) {
              const long iy = static_cast<long>(y + q) - pad;
              if (iy < 0 || iy >= static_cast<long>(width)) continue;
              acc += w[((c * c_in + m) * k + p) * k + q] * in[(m * height + ix) * width + iy];
            }
          }
        }
        out[(c * height + x) * width + y] = acc;
      }
    }
  }

  auto backprop = [c_in, c_out, height, width, k, pad](Node& self) {
    Node& in_node = *self.parents[0];
    Node& w_node = *self.parents[1];
    Node& b_node = *self.parents[2];
    for (std::size_t c = 0; c < c_out; ++c) {
      for (std::size_t x = 0; x < height; ++x) {
        for (std::size_t y = 0; y < width; ++y) {
          const double g = self.seed[(c * height + x) * width + y];
          if (g == 0.0) continue;
          b_node.seed[c] += g;
          for (std::size_t m = 0; m < c_in; ++m) {
            for (std::size_t p = 0; p < k; ++p) {
              const long ix = static_cast<long>(x + p) - pad;
              if (ix < 0 || ix >= static_cast<long>(height)) continue;
              for (std::size_t q = 0; q < k; ++q) {
                const long iy = static_cast<long>(y + q) - pad;
                if (iy < 0 || iy >= static_cast<long>(width)) continue;
                const std::size_t in_idx = (m * height + ix) * width + iy;
                const std::size_t w_idx = ((c * c_in + m) * k + p) * k + q;
                in_node.seed[in_idx] += g * w_node.values[w_idx];
                w_node.seed[w_idx] += g * in_node.values[in_idx];
              }
            }
          }
        }
      }
    }
  };
  return make_node({c_out, height, width}, std::move(out),
                   {input.node(), weight.node(), bias.node()}, backprop);
}

Tensor conv1x1(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  require_defined(input, "conv1x1");
  require_defined(weight, "conv1x1");
  require_defined(bias, "conv1x1");
  if (input.rank() != 3) {
    throw DimensionError("conv1x1: input must be rank 3 (C x H x W), got rank " +
                         std::to_string(input.rank()));
  }
  if (weight.rank() != 2) {
    throw DimensionError("conv1x1: weight must be rank 2 (C_out x C_in), got rank " +
                         std::to_string(weight.rank()));
  }
  const Shape& is = input.shape();
  const std::size_t c_in = is[0], height = is[1], width = is[2];
  const std::size_t c_out = weight.shape()[0];
  if (weight.shape()[1] != c_in) {
    throw DimensionError("conv1x1: weight axis 1 (" + std::to_string(weight.shape()[1]) +
                         ") must match input axis 0 (" + std::to_string(c_in) + ")");
  }
  if (bias.rank() != 1 || bias.shape()[0] != c_out) {
    throw DimensionError("conv1x1: bias axis 0 must have extent " + std::to_string(c_out));
  }

  const std::size_t hw = height * width;
  const double* in = input.data();
  const double* w = weight.data();
  const double* b = bias.data();
  std::vector<double> out(c_out * hw);
  for (std::size_t c = 0; c < c_out; ++c) {
    for (std::size_t s = 0; s < hw; ++s) {
      double acc = b[c];
      for (std::size_t m = 0; m < c_in; ++m) acc += w[c * c_in + m] * in[m * hw + s];
      out[c * hw + s] = acc;
    }
  }

  auto backprop = [c_in, c_out, hw](Node& self) {
    Node& in_node = *self.parents[0];
    Node& w_node = *self.parents[1];
    Node& b_node = *self.parents[2];
    for (std::size_t c = 0; c < c_out; ++c) {
      for (std::size_t s = 0; s < hw; ++s) {
        const double g = self.seed[c * hw + s];
        if (g == 0.0) continue;
        b_node.seed[c] += g;
        for (std::size_t m = 0; m < c_in; ++m) {
          in_node.seed[m * hw + s] += g * w_node.values[c * c_in + m];
          w_node.seed[c * c_in + m] += g * in_node.values[m * hw + s];
        }
      }
    }
  };
  return make_node({c_out, height, width}, std::move(out),
                   {input.node(), weight.node(), bias.node()}, backprop);
}

Tensor global_avg_pool(const Tensor& input) {
  require_defined(input, "global_avg_pool");
  if (input.rank() != 3) {
    throw DimensionError("global_avg_pool: input must be rank 3 (C x H x W), got rank " +
                         std::to_string(input.rank()));
  }
  const Shape& is = input.shape();
  const std::size_t channels = is[0], hw = is[1] * is[2];
  if (hw == 0) throw DimensionError("global_avg_pool: empty spatial extent");
  const double* in = input.data();
  std::vector<double> out(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    double acc = 0.0;
    for (std::size_t s = 0; s < hw; ++s) acc += in[c * hw + s];
    out[c] = acc / static_cast<double>(hw);
  }
  return make_node({channels}, std::move(out), {input.node()}, [channels, hw](Node& self) {
    Node& pa = *self.parents[0];
    const double inv = 1.0 / static_cast<double>(hw);
    for (std::size_t c = 0; c < channels; ++c) {
      const double g = self.seed[c] * inv;
      for (std::size_t s = 0; s < hw; ++s) pa.seed[c * hw + s] += g;
    }
  });
}

Tensor dense(const Tensor& input, const Tensor& weight, const Tensor& bias) {
  require_defined(input, "dense");
  require_defined(weight, "dense");
  require_defined(bias, "dense");
  if (input.rank() != 1) {
    throw DimensionError("dense: input must be rank 1, got rank " + std::to_string(input.rank()));
  }
  if (weight.rank() != 2) {
    throw DimensionError("dense: weight must be rank 2 (n_out x n_in), got rank " +
                         std::to_string(weight.rank()));
  }
  const std::size_t n_in = input.shape()[0];
  const std::size_t n_out = weight.shape()[0];
  if (weight.shape()[1] != n_in) {
    throw DimensionError("dense: weight axis 1 (" + std::to_string(weight.shape()[1]) +
                         ") must match input axis 0 (" + std::to_string(n_in) + ")");
  }
  if (bias.rank() != 1 || bias.shape()[0] != n_out) {
    throw DimensionError("dense: bias axis 0 must have extent " + std::to_string(n_out));
  }

  const double* in = input.data();
  const double* w = weight.data();
  const double* b = bias.data();
  std::vector<double> out(n_out);
  for (std::size_t o = 0; o < n_out; ++o) {
    double acc = b[o];
    for (std::size_t i = 0; i < n_in; ++i) acc += w[o * n_in + i] * in[i];
    out[o] = acc;
  }
  return make_node({n_out}, std::move(out), {input.node(), weight.node(), bias.node()},
                   [n_in, n_out](Node& self) {
                     Node& in_node = *self.parents[0];
                     Node& w_node = *self.parents[1];
                     Node& b_node = *self.parents[2];
                     for (std::size_t o = 0; o < n_out; ++o) {
                       const double g = self.seed[o];
                       if (g == 0.0) continue;
                       b_node.seed[o] += g;
                       for (std::size_t i = 0; i < n_in; ++i) {
                         in_node.seed[i] += g * w_node.values[o * n_in + i];
                         w_node.seed[o * n_in + i] += g * in_node.values[i];
                       }
                     }
                   });
}

Tensor scale_channels(const Tensor& x, const Tensor& s) {
  require_defined(x, "scale_channels");
  require_defined(s, "scale_channels");
  if (x.rank() != 3) {
    throw DimensionError("scale_channels: input must be rank 3 (C x H x W), got rank " +
                         std::to_string(x.rank()));
  }
  const std::size_t channels = x.shape()[0];
  const std::size_t hw = x.shape()[1] * x.shape()[2];
  if (s.rank() != 1 || s.shape()[0] != channels) {
    throw DimensionError("scale_channels: scale axis 0 must have extent " +
                         std::to_string(channels));
  }
  const double* px = x.data();
  const double* ps = s.data();
  std::vector<double> out(x.size());
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t i = 0; i < hw; ++i) out[c * hw + i] = px[c * hw + i] * ps[c];
  }
  return make_node(x.shape(), std::move(out), {x.node(), s.node()}, [channels, hw](Node& self) {
    Node& x_node = *self.parents[0];
    Node& s_node = *self.parents[1];
    for (std::size_t c = 0; c < channels; ++c) {
      for (std::size_t i = 0; i < hw; ++i) {
        const double g = self.seed[c * hw + i];
        x_node.seed[c * hw + i] += g * s_node.values[c];
        s_node.seed[c] += g * x_node.values[c * hw + i];
      }
    }
  });
}

Tensor broadcast_rows(const Tensor& m, const Tensor& v) {
  require_defined(m, "broadcast_rows");
  require_defined(v, "broadcast_rows");
  if (m.rank() != 2) {
    throw DimensionError("broadcast_rows: matrix must be rank 2, got rank " +
                         std::to_string(m.rank()));
  }
  const std::size_t rows = m.shape()[0], cols = m.shape()[1];
  if (v.rank() != 1 || v.shape()[0] != rows) {
    throw DimensionError("broadcast_rows: vector axis 0 must have extent " + std::to_string(rows));
  }
  const double* pm = m.data();
  const double* pv = v.data();
  std::vector<double> out(m.size());
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) out[i * cols + j] = pm[i * cols + j] + pv[i];
  }
  return make_node(m.shape(), std::move(out), {m.node(), v.node()}, [rows, cols](Node& self) {
    Node& m_node = *self.parents[0];
    Node& v_node = *self.parents[1];
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) {
        const double g = self.seed[i * cols + j];
        m_node.seed[i * cols + j] += g;
        v_node.seed[i] += g;
      }
    }
  });
}

Tensor add_row_vector(const Tensor& x, const Tensor& v) {
  require_defined(x, "add_row_vector");
  require_defined(v, "add_row_vector");
  if (x.rank() != 3) {
    throw DimensionError("add_row_vector: input must be rank 3 (C x H x W), got rank " +
                         std::to_string(x.rank()));
  }
  const std::size_t channels = x.shape()[0], rows = x.shape()[1], cols = x.shape()[2];
  if (v.rank() != 1 || v.shape()[0] != rows) {
    throw DimensionError("add_row_vector: vector axis 0 must have extent " + std::to_string(rows));
  }
  const double* px = x.data();
  const double* pv = v.data();
  std::vector<double> out(x.size());
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < cols; ++j) {
        out[(c * rows + i) * cols + j] = px[(c * rows + i) * cols + j] + pv[i];
      }
    }
  }
  return make_node(x.shape(), std::move(out), {x.node(), v.node()},
                   [channels, rows, cols](Node& self) {
                     Node& x_node = *self.parents[0];
                     Node& v_node = *self.parents[1];
                     for (std::size_t c = 0; c < channels; ++c) {
                       for (std::size_t i = 0; i < rows; ++i) {
                         for (std::size_t j = 0; j < cols; ++j) {
                           const double g = self.seed[(c * rows + i) * cols + j];
                           x_node.seed[(c * rows + i) * cols + j] += g;
                           v_node.seed[i] += g;
                         }
                       }
                     }
                   });
}

}  // namespace cascnn
