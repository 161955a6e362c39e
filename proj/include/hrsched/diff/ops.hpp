#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "hrsched/diff/tape.hpp"

namespace hrsched::diff {

namespace detail {

inline Tape& tape_of(Var a) {
  if (a.tape == nullptr) throw std::invalid_argument("Var is not attached to a tape");
  return *a.tape;
}

inline Tape& tape_of(Var a, Var b) {
  if (a.tape != b.tape) throw std::invalid_argument("operands live on different tapes");
  return tape_of(a);
}

[[noreturn]] inline void shape_error(const char* op, Shape a, Shape b) {
  throw std::invalid_argument(std::string(op) + ": shape mismatch " + to_string(a) + " vs " + to_string(b));
}

template <typename F, typename DF>
Var unary(Var a, F f, DF df) {
  Tape& t = tape_of(a);
  const Matrix& x = a.value();
  Matrix y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = f(x[i]);
  return t.push(std::move(y), t.requires_grad(a), [a, df](Tape& tp, const Matrix& g) {
    Matrix* ga = tp.grad_slot(a);
    const Matrix& xv = tp.value(a);
    for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * df(xv[i]);
  });
}

}  // namespace detail

inline Var matmul(Var a, Var b) {
  Tape& t = detail::tape_of(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.cols() != bv.rows()) detail::shape_error("matmul", av.shape(), bv.shape());
  Matrix c(av.rows(), bv.cols());
  gemm_nn(av, bv, c);
  return t.push(std::move(c), t.requires_grad(a) || t.requires_grad(b), [a, b](Tape& tp, const Matrix& g) {
    if (Matrix* ga = tp.grad_slot(a)) gemm_nt(g, tp.value(b), *ga);
    if (Matrix* gb = tp.grad_slot(b)) gemm_tn(tp.value(a), g, *gb);
  });
}

/// Elementwise sum. `b` may also be a 1 x cols row broadcast over rows.
inline Var add(Var a, Var b) {
  Tape& t = detail::tape_of(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  const bool broadcast = bv.rows() == 1 && av.rows() != 1 && bv.cols() == av.cols();
  if (!broadcast && av.shape() != bv.shape()) detail::shape_error("add", av.shape(), bv.shape());
  Matrix c = av;
  for (int i = 0; i < c.rows(); ++i) {
    const double* br = bv.row_ptr(broadcast ? 0 : i);
    double* cr = c.row_ptr(i);
    for (int j = 0; j < c.cols(); ++j) cr[j] += br[j];
  }
  return t.push(std::move(c), t.requires_grad(a) || t.requires_grad(b),
                [a, b, broadcast](Tape& tp, const Matrix& g) {
                  if (Matrix* ga = tp.grad_slot(a)) ga->add_inplace(g);
                  if (Matrix* gb = tp.grad_slot(b)) {
                    if (!broadcast) {
                      gb->add_inplace(g);
                    } else {
                      for (int i = 0; i < g.rows(); ++i)
                        for (int j = 0; j < g.cols(); ++j) (*gb)(0, j) += g(i, j);
                    }
                  }
                });
}

inline Var sub(Var a, Var b) {
  Tape& t = detail::tape_of(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.shape() != bv.shape()) detail::shape_error("sub", av.shape(), bv.shape());
  Matrix c = av;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] -= bv[i];
  return t.push(std::move(c), t.requires_grad(a) || t.requires_grad(b), [a, b](Tape& tp, const Matrix& g) {
    if (Matrix* ga = tp.grad_slot(a)) ga->add_inplace(g);
    if (Matrix* gb = tp.grad_slot(b))
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] -= g[i];
  });
}

/// Elementwise (Hadamard) product.
inline Var mul(Var a, Var b) {
  Tape& t = detail::tape_of(a, b);
  const Matrix& av = a.value();
  const Matrix& bv = b.value();
  if (av.shape() != bv.shape()) detail::shape_error("mul", av.shape(), bv.shape());
  Matrix c = av;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] *= bv[i];
  return t.push(std::move(c), t.requires_grad(a) || t.requires_grad(b), [a, b](Tape& tp, const Matrix& g) {
    if (Matrix* ga = tp.grad_slot(a)) {
      const Matrix& bv2 = tp.value(b);
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * bv2[i];
    }
    if (Matrix* gb = tp.grad_slot(b)) {
      const Matrix& av2 = tp.value(a);
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * av2[i];
    }
  });
}

inline Var scale(Var a, double s) {
  return detail::unary(a, [s](double x) { return s * x; }, [s](double) { return s; });
}

inline Var operator+(Var a, Var b) { return add(a, b); }
inline Var operator-(Var a, Var b) { return sub(a, b); }
inline Var operator*(Var a, Var b) { return mul(a, b); }
inline Var operator*(double s, Var a) { return scale(a, s); }

// -- elementwise nonlinearities -----------------------------------------------

inline double sigmoid_value(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

inline Var sigmoid(Var a) {
  return detail::unary(a, sigmoid_value, [](double x) {
    const double y = sigmoid_value(x);
    return y * (1.0 - y);
  });
}

inline Var tanh(Var a) {
  return detail::unary(a, [](double x) { return std::tanh(x); },
                       [](double x) {
                         const double y = std::tanh(x);
                         return 1.0 - y * y;
                       });
}

inline Var exp(Var a) {
  return detail::unary(a, [](double x) { return std::exp(x); }, [](double x) { return std::exp(x); });
}

inline Var log(Var a) {
  return detail::unary(a, [](double x) { return std::log(x); }, [](double x) { return 1.0 / x; });
}

inline Var leaky_relu(Var a, double slope = 0.2) {
  return detail::unary(a, [slope](double x) { return x > 0 ? x : slope * x; },
                       [slope](double x) { return x > 0 ? 1.0 : slope; });
}

inline Var elu(Var a, double alpha = 1.0) {
  return detail::unary(a, [alpha](double x) { return x > 0 ? x : alpha * std::expm1(x); },
                       [alpha](double x) { return x > 0 ? 1.0 : alpha * std::exp(x); });
}

// -- softmax ------------------------------------------------------------------

/// Softmax over every element of `a` (intended for vectors).
inline Var softmax(Var a) {
  Tape& t = detail::tape_of(a);
  const Matrix& x = a.value();
  if (x.size() == 0) throw std::invalid_argument("softmax: empty input");
  const double mx = *std::max_element(x.values().begin(), x.values().end());
  Matrix y(x.shape());
  double z = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) z += (y[i] = std::exp(x[i] - mx));
  for (std::size_t i = 0; i < x.size(); ++i) y[i] /= z;
  const int id = static_cast<int>(t.size());
  return t.push(std::move(y), t.requires_grad(a), [a, id](Tape& tp, const Matrix& g) {
    const Matrix& yv = tp.value(Var{&tp, id});
    double dot = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) dot += g[i] * yv[i];
    Matrix* ga = tp.grad_slot(a);
    for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += yv[i] * (g[i] - dot);
  });
}

inline Var log_softmax(Var a) {
  Tape& t = detail::tape_of(a);
  const Matrix& x = a.value();
  if (x.size() == 0) throw std::invalid_argument("log_softmax: empty input");
  const double mx = *std::max_element(x.values().begin(), x.values().end());
  double z = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) z += std::exp(x[i] - mx);
  const double lse = mx + std::log(z);
  Matrix y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] - lse;
  const int id = static_cast<int>(t.size());
  return t.push(std::move(y), t.requires_grad(a), [a, id](Tape& tp, const Matrix& g) {
    const Matrix& yv = tp.value(Var{&tp, id});
    double gsum = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) gsum += g[i];
    Matrix* ga = tp.grad_slot(a);
    for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] - std::exp(yv[i]) * gsum;
  });
}

// -- reductions ---------------------------------------------------------------

inline Var sum(Var a) {
  Tape& t = detail::tape_of(a);
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  return t.push(Matrix(1, 1, s), t.requires_grad(a), [a](Tape& tp, const Matrix& g) {
    Matrix* ga = tp.grad_slot(a);
    for (std::size_t i = 0; i < ga->size(); ++i) (*ga)[i] += g[0];
  });
}

inline Var mean(Var a) {
  const auto n = static_cast<double>(a.value().size());
  if (n == 0) throw std::invalid_argument("mean: empty input");
  return scale(sum(a), 1.0 / n);
}

/// Maximum element; the gradient goes to the first maximizer.
inline Var max(Var a) {
  Tape& t = detail::tape_of(a);
  const Matrix& x = a.value();
  if (x.size() == 0) throw std::invalid_argument("max: empty input");
  const auto arg = static_cast<std::size_t>(std::max_element(x.values().begin(), x.values().end()) -
                                            x.values().begin());
  return t.push(Matrix(1, 1, x[arg]), t.requires_grad(a),
                [a, arg](Tape& tp, const Matrix& g) { (*tp.grad_slot(a))[arg] += g[0]; });
}

/// Column sums: [n x c] -> [1 x c].
inline Var sum_rows(Var a) {
  Tape& t = detail::tape_of(a);
  const Matrix& x = a.value();
  Matrix y(1, x.cols());
  for (int i = 0; i < x.rows(); ++i)
    for (int j = 0; j < x.cols(); ++j) y(0, j) += x(i, j);
  return t.push(std::move(y), t.requires_grad(a), [a](Tape& tp, const Matrix& g) {
    Matrix* ga = tp.grad_slot(a);
    for (int i = 0; i < ga->rows(); ++i)
      for (int j = 0; j < ga->cols(); ++j) (*ga)(i, j) += g(0, j);
  });
}

// -- structural ---------------------------------------------------------------

inline Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_cols: no inputs");
  Tape& t = detail::tape_of(parts.front());
  const int rows = parts.front().value().rows();
  int cols = 0;
  bool rg = false;
  for (Var p : parts) {
    detail::tape_of(parts.front(), p);
    if (p.value().rows() != rows) detail::shape_error("concat_cols", parts.front().shape(), p.shape());
    cols += p.value().cols();
    rg = rg || t.requires_grad(p);
  }
  Matrix y(rows, cols);
  int off = 0;
  for (Var p : parts) {
    const Matrix& v = p.value();
    for (int i = 0; i < rows; ++i) std::copy(v.row_ptr(i), v.row_ptr(i) + v.cols(), y.row_ptr(i) + off);
    off += v.cols();
  }
  return t.push(std::move(y), rg, [parts](Tape& tp, const Matrix& g) {
    int o = 0;
    for (Var p : parts) {
      const int c = tp.value(p).cols();
      if (Matrix* gp = tp.grad_slot(p))
        for (int i = 0; i < g.rows(); ++i)
          for (int j = 0; j < c; ++j) (*gp)(i, j) += g(i, o + j);
      o += c;
    }
  });
}

inline Var concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) throw std::invalid_argument("concat_rows: no inputs");
  Tape& t = detail::tape_of(parts.front());
  const int cols = parts.front().value().cols();
  int rows = 0;
  bool rg = false;
  for (Var p : parts) {
    detail::tape_of(parts.front(), p);
    if (p.value().cols() != cols) detail::shape_error("concat_rows", parts.front().shape(), p.shape());
    rows += p.value().rows();
    rg = rg || t.requires_grad(p);
  }
  Matrix y(rows, cols);
  std::size_t off = 0;
  for (Var p : parts) {
    const Matrix& v = p.value();
    std::copy(v.data(), v.data() + v.size(), y.data() + off);
    off += v.size();
  }
  return t.push(std::move(y), rg, [parts](Tape& tp, const Matrix& g) {
    std::size_t o = 0;
    for (Var p : parts) {
      const std::size_t n = tp.value(p).size();
      if (Matrix* gp = tp.grad_slot(p))
        for (std::size_t i = 0; i < n; ++i) (*gp)[i] += g[o + i];
      o += n;
    }
  });
}

/// Rows [begin, end).
inline Var slice_rows(Var a, int begin, int end) {
  Tape& t = detail::tape_of(a);
  const Matrix& x = a.value();
  if (begin < 0 || end > x.rows() || begin > end)
    throw std::invalid_argument("slice_rows: [" + std::to_string(begin) + ", " + std::to_string(end) +
                                ") outside " + to_string(x.shape()));
  Matrix y(end - begin, x.cols());
  std::copy(x.row_ptr(begin), x.row_ptr(begin) + y.size(), y.data());
  return t.push(std::move(y), t.requires_grad(a), [a, begin](Tape& tp, const Matrix& g) {
    Matrix* ga = tp.grad_slot(a);
    double* dst = ga->row_ptr(begin);
    for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
  });
}

/// Columns [begin, end).
inline Var slice_cols(Var a, int begin, int end) {
  Tape& t = detail::tape_of(a);
  const Matrix& x = a.value();
  if (begin < 0 || end > x.cols() || begin > end)
    throw std::invalid_argument("slice_cols: [" + std::to_string(begin) + ", " + std::to_string(end) +
                                ") outside " + to_string(x.shape()));
  Matrix y(x.rows(), end - begin);
  for (int i = 0; i < x.rows(); ++i) std::copy(x.row_ptr(i) + begin, x.row_ptr(i) + end, y.row_ptr(i));
  return t.push(std::move(y), t.requires_grad(a), [a, begin](Tape& tp, const Matrix& g) {
    Matrix* ga = tp.grad_slot(a);
    for (int i = 0; i < g.rows(); ++i)
      for (int j = 0; j < g.cols(); ++j) (*ga)(i, begin + j) += g(i, j);
  });
}

/// out[k] = a[index[k]]
inline Var gather_rows(Var a, std::vector<int> index) {
  Tape& t = detail::tape_of(a);
  const Matrix& x = a.value();
  Matrix y(static_cast<int>(index.size()), x.cols());
  for (std::size_t k = 0; k < index.size(); ++k) {
    const int r = index[k];
    if (r < 0 || r >= x.rows())
      throw std::invalid_argument("gather_rows: index " + std::to_string(r) + " outside " + to_string(x.shape()));
    std::copy(x.row_ptr(r), x.row_ptr(r) + x.cols(), y.row_ptr(static_cast<int>(k)));
  }
  return t.push(std::move(y), t.requires_grad(a), [a, index = std::move(index)](Tape& tp, const Matrix& g) {
    Matrix* ga = tp.grad_slot(a);
    for (std::size_t k = 0; k < index.size(); ++k) {
      double* dst = ga->row_ptr(index[k]);
      const double* src = g.row_ptr(static_cast<int>(k));
      for (int j = 0; j < g.cols(); ++j) dst[j] += src[j];
    }
  });
}

/// out[index[k]] += a[k], with `rows` output rows.
inline Var scatter_add_rows(Var a, std::vector<int> index, int rows) {
  Tape& t = detail::tape_of(a);
  const Matrix& x = a.value();
  if (static_cast<int>(index.size()) != x.rows())
    throw std::invalid_argument("scatter_add_rows: " + std::to_string(index.size()) + " indices for " +
                                to_string(x.shape()));
  Matrix y(rows, x.cols());
  for (std::size_t k = 0; k < index.size(); ++k) {
    const int r = index[k];
    if (r < 0 || r >= rows) throw std::invalid_argument("scatter_add_rows: index out of range");
    double* dst = y.row_ptr(r);
    const double* src = x.row_ptr(static_cast<int>(k));
    for (int j = 0; j < x.cols(); ++j) dst[j] += src[j];
  }
  return t.push(std::move(y), t.requires_grad(a), [a, index = std::move(index)](Tape& tp, const Matrix& g) {
    Matrix* ga = tp.grad_slot(a);
    for (std::size_t k = 0; k < index.size(); ++k) {
      double* dst = ga->row_ptr(static_cast<int>(k));
      const double* src = g.row_ptr(index[k]);
      for (int j = 0; j < g.cols(); ++j) dst[j] += src[j];
    }
  });
}

inline Var pick(Var a, int r, int c) {
  Tape& t = detail::tape_of(a);
  const Matrix& x = a.value();
  if (r < 0 || r >= x.rows() || c < 0 || c >= x.cols())
    throw std::invalid_argument("pick: (" + std::to_string(r) + ", " + std::to_string(c) + ") outside " +
                                to_string(x.shape()));
  return t.push(Matrix(1, 1, x(r, c)), t.requires_grad(a),
                [a, r, c](Tape& tp, const Matrix& g) { (*tp.grad_slot(a))(r, c) += g[0]; });
}

// -- attention helpers --------------------------------------------------------

/// Per-column softmax of `scores` [E x H] within groups of rows sharing the
/// same `segment` id (e.g. all edges entering one destination node).
inline Var segment_softmax(Var scores, std::vector<int> segment, int num_segments) {
  Tape& t = detail::tape_of(scores);
  const Matrix& x = scores.value();
  if (static_cast<int>(segment.size()) != x.rows())
    throw std::invalid_argument("segment_softmax: " + std::to_string(segment.size()) + " segment ids for " +
                                to_string(x.shape()));
  const int h = x.cols();
  Matrix mx(num_segments, h, -std::numeric_limits<double>::infinity());
  for (int e = 0; e < x.rows(); ++e) {
    if (segment[e] < 0 || segment[e] >= num_segments)
      throw std::invalid_argument("segment_softmax: segment id out of range");
    for (int c = 0; c < h; ++c) mx(segment[e], c) = std::max(mx(segment[e], c), x(e, c));
  }
  Matrix z(num_segments, h);
  Matrix y(x.shape());
  for (int e = 0; e < x.rows(); ++e)
    for (int c = 0; c < h; ++c) z(segment[e], c) += (y(e, c) = std::exp(x(e, c) - mx(segment[e], c)));
  for (int e = 0; e < x.rows(); ++e)
    for (int c = 0; c < h; ++c) y(e, c) /= z(segment[e], c);
  const int id = static_cast<int>(t.size());
  return t.push(std::move(y), t.requires_grad(scores),
                [scores, id, segment = std::move(segment), num_segments](Tape& tp, const Matrix& g) {
                  const Matrix& yv = tp.value(Var{&tp, id});
                  const int hh = yv.cols();
                  Matrix dot(num_segments, hh);
                  for (int e = 0; e < yv.rows(); ++e)
                    for (int c = 0; c < hh; ++c) dot(segment[e], c) += g(e, c) * yv(e, c);
                  Matrix* gs = tp.grad_slot(scores);
                  for (int e = 0; e < yv.rows(); ++e)
                    for (int c = 0; c < hh; ++c) (*gs)(e, c) += yv(e, c) * (g(e, c) - dot(segment[e], c));
                });
}

/// Blockwise dot products: z is [E x H*d], a is [1 x H*d]; out[e, h] is the
/// dot product of head h's block of z[e] with head h's block of a.
inline Var head_dot(Var z, Var a, int heads) {
  Tape& t = detail::tape_of(z, a);
  const Matrix& zv = z.value();
  const Matrix& av = a.value();
  if (av.rows() != 1 || av.cols() != zv.cols() || heads <= 0 || zv.cols() % heads != 0)
    detail::shape_error("head_dot", zv.shape(), av.shape());
  const int d = zv.cols() / heads;
  Matrix y(zv.rows(), heads);
  for (int e = 0; e < zv.rows(); ++e) {
    const double* zr = zv.row_ptr(e);
    for (int h = 0; h < heads; ++h) {
      double acc = 0.0;
      for (int k = 0; k < d; ++k) acc += zr[h * d + k] * av[static_cast<std::size_t>(h * d + k)];
      y(e, h) = acc;
    }
  }
  return t.push(std::move(y), t.requires_grad(z) || t.requires_grad(a), [z, a, heads, d](Tape& tp, const Matrix& g) {
    const Matrix& zv2 = tp.value(z);
    const Matrix& av2 = tp.value(a);
    if (Matrix* gz = tp.grad_slot(z))
      for (int e = 0; e < zv2.rows(); ++e)
        for (int h = 0; h < heads; ++h)
          for (int k = 0; k < d; ++k) (*gz)(e, h * d + k) += g(e, h) * av2[static_cast<std::size_t>(h * d + k)];
    if (Matrix* ga = tp.grad_slot(a))
      for (int e = 0; e < zv2.rows(); ++e)
        for (int h = 0; h < heads; ++h)
          for (int k = 0; k < d; ++k) (*ga)(0, h * d + k) += g(e, h) * zv2(e, h * d + k);
  });
}

/// Scales head h's block of z[e] by alpha[e, h].
inline Var head_scale(Var z, Var alpha, int heads) {
  Tape& t = detail::tape_of(z, alpha);
  const Matrix& zv = z.value();
  const Matrix& al = alpha.value();
  if (heads <= 0 || zv.cols() % heads != 0 || al.rows() != zv.rows() || al.cols() != heads)
    detail::shape_error("head_scale", zv.shape(), al.shape());
  const int d = zv.cols() / heads;
  Matrix y = zv;
  for (int e = 0; e < y.rows(); ++e)
    for (int h = 0; h < heads; ++h)
      for (int k = 0; k < d; ++k) y(e, h * d + k) *= al(e, h);
  return t.push(std::move(y), t.requires_grad(z) || t.requires_grad(alpha),
                [z, alpha, heads, d](Tape& tp, const Matrix& g) {
                  const Matrix& zv2 = tp.value(z);
                  const Matrix& al2 = tp.value(alpha);
                  if (Matrix* gz = tp.grad_slot(z))
                    for (int e = 0; e < g.rows(); ++e)
                      for (int h = 0; h < heads; ++h)
                        for (int k = 0; k < d; ++k) (*gz)(e, h * d + k) += g(e, h * d + k) * al2(e, h);
                  if (Matrix* ga = tp.grad_slot(alpha))
                    for (int e = 0; e < g.rows(); ++e)
                      for (int h = 0; h < heads; ++h) {
                        double acc = 0.0;
                        for (int k = 0; k < d; ++k) acc += g(e, h * d + k) * zv2(e, h * d + k);
                        (*ga)(e, h) += acc;
                      }
                });
}

/// Averages the H head blocks: [n x H*d] -> [n x d].
inline Var head_mean(Var m, int heads) {
  Tape& t = detail::tape_of(m);
  const Matrix& x = m.value();
  if (heads <= 0 || x.cols() % heads != 0)
    throw std::invalid_argument("head_mean: " + std::to_string(heads) + " heads do not divide " + to_string(x.shape()));
  const int d = x.cols() / heads;
  Matrix y(x.rows(), d);
  const double inv = 1.0 / heads;
  for (int i = 0; i < x.rows(); ++i)
    for (int h = 0; h < heads; ++h)
      for (int k = 0; k < d; ++k) y(i, k) += inv * x(i, h * d + k);
  return t.push(std::move(y), t.requires_grad(m), [m, heads, d, inv](Tape& tp, const Matrix& g) {
    Matrix* gm = tp.grad_slot(m);
    for (int i = 0; i < g.rows(); ++i)
      for (int h = 0; h < heads; ++h)
        for (int k = 0; k < d; ++k) (*gm)(i, h * d + k) += inv * g(i, k);
  });
}

}  // namespace hrsched::diff
