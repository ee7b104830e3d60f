#include "kgd/ops.hpp"

#include <cmath>
#include <string>

#include "kgd/error.hpp"

namespace kgd::ad {
namespace {

void require_rank2(std::string_view op, const Tensor& t) {
  if (t.rank() != 2) {
    throw ShapeError(std::string(op) + ": expected a matrix, got " + shape_string(t.shape()));
  }
}

void require_same(std::string_view op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw ShapeError(std::string(op) + ": shape mismatch " + shape_string(a.shape()) + " vs " +
                     shape_string(b.shape()));
  }
}

void require_tape(std::string_view op, Var a, Var b) {
  if (a.tape() != b.tape()) throw Error(std::string(op) + ": inputs live on different tapes");
}

// c[n x m] += a[n x k] * b[k x m]
void gemm_nn(const Tensor& a, const Tensor& b, Tensor& c) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  for (std::size_t i = 0; i < n; ++i) {
    double* ci = &c[i * m];
    const double* ai = &a[i * k];
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      const double* bp = &b[p * m];
      for (std::size_t j = 0; j < m; ++j) ci[j] += av * bp[j];
    }
  }
}

// c[n x k] += g[n x m] * b[k x m]^T
void gemm_nt(const Tensor& g, const Tensor& b, Tensor& c) {
  const std::size_t n = g.rows(), m = g.cols(), k = b.rows();
  for (std::size_t i = 0; i < n; ++i) {
    const double* gi = &g[i * m];
    double* ci = &c[i * k];
    for (std::size_t p = 0; p < k; ++p) {
      const double* bp = &b[p * m];
      double s = 0.0;
      for (std::size_t j = 0; j < m; ++j) s += gi[j] * bp[j];
      ci[p] += s;
    }
  }
}

// c[k x m] += a[n x k]^T * g[n x m]
void gemm_tn(const Tensor& a, const Tensor& g, Tensor& c) {
  const std::size_t n = a.rows(), k = a.cols(), m = g.cols();
  for (std::size_t i = 0; i < n; ++i) {
    const double* ai = &a[i * k];
    const double* gi = &g[i * m];
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      double* cp = &c[p * m];
      for (std::size_t j = 0; j < m; ++j) cp[j] += av * gi[j];
    }
  }
}

template <class F, class DF>
Var unary(Var a, std::string_view op, F f, DF df) {
  const Tensor& x = a.value();
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = f(x[i]);
  const std::size_t ia = a.id();
  return a.tape()->record(op, std::move(out), {a}, [ia, df](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_buffer(ia)) {
      const Tensor& x = t.value(ia);
      for (std::size_t i = 0; i < x.size(); ++i) (*ga)[i] += g[i] * df(x[i]);
    }
  });
}

}  // namespace

Var matmul(Var a, Var b) {
  require_tape("matmul", a, b);
  const Tensor& x = a.value();
  const Tensor& y = b.value();
  require_rank2("matmul", x);
  require_rank2("matmul", y);
  if (x.cols() != y.rows()) {
    throw ShapeError("matmul: shape mismatch " + shape_string(x.shape()) + " vs " +
                     shape_string(y.shape()));
  }
  Tensor out = Tensor::matrix(x.rows(), y.cols());
  gemm_nn(x, y, out);
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->record("matmul", std::move(out), {a, b}, [ia, ib](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_buffer(ia)) gemm_nt(g, t.value(ib), *ga);
    if (Tensor* gb = t.grad_buffer(ib)) gemm_tn(t.value(ia), g, *gb);
  });
}

Var add(Var a, Var b) {
  require_tape("add", a, b);
  require_same("add", a.value(), b.value());
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b.value()[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->record("add", std::move(out), {a, b}, [ia, ib](Tape& t, const Tensor& g) {
    for (std::size_t id : {ia, ib}) {
      if (Tensor* gx = t.grad_buffer(id)) {
        for (std::size_t i = 0; i < g.size(); ++i) (*gx)[i] += g[i];
      }
    }
  });
}

Var sub(Var a, Var b) {
  require_tape("sub", a, b);
  require_same("sub", a.value(), b.value());
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] -= b.value()[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->record("sub", std::move(out), {a, b}, [ia, ib](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_buffer(ia)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
    }
    if (Tensor* gb = t.grad_buffer(ib)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] -= g[i];
    }
  });
}

Var mul(Var a, Var b) {
  require_tape("mul", a, b);
  require_same("mul", a.value(), b.value());
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= b.value()[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->record("mul", std::move(out), {a, b}, [ia, ib](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_buffer(ia)) {
      const Tensor& y = t.value(ib);
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] * y[i];
    }
    if (Tensor* gb = t.grad_buffer(ib)) {
      const Tensor& x = t.value(ia);
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] += g[i] * x[i];
    }
  });
}

Var div(Var a, Var b) {
  require_tape("div", a, b);
  require_same("div", a.value(), b.value());
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] /= b.value()[i];
  const std::size_t ia = a.id(), ib = b.id();
  return a.tape()->record("div", std::move(out), {a, b}, [ia, ib](Tape& t, const Tensor& g) {
    const Tensor& x = t.value(ia);
    const Tensor& y = t.value(ib);
    if (Tensor* ga = t.grad_buffer(ia)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i] / y[i];
    }
    if (Tensor* gb = t.grad_buffer(ib)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i] -= g[i] * x[i] / (y[i] * y[i]);
    }
  });
}

Var add_bias(Var a, Var bias) {
  require_tape("add_bias", a, bias);
  const Tensor& x = a.value();
  const Tensor& b = bias.value();
  require_rank2("add_bias", x);
  if (b.rank() != 2 || b.rows() != 1 || b.cols() != x.cols()) {
    throw ShapeError("add_bias: shape mismatch " + shape_string(x.shape()) + " vs " +
                     shape_string(b.shape()));
  }
  Tensor out = x;
  const std::size_t m = x.cols();
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] += b[j];
  }
  const std::size_t ia = a.id(), ib = bias.id();
  return a.tape()->record("add_bias", std::move(out), {a, bias},
                          [ia, ib, m](Tape& t, const Tensor& g) {
                            if (Tensor* ga = t.grad_buffer(ia)) {
                              for (std::size_t i = 0; i < g.size(); ++i) (*ga)[i] += g[i];
                            }
                            if (Tensor* gb = t.grad_buffer(ib)) {
                              for (std::size_t i = 0; i < g.size(); ++i) (*gb)[i % m] += g[i];
                            }
                          });
}

Var scale_rows(Var a, Var w) {
  require_tape("scale_rows", a, w);
  const Tensor& x = a.value();
  const Tensor& s = w.value();
  require_rank2("scale_rows", x);
  if (s.rank() != 2 || s.cols() != 1 || s.rows() != x.rows()) {
    throw ShapeError("scale_rows: shape mismatch " + shape_string(x.shape()) + " vs " +
                     shape_string(s.shape()));
  }
  const std::size_t m = x.cols();
  Tensor out = x;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] *= s[i];
  }
  const std::size_t ia = a.id(), iw = w.id();
  return a.tape()->record("scale_rows", std::move(out), {a, w},
                          [ia, iw, m](Tape& t, const Tensor& g) {
                            const Tensor& x = t.value(ia);
                            const Tensor& s = t.value(iw);
                            if (Tensor* ga = t.grad_buffer(ia)) {
                              for (std::size_t i = 0; i < x.rows(); ++i) {
                                for (std::size_t j = 0; j < m; ++j) {
                                  (*ga)[i * m + j] += g[i * m + j] * s[i];
                                }
                              }
                            }
                            if (Tensor* gw = t.grad_buffer(iw)) {
                              for (std::size_t i = 0; i < x.rows(); ++i) {
                                double acc = 0.0;
                                for (std::size_t j = 0; j < m; ++j) acc += g[i * m + j] * x[i * m + j];
                                (*gw)[i] += acc;
                              }
                            }
                          });
}

Var scale(Var a, double factor) {
  return unary(a, "scale", [factor](double x) { return factor * x; },
               [factor](double) { return factor; });
}

Var add_scalar(Var a, double c) {
  return unary(a, "add_scalar", [c](double x) { return x + c; }, [](double) { return 1.0; });
}

Var sigmoid(Var a) {
  auto f = [](double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
  };
  return unary(a, "sigmoid", f, [f](double x) {
    const double s = f(x);
    return s * (1.0 - s);
  });
}

Var relu(Var a) {
  return unary(a, "relu", [](double x) { return x > 0.0 ? x : 0.0; },
               [](double x) { return x > 0.0 ? 1.0 : 0.0; });
}

Var log(Var a) {
  return unary(a, "log", [](double x) { return std::log(x); }, [](double x) { return 1.0 / x; });
}

Var exp(Var a) {
  return unary(a, "exp", [](double x) { return std::exp(x); }, [](double x) { return std::exp(x); });
}

Var clamp_min(Var a, double lo) {
  return unary(a, "clamp_min", [lo](double x) { return x < lo ? lo : x; },
               [lo](double x) { return x < lo ? 0.0 : 1.0; });
}

Var clamp(Var a, double lo, double hi) {
  return unary(a, "clamp", [lo, hi](double x) { return x < lo ? lo : (x > hi ? hi : x); },
               [lo, hi](double x) { return (x < lo || x > hi) ? 0.0 : 1.0; });
}

Var elementwise(Var a, std::string_view op, const std::function<double(double)>& f,
                const std::function<double(double)>& df) {
  return unary(a, op, f, df);
}

Var concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) throw ShapeError("concat_cols: no inputs");
  Tape* tape = parts.front().tape();
  const std::size_t n = parts.front().value().rows();
  std::vector<std::size_t> widths;
  std::vector<std::size_t> ids;
  std::size_t total = 0;
  for (const Var& p : parts) {
    require_tape("concat_cols", parts.front(), p);
    require_rank2("concat_cols", p.value());
    if (p.value().rows() != n) {
      throw ShapeError("concat_cols: shape mismatch " + shape_string(parts.front().shape()) +
                       " vs " + shape_string(p.shape()));
    }
    widths.push_back(p.value().cols());
    ids.push_back(p.id());
    total += p.value().cols();
  }
  Tensor out = Tensor::matrix(n, total);
  std::size_t off = 0;
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const Tensor& x = parts[k].value();
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < widths[k]; ++j) out[i * total + off + j] = x[i * widths[k] + j];
    }
    off += widths[k];
  }
  return tape->record("concat_cols", std::move(out), parts,
                      [ids, widths, n, total](Tape& t, const Tensor& g) {
                        std::size_t off = 0;
                        for (std::size_t k = 0; k < ids.size(); ++k) {
                          if (Tensor* gx = t.grad_buffer(ids[k])) {
                            for (std::size_t i = 0; i < n; ++i) {
                              for (std::size_t j = 0; j < widths[k]; ++j) {
                                (*gx)[i * widths[k] + j] += g[i * total + off + j];
                              }
                            }
                          }
                          off += widths[k];
                        }
                      });
}

Var slice_rows(Var a, std::size_t begin, std::size_t end) {
  const Tensor& x = a.value();
  require_rank2("slice_rows", x);
  if (begin > end || end > x.rows()) {
    throw ShapeError("slice_rows: range [" + std::to_string(begin) + ", " + std::to_string(end) +
                     ") outside " + shape_string(x.shape()));
  }
  const std::size_t m = x.cols();
  std::vector<double> vals(x.values().begin() + begin * m, x.values().begin() + end * m);
  Tensor out = Tensor::matrix(end - begin, m, std::move(vals));
  const std::size_t ia = a.id();
  return a.tape()->record("slice_rows", std::move(out), {a}, [ia, begin, m](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_buffer(ia)) {
      for (std::size_t i = 0; i < g.size(); ++i) (*ga)[begin * m + i] += g[i];
    }
  });
}

Var dropout(Var a, const Tensor& mask) {
  require_same("dropout", a.value(), mask);
  Var m = a.tape()->constant(mask, "dropout_mask");
  return mul(a, m);
}

Var gather_rows(Var a, std::span<const std::size_t> index) {
  const Tensor& x = a.value();
  require_rank2("gather_rows", x);
  const std::size_t m = x.cols();
  Tensor out = Tensor::matrix(index.size(), m);
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= x.rows()) {
      throw ShapeError("gather_rows: row " + std::to_string(index[i]) + " outside " +
                       shape_string(x.shape()));
    }
    const double* src = &x[index[i] * m];
    for (std::size_t j = 0; j < m; ++j) out[i * m + j] = src[j];
  }
  const std::size_t ia = a.id();
  std::vector<std::size_t> idx(index.begin(), index.end());
  return a.tape()->record("gather_rows", std::move(out), {a},
                          [ia, idx = std::move(idx), m](Tape& t, const Tensor& g) {
                            if (Tensor* ga = t.grad_buffer(ia)) {
                              for (std::size_t i = 0; i < idx.size(); ++i) {
                                double* dst = &(*ga)[idx[i] * m];
                                for (std::size_t j = 0; j < m; ++j) dst[j] += g[i * m + j];
                              }
                            }
                          });
}

Var scatter_add_rows(Var a, std::span<const std::size_t> index, std::size_t out_rows) {
  const Tensor& x = a.value();
  require_rank2("scatter_add_rows", x);
  if (index.size() != x.rows()) {
    throw ShapeError("scatter_add_rows: " + std::to_string(index.size()) + " indices for " +
                     shape_string(x.shape()));
  }
  const std::size_t m = x.cols();
  Tensor out = Tensor::matrix(out_rows, m);
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] >= out_rows) {
      throw ShapeError("scatter_add_rows: row " + std::to_string(index[i]) + " outside " +
                       std::to_string(out_rows) + " output rows");
    }
    double* dst = &out[index[i] * m];
    for (std::size_t j = 0; j < m; ++j) dst[j] += x[i * m + j];
  }
  const std::size_t ia = a.id();
  std::vector<std::size_t> idx(index.begin(), index.end());
  return a.tape()->record("scatter_add_rows", std::move(out), {a},
                          [ia, idx = std::move(idx), m](Tape& t, const Tensor& g) {
                            if (Tensor* ga = t.grad_buffer(ia)) {
                              for (std::size_t i = 0; i < idx.size(); ++i) {
                                const double* src = &g[idx[i] * m];
                                for (std::size_t j = 0; j < m; ++j) (*ga)[i * m + j] += src[j];
                              }
                            }
                          });
}

Var reduce_sum(Var a) {
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  const std::size_t ia = a.id();
  return a.tape()->record("reduce_sum", Tensor::scalar(s), {a}, [ia](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_buffer(ia)) {
      for (double& v : ga->values()) v += g[0];
    }
  });
}

Var reduce_mean(Var a) {
  const std::size_t n = a.value().size();
  if (n == 0) throw ShapeError("reduce_mean: empty tensor");
  double s = 0.0;
  for (double v : a.value().values()) s += v;
  const std::size_t ia = a.id();
  return a.tape()->record("reduce_mean", Tensor::scalar(s / static_cast<double>(n)), {a},
                          [ia, n](Tape& t, const Tensor& g) {
                            if (Tensor* ga = t.grad_buffer(ia)) {
                              const double d = g[0] / static_cast<double>(n);
                              for (double& v : ga->values()) v += d;
                            }
                          });
}

Var row_sum(Var a) {
  const Tensor& x = a.value();
  require_rank2("row_sum", x);
  const std::size_t m = x.cols();
  Tensor out = Tensor::matrix(x.rows(), 1);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) s += x[i * m + j];
    out[i] = s;
  }
  const std::size_t ia = a.id();
  return a.tape()->record("row_sum", std::move(out), {a}, [ia, m](Tape& t, const Tensor& g) {
    if (Tensor* ga = t.grad_buffer(ia)) {
      for (std::size_t i = 0; i < ga->size(); ++i) (*ga)[i] += g[i / m];
    }
  });
}

Var block_diag_matmul(Var x, Var blocks) {
  require_tape("block_diag_matmul", x, blocks);
  const Tensor& in = x.value();
  const Tensor& w = blocks.value();
  require_rank2("block_diag_matmul", in);
  if (w.rank() != 3 || w.shape()[1] != w.shape()[2] ||
      w.shape()[0] * w.shape()[1] != in.cols()) {
    throw ShapeError("block_diag_matmul: shape mismatch " + shape_string(in.shape()) + " vs " +
                     shape_string(w.shape()));
  }
  const std::size_t nb = w.shape()[0], k = w.shape()[1], n = in.rows(), d = in.cols();
  Tensor out = Tensor::matrix(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t b = 0; b < nb; ++b) {
      const double* xi = &in[i * d + b * k];
      const double* wb = &w[b * k * k];
      double* oi = &out[i * d + b * k];
      for (std::size_t p = 0; p < k; ++p) {
        const double xv = xi[p];
        if (xv == 0.0) continue;
        const double* wp = wb + p * k;
        for (std::size_t j = 0; j < k; ++j) oi[j] += xv * wp[j];
      }
    }
  }
  const std::size_t ix = x.id(), iw = blocks.id();
  return x.tape()->record(
      "block_diag_matmul", std::move(out), {x, blocks},
      [ix, iw, nb, k, n, d](Tape& t, const Tensor& g) {
        const Tensor& in = t.value(ix);
        const Tensor& w = t.value(iw);
        if (Tensor* gx = t.grad_buffer(ix)) {
          for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t b = 0; b < nb; ++b) {
              const double* gi = &g[i * d + b * k];
              const double* wb = &w[b * k * k];
              double* dst = &(*gx)[i * d + b * k];
              for (std::size_t p = 0; p < k; ++p) {
                double s = 0.0;
                for (std::size_t j = 0; j < k; ++j) s += gi[j] * wb[p * k + j];
                dst[p] += s;
              }
            }
          }
        }
        if (Tensor* gw = t.grad_buffer(iw)) {
          for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t b = 0; b < nb; ++b) {
              const double* xi = &in[i * d + b * k];
              const double* gi = &g[i * d + b * k];
              double* dst = &(*gw)[b * k * k];
              for (std::size_t p = 0; p < k; ++p) {
                const double xv = xi[p];
                if (xv == 0.0) continue;
                for (std::size_t j = 0; j < k; ++j) dst[p * k + j] += xv * gi[j];
              }
            }
          }
        }
      });
}

Var edge_aggregate(Var x, std::span<const std::size_t> sources,
                   std::span<const std::size_t> targets, Var coef, std::size_t out_rows) {
  require_tape("edge_aggregate", x, coef);
  const Tensor& in = x.value();
  const Tensor& w = coef.value();
  require_rank2("edge_aggregate", in);
  const std::size_t e = sources.size(), m = in.cols();
  if (targets.size() != e || w.size() != e) {
    throw ShapeError("edge_aggregate: " + std::to_string(e) + " sources, " +
                     std::to_string(targets.size()) + " targets, coef " + shape_string(w.shape()));
  }
  Tensor out = Tensor::matrix(out_rows, m);
  for (std::size_t i = 0; i < e; ++i) {
    if (sources[i] >= in.rows() || targets[i] >= out_rows) {
      throw ShapeError("edge_aggregate: edge " + std::to_string(i) + " out of range");
    }
    const double c = w[i];
    if (c == 0.0) continue;
    const double* src = &in[sources[i] * m];
    double* dst = &out[targets[i] * m];
    for (std::size_t j = 0; j < m; ++j) dst[j] += c * src[j];
  }
  const std::size_t ix = x.id(), ic = coef.id();
  std::vector<std::size_t> src(sources.begin(), sources.end());
  std::vector<std::size_t> dst(targets.begin(), targets.end());
  return x.tape()->record(
      "edge_aggregate", std::move(out), {x, coef},
      [ix, ic, src = std::move(src), dst = std::move(dst), m](Tape& t, const Tensor& g) {
        if (Tensor* gx = t.grad_buffer(ix)) {
          const Tensor& w = t.value(ic);
          for (std::size_t i = 0; i < src.size(); ++i) {
            const double c = w[i];
            if (c == 0.0) continue;
            const double* gi = &g[dst[i] * m];
            double* out = &(*gx)[src[i] * m];
            for (std::size_t j = 0; j < m; ++j) out[j] += c * gi[j];
          }
        }
        if (Tensor* gc = t.grad_buffer(ic)) {
          const Tensor& in = t.value(ix);
          for (std::size_t i = 0; i < src.size(); ++i) {
            const double* gi = &g[dst[i] * m];
            const double* xi = &in[src[i] * m];
            double s = 0.0;
            for (std::size_t j = 0; j < m; ++j) s += gi[j] * xi[j];
            (*gc)[i] += s;
          }
        }
      });
}

Var gathered_triple_product(Var a, std::span<const std::size_t> ia, Var b,
                            std::span<const std::size_t> ib, Var c,
                            std::span<const std::size_t> ic) {
  require_tape("gathered_triple_product", a, b);
  require_tape("gathered_triple_product", a, c);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  const Tensor& cv = c.value();
  require_rank2("gathered_triple_product", av);
  const std::size_t n = ia.size(), m = av.cols();
  if (bv.cols() != m || cv.cols() != m || ib.size() != n || ic.size() != n) {
    throw ShapeError("gathered_triple_product: shape mismatch " + shape_string(av.shape()) + ", " +
                     shape_string(bv.shape()) + ", " + shape_string(cv.shape()));
  }
  Tensor out = Tensor::matrix(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    if (ia[i] >= av.rows() || ib[i] >= bv.rows() || ic[i] >= cv.rows()) {
      throw ShapeError("gathered_triple_product: row " + std::to_string(i) + " out of range");
    }
    const double* x = &av[ia[i] * m];
    const double* y = &bv[ib[i] * m];
    const double* z = &cv[ic[i] * m];
    double s = 0.0;
    for (std::size_t j = 0; j < m; ++j) s += x[j] * y[j] * z[j];
    out[i] = s;
  }
  std::vector<std::size_t> xa(ia.begin(), ia.end()), xb(ib.begin(), ib.end()), xc(ic.begin(), ic.end());
  const std::size_t na = a.id(), nb = b.id(), nc = c.id();
  return a.tape()->record(
      "gathered_triple_product", std::move(out), {a, b, c},
      [na, nb, nc, xa = std::move(xa), xb = std::move(xb), xc = std::move(xc), m](Tape& t,
                                                                                  const Tensor& g) {
        // Values are read before any buffer is touched; a and c may alias.
        const Tensor& av = t.value(na);
        const Tensor& bv = t.value(nb);
        const Tensor& cv = t.value(nc);
        Tensor* ga = t.grad_buffer(na);
        Tensor* gb = t.grad_buffer(nb);
        Tensor* gc = t.grad_buffer(nc);
        for (std::size_t i = 0; i < xa.size(); ++i) {
          const double gi = g[i];
          if (gi == 0.0) continue;
          const double* x = &av[xa[i] * m];
          const double* y = &bv[xb[i] * m];
          const double* z = &cv[xc[i] * m];
          if (ga) {
            double* d = &(*ga)[xa[i] * m];
            for (std::size_t j = 0; j < m; ++j) d[j] += gi * y[j] * z[j];
          }
          if (gb) {
            double* d = &(*gb)[xb[i] * m];
            for (std::size_t j = 0; j < m; ++j) d[j] += gi * x[j] * z[j];
          }
          if (gc) {
            double* d = &(*gc)[xc[i] * m];
            for (std::size_t j = 0; j < m; ++j) d[j] += gi * x[j] * y[j];
          }
        }
      });
}

Var gather_add(const std::vector<Var>& parts,
               const std::vector<std::span<const std::size_t>>& index) {
  if (parts.empty() || parts.size() != index.size()) {
    throw ShapeError("gather_add: need one index list per part");
  }
  const std::size_t n = index[0].size(), m = parts[0].cols();
  std::vector<std::size_t> ids;
  std::vector<std::vector<std::size_t>> rows;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    require_tape("gather_add", parts[0], parts[p]);
    const Tensor& x = parts[p].value();
    require_rank2("gather_add", x);
    if (x.cols() != m || index[p].size() != n) {
      throw ShapeError("gather_add: part " + std::to_string(p) + " " + shape_string(x.shape()) +
                       " with " + std::to_string(index[p].size()) + " indices");
    }
    for (std::size_t r : index[p]) {
      if (r >= x.rows()) {
        throw ShapeError("gather_add: row " + std::to_string(r) + " outside " + shape_string(x.shape()));
      }
    }
    ids.push_back(parts[p].id());
    rows.emplace_back(index[p].begin(), index[p].end());
  }
  Tensor out = Tensor::matrix(n, m);
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const Tensor& x = parts[p].value();
    for (std::size_t i = 0; i < n; ++i) {
      const double* src = &x[rows[p][i] * m];
      double* dst = &out[i * m];
      for (std::size_t j = 0; j < m; ++j) dst[j] += src[j];
    }
  }
  return parts[0].tape()->record(
      "gather_add", std::move(out), parts,
      [ids = std::move(ids), rows = std::move(rows), m](Tape& t, const Tensor& g) {
        for (std::size_t p = 0; p < ids.size(); ++p) {
          Tensor* gp = t.grad_buffer(ids[p]);
          if (!gp) continue;
          for (std::size_t i = 0; i < rows[p].size(); ++i) {
            double* dst = &(*gp)[rows[p][i] * m];
            const double* src = &g[i * m];
            for (std::size_t j = 0; j < m; ++j) dst[j] += src[j];
          }
        }
      });
}

}  // namespace kgd::ad
