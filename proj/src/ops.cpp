// Copyright 2026 The samlp Authors
// SPDX-License-Identifier: Apache-2.0
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "samlp/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <vector>

#include "samlp/errors.hpp"

namespace samlp {
namespace {

void require(bool ok, const char* op, const Tensor& a, const Tensor& b) {
  if (!ok) {
    throw DimensionError(std::string(op) + ": incompatible shapes " + a.shape_str() + " and " +
                         b.shape_str());
  }
}

void accumulate(Tensor& dst, const Tensor& src) {
  auto d = dst.data();
  const auto s = src.data();
  for (std::size_t i = 0; i < d.size(); ++i) d[i] += s[i];
}

double row_logsumexp(std::span<const double> row) {
  const double m = *std::max_element(row.begin(), row.end());
  double s = 0.0;
  for (double v : row) s += std::exp(v - m);
  return m + std::log(s);
}

}  // namespace

namespace kernels {

Tensor matmul(const Tensor& a, const Tensor& b) {
  require(a.cols() == b.rows(), "matmul", a, b);
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  Tensor out(n, m);
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* po = out.data().data();
  // Four output rows at a time so each row of b is loaded once per block.
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    double* o0 = po + i * m;
    double* o1 = o0 + m;
    double* o2 = o1 + m;
    double* o3 = o2 + m;
    for (std::size_t p = 0; p < k; ++p) {
      const double a0 = pa[i * k + p], a1 = pa[(i + 1) * k + p];
      const double a2 = pa[(i + 2) * k + p], a3 = pa[(i + 3) * k + p];
      const double* brow = pb + p * m;
      for (std::size_t j = 0; j < m; ++j) {
        const double bv = brow[j];
        o0[j] += a0 * bv;
        o1[j] += a1 * bv;
        o2[j] += a2 * bv;
        o3[j] += a3 * bv;
      }
    }
  }
  for (; i < n; ++i) {
    double* orow = po + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[i * k + p];
      const double* brow = pb + p * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  require(a.rows() == b.rows(), "matmul_tn", a, b);
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  Tensor out(k, m);
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* po = out.data().data();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const double* b0 = pb + i * m;
    const double* b1 = b0 + m;
    const double* b2 = b1 + m;
    const double* b3 = b2 + m;
    for (std::size_t p = 0; p < k; ++p) {
      const double a0 = pa[i * k + p], a1 = pa[(i + 1) * k + p];
      const double a2 = pa[(i + 2) * k + p], a3 = pa[(i + 3) * k + p];
      double* orow = po + p * m;
      for (std::size_t j = 0; j < m; ++j) {
        orow[j] += a0 * b0[j] + a1 * b1[j] + a2 * b2[j] + a3 * b3[j];
      }
    }
  }
  for (; i < n; ++i) {
    const double* brow = pb + i * m;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = pa[i * k + p];
      double* orow = po + p * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += av * brow[j];
    }
  }
  return out;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require(a.cols() == b.cols(), "matmul_nt", a, b);
  // b is a weight in every caller, so transposing it is cheap and lets the
  // row-major kernel stream contiguous rows.
  Tensor bt(b.cols(), b.rows());
  for (std::size_t r = 0; r < b.rows(); ++r) {
    for (std::size_t c = 0; c < b.cols(); ++c) bt(c, r) = b(r, c);
  }
  return matmul(a, bt);
}

Tensor spmm(const SparseRows& a, const Tensor& w) {
  if (a.n_cols() != w.rows()) {
    throw DimensionError("spmm: sparse (" + std::to_string(a.n_rows()) + "x" +
                         std::to_string(a.n_cols()) + ") incompatible with " + w.shape_str());
  }
  const std::size_t m = w.cols();
  Tensor out(a.n_rows(), m);
  for (std::size_t r = 0; r < a.n_rows(); ++r) {
    const auto cs = a.row_cols(r);
    const auto ws = a.row_weights(r);
    auto orow = out.row(r);
    for (std::size_t k = 0; k < cs.size(); ++k) {
      const auto wrow = w.row(cs[k]);
      const double s = ws[k];
      for (std::size_t j = 0; j < m; ++j) orow[j] += s * wrow[j];
    }
  }
  return out;
}

void add_row_inplace(Tensor& x, const Tensor& bias) {
  require(bias.rows() == 1 && bias.cols() == x.cols(), "add_row", x, bias);
  const auto b = bias.data();
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto row = x.row(r);
    for (std::size_t j = 0; j < row.size(); ++j) row[j] += b[j];
  }
}

void relu_inplace(Tensor& x) {
  // NaN must survive so divergence is still caught downstream.
  for (double& v : x.data()) v = v < 0.0 ? 0.0 : v;
}

Tensor softmax_rows(const Tensor& x) {
  Tensor out(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const auto in = x.row(r);
    auto o = out.row(r);
    const double m = *std::max_element(in.begin(), in.end());
    double s = 0.0;
    for (std::size_t j = 0; j < in.size(); ++j) {
      o[j] = std::exp(in[j] - m);
      s += o[j];
    }
    for (double& v : o) v /= s;
  }
  return out;
}

}  // namespace kernels

namespace ops {

Var matmul(Var a, Var b) {
  Tape& t = *a.tape;
  return t.record(kernels::matmul(a.value(), b.value()), {a, b},
                  [a, b](Tape& tape, const Tensor& g) {
                    if (tape.requires_grad(a)) {
                      accumulate(tape.grad_slot(a.id), kernels::matmul_nt(g, b.value()));
                    }
                    if (tape.requires_grad(b)) {
                      accumulate(tape.grad_slot(b.id), kernels::matmul_tn(a.value(), g));
                    }
                  });
}

Var spmm(const SparseRows& a, Var w) {
  Tape& t = *w.tape;
  const SparseRows* ap = &a;
  return t.record(kernels::spmm(a, w.value()), {w}, [ap, w](Tape& tape, const Tensor& g) {
    Tensor& gw = tape.grad_slot(w.id);
    const std::size_t m = g.cols();
    for (std::size_t r = 0; r < ap->n_rows(); ++r) {
      const auto cs = ap->row_cols(r);
      const auto ws = ap->row_weights(r);
      const auto grow = g.row(r);
      for (std::size_t k = 0; k < cs.size(); ++k) {
        auto dst = gw.row(cs[k]);
        for (std::size_t j = 0; j < m; ++j) dst[j] += ws[k] * grow[j];
      }
    }
  });
}

Var add(Var a, Var b) {
  require(a.value().same_shape(b.value()), "add", a.value(), b.value());
  Tensor out = a.value();
  accumulate(out, b.value());
  return a.tape->record(std::move(out), {a, b}, [a, b](Tape& tape, const Tensor& g) {
    if (tape.requires_grad(a)) accumulate(tape.grad_slot(a.id), g);
    if (tape.requires_grad(b)) accumulate(tape.grad_slot(b.id), g);
  });
}

Var add_row(Var x, Var bias) {
  Tensor out = x.value();
  kernels::add_row_inplace(out, bias.value());
  return x.tape->record(std::move(out), {x, bias}, [x, bias](Tape& tape, const Tensor& g) {
    if (tape.requires_grad(x)) accumulate(tape.grad_slot(x.id), g);
    if (tape.requires_grad(bias)) {
      auto gb = tape.grad_slot(bias.id).data();
      for (std::size_t r = 0; r < g.rows(); ++r) {
        const auto row = g.row(r);
        for (std::size_t j = 0; j < row.size(); ++j) gb[j] += row[j];
      }
    }
  });
}

Var affine(Var x, Var weight, Var bias) { return add_row(matmul(x, weight), bias); }

Var scale(Var x, double s) {
  Tensor out = x.value();
  for (double& v : out.data()) v *= s;
  return x.tape->record(std::move(out), {x}, [x, s](Tape& tape, const Tensor& g) {
    auto dst = tape.grad_slot(x.id).data();
    const auto src = g.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += s * src[i];
  });
}

Var one_minus(Var x) {
  Tensor out = x.value();
  for (double& v : out.data()) v = 1.0 - v;
  return x.tape->record(std::move(out), {x}, [x](Tape& tape, const Tensor& g) {
    auto dst = tape.grad_slot(x.id).data();
    const auto src = g.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] -= src[i];
  });
}

Var mul_rowwise(Var x, Var alpha) {
  const Tensor& xv = x.value();
  const Tensor& av = alpha.value();
  require(av.cols() == 1 && av.rows() == xv.rows(), "mul_rowwise", xv, av);
  Tensor out = xv;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (double& v : out.row(r)) v *= av(r, 0);
  }
  return x.tape->record(std::move(out), {x, alpha}, [x, alpha](Tape& tape, const Tensor& g) {
    const Tensor& xv = x.value();
    const Tensor& av = alpha.value();
    if (tape.requires_grad(x)) {
      Tensor& gx = tape.grad_slot(x.id);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        for (std::size_t j = 0; j < g.cols(); ++j) gx(r, j) += g(r, j) * av(r, 0);
      }
    }
    if (tape.requires_grad(alpha)) {
      Tensor& ga = tape.grad_slot(alpha.id);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        double s = 0.0;
        for (std::size_t j = 0; j < g.cols(); ++j) s += g(r, j) * xv(r, j);
        ga(r, 0) += s;
      }
    }
  });
}

Var concat_cols(Var a, Var b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require(av.rows() == bv.rows(), "concat_cols", av, bv);
  const std::size_t ca = av.cols(), cb = bv.cols();
  Tensor out(av.rows(), ca + cb);
  for (std::size_t r = 0; r < av.rows(); ++r) {
    std::copy(av.row(r).begin(), av.row(r).end(), out.row(r).begin());
    std::copy(bv.row(r).begin(), bv.row(r).end(), out.row(r).begin() + static_cast<long>(ca));
  }
  return a.tape->record(std::move(out), {a, b}, [a, b, ca, cb](Tape& tape, const Tensor& g) {
    if (tape.requires_grad(a)) {
      Tensor& ga = tape.grad_slot(a.id);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        for (std::size_t j = 0; j < ca; ++j) ga(r, j) += g(r, j);
      }
    }
    if (tape.requires_grad(b)) {
      Tensor& gb = tape.grad_slot(b.id);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        for (std::size_t j = 0; j < cb; ++j) gb(r, j) += g(r, ca + j);
      }
    }
  });
}

Var gather_rows(Var x, std::span<const Index> rows) {
  std::vector<Index> idx(rows.begin(), rows.end());
  Tensor out = x.value().gather_rows(idx);
  return x.tape->record(std::move(out), {x}, [x, idx = std::move(idx)](Tape& tape,
                                                                      const Tensor& g) {
    Tensor& gx = tape.grad_slot(x.id);
    for (std::size_t i = 0; i < idx.size(); ++i) {
      auto dst = gx.row(idx[i]);
      const auto src = g.row(i);
      for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
    }
  });
}

Var relu(Var x) {
  Tensor out = x.value();
  kernels::relu_inplace(out);
  return x.tape->record(std::move(out), {x}, [x](Tape& tape, const Tensor& g) {
    auto dst = tape.grad_slot(x.id).data();
    const auto in = x.value().data();
    const auto src = g.data();
    for (std::size_t i = 0; i < dst.size(); ++i) {
      if (in[i] > 0.0) dst[i] += src[i];
    }
  });
}

Var sigmoid(Var x) {
  Tensor out = x.value();
  for (double& v : out.data()) {
    if (v >= 0.0) {
      v = 1.0 / (1.0 + std::exp(-v));
    } else {
      const double e = std::exp(v);
      v = e / (1.0 + e);
    }
  }
  auto sig = std::make_shared<Tensor>(out);
  return x.tape->record(std::move(out), {x}, [x, sig](Tape& tape, const Tensor& g) {
    auto dst = tape.grad_slot(x.id).data();
    const auto s = sig->data();
    const auto src = g.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i] * s[i] * (1.0 - s[i]);
  });
}

Var softmax_rows(Var x) {
  Tensor out = kernels::softmax_rows(x.value());
  auto sm = std::make_shared<Tensor>(out);
  return x.tape->record(std::move(out), {x}, [x, sm](Tape& tape, const Tensor& g) {
    Tensor& gx = tape.grad_slot(x.id);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      const auto y = sm->row(r);
      const auto gr = g.row(r);
      double dot = 0.0;
      for (std::size_t j = 0; j < y.size(); ++j) dot += gr[j] * y[j];
      auto dst = gx.row(r);
      for (std::size_t j = 0; j < y.size(); ++j) dst[j] += y[j] * (gr[j] - dot);
    }
  });
}

Var layer_norm(Var x, Var gamma, Var beta, double eps) {
  const Tensor& xv = x.value();
  const Tensor& gv = gamma.value();
  const Tensor& bv = beta.value();
  const std::size_t n = xv.rows(), m = xv.cols();
  if (gv.rows() != 1 || gv.cols() != m || !bv.same_shape(gv)) {
    throw DimensionError("layer_norm: gamma " + gv.shape_str() + " / beta " + bv.shape_str() +
                         " incompatible with " + xv.shape_str());
  }
  auto xhat = std::make_shared<Tensor>(n, m);
  auto inv_std = std::make_shared<std::vector<double>>(n);
  Tensor out(n, m);
  for (std::size_t r = 0; r < n; ++r) {
    const auto row = xv.row(r);
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= static_cast<double>(m);
    double var = 0.0;
    for (double v : row) var += (v - mean) * (v - mean);
    var /= static_cast<double>(m);
    const double inv = 1.0 / std::sqrt(var + eps);
    (*inv_std)[r] = inv;
    for (std::size_t j = 0; j < m; ++j) {
      const double h = (row[j] - mean) * inv;
      (*xhat)(r, j) = h;
      out(r, j) = h * gv(0, j) + bv(0, j);
    }
  }
  return x.tape->record(
      std::move(out), {x, gamma, beta},
      [x, gamma, beta, xhat, inv_std](Tape& tape, const Tensor& g) {
        const std::size_t n = g.rows(), m = g.cols();
        if (tape.requires_grad(gamma) || tape.requires_grad(beta)) {
          Tensor dg(1, m), db(1, m);
          for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t j = 0; j < m; ++j) {
              dg(0, j) += g(r, j) * (*xhat)(r, j);
              db(0, j) += g(r, j);
            }
          }
          if (tape.requires_grad(gamma)) accumulate(tape.grad_slot(gamma.id), dg);
          if (tape.requires_grad(beta)) accumulate(tape.grad_slot(beta.id), db);
        }
        if (tape.requires_grad(x)) {
          const Tensor& gv = gamma.value();
          Tensor& gx = tape.grad_slot(x.id);
          std::vector<double> dxhat(m);
          for (std::size_t r = 0; r < n; ++r) {
            double sum = 0.0, sum_h = 0.0;
            for (std::size_t j = 0; j < m; ++j) {
              dxhat[j] = g(r, j) * gv(0, j);
              sum += dxhat[j];
              sum_h += dxhat[j] * (*xhat)(r, j);
            }
            const double inv = (*inv_std)[r];
            const double md = static_cast<double>(m);
            for (std::size_t j = 0; j < m; ++j) {
              gx(r, j) += inv / md * (md * dxhat[j] - sum - (*xhat)(r, j) * sum_h);
            }
          }
        }
      });
}

Var dropout(Var x, double p, bool training, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) {
    throw ConfigError("dropout rate must lie in [0, 1), got " + std::to_string(p));
  }
  if (!training || p == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - p);
  std::bernoulli_distribution drop(p);
  auto mask = std::make_shared<std::vector<double>>(x.value().size());
  Tensor out = x.value();
  auto od = out.data();
  for (std::size_t i = 0; i < od.size(); ++i) {
    (*mask)[i] = drop(rng) ? 0.0 : keep_scale;
    od[i] *= (*mask)[i];
  }
  return x.tape->record(std::move(out), {x}, [x, mask](Tape& tape, const Tensor& g) {
    auto dst = tape.grad_slot(x.id).data();
    const auto src = g.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i] * (*mask)[i];
  });
}

namespace {

void check_labels(const Tensor& v, std::span<const Index> labels, const char* op) {
  if (labels.size() != v.rows()) {
    throw DimensionError(std::string(op) + ": " + std::to_string(labels.size()) +
                         " labels for " + v.shape_str());
  }
  for (Index l : labels) {
    if (l >= v.cols()) {
      throw DimensionError(std::string(op) + ": label " + std::to_string(l) + " >= " +
                           std::to_string(v.cols()) + " classes");
    }
  }
}

}  // namespace

Var cross_entropy(Var probs, std::span<const Index> labels) {
  const Tensor& p = probs.value();
  check_labels(p, labels, "cross_entropy");
  const std::size_t n = p.rows();
  double loss = 0.0;
  for (std::size_t r = 0; r < n; ++r) loss -= std::log(std::max(p(r, labels[r]), kLogClamp));
  if (n > 0) loss /= static_cast<double>(n);
  std::vector<Index> lab(labels.begin(), labels.end());
  return probs.tape->record(Tensor(1, 1, loss), {probs},
                            [probs, lab = std::move(lab)](Tape& tape, const Tensor& g) {
                              const Tensor& p = probs.value();
                              Tensor& gp = tape.grad_slot(probs.id);
                              const double n = static_cast<double>(p.rows());
                              for (std::size_t r = 0; r < p.rows(); ++r) {
                                const double v = p(r, lab[r]);
                                if (v > kLogClamp) gp(r, lab[r]) -= g(0, 0) / (n * v);
                              }
                            });
}

Var kl_div(Var student, const Tensor& teacher) {
  const Tensor& s = student.value();
  require(s.same_shape(teacher), "kl_div", s, teacher);
  const std::size_t n = s.rows();
  double loss = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < s.cols(); ++j) {
      const double t = teacher(r, j);
      if (t == 0.0) continue;
      loss += t * (std::log(std::max(t, kLogClamp)) - std::log(std::max(s(r, j), kLogClamp)));
    }
  }
  if (n > 0) loss /= static_cast<double>(n);
  return student.tape->record(Tensor(1, 1, loss), {student},
                              [student, teacher](Tape& tape, const Tensor& g) {
                                const Tensor& s = student.value();
                                Tensor& gs = tape.grad_slot(student.id);
                                const double n = static_cast<double>(s.rows());
                                for (std::size_t r = 0; r < s.rows(); ++r) {
                                  for (std::size_t j = 0; j < s.cols(); ++j) {
                                    const double v = s(r, j);
                                    if (v > kLogClamp) gs(r, j) -= g(0, 0) * teacher(r, j) / (n * v);
                                  }
                                }
                              });
}

Var cross_entropy_logits(Var logits, std::span<const Index> labels) {
  const Tensor& z = logits.value();
  check_labels(z, labels, "cross_entropy_logits");
  const std::size_t n = z.rows();
  double loss = 0.0;
  for (std::size_t r = 0; r < n; ++r) loss += row_logsumexp(z.row(r)) - z(r, labels[r]);
  if (n > 0) loss /= static_cast<double>(n);
  std::vector<Index> lab(labels.begin(), labels.end());
  return logits.tape->record(Tensor(1, 1, loss), {logits},
                             [logits, lab = std::move(lab)](Tape& tape, const Tensor& g) {
                               const Tensor sm = kernels::softmax_rows(logits.value());
                               Tensor& gz = tape.grad_slot(logits.id);
                               const double scale = g(0, 0) / static_cast<double>(sm.rows());
                               for (std::size_t r = 0; r < sm.rows(); ++r) {
                                 for (std::size_t j = 0; j < sm.cols(); ++j) {
                                   const double onehot = j == lab[r] ? 1.0 : 0.0;
                                   gz(r, j) += scale * (sm(r, j) - onehot);
                                 }
                               }
                             });
}

Var kl_div_logits(Var logits, const Tensor& teacher) {
  const Tensor& z = logits.value();
  require(z.same_shape(teacher), "kl_div_logits", z, teacher);
  const std::size_t n = z.rows();
  double loss = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double lse = row_logsumexp(z.row(r));
    for (std::size_t j = 0; j < z.cols(); ++j) {
      const double t = teacher(r, j);
      if (t == 0.0) continue;
      loss += t * (std::log(std::max(t, kLogClamp)) - (z(r, j) - lse));
    }
  }
  if (n > 0) loss /= static_cast<double>(n);
  return logits.tape->record(Tensor(1, 1, loss), {logits},
                             [logits, teacher](Tape& tape, const Tensor& g) {
                               const Tensor sm = kernels::softmax_rows(logits.value());
                               Tensor& gz = tape.grad_slot(logits.id);
                               const double scale = g(0, 0) / static_cast<double>(sm.rows());
                               for (std::size_t r = 0; r < sm.rows(); ++r) {
                                 double mass = 0.0;
                                 for (std::size_t j = 0; j < sm.cols(); ++j) mass += teacher(r, j);
                                 for (std::size_t j = 0; j < sm.cols(); ++j) {
                                   gz(r, j) += scale * (sm(r, j) * mass - teacher(r, j));
                                 }
                               }
                             });
}

}  // namespace ops
}  // namespace samlp
