#include "metagrid/tape.hpp"

#include <cmath>
#include <utility>

namespace metagrid {

Var Tape::push(Tensor value, bool requires_grad, Backprop backprop) {
  MG_CHECK(value.finite(), "non-finite value produced on tape");
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  n.backprop = std::move(backprop);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Var Tape::leaf(Tensor value, bool requires_grad) {
  return push(std::move(value), requires_grad, nullptr);
}

void Tape::backward_with_seed(Var out, const Tensor& seed) {
  int oid = check(out);
  MG_CHECK(seed.same_shape(nodes_[oid].value), "backward: seed shape mismatch");
  grads_.assign(nodes_.size(), Tensor());
  for (size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].requires_grad) grads_[i] = Tensor::zeros_like(nodes_[i].value);
  }
  if (!nodes_[oid].requires_grad) return;
  grads_[oid] = seed;
  for (int i = oid; i >= 0; --i) {
    if (!nodes_[i].requires_grad || !nodes_[i].backprop) continue;
    nodes_[i].backprop(*this, i);
  }
}

void Tape::backward(Var loss) {
  MG_CHECK(val(loss).numel() == 1, "backward: loss must be scalar");
  backward_with_seed(loss, Tensor::scalar(1.0));
}

// ---------------------------------------------------------------------------
// elementwise
// ---------------------------------------------------------------------------

Var Tape::add(Var a, Var b) {
  const Tensor &ta = val(a), &tb = val(b);
  MG_CHECK(ta.same_shape(tb), "add: shape mismatch");
  Tensor out = ta;
  for (size_t i = 0; i < out.numel(); ++i) out[i] += tb[i];
  int ia = a.id, ib = b.id;
  bool ra = requires_grad(a), rb = requires_grad(b);
  return push(std::move(out), ra || rb, [ia, ib, ra, rb](Tape& t, int self) {
    const Tensor& go = t.g(self);
    if (ra)
      for (size_t i = 0; i < go.numel(); ++i) t.g(ia)[i] += go[i];
    if (rb)
      for (size_t i = 0; i < go.numel(); ++i) t.g(ib)[i] += go[i];
  });
}

Var Tape::sub(Var a, Var b) {
  const Tensor &ta = val(a), &tb = val(b);
  MG_CHECK(ta.same_shape(tb), "sub: shape mismatch");
  Tensor out = ta;
  for (size_t i = 0; i < out.numel(); ++i) out[i] -= tb[i];
  int ia = a.id, ib = b.id;
  bool ra = requires_grad(a), rb = requires_grad(b);
  return push(std::move(out), ra || rb, [ia, ib, ra, rb](Tape& t, int self) {
    const Tensor& go = t.g(self);
    if (ra)
      for (size_t i = 0; i < go.numel(); ++i) t.g(ia)[i] += go[i];
    if (rb)
      for (size_t i = 0; i < go.numel(); ++i) t.g(ib)[i] -= go[i];
  });
}

Var Tape::mul(Var a, Var b) {
  const Tensor &ta = val(a), &tb = val(b);
  MG_CHECK(ta.same_shape(tb), "mul: shape mismatch");
  Tensor out = ta;
  for (size_t i = 0; i < out.numel(); ++i) out[i] *= tb[i];
  int ia = a.id, ib = b.id;
  bool ra = requires_grad(a), rb = requires_grad(b);
  return push(std::move(out), ra || rb, [ia, ib, ra, rb](Tape& t, int self) {
    const Tensor& go = t.g(self);
    const Tensor& va = t.nodes_[ia].value;
    const Tensor& vb = t.nodes_[ib].value;
    if (ra)
      for (size_t i = 0; i < go.numel(); ++i) t.g(ia)[i] += go[i] * vb[i];
    if (rb)
      for (size_t i = 0; i < go.numel(); ++i) t.g(ib)[i] += go[i] * va[i];
  });
}

Var Tape::scale(Var a, double c) {
  Tensor out = val(a);
  for (auto& x : out.data) x *= c;
  int ia = a.id;
  bool ra = requires_grad(a);
  return push(std::move(out), ra, [ia, c](Tape& t, int self) {
    const Tensor& go = t.g(self);
    for (size_t i = 0; i < go.numel(); ++i) t.g(ia)[i] += c * go[i];
  });
}

Var Tape::square(Var a) { return mul(a, a); }

Var Tape::log(Var a) {
  const Tensor& ta = val(a);
  Tensor out = ta;
  for (auto& x : out.data) x = std::log(x);
  int ia = a.id;
  bool ra = requires_grad(a);
  return push(std::move(out), ra, [ia](Tape& t, int self) {
    const Tensor& go = t.g(self);
    const Tensor& va = t.nodes_[ia].value;
    for (size_t i = 0; i < go.numel(); ++i) t.g(ia)[i] += go[i] / va[i];
  });
}

Var Tape::exp(Var a) {
  Tensor out = val(a);
  for (auto& x : out.data) x = std::exp(x);
  int ia = a.id;
  bool ra = requires_grad(a);
  return push(std::move(out), ra, [ia](Tape& t, int self) {
    const Tensor& go = t.g(self);
    const Tensor& vo = t.nodes_[self].value;
    for (size_t i = 0; i < go.numel(); ++i) t.g(ia)[i] += go[i] * vo[i];
  });
}

Var Tape::tanh(Var a) {
  Tensor out = val(a);
  for (auto& x : out.data) x = std::tanh(x);
  int ia = a.id;
  bool ra = requires_grad(a);
  return push(std::move(out), ra, [ia](Tape& t, int self) {
    const Tensor& go = t.g(self);
    const Tensor& vo = t.nodes_[self].value;
    for (size_t i = 0; i < go.numel(); ++i) t.g(ia)[i] += go[i] * (1.0 - vo[i] * vo[i]);
  });
}

Var Tape::sigmoid(Var a) {
  Tensor out = val(a);
  for (auto& x : out.data) x = 1.0 / (1.0 + std::exp(-x));
  int ia = a.id;
  bool ra = requires_grad(a);
  return push(std::move(out), ra, [ia](Tape& t, int self) {
    const Tensor& go = t.g(self);
    const Tensor& vo = t.nodes_[self].value;
    for (size_t i = 0; i < go.numel(); ++i) t.g(ia)[i] += go[i] * vo[i] * (1.0 - vo[i]);
  });
}

Var Tape::relu(Var a) {
  Tensor out = val(a);
  for (auto& x : out.data) x = x > 0 ? x : 0.0;
  int ia = a.id;
  bool ra = requires_grad(a);
  return push(std::move(out), ra, [ia](Tape& t, int self) {
    const Tensor& go = t.g(self);
    const Tensor& va = t.nodes_[ia].value;
    for (size_t i = 0; i < go.numel(); ++i)
      if (va[i] > 0) t.g(ia)[i] += go[i];
  });
}

// ---------------------------------------------------------------------------
// linear algebra / shaping
// ---------------------------------------------------------------------------

Var Tape::matmul(Var a, Var b) {
  const Tensor &ta = val(a), &tb = val(b);
  MG_CHECK(ta.shape.size() == 2 && tb.shape.size() == 2 && ta.shape[1] == tb.shape[0],
           "matmul: shape mismatch");
  int m = ta.shape[0], k = ta.shape[1], n = tb.shape[1];
  Tensor out{m, n};
  for (int i = 0; i < m; ++i) {
    const double* arow = &ta.data[static_cast<size_t>(i) * k];
    double* orow = &out.data[static_cast<size_t>(i) * n];
    for (int kk = 0; kk < k; ++kk) {
      double av = arow[kk];
      if (av == 0.0) continue;
      const double* brow = &tb.data[static_cast<size_t>(kk) * n];
      for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
    }
  }
  int ia = a.id, ib = b.id;
  bool ra = requires_grad(a), rb = requires_grad(b);
  return push(std::move(out), ra || rb, [ia, ib, ra, rb, m, k, n](Tape& t, int self) {
    const Tensor& go = t.g(self);
    const Tensor& va = t.nodes_[ia].value;
    const Tensor& vb = t.nodes_[ib].value;
    if (ra) {  // dA = dO * B^T
      Tensor& ga = t.g(ia);
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
          double gv = go.data[static_cast<size_t>(i) * n + j];
          if (gv == 0.0) continue;
          const double* brow = &vb.data[0];
          for (int kk = 0; kk < k; ++kk)
            ga.data[static_cast<size_t>(i) * k + kk] += gv * brow[static_cast<size_t>(kk) * n + j];
        }
    }
    if (rb) {  // dB = A^T * dO
      Tensor& gb = t.g(ib);
      for (int i = 0; i < m; ++i)
        for (int kk = 0; kk < k; ++kk) {
          double av = va.data[static_cast<size_t>(i) * k + kk];
          if (av == 0.0) continue;
          const double* grow = &go.data[static_cast<size_t>(i) * n];
          double* brow = &gb.data[static_cast<size_t>(kk) * n];
          for (int j = 0; j < n; ++j) brow[j] += av * grow[j];
        }
    }
  });
}

Var Tape::add_rowvec(Var a, Var v) {
  const Tensor &ta = val(a), &tv = val(v);
  MG_CHECK(ta.shape.size() == 2 && static_cast<int>(tv.numel()) == ta.shape[1],
           "add_rowvec: shape mismatch");
  int m = ta.shape[0], n = ta.shape[1];
  Tensor out = ta;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out.data[static_cast<size_t>(i) * n + j] += tv[j];
  int ia = a.id, iv = v.id;
  bool ra = requires_grad(a), rv = requires_grad(v);
  return push(std::move(out), ra || rv, [ia, iv, ra, rv, m, n](Tape& t, int self) {
    const Tensor& go = t.g(self);
    if (ra)
      for (size_t i = 0; i < go.numel(); ++i) t.g(ia)[i] += go[i];
    if (rv)
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) t.g(iv)[j] += go.data[static_cast<size_t>(i) * n + j];
  });
}

Var Tape::mul_colvec(Var a, Var v) {
  const Tensor &ta = val(a), &tv = val(v);
  MG_CHECK(ta.shape.size() == 2 && static_cast<int>(tv.numel()) == ta.shape[0],
           "mul_colvec: shape mismatch");
  int m = ta.shape[0], n = ta.shape[1];
  Tensor out = ta;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out.data[static_cast<size_t>(i) * n + j] *= tv[i];
  int ia = a.id, iv = v.id;
  bool ra = requires_grad(a), rv = requires_grad(v);
  return push(std::move(out), ra || rv, [ia, iv, ra, rv, m, n](Tape& t, int self) {
    const Tensor& go = t.g(self);
    const Tensor& va = t.nodes_[ia].value;
    const Tensor& vv = t.nodes_[iv].value;
    if (ra)
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j)
          t.g(ia).data[static_cast<size_t>(i) * n + j] +=
              go.data[static_cast<size_t>(i) * n + j] * vv[i];
    if (rv)
      for (int i = 0; i < m; ++i) {
        double acc = 0;
        for (int j = 0; j < n; ++j)
          acc += go.data[static_cast<size_t>(i) * n + j] *
                 va.data[static_cast<size_t>(i) * n + j];
        t.g(iv)[i] += acc;
      }
  });
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
  MG_CHECK(!parts.empty(), "concat_cols: empty");
  int m = val(parts[0]).shape[0];
  int total = 0;
  bool rg = false;
  for (Var p : parts) {
    const Tensor& tp = val(p);
    MG_CHECK(tp.shape.size() == 2 && tp.shape[0] == m, "concat_cols: shape mismatch");
    total += tp.shape[1];
    rg = rg || requires_grad(p);
  }
  Tensor out{m, total};
  int off = 0;
  std::vector<int> ids, widths;
  for (Var p : parts) {
    const Tensor& tp = val(p);
    int n = tp.shape[1];
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j)
        out.data[static_cast<size_t>(i) * total + off + j] =
            tp.data[static_cast<size_t>(i) * n + j];
    ids.push_back(p.id);
    widths.push_back(n);
    off += n;
  }
  return push(std::move(out), rg, [ids, widths, m, total](Tape& t, int self) {
    const Tensor& go = t.g(self);
    int off = 0;
    for (size_t p = 0; p < ids.size(); ++p) {
      int n = widths[p];
      if (t.nodes_[ids[p]].requires_grad) {
        Tensor& gp = t.g(ids[p]);
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < n; ++j)
            gp.data[static_cast<size_t>(i) * n + j] +=
                go.data[static_cast<size_t>(i) * total + off + j];
      }
      off += n;
    }
  });
}

Var Tape::slice_cols(Var a, int c0, int c1) {
  const Tensor& ta = val(a);
  MG_CHECK(ta.shape.size() == 2 && c0 >= 0 && c1 <= ta.shape[1] && c0 < c1,
           "slice_cols: bad range");
  int m = ta.shape[0], n = ta.shape[1], w = c1 - c0;
  Tensor out{m, w};
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < w; ++j)
      out.data[static_cast<size_t>(i) * w + j] = ta.data[static_cast<size_t>(i) * n + c0 + j];
  int ia = a.id;
  bool ra = requires_grad(a);
  return push(std::move(out), ra, [ia, m, n, w, c0](Tape& t, int self) {
    const Tensor& go = t.g(self);
    Tensor& ga = t.g(ia);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < w; ++j)
        ga.data[static_cast<size_t>(i) * n + c0 + j] += go.data[static_cast<size_t>(i) * w + j];
  });
}

Var Tape::gather_rows(Var table, std::vector<int> idx) {
  const Tensor& tt = val(table);
  MG_CHECK(tt.shape.size() == 2, "gather_rows: table must be 2-d");
  int n = tt.shape[1];
  int m = static_cast<int>(idx.size());
  Tensor out{m, n};
  for (int i = 0; i < m; ++i) {
    MG_CHECK(idx[i] >= 0 && idx[i] < tt.shape[0], "gather_rows: index out of range");
    for (int j = 0; j < n; ++j)
      out.data[static_cast<size_t>(i) * n + j] =
          tt.data[static_cast<size_t>(idx[i]) * n + j];
  }
  int it = table.id;
  bool rt = requires_grad(table);
  return push(std::move(out), rt, [it, idx = std::move(idx), m, n](Tape& t, int self) {
    const Tensor& go = t.g(self);
    Tensor& gt = t.g(it);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j)
        gt.data[static_cast<size_t>(idx[i]) * n + j] += go.data[static_cast<size_t>(i) * n + j];
  });
}

Var Tape::scatter_rows_add(Var base, std::vector<int> idx, Var rows) {
  const Tensor &tb = val(base), &tr = val(rows);
  MG_CHECK(tb.shape.size() == 2 && tr.shape.size() == 2 && tb.shape[1] == tr.shape[1],
           "scatter_rows_add: shape mismatch");
  MG_CHECK(static_cast<int>(idx.size()) == tr.shape[0], "scatter_rows_add: index count mismatch");
  int n = tb.shape[1];
  int m = tr.shape[0];
  Tensor out = tb;
  for (int i = 0; i < m; ++i) {
    MG_CHECK(idx[i] >= 0 && idx[i] < tb.shape[0], "scatter_rows_add: index out of range");
    for (int j = 0; j < n; ++j)
      out.data[static_cast<size_t>(idx[i]) * n + j] += tr.data[static_cast<size_t>(i) * n + j];
  }
  int ib = base.id, ir = rows.id;
  bool rb = requires_grad(base), rr = requires_grad(rows);
  return push(std::move(out), rb || rr,
              [ib, ir, rb, rr, idx = std::move(idx), m, n](Tape& t, int self) {
                const Tensor& go = t.g(self);
                if (rb)
                  for (size_t i = 0; i < go.numel(); ++i) t.g(ib)[i] += go[i];
                if (rr)
                  for (int i = 0; i < m; ++i)
                    for (int j = 0; j < n; ++j)
                      t.g(ir).data[static_cast<size_t>(i) * n + j] +=
                          go.data[static_cast<size_t>(idx[i]) * n + j];
              });
}

Var Tape::take_cols(Var a, std::vector<int> idx) {
  const Tensor& ta = val(a);
  MG_CHECK(ta.shape.size() == 2, "take_cols: input must be 2-d");
  int m = ta.shape[0], n = ta.shape[1];
  MG_CHECK(static_cast<int>(idx.size()) == m, "take_cols: index count mismatch");
  Tensor out{m};
  for (int i = 0; i < m; ++i) {
    MG_CHECK(idx[i] >= 0 && idx[i] < n, "take_cols: index out of range");
    out[i] = ta.data[static_cast<size_t>(i) * n + idx[i]];
  }
  int ia = a.id;
  bool ra = requires_grad(a);
  return push(std::move(out), ra, [ia, idx = std::move(idx), m, n](Tape& t, int self) {
    const Tensor& go = t.g(self);
    Tensor& ga = t.g(ia);
    for (int i = 0; i < m; ++i) ga.data[static_cast<size_t>(i) * n + idx[i]] += go[i];
  });
}

// ---------------------------------------------------------------------------
// reductions
// ---------------------------------------------------------------------------

Var Tape::sum(Var a) {
  const Tensor& ta = val(a);
  double acc = 0;
  for (double x : ta.data) acc += x;
  int ia = a.id;
  bool ra = requires_grad(a);
  return push(Tensor::scalar(acc), ra, [ia](Tape& t, int self) {
    double go = t.g(self)[0];
    for (auto& x : t.g(ia).data) x += go;
  });
}

Var Tape::mean(Var a) {
  const Tensor& ta = val(a);
  MG_CHECK(ta.numel() > 0, "mean of empty tensor");
  double inv = 1.0 / static_cast<double>(ta.numel());
  double acc = 0;
  for (double x : ta.data) acc += x;
  int ia = a.id;
  bool ra = requires_grad(a);
  return push(Tensor::scalar(acc * inv), ra, [ia, inv](Tape& t, int self) {
    double go = t.g(self)[0] * inv;
    for (auto& x : t.g(ia).data) x += go;
  });
}

Var Tape::sum_cols(Var a) {
  const Tensor& ta = val(a);
  MG_CHECK(ta.shape.size() == 2, "sum_cols: input must be 2-d");
  int m = ta.shape[0], n = ta.shape[1];
  Tensor out{m};
  for (int i = 0; i < m; ++i) {
    double acc = 0;
    for (int j = 0; j < n; ++j) acc += ta.data[static_cast<size_t>(i) * n + j];
    out[i] = acc;
  }
  int ia = a.id;
  bool ra = requires_grad(a);
  return push(std::move(out), ra, [ia, m, n](Tape& t, int self) {
    const Tensor& go = t.g(self);
    Tensor& ga = t.g(ia);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) ga.data[static_cast<size_t>(i) * n + j] += go[i];
  });
}

// ---------------------------------------------------------------------------
// categorical primitives
// ---------------------------------------------------------------------------

Var Tape::softmax_rows(Var a) {
  const Tensor& ta = val(a);
  MG_CHECK(ta.shape.size() == 2, "softmax_rows: input must be 2-d");
  int m = ta.shape[0], n = ta.shape[1];
  Tensor out{m, n};
  for (int i = 0; i < m; ++i) {
    const double* row = &ta.data[static_cast<size_t>(i) * n];
    double* orow = &out.data[static_cast<size_t>(i) * n];
    double mx = row[0];
    for (int j = 1; j < n; ++j) mx = std::max(mx, row[j]);
    double z = 0;
    for (int j = 0; j < n; ++j) z += (orow[j] = std::exp(row[j] - mx));
    for (int j = 0; j < n; ++j) orow[j] /= z;
  }
  int ia = a.id;
  bool ra = requires_grad(a);
  return push(std::move(out), ra, [ia, m, n](Tape& t, int self) {
    const Tensor& go = t.g(self);
    const Tensor& p = t.nodes_[self].value;
    Tensor& ga = t.g(ia);
    for (int i = 0; i < m; ++i) {
      const double* prow = &p.data[static_cast<size_t>(i) * n];
      const double* grow = &go.data[static_cast<size_t>(i) * n];
      double dot = 0;
      for (int j = 0; j < n; ++j) dot += prow[j] * grow[j];
      for (int j = 0; j < n; ++j)
        ga.data[static_cast<size_t>(i) * n + j] += prow[j] * (grow[j] - dot);
    }
  });
}

Var Tape::log_softmax_rows(Var a) {
  const Tensor& ta = val(a);
  MG_CHECK(ta.shape.size() == 2, "log_softmax_rows: input must be 2-d");
  int m = ta.shape[0], n = ta.shape[1];
  Tensor out{m, n};
  for (int i = 0; i < m; ++i) {
    const double* row = &ta.data[static_cast<size_t>(i) * n];
    double* orow = &out.data[static_cast<size_t>(i) * n];
    double mx = row[0];
    for (int j = 1; j < n; ++j) mx = std::max(mx, row[j]);
    double z = 0;
    for (int j = 0; j < n; ++j) z += std::exp(row[j] - mx);
    double lz = std::log(z) + mx;
    for (int j = 0; j < n; ++j) orow[j] = row[j] - lz;
  }
  int ia = a.id;
  bool ra = requires_grad(a);
  return push(std::move(out), ra, [ia, m, n](Tape& t, int self) {
    const Tensor& go = t.g(self);
    const Tensor& lp = t.nodes_[self].value;
    Tensor& ga = t.g(ia);
    for (int i = 0; i < m; ++i) {
      const double* lrow = &lp.data[static_cast<size_t>(i) * n];
      const double* grow = &go.data[static_cast<size_t>(i) * n];
      double gsum = 0;
      for (int j = 0; j < n; ++j) gsum += grow[j];
      for (int j = 0; j < n; ++j)
        ga.data[static_cast<size_t>(i) * n + j] += grow[j] - std::exp(lrow[j]) * gsum;
    }
  });
}

Var Tape::kl_rows(Var p, Var q) {
  const Tensor &tp = val(p), &tq = val(q);
  MG_CHECK(tp.same_shape(tq) && tp.shape.size() == 2, "kl_rows: shape mismatch");
  int m = tp.shape[0], n = tp.shape[1];
  Tensor out{m};
  for (int i = 0; i < m; ++i) {
    double acc = 0;
    for (int j = 0; j < n; ++j) {
      double pv = std::max(tp.at(i, j), kProbFloor);
      double qv = std::max(tq.at(i, j), kProbFloor);
      acc += tp.at(i, j) * (std::log(pv) - std::log(qv));
    }
    out[i] = acc;
  }
  int ip = p.id, iq = q.id;
  bool rp = requires_grad(p), rq = requires_grad(q);
  return push(std::move(out), rp || rq, [ip, iq, rp, rq, m, n](Tape& t, int self) {
    const Tensor& go = t.g(self);
    const Tensor& vp = t.nodes_[ip].value;
    const Tensor& vq = t.nodes_[iq].value;
    for (int i = 0; i < m; ++i) {
      double gi = go[i];
      for (int j = 0; j < n; ++j) {
        double pv = std::max(vp.at(i, j), kProbFloor);
        double qv = std::max(vq.at(i, j), kProbFloor);
        if (rp) {
          double d = std::log(pv) - std::log(qv) + (vp.at(i, j) > kProbFloor ? 1.0 : 0.0);
          t.g(ip).data[static_cast<size_t>(i) * n + j] += gi * d;
        }
        if (rq && vq.at(i, j) > kProbFloor)
          t.g(iq).data[static_cast<size_t>(i) * n + j] -= gi * vp.at(i, j) / qv;
      }
    }
  });
}

Var Tape::entropy_rows(Var p) {
  const Tensor& tp = val(p);
  MG_CHECK(tp.shape.size() == 2, "entropy_rows: input must be 2-d");
  int m = tp.shape[0], n = tp.shape[1];
  Tensor out{m};
  for (int i = 0; i < m; ++i) {
    double acc = 0;
    for (int j = 0; j < n; ++j) {
      double pv = std::max(tp.at(i, j), kProbFloor);
      acc -= tp.at(i, j) * std::log(pv);
    }
    out[i] = acc;
  }
  int ip = p.id;
  bool rp = requires_grad(p);
  return push(std::move(out), rp, [ip, m, n](Tape& t, int self) {
    const Tensor& go = t.g(self);
    const Tensor& vp = t.nodes_[ip].value;
    for (int i = 0; i < m; ++i) {
      double gi = go[i];
      for (int j = 0; j < n; ++j) {
        double pv = std::max(vp.at(i, j), kProbFloor);
        double d = -(std::log(pv) + (vp.at(i, j) > kProbFloor ? 1.0 : 0.0));
        t.g(ip).data[static_cast<size_t>(i) * n + j] += gi * d;
      }
    }
  });
}

}  // namespace metagrid
