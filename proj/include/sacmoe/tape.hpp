#pragma once

#include <Eigen/Core>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "sacmoe/errors.hpp"

namespace sacmoe {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using Vec = Eigen::Matrix<T, Eigen::Dynamic, 1>;

using MatF = Mat<float>;
using MatD = Mat<double>;
using VecF = Vec<float>;
using VecD = Vec<double>;

template <typename T>
class ParamStore;

// Reverse-mode tape over dense matrices. A tape records one forward
// computation; backward() walks the nodes once in reverse and accumulates
// gradients into the originating ParamStore entries. Tapes are cheap,
// single-use objects: build, backward, discard.
template <typename T>
class Tape {
 public:
  struct Ref {
    int i = -1;
    bool valid() const { return i >= 0; }
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  int size() const { return static_cast<int>(nodes_.size()); }

  const Mat<T>& val(Ref r) const { return nodes_[check(r)].val; }
  const Mat<T>& grad(Ref r) const { return nodes_[check(r)].grad; }

  // ----- leaves ----- //

  Ref constant(Mat<T> v) { return push(std::move(v), nullptr); }

  Ref constant_scalar(T v) {
    Mat<T> m(1, 1);
    m(0, 0) = v;
    return constant(std::move(m));
  }

  // Parameter leaf: value copied in, backward adds into the store's grad.
  Ref param(ParamStore<T>& store, int entry);

  // ----- arithmetic ----- //

  // Elementwise binary with broadcasting of b over rows (1xC), cols (Rx1) or
  // both (1x1). a fixes the output shape.
  Ref add(Ref a, Ref b) { return binary(a, b, BinOp::Add); }
  Ref sub(Ref a, Ref b) { return binary(a, b, BinOp::Sub); }
  Ref mul(Ref a, Ref b) { return binary(a, b, BinOp::Mul); }
  Ref div(Ref a, Ref b) { return binary(a, b, BinOp::Div); }

  Ref matmul(Ref a, Ref b) {
    const Mat<T>&A = v(a), &B = v(b);
    if (A.cols() != B.rows()) throw ShapeMismatch("matmul: inner dims " + shape_str(a) + " x " + shape_str(b));
    Mat<T> out = A * B;
    int ia = a.i, ib = b.i;
    return push(std::move(out), [ia, ib](Tape& t, const Mat<T>& g) {
      t.acc(ia, g * t.nodes_[ib].val.transpose());
      t.acc(ib, t.nodes_[ia].val.transpose() * g);
    });
  }

  // Fused dense layer: x * w with a broadcast row bias. One node instead of
  // matmul + add keeps the per-update allocation traffic down.
  Ref affine(Ref x, Ref w, Ref b) {
    const Mat<T>&X = v(x), &W = v(w), &Bv = v(b);
    if (X.cols() != W.rows() || Bv.rows() != 1 || Bv.cols() != W.cols())
      throw ShapeMismatch("affine: " + shape_str(x) + " x " + shape_str(w) + " + " + shape_str(b));
    Mat<T> out = X * W;
    out.rowwise() += Bv.row(0);
    int ix = x.i, iw = w.i, ib = b.i;
    return push(std::move(out), [ix, iw, ib](Tape& t, const Mat<T>& g) {
      t.acc(ix, g * t.nodes_[iw].val.transpose());
      t.acc(iw, t.nodes_[ix].val.transpose() * g);
      t.ensure_grad(ib).row(0) += g.colwise().sum();
    });
  }

  // out = a * s + c, constants
  Ref affine_const(Ref a, T s, T c) {
    Mat<T> out = (v(a).array() * s + c).matrix();
    int ia = a.i;
    return push(std::move(out), [ia, s](Tape& t, const Mat<T>& g) { t.acc(ia, (g.array() * s).matrix()); });
  }

  Ref relu(Ref a) {
    Mat<T> out = v(a).array().max(T(0)).matrix();
    int ia = a.i;
    return push(std::move(out), [ia](Tape& t, const Mat<T>& g) {
      const auto& x = t.nodes_[ia].val.array();
      t.acc(ia, (g.array() * (x > T(0)).template cast<T>()).matrix());
    });
  }

  Ref tanh(Ref a) {
    Mat<T> out = v(a).array().tanh().matrix();
    int ia = a.i;
    int self = size();
    return push(std::move(out), [ia, self](Tape& t, const Mat<T>& g) {
      const auto& y = t.nodes_[self].val.array();
      t.acc(ia, (g.array() * (T(1) - y * y)).matrix());
    });
  }

  Ref exp(Ref a) {
    Mat<T> out = v(a).array().exp().matrix();
    int ia = a.i;
    int self = size();
    return push(std::move(out), [ia, self](Tape& t, const Mat<T>& g) {
      t.acc(ia, (g.array() * t.nodes_[self].val.array()).matrix());
    });
  }

  // natural log; caller guarantees positive input
  Ref log(Ref a) {
    Mat<T> out = v(a).array().log().matrix();
    int ia = a.i;
    return push(std::move(out), [ia](Tape& t, const Mat<T>& g) {
      t.acc(ia, (g.array() / t.nodes_[ia].val.array()).matrix());
    });
  }

  Ref square(Ref a) {
    Mat<T> out = v(a).array().square().matrix();
    int ia = a.i;
    return push(std::move(out), [ia](Tape& t, const Mat<T>& g) {
      t.acc(ia, (g.array() * T(2) * t.nodes_[ia].val.array()).matrix());
    });
  }

  // Hard clamp; gradient passes inside [lo, hi], zero outside.
  Ref clamp(Ref a, T lo, T hi) {
    Mat<T> out = v(a).array().max(lo).min(hi).matrix();
    int ia = a.i;
    return push(std::move(out), [ia, lo, hi](Tape& t, const Mat<T>& g) {
      const auto& x = t.nodes_[ia].val.array();
      auto mask = (x >= lo && x <= hi).template cast<T>();
      t.acc(ia, (g.array() * mask).matrix());
    });
  }

  // Phi(scale * x): Gaussian CDF of a scaled argument.
  Ref normal_cdf_scaled(Ref a, T scale) {
    constexpr T inv_sqrt2 = T(0.7071067811865475244);
    constexpr T inv_sqrt2pi = T(0.3989422804014326779);
    Mat<T> out = v(a).unaryExpr(
        [scale, inv_sqrt2](T x) { return T(0.5) * (T(1) + std::erf(x * scale * inv_sqrt2)); });
    int ia = a.i;
    return push(std::move(out), [ia, scale, inv_sqrt2pi](Tape& t, const Mat<T>& g) {
      const auto& x = t.nodes_[ia].val.array();
      auto pdf = (-(x * scale).square() * T(0.5)).exp() * inv_sqrt2pi * scale;
      t.acc(ia, (g.array() * pdf).matrix());
    });
  }

  // Elementwise min of two same-shape matrices; ties route gradient to a.
  Ref min_elem(Ref a, Ref b) {
    const Mat<T>&A = v(a), &B = v(b);
    if (A.rows() != B.rows() || A.cols() != B.cols())
      throw ShapeMismatch("min_elem: " + shape_str(a) + " vs " + shape_str(b));
    Mat<T> mask = (A.array() <= B.array()).template cast<T>().matrix();
    Mat<T> out = A.cwiseMin(B);
    int ia = a.i, ib = b.i;
    return push(std::move(out), [ia, ib, mask](Tape& t, const Mat<T>& g) {
      t.acc(ia, (g.array() * mask.array()).matrix());
      t.acc(ib, (g.array() * (T(1) - mask.array())).matrix());
    });
  }

  // ----- structure ----- //

  // Row-wise softmax, numerically stabilized.
  Ref softmax_rows(Ref a) {
    const Mat<T>& A = v(a);
    Mat<T> out(A.rows(), A.cols());
    for (Eigen::Index r = 0; r < A.rows(); ++r) {
      T m = A.row(r).maxCoeff();
      Eigen::Array<T, 1, Eigen::Dynamic> e = (A.row(r).array() - m).exp();
      out.row(r) = (e / e.sum()).matrix();
    }
    int ia = a.i;
    int self = size();
    return push(std::move(out), [ia, self](Tape& t, const Mat<T>& g) {
      const Mat<T>& y = t.nodes_[self].val;
      Mat<T> gx(y.rows(), y.cols());
      for (Eigen::Index r = 0; r < y.rows(); ++r) {
        T dot = g.row(r).dot(y.row(r));
        gx.row(r) = (y.row(r).array() * (g.row(r).array() - dot)).matrix();
      }
      t.acc(ia, gx);
    });
  }

  Ref slice_cols(Ref a, int c0, int len) {
    const Mat<T>& A = v(a);
    if (c0 < 0 || c0 + len > A.cols()) throw ShapeMismatch("slice_cols out of range");
    Mat<T> out = A.middleCols(c0, len);
    int ia = a.i;
    return push(std::move(out), [ia, c0, len](Tape& t, const Mat<T>& g) {
      auto& ga = t.ensure_grad(ia);
      ga.middleCols(c0, len) += g;
    });
  }

  Ref concat_cols(const std::vector<Ref>& parts) {
    Eigen::Index rows = v(parts.at(0)).rows(), cols = 0;
    for (Ref p : parts) {
      if (v(p).rows() != rows) throw ShapeMismatch("concat_cols: row mismatch");
      cols += v(p).cols();
    }
    Mat<T> out(rows, cols);
    std::vector<int> idx;
    std::vector<int> offs;
    int off = 0;
    for (Ref p : parts) {
      out.middleCols(off, v(p).cols()) = v(p);
      idx.push_back(p.i);
      offs.push_back(off);
      off += static_cast<int>(v(p).cols());
    }
    return push(std::move(out), [idx, offs](Tape& t, const Mat<T>& g) {
      for (size_t j = 0; j < idx.size(); ++j) {
        auto& ga = t.ensure_grad(idx[j]);
        ga += g.middleCols(offs[j], ga.cols());
      }
    });
  }

  // out(r, 0) = a(r, cols[r])
  Ref gather_cols(Ref a, std::vector<int> cols) {
    const Mat<T>& A = v(a);
    if (static_cast<Eigen::Index>(cols.size()) != A.rows()) throw ShapeMismatch("gather_cols: index count");
    Mat<T> out(A.rows(), 1);
    for (Eigen::Index r = 0; r < A.rows(); ++r) out(r, 0) = A(r, cols[r]);
    int ia = a.i;
    return push(std::move(out), [ia, cols](Tape& t, const Mat<T>& g) {
      auto& ga = t.ensure_grad(ia);
      for (Eigen::Index r = 0; r < ga.rows(); ++r) ga(r, cols[r]) += g(r, 0);
    });
  }

  Ref col_sum(Ref a) {  // -> 1 x C
    Mat<T> out = v(a).colwise().sum();
    int ia = a.i;
    return push(std::move(out), [ia](Tape& t, const Mat<T>& g) {
      auto& ga = t.ensure_grad(ia);
      ga.rowwise() += g.row(0);
    });
  }

  Ref row_sum(Ref a) {  // -> R x 1
    Mat<T> out = v(a).rowwise().sum();
    int ia = a.i;
    return push(std::move(out), [ia](Tape& t, const Mat<T>& g) {
      auto& ga = t.ensure_grad(ia);
      ga.colwise() += g.col(0);
    });
  }

  Ref sum(Ref a) {  // -> 1 x 1
    Mat<T> out(1, 1);
    out(0, 0) = v(a).sum();
    int ia = a.i;
    return push(std::move(out), [ia](Tape& t, const Mat<T>& g) {
      auto& ga = t.ensure_grad(ia);
      ga.array() += g(0, 0);
    });
  }

  Ref mean(Ref a) {  // -> 1 x 1, over all entries
    const Mat<T>& A = v(a);
    T n = static_cast<T>(A.size());
    Mat<T> out(1, 1);
    out(0, 0) = A.sum() / n;
    int ia = a.i;
    return push(std::move(out), [ia, n](Tape& t, const Mat<T>& g) {
      auto& ga = t.ensure_grad(ia);
      ga.array() += g(0, 0) / n;
    });
  }

  // ----- backward ----- //

  // Seeds d(loss)/d(loss) = 1 and accumulates gradients for every reachable
  // node; ParamStore leaves receive their share via the param() hooks.
  void backward(Ref loss) {
    if (!loss.valid() || loss.i >= size()) throw NoTapeActive("backward: loss does not belong to an active tape");
    if (consumed_) throw NoTapeActive("backward: tape already consumed (one backward per forward)");
    const Mat<T>& L = nodes_[loss.i].val;
    if (L.rows() != 1 || L.cols() != 1) throw ShapeMismatch("backward: loss must be scalar");
    consumed_ = true;
    ensure_grad(loss.i)(0, 0) = T(1);
    for (int i = loss.i; i >= 0; --i) {
      Node& n = nodes_[i];
      if (!n.back || n.grad.size() == 0) continue;  // unreached or leaf
      n.back(*this, n.grad);
    }
  }

  bool consumed() const { return consumed_; }

 private:
  enum class BinOp { Add, Sub, Mul, Div };

  struct Node {
    Mat<T> val;
    Mat<T> grad;  // lazily allocated
    std::function<void(Tape&, const Mat<T>&)> back;
  };

  std::vector<Node> nodes_;
  bool consumed_ = false;

  int check(Ref r) const {
    if (!r.valid() || r.i >= size()) throw NoTapeActive("invalid tape ref");
    return r.i;
  }

  const Mat<T>& v(Ref r) const { return nodes_[check(r)].val; }

  std::string shape_str(Ref r) const {
    const Mat<T>& m = v(r);
    return "(" + std::to_string(m.rows()) + "," + std::to_string(m.cols()) + ")";
  }

  Ref push(Mat<T> val, std::function<void(Tape&, const Mat<T>&)> back) {
    nodes_.push_back(Node{std::move(val), Mat<T>(), std::move(back)});
    return Ref{size() - 1};
  }

  Mat<T>& ensure_grad(int i) {
    Node& n = nodes_[i];
    if (n.grad.size() == 0) n.grad = Mat<T>::Zero(n.val.rows(), n.val.cols());
    return n.grad;
  }

  void acc(int i, const Mat<T>& g) { ensure_grad(i) += g; }

  // Expands b to a's shape lazily for the elementwise kernels below.
  static Mat<T> expand_like(const Mat<T>& B, Eigen::Index rows, Eigen::Index cols) {
    if (B.rows() == rows && B.cols() == cols) return B;
    if (B.rows() == 1 && B.cols() == 1) return Mat<T>::Constant(rows, cols, B(0, 0));
    if (B.rows() == 1) return B.replicate(rows, 1);
    return B.replicate(1, cols);
  }

  static Mat<T> reduce_like(const Mat<T>& g, Eigen::Index rows, Eigen::Index cols) {
    if (g.rows() == rows && g.cols() == cols) return g;
    if (rows == 1 && cols == 1) {
      Mat<T> r(1, 1);
      r(0, 0) = g.sum();
      return r;
    }
    if (rows == 1) return g.colwise().sum();
    return g.rowwise().sum();
  }

  // Broadcast-aware elementwise binary. b may be same-shape, a row vector,
  // a column vector, or a scalar relative to a. Backward re-reads operand
  // values from the tape instead of capturing expanded copies.
  Ref binary(Ref a, Ref b, BinOp op) {
    const Mat<T>&A = v(a), &B = v(b);
    const bool same = A.rows() == B.rows() && A.cols() == B.cols();
    const bool brow = B.rows() == 1 && B.cols() == A.cols();
    const bool bcol = B.cols() == 1 && B.rows() == A.rows();
    const bool bscal = B.rows() == 1 && B.cols() == 1;
    if (!(same || brow || bcol || bscal))
      throw ShapeMismatch("binary: incompatible shapes " + shape_str(a) + " vs " + shape_str(b));

    Mat<T> out;
    if (same) {
      switch (op) {
        case BinOp::Add: out = A + B; break;
        case BinOp::Sub: out = A - B; break;
        case BinOp::Mul: out = A.cwiseProduct(B); break;
        case BinOp::Div: out = A.cwiseQuotient(B); break;
      }
    } else if (bscal) {
      const T s = B(0, 0);
      switch (op) {
        case BinOp::Add: out = A.array() + s; break;
        case BinOp::Sub: out = A.array() - s; break;
        case BinOp::Mul: out = A * s; break;
        case BinOp::Div: out = A / s; break;
      }
    } else if (brow) {
      auto r = B.row(0).array();
      switch (op) {
        case BinOp::Add: out = A; out.array().rowwise() += r; break;
        case BinOp::Sub: out = A; out.array().rowwise() -= r; break;
        case BinOp::Mul: out = A.array().rowwise() * r; break;
        case BinOp::Div: out = A.array().rowwise() / r; break;
      }
    } else {
      auto c = B.col(0).array();
      switch (op) {
        case BinOp::Add: out = A; out.array().colwise() += c; break;
        case BinOp::Sub: out = A; out.array().colwise() -= c; break;
        case BinOp::Mul: out = A.array().colwise() * c; break;
        case BinOp::Div: out = A.array().colwise() / c; break;
      }
    }
    int ia = a.i, ib = b.i;
    return push(std::move(out), [ia, ib, op](Tape& t, const Mat<T>& g) {
      const Mat<T>& A2 = t.nodes_[ia].val;
      const Mat<T>& B2 = t.nodes_[ib].val;
      switch (op) {
        case BinOp::Add:
          t.acc(ia, g);
          t.acc(ib, reduce_like(g, B2.rows(), B2.cols()));
          break;
        case BinOp::Sub:
          t.acc(ia, g);
          t.acc(ib, reduce_like(-g, B2.rows(), B2.cols()));
          break;
        case BinOp::Mul: {
          Mat<T> Bx = expand_like(B2, A2.rows(), A2.cols());
          t.acc(ia, g.cwiseProduct(Bx));
          t.acc(ib, reduce_like(g.cwiseProduct(A2), B2.rows(), B2.cols()));
          break;
        }
        case BinOp::Div: {
          Mat<T> Bx = expand_like(B2, A2.rows(), A2.cols());
          t.acc(ia, g.cwiseQuotient(Bx));
          t.acc(ib, reduce_like((-(g.array() * A2.array()) / (Bx.array() * Bx.array())).matrix(),
                                B2.rows(), B2.cols()));
          break;
        }
      }
    });
  }

  friend class ParamStore<T>;
};

}  // namespace sacmoe
