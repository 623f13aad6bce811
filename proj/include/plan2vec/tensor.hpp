#ifndef PLAN2VEC_TENSOR_HPP
#define PLAN2VEC_TENSOR_HPP

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace plan2vec::ad {

template <class S>
using Mat = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

// Reverse-mode tape over dense Eigen matrices.
//
// A Tape owns every intermediate value of one forward pass. Ops append nodes
// in execution order, which is automatically a topological order, so the
// backward pass is a single reverse sweep that visits each node exactly once.
// One training step builds and consumes one tape (single writer).
template <class S>
class Tape {
 public:
  struct Var {
    int id = -1;
    bool valid() const { return id >= 0; }
  };

  // Leaf with gradient tracking (parameters and differentiable inputs).
  Var leaf(Mat<S> value) { return push(std::move(value), {}); }

  // Leaf that never needs a gradient (inputs, regression targets).
  Var constant(Mat<S> value) {
    Var v = push(std::move(value), {});
    nodes_[size_t(v.id)].needs_grad = false;
    return v;
  }

  const Mat<S>& value(Var v) const { return node(v).value; }
  const Mat<S>& grad(Var v) const { return node(v).grad; }
  int size() const { return int(nodes_.size()); }

  // ---- forward ops ------------------------------------------------------

  Var matmul(Var a, Var b) {
    const Mat<S>&A = value(a), &B = value(b);
    require(A.cols() == B.rows(), "matmul", a, b);
    return push(A * B, {a, b}, [](Tape& t, Node& n) {
      t.accumulate(n.inputs[0], n.grad * t.value(n.inputs[1]).transpose());
      t.accumulate(n.inputs[1], t.value(n.inputs[0]).transpose() * n.grad);
    });
  }

  Var add(Var a, Var b) {
    require(same_shape(a, b), "add", a, b);
    return push(value(a) + value(b), {a, b}, [](Tape& t, Node& n) {
      t.accumulate(n.inputs[0], n.grad);
      t.accumulate(n.inputs[1], n.grad);
    });
  }

  Var sub(Var a, Var b) {
    require(same_shape(a, b), "sub", a, b);
    return push(value(a) - value(b), {a, b}, [](Tape& t, Node& n) {
      t.accumulate(n.inputs[0], n.grad);
      t.accumulate(n.inputs[1], -n.grad);
    });
  }

  Var mul_elem(Var a, Var b) {
    require(same_shape(a, b), "mul_elem", a, b);
    return push((value(a).array() * value(b).array()).matrix(), {a, b},
                [](Tape& t, Node& n) {
      t.accumulate(n.inputs[0], (n.grad.array() * t.value(n.inputs[1]).array()).matrix());
      t.accumulate(n.inputs[1], (n.grad.array() * t.value(n.inputs[0]).array()).matrix());
    });
  }

  // matrix + row vector, broadcast over rows (bias add)
  Var add_row(Var m, Var row) {
    const Mat<S>&M = value(m), &R = value(row);
    require(R.rows() == 1 && R.cols() == M.cols(), "add_row", m, row);
    return push(M.rowwise() + R.row(0), {m, row}, [](Tape& t, Node& n) {
      t.accumulate(n.inputs[0], n.grad);
      t.accumulate(n.inputs[1], n.grad.colwise().sum());
    });
  }

  // dense layer: x * w + b
  Var linear(Var x, Var w, Var b) { return add_row(matmul(x, w), b); }

  Var relu(Var a) {
    return push(value(a).cwiseMax(S(0)), {a}, [](Tape& t, Node& n) {
      Mat<S> g = ((t.value(n.inputs[0]).array() > S(0)).template cast<S>() *
                  n.grad.array()).matrix();
      t.accumulate(n.inputs[0], std::move(g));
    });
  }

  Var softplus(Var a) {
    Mat<S> y = value(a).unaryExpr([](S x) {
      // overflow-safe log(1 + exp(x))
      return S(std::max(double(x), 0.0) + std::log1p(std::exp(-std::abs(double(x)))));
    });
    return push(std::move(y), {a}, [](Tape& t, Node& n) {
      Mat<S> sig = t.value(n.inputs[0]).unaryExpr([](S x) {
        return S(1.0 / (1.0 + std::exp(-double(x))));
      });
      t.accumulate(n.inputs[0], (sig.array() * n.grad.array()).matrix());
    });
  }

  Var scale(Var a, S c) {
    return push(value(a) * c, {a}, [c](Tape& t, Node& n) {
      t.accumulate(n.inputs[0], n.grad * c);
    });
  }

  // Row-wise lp norm: [n, d] -> [n, 1]. p in [1, 2]; p = 1 and p = 2 take
  // exact paths, non-integer p goes through exp(p log|x|) with |x| floored at
  // 1e-12 to keep the gradient finite near zero.
  Var rowwise_lp_norm(Var a, double p) {
    if (p < 1.0 || p > 2.0) throw std::invalid_argument("lp norm: p must be in [1, 2]");
    const Mat<S>& A = value(a);
    Mat<S> y(A.rows(), 1);
    if (p == 1.0) {
      y = A.array().abs().rowwise().sum().matrix();
    } else if (p == 2.0) {
      for (Eigen::Index r = 0; r < A.rows(); ++r) y(r, 0) = A.row(r).norm();
    } else {
      for (Eigen::Index r = 0; r < A.rows(); ++r) {
        double acc = 0;
        for (Eigen::Index c = 0; c < A.cols(); ++c) {
          double ax = std::max(std::abs(double(A(r, c))), 1e-12);
          acc += std::exp(p * std::log(ax));
        }
        y(r, 0) = S(std::exp(std::log(acc) / p));
      }
    }
    return push(std::move(y), {a}, [p](Tape& t, Node& n) {
      const Mat<S>& X = t.value(n.inputs[0]);
      const Mat<S>& Y = n.value;
      Mat<S> g(X.rows(), X.cols());
      for (Eigen::Index r = 0; r < X.rows(); ++r) {
        double norm = std::max(double(Y(r, 0)), 1e-12);
        double go = double(n.grad(r, 0));
        for (Eigen::Index c = 0; c < X.cols(); ++c) {
          double x = double(X(r, c));
          if (p == 2.0) {
            g(r, c) = S(go * x / norm);
          } else if (p == 1.0) {
            g(r, c) = S(go * (x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0)));
          } else {
            double sign = x > 0 ? 1.0 : (x < 0 ? -1.0 : 0.0);
            double ax = std::max(std::abs(x), 1e-12);
            // d|v|_p/dx = sign(x) (|x| / |v|_p)^(p-1)
            g(r, c) = S(go * sign * std::exp((p - 1.0) * (std::log(ax) - std::log(norm))));
          }
        }
      }
      t.accumulate(n.inputs[0], std::move(g));
    });
  }

  // Elementwise smooth L1 (beta = 1): 0.5 x^2 for |x| < 1, |x| - 0.5 otherwise.
  Var smooth_l1(Var pred, Var target) {
    require(same_shape(pred, target), "smooth_l1", pred, target);
    Mat<S> r = value(pred) - value(target);
    Mat<S> y = r.unaryExpr([](S x) {
      S ax = std::abs(x);
      return ax < S(1) ? S(0.5) * x * x : ax - S(0.5);
    });
    return push(std::move(y), {pred, target}, [](Tape& t, Node& n) {
      Mat<S> r = t.value(n.inputs[0]) - t.value(n.inputs[1]);
      Mat<S> d = r.unaryExpr([](S x) {
        return std::abs(x) < S(1) ? x : (x > S(0) ? S(1) : S(-1));
      });
      t.accumulate(n.inputs[0], (d.array() * n.grad.array()).matrix());
      t.accumulate(n.inputs[1], (-d.array() * n.grad.array()).matrix());
    });
  }

  // Row-wise log softmax.
  Var log_softmax(Var a) {
    const Mat<S>& A = value(a);
    Mat<S> y(A.rows(), A.cols());
    for (Eigen::Index r = 0; r < A.rows(); ++r) {
      S lse = log_sum_exp(A, r);
      y.row(r) = (A.row(r).array() - lse).matrix();
    }
    return push(std::move(y), {a}, [](Tape& t, Node& n) {
      const Mat<S>& Y = n.value;
      Mat<S> g(Y.rows(), Y.cols());
      for (Eigen::Index r = 0; r < Y.rows(); ++r) {
        S rowsum = n.grad.row(r).sum();
        g.row(r) = (n.grad.row(r).array() - Y.row(r).array().exp() * rowsum).matrix();
      }
      t.accumulate(n.inputs[0], std::move(g));
    });
  }

  // Contrastive logit reduction. logits is [n, 1 + k] with the positive pair
  // in column 0; returns the mean over rows of (logsumexp(row) - row[0]).
  Var nce_loss(Var logits) {
    const Mat<S>& L = value(logits);
    if (L.cols() < 2)
      throw std::invalid_argument("nce_loss: need at least one negative column, got " +
                                  shape_str(L));
    double acc = 0;
    for (Eigen::Index r = 0; r < L.rows(); ++r)
      acc += double(log_sum_exp(L, r)) - double(L(r, 0));
    Mat<S> y(1, 1);
    y(0, 0) = S(acc / double(L.rows()));
    return push(std::move(y), {logits}, [](Tape& t, Node& n) {
      const Mat<S>& L = t.value(n.inputs[0]);
      S inv_n = S(1) / S(L.rows());
      S go = n.grad(0, 0);
      Mat<S> g(L.rows(), L.cols());
      for (Eigen::Index r = 0; r < L.rows(); ++r) {
        S lse = log_sum_exp(L, r);
        g.row(r) = ((L.row(r).array() - lse).exp() * go * inv_n).matrix();
        g(r, 0) -= go * inv_n;
      }
      t.accumulate(n.inputs[0], std::move(g));
    });
  }

  Var sum(Var a) {
    Mat<S> y(1, 1);
    y(0, 0) = value(a).sum();
    return push(std::move(y), {a}, [](Tape& t, Node& n) {
      const Mat<S>& X = t.value(n.inputs[0]);
      t.accumulate(n.inputs[0], Mat<S>::Constant(X.rows(), X.cols(), n.grad(0, 0)));
    });
  }

  Var mean(Var a) {
    const Mat<S>& A = value(a);
    Mat<S> y(1, 1);
    y(0, 0) = A.sum() / S(A.size());
    return push(std::move(y), {a}, [](Tape& t, Node& n) {
      const Mat<S>& X = t.value(n.inputs[0]);
      S d = n.grad(0, 0) / S(X.size());
      t.accumulate(n.inputs[0], Mat<S>::Constant(X.rows(), X.cols(), d));
    });
  }

  // Horizontal concatenation; gradient splits back by column range.
  Var hstack(const std::vector<Var>& parts) {
    if (parts.empty()) throw std::invalid_argument("hstack: empty input");
    Eigen::Index rows = value(parts[0]).rows(), cols = 0;
    for (Var p : parts) {
      require(value(p).rows() == rows, "hstack", parts[0], p);
      cols += value(p).cols();
    }
    Mat<S> y(rows, cols);
    Eigen::Index at = 0;
    for (Var p : parts) {
      y.middleCols(at, value(p).cols()) = value(p);
      at += value(p).cols();
    }
    return push(std::move(y), parts, [](Tape& t, Node& n) {
      Eigen::Index at = 0;
      for (Var in : n.inputs) {
        Eigen::Index w = t.value(in).cols();
        t.accumulate(in, n.grad.middleCols(at, w));
        at += w;
      }
    });
  }

  // ---- backward ---------------------------------------------------------

  void backward(Var loss) {
    Node& out = node(loss);
    if (out.value.rows() != 1 || out.value.cols() != 1)
      throw std::invalid_argument("backward: loss must be a 1x1 scalar, got " +
                                  shape_str(out.value));
    for (Node& n : nodes_) n.grad.setZero(n.value.rows(), n.value.cols());
    out.grad(0, 0) = S(1);
    for (int i = loss.id; i >= 0; --i) {
      Node& n = nodes_[size_t(i)];
      if (n.backprop) n.backprop(*this, n);
    }
  }

 private:
  struct Node {
    Mat<S> value;
    Mat<S> grad;
    std::vector<Var> inputs;
    std::function<void(Tape&, Node&)> backprop;
    bool needs_grad = true;
  };

  static S log_sum_exp(const Mat<S>& m, Eigen::Index r) {
    S mx = m.row(r).maxCoeff();
    return mx + S(std::log(double((m.row(r).array() - mx).exp().sum())));
  }

  static std::string shape_str(const Mat<S>& m) {
    std::ostringstream os;
    os << "[" << m.rows() << ", " << m.cols() << "]";
    return os.str();
  }

  bool same_shape(Var a, Var b) const {
    return value(a).rows() == value(b).rows() && value(a).cols() == value(b).cols();
  }

  void require(bool ok, const char* op, Var a, Var b) const {
    if (ok) return;
    throw std::invalid_argument(std::string(op) + ": incompatible shapes " +
                                shape_str(value(a)) + " and " + shape_str(value(b)));
  }

  Node& node(Var v) {
    if (!v.valid() || v.id >= int(nodes_.size()))
      throw std::invalid_argument("invalid tape variable");
    return nodes_[size_t(v.id)];
  }
  const Node& node(Var v) const { return const_cast<Tape*>(this)->node(v); }

  Var push(Mat<S> value, std::vector<Var> inputs,
           std::function<void(Tape&, Node&)> backprop = nullptr) {
    Node n;
    n.value = std::move(value);
    n.inputs = std::move(inputs);
    n.backprop = std::move(backprop);
    nodes_.push_back(std::move(n));
    return Var{int(nodes_.size()) - 1};
  }

  void accumulate(Var v, Mat<S> g) {
    Node& n = node(v);
    if (!n.needs_grad) return;
    n.grad += g;
  }

  std::vector<Node> nodes_;
};

using Tapef = Tape<float>;
using Matf = Mat<float>;

}  // namespace plan2vec::ad

#endif
