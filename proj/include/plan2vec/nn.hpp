#ifndef PLAN2VEC_NN_HPP
#define PLAN2VEC_NN_HPP

#include <cmath>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "plan2vec/rng.hpp"
#include "plan2vec/tensor.hpp"

namespace plan2vec::ad {

// Fully connected relu network. Parameters live outside any tape; each
// training step registers them as leaves, runs forward/backward, and applies
// the optimizer to the persistent matrices.
template <class S>
struct Mlp {
  std::vector<int> dims;  // [input, hidden..., output]
  std::vector<Mat<S>> weights;
  std::vector<Mat<S>> biases;

  struct Vars {
    std::vector<typename Tape<S>::Var> w, b;
  };

  void init(std::vector<int> layer_dims, Rng& rng) {
    if (layer_dims.size() < 2) throw std::invalid_argument("mlp: need at least two dims");
    dims = std::move(layer_dims);
    weights.clear();
    biases.clear();
    for (size_t l = 0; l + 1 < dims.size(); ++l) {
      int fan_in = dims[l], fan_out = dims[l + 1];
      // He-uniform
      double bound = std::sqrt(6.0 / double(fan_in));
      Mat<S> w(fan_in, fan_out);
      for (Eigen::Index j = 0; j < w.cols(); ++j)
        for (Eigen::Index i = 0; i < w.rows(); ++i)
          w(i, j) = S(rng.uniform(-bound, bound));
      weights.push_back(std::move(w));
      biases.push_back(Mat<S>::Zero(1, fan_out));
    }
  }

  Vars register_params(Tape<S>& t) const {
    Vars v;
    for (size_t l = 0; l < weights.size(); ++l) {
      v.w.push_back(t.leaf(weights[l]));
      v.b.push_back(t.leaf(biases[l]));
    }
    return v;
  }

  // relu between layers, linear output
  typename Tape<S>::Var forward(Tape<S>& t, const Vars& v, typename Tape<S>::Var x) const {
    auto h = x;
    for (size_t l = 0; l < weights.size(); ++l) {
      h = t.linear(h, v.w[l], v.b[l]);
      if (l + 1 < weights.size()) h = t.relu(h);
    }
    return h;
  }

  // inference without a tape
  Mat<S> apply(const Mat<S>& x) const {
    Mat<S> h = x;
    for (size_t l = 0; l < weights.size(); ++l) {
      Mat<S> z = h * weights[l];
      z.rowwise() += biases[l].row(0);
      if (l + 1 < weights.size()) z = z.cwiseMax(S(0));
      h = std::move(z);
    }
    return h;
  }

  size_t n_params() const {
    size_t n = 0;
    for (size_t l = 0; l < weights.size(); ++l)
      n += size_t(weights[l].size()) + size_t(biases[l].size());
    return n;
  }

  // Parameters concatenated in declaration order (w0, b0, w1, b1, ...),
  // column-major within each matrix.
  std::vector<S> flatten() const {
    std::vector<S> out;
    out.reserve(n_params());
    for (size_t l = 0; l < weights.size(); ++l) {
      out.insert(out.end(), weights[l].data(), weights[l].data() + weights[l].size());
      out.insert(out.end(), biases[l].data(), biases[l].data() + biases[l].size());
    }
    return out;
  }

  void unflatten(const std::vector<S>& flat) {
    if (flat.size() != n_params())
      throw std::invalid_argument("weight blob size mismatch: expected " +
                                  std::to_string(n_params()) + ", got " +
                                  std::to_string(flat.size()));
    size_t at = 0;
    for (size_t l = 0; l < weights.size(); ++l) {
      std::copy(flat.begin() + long(at), flat.begin() + long(at + size_t(weights[l].size())),
                weights[l].data());
      at += size_t(weights[l].size());
      std::copy(flat.begin() + long(at), flat.begin() + long(at + size_t(biases[l].size())),
                biases[l].data());
      at += size_t(biases[l].size());
    }
  }
};

// Adam with bias correction. Moment buffers are created lazily on the first
// step and always match parameter shapes.
template <class S>
struct Adam {
  double lr = 1e-4;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  int64_t step_count = 0;
  std::vector<Mat<S>> m, v;

  void step(std::vector<Mat<S>*> params, const std::vector<const Mat<S>*>& grads) {
    if (params.size() != grads.size())
      throw std::invalid_argument("adam: params/grads arity mismatch");
    if (m.empty()) {
      for (auto* p : params) {
        m.push_back(Mat<S>::Zero(p->rows(), p->cols()));
        v.push_back(Mat<S>::Zero(p->rows(), p->cols()));
      }
    }
    ++step_count;
    double c1 = 1.0 - std::pow(beta1, double(step_count));
    double c2 = 1.0 - std::pow(beta2, double(step_count));
    for (size_t i = 0; i < params.size(); ++i) {
      Mat<S>& p = *params[i];
      const Mat<S>& g = *grads[i];
      if (p.rows() != g.rows() || p.cols() != g.cols())
        throw std::invalid_argument("adam: gradient shape mismatch");
      m[i] = S(beta1) * m[i] + S(1 - beta1) * g;
      v[i] = (S(beta2) * v[i].array() + S(1 - beta2) * g.array().square()).matrix();
      for (Eigen::Index k = 0; k < p.size(); ++k) {
        double mhat = double(m[i].data()[k]) / c1;
        double vhat = double(v[i].data()[k]) / c2;
        p.data()[k] -= S(lr * mhat / (std::sqrt(vhat) + eps));
      }
    }
  }
};

// One optimizer step of an MLP against a scalar loss already backpropagated
// on the tape.
template <class S>
void apply_gradients(Mlp<S>& net, const typename Mlp<S>::Vars& vars, Tape<S>& tape,
                     Adam<S>& opt) {
  std::vector<Mat<S>*> params;
  std::vector<const Mat<S>*> grads;
  for (size_t l = 0; l < net.weights.size(); ++l) {
    params.push_back(&net.weights[l]);
    grads.push_back(&tape.grad(vars.w[l]));
    params.push_back(&net.biases[l]);
    grads.push_back(&tape.grad(vars.b[l]));
  }
  opt.step(params, grads);
}

// Siamese embedding with an lp head: distance(a, b) = |phi(a) - phi(b)|_p.
// Identity at equal inputs, symmetry, and the triangle inequality hold by
// construction for any parameter values.
template <class S>
struct EmbeddingNet {
  Mlp<S> mlp;
  double p = 2.0;

  int input_dim() const { return mlp.dims.empty() ? 0 : mlp.dims.front(); }
  int output_dim() const { return mlp.dims.empty() ? 0 : mlp.dims.back(); }

  Mat<S> embed(const Mat<S>& x) const { return mlp.apply(x); }

  // Batched embedding with fixed block size so results do not depend on the
  // caller's batching choices.
  Mat<S> embed_all(const Eigen::Ref<const Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic,
                                                        Eigen::RowMajor>>& rows,
                   int block = 256) const {
    Mat<S> out(rows.rows(), output_dim());
    for (Eigen::Index at = 0; at < rows.rows(); at += block) {
      Eigen::Index n = std::min<Eigen::Index>(block, rows.rows() - at);
      Mat<S> x = rows.middleRows(at, n);
      out.middleRows(at, n) = mlp.apply(x);
    }
    return out;
  }

  double latent_distance(const Eigen::Ref<const Eigen::Matrix<S, 1, Eigen::Dynamic>>& za,
                         const Eigen::Ref<const Eigen::Matrix<S, 1, Eigen::Dynamic>>& zb) const {
    Eigen::Matrix<S, 1, Eigen::Dynamic> d = za - zb;
    if (p == 2.0) return double(d.norm());
    if (p == 1.0) return double(d.array().abs().sum());
    double acc = 0;
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      double ax = std::max(std::abs(double(d(0, i))), 1e-12);
      acc += std::exp(p * std::log(ax));
    }
    return std::exp(std::log(acc) / p);
  }

  double distance(const Mat<S>& a, const Mat<S>& b) const {
    Mat<S> za = mlp.apply(a), zb = mlp.apply(b);
    return latent_distance(za.row(0), zb.row(0));
  }
};

}  // namespace plan2vec::ad

#endif
