/* Copyright 2026 The dusq Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "dusq/nn/layers.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <limits>

namespace dusq::nn {
namespace {

template <typename T>
using MatRM = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapRM = Eigen::Map<MatRM<T>>;
template <typename T>
using CMapRM = Eigen::Map<const MatRM<T>>;
template <typename T>
using StridedMap = Eigen::Map<MatRM<T>, 0, Eigen::OuterStride<>>;
template <typename T>
using CStridedMap = Eigen::Map<const MatRM<T>, 0, Eigen::OuterStride<>>;
template <typename T>
using RowVec = Eigen::Matrix<T, 1, Eigen::Dynamic>;
template <typename T>
using CVecMap = Eigen::Map<const RowVec<T>>;

void require(bool ok, const char* what) {
  if (!ok) throw std::invalid_argument(what);
}

template <typename T>
T sigmoid(T x) {
  return T(1) / (T(1) + std::exp(-x));
}

// Same-padding im2col for one sample: rows = T*F positions, cols = kh*kw*Cin.
template <typename T>
void im2col(const T* x, std::size_t t_len, std::size_t f_len, std::size_t cin, std::size_t k,
            T* col) {
  const auto pad = static_cast<std::ptrdiff_t>(k / 2);
  const std::size_t width = k * k * cin;
  for (std::size_t t = 0; t < t_len; ++t) {
    for (std::size_t f = 0; f < f_len; ++f) {
      T* row = col + (t * f_len + f) * width;
      for (std::size_t dt = 0; dt < k; ++dt) {
        const auto st = static_cast<std::ptrdiff_t>(t + dt) - pad;
        for (std::size_t df = 0; df < k; ++df) {
          const auto sf = static_cast<std::ptrdiff_t>(f + df) - pad;
          T* dst = row + (dt * k + df) * cin;
          if (st < 0 || sf < 0 || st >= static_cast<std::ptrdiff_t>(t_len) ||
              sf >= static_cast<std::ptrdiff_t>(f_len)) {
            std::fill(dst, dst + cin, T(0));
          } else {
            const T* src = x + (static_cast<std::size_t>(st) * f_len + static_cast<std::size_t>(sf)) * cin;
            std::copy(src, src + cin, dst);
          }
        }
      }
    }
  }
}

template <typename T>
void col2im_add(const T* col, std::size_t t_len, std::size_t f_len, std::size_t cin,
                std::size_t k, T* dx) {
  const auto pad = static_cast<std::ptrdiff_t>(k / 2);
  const std::size_t width = k * k * cin;
  for (std::size_t t = 0; t < t_len; ++t) {
    for (std::size_t f = 0; f < f_len; ++f) {
      const T* row = col + (t * f_len + f) * width;
      for (std::size_t dt = 0; dt < k; ++dt) {
        const auto st = static_cast<std::ptrdiff_t>(t + dt) - pad;
        if (st < 0 || st >= static_cast<std::ptrdiff_t>(t_len)) continue;
        for (std::size_t df = 0; df < k; ++df) {
          const auto sf = static_cast<std::ptrdiff_t>(f + df) - pad;
          if (sf < 0 || sf >= static_cast<std::ptrdiff_t>(f_len)) continue;
          const T* src = row + (dt * k + df) * cin;
          T* dst = dx + (static_cast<std::size_t>(st) * f_len + static_cast<std::size_t>(sf)) * cin;
          for (std::size_t c = 0; c < cin; ++c) dst[c] += src[c];
        }
      }
    }
  }
}

template <typename T>
void check_conv_shapes(const Tensor<T>& x, const Tensor<T>& kernel, const Tensor<T>& bias) {
  require(x.rank() == 4, "conv: input must be [B, T, F, C]");
  require(kernel.rank() == 4 && kernel.dim(0) == kernel.dim(1) && kernel.dim(0) % 2 == 1,
          "conv: kernel must be [k, k, Cin, Cout] with odd k");
  require(kernel.dim(2) == x.dim(3), "conv: kernel input channels do not match input");
  require(bias.rank() == 1 && bias.dim(0) == kernel.dim(3), "conv: bias size mismatch");
}

}  // namespace

template <typename T>
Tensor<T> conv2d_same(const Tensor<T>& x, const Tensor<T>& kernel, const Tensor<T>& bias) {
  check_conv_shapes(x, kernel, bias);
  const std::size_t batch = x.dim(0), t_len = x.dim(1), f_len = x.dim(2), cin = x.dim(3);
  const std::size_t k = kernel.dim(0), cout = kernel.dim(3);
  const std::size_t positions = t_len * f_len, width = k * k * cin;
  Tensor<T> out({batch, t_len, f_len, cout});
  std::vector<T> col(positions * width);
  CMapRM<T> kmat(kernel.data(), static_cast<Eigen::Index>(width), static_cast<Eigen::Index>(cout));
  CVecMap<T> bvec(bias.data(), static_cast<Eigen::Index>(cout));
  for (std::size_t b = 0; b < batch; ++b) {
    im2col(x.data() + b * positions * cin, t_len, f_len, cin, k, col.data());
    CMapRM<T> cm(col.data(), static_cast<Eigen::Index>(positions), static_cast<Eigen::Index>(width));
    MapRM<T> om(out.data() + b * positions * cout, static_cast<Eigen::Index>(positions),
                static_cast<Eigen::Index>(cout));
    om.noalias() = cm * kmat;
    om.rowwise() += bvec;
  }
  return out;
}

template <typename T>
Tensor<T> conv_block_forward(const Tensor<T>& x, const ConvBlockParams<T>& p, ForwardMode mode,
                             Rng* rng, const DropoutMask* frozen, ConvBlockCache<T>* cache) {
  require(p.kernel && p.bias && p.gamma && p.beta && p.running_mean && p.running_var,
          "conv block: missing parameter");
  check_conv_shapes(x, *p.kernel, *p.bias);
  const std::size_t batch = x.dim(0), t_len = x.dim(1), f_len = x.dim(2);
  const std::size_t cout = p.kernel->dim(3);
  require(p.pool.time > 0 && p.pool.freq > 0 && t_len % p.pool.time == 0 &&
              f_len % p.pool.freq == 0,
          "conv block: pool does not divide spatial dims");
  require(p.gamma->size() == cout && p.beta->size() == cout && p.running_mean->size() == cout &&
              p.running_var->size() == cout,
          "conv block: batch-norm parameter size mismatch");

  Tensor<T> act = conv2d_same(x, *p.kernel, *p.bias);
  for (T& v : act.values()) v = v > T(0) ? v : T(0);

  const std::size_t n_per_channel = batch * t_len * f_len;
  std::vector<T> mean(cout, T(0)), inv_std(cout), batch_var(cout, T(0));
  if (mode == ForwardMode::kTrain) {
    // Two-pass statistics in a fixed order.
    CMapRM<T> am(act.data(), static_cast<Eigen::Index>(n_per_channel), static_cast<Eigen::Index>(cout));
    Eigen::Map<RowVec<T>> mv(mean.data(), static_cast<Eigen::Index>(cout));
    Eigen::Map<RowVec<T>> vv(batch_var.data(), static_cast<Eigen::Index>(cout));
    for (Eigen::Index i = 0; i < am.rows(); ++i) mv += am.row(i);
    mv /= static_cast<T>(n_per_channel);
    for (Eigen::Index i = 0; i < am.rows(); ++i) vv += (am.row(i) - mv).array().square().matrix();
    vv /= static_cast<T>(n_per_channel);
    for (std::size_t c = 0; c < cout; ++c) {
      inv_std[c] = T(1) / std::sqrt(batch_var[c] + static_cast<T>(kBatchNormEpsilon));
    }
  } else {
    for (std::size_t c = 0; c < cout; ++c) {
      mean[c] = (*p.running_mean)[c];
      inv_std[c] = T(1) / std::sqrt((*p.running_var)[c] + static_cast<T>(kBatchNormEpsilon));
    }
  }

  // y = scale * a + shift, then max-pool.
  std::vector<T> scale(cout), shift(cout);
  for (std::size_t c = 0; c < cout; ++c) {
    scale[c] = (*p.gamma)[c] * inv_std[c];
    shift[c] = (*p.beta)[c] - scale[c] * mean[c];
  }
  const std::size_t pt = p.pool.time, pf = p.pool.freq;
  const std::size_t ot = t_len / pt, of = f_len / pf;
  Tensor<T> out({batch, ot, of, cout});
  std::vector<std::uint8_t> argmax(out.size());
  const T* sc = scale.data();
  const T* sh = shift.data();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t i = 0; i < ot; ++i) {
      for (std::size_t j = 0; j < of; ++j) {
        const std::size_t o = ((b * ot + i) * of + j) * cout;
        T* best = out.data() + o;
        std::uint8_t* best_k = argmax.data() + o;
        for (std::size_t di = 0; di < pt; ++di) {
          for (std::size_t dj = 0; dj < pf; ++dj) {
            const T* src = act.data() + ((b * t_len + i * pt + di) * f_len + j * pf + dj) * cout;
            const auto kk = static_cast<std::uint8_t>(di * pf + dj);
            if (kk == 0) {
              for (std::size_t c = 0; c < cout; ++c) best[c] = sc[c] * src[c] + sh[c];
              continue;
            }
            for (std::size_t c = 0; c < cout; ++c) {
              const T y = sc[c] * src[c] + sh[c];
              const bool take = y > best[c];
              best[c] = take ? y : best[c];
              best_k[c] = take ? kk : best_k[c];
            }
          }
        }
      }
    }
  }

  DropoutMask keep;
  if (mode == ForwardMode::kTrain && p.dropout > 0.0) {
    if (frozen) {
      require(frozen->size() == out.size(), "conv block: frozen dropout mask size mismatch");
      keep = *frozen;
    } else {
      require(rng != nullptr, "conv block: train-mode dropout needs an rng");
      keep.resize(out.size());
      for (auto& k : keep) k = rng->bernoulli(1.0 - p.dropout) ? 1 : 0;
    }
    const T scale = static_cast<T>(1.0 / (1.0 - p.dropout));
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = keep[i] ? out[i] * scale : T(0);
  }

  if (cache) {
    cache->input = x;
    cache->activation = std::move(act);
    cache->mean = std::move(mean);
    cache->inv_std = std::move(inv_std);
    cache->batch_var = std::move(batch_var);
    cache->argmax = std::move(argmax);
    cache->keep = std::move(keep);
    cache->mode = mode;
  }
  return out;
}

template <typename T>
Tensor<T> conv_block_backward(const Tensor<T>& grad_out, const ConvBlockParams<T>& p,
                              const ConvBlockCache<T>& cache, ConvBlockGrads<T>& grads,
                              bool need_input_grad) {
  const Tensor<T>& x = cache.input;
  const Tensor<T>& act = cache.activation;
  const std::size_t batch = x.dim(0), t_len = x.dim(1), f_len = x.dim(2), cin = x.dim(3);
  const std::size_t k = p.kernel->dim(0), cout = p.kernel->dim(3);
  const std::size_t pt = p.pool.time, pf = p.pool.freq;
  const std::size_t ot = t_len / pt, of = f_len / pf;
  require(grad_out.size() == batch * ot * of * cout, "conv block backward: gradient shape");

  // Dropout and max-pool routing.
  Tensor<T> dy(act.shape());
  const T scale = cache.keep.empty() ? T(1) : static_cast<T>(1.0 / (1.0 - p.dropout));
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t i = 0; i < ot; ++i) {
      for (std::size_t j = 0; j < of; ++j) {
        const std::size_t o = ((b * ot + i) * of + j) * cout;
        for (std::size_t c = 0; c < cout; ++c) {
          T g = grad_out[o + c];
          if (!cache.keep.empty()) g = cache.keep[o + c] ? g * scale : T(0);
          const std::size_t sel = cache.argmax[o + c];
          const std::size_t di = sel / pf, dj = sel % pf;
          dy[((b * t_len + i * pt + di) * f_len + j * pf + dj) * cout + c] += g;
        }
      }
    }
  }

  // Batch norm.
  const std::size_t n = batch * t_len * f_len;
  const T* gamma = p.gamma->data();
  grads.gamma = Tensor<T>({cout});
  grads.beta = Tensor<T>({cout});
  std::vector<T> sum_dy(cout, T(0)), sum_dy_xhat(cout, T(0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < cout; ++c) {
      const std::size_t idx = i * cout + c;
      const T xhat = (act[idx] - cache.mean[c]) * cache.inv_std[c];
      sum_dy[c] += dy[idx];
      sum_dy_xhat[c] += dy[idx] * xhat;
    }
  }
  for (std::size_t c = 0; c < cout; ++c) {
    grads.gamma[c] = sum_dy_xhat[c];
    grads.beta[c] = sum_dy[c];
  }
  Tensor<T>& dz = dy;  // reuse storage: dy -> d(activation) -> d(pre-ReLU)
  const T inv_n = T(1) / static_cast<T>(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < cout; ++c) {
      const std::size_t idx = i * cout + c;
      T da;
      if (cache.mode == ForwardMode::kTrain) {
        const T xhat = (act[idx] - cache.mean[c]) * cache.inv_std[c];
        da = gamma[c] * cache.inv_std[c] * inv_n *
             (static_cast<T>(n) * dy[idx] - sum_dy[c] - xhat * sum_dy_xhat[c]);
      } else {
        da = dy[idx] * gamma[c] * cache.inv_std[c];
      }
      dz[idx] = act[idx] > T(0) ? da : T(0);
    }
  }

  // Convolution.
  const std::size_t positions = t_len * f_len, width = k * k * cin;
  grads.kernel = Tensor<T>(p.kernel->shape());
  grads.bias = Tensor<T>({cout});
  MapRM<T> dk(grads.kernel.data(), static_cast<Eigen::Index>(width), static_cast<Eigen::Index>(cout));
  CMapRM<T> kmat(p.kernel->data(), static_cast<Eigen::Index>(width), static_cast<Eigen::Index>(cout));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < cout; ++c) grads.bias[c] += dz[i * cout + c];
  }
  Tensor<T> dx;
  if (need_input_grad) dx = Tensor<T>(x.shape());
  std::vector<T> col(positions * width), dcol;
  if (need_input_grad) dcol.resize(positions * width);
  for (std::size_t b = 0; b < batch; ++b) {
    im2col(x.data() + b * positions * cin, t_len, f_len, cin, k, col.data());
    CMapRM<T> cm(col.data(), static_cast<Eigen::Index>(positions), static_cast<Eigen::Index>(width));
    CMapRM<T> dzm(dz.data() + b * positions * cout, static_cast<Eigen::Index>(positions),
                  static_cast<Eigen::Index>(cout));
    dk.noalias() += cm.transpose() * dzm;
    if (need_input_grad) {
      MapRM<T> dcm(dcol.data(), static_cast<Eigen::Index>(positions), static_cast<Eigen::Index>(width));
      dcm.noalias() = dzm * kmat.transpose();
      col2im_add(dcol.data(), t_len, f_len, cin, k, dx.data() + b * positions * cin);
    }
  }
  return dx;
}

template <typename T>
Tensor<T> gru_forward(const Tensor<T>& x, const GruParams<T>& p, GruCache<T>* cache) {
  require(x.rank() == 3, "gru: input must be [B, T, D]");
  require(p.w_z && p.u_z && p.b_z && p.w_r && p.u_r && p.b_r && p.w_h && p.u_h && p.b_h,
          "gru: missing parameter");
  const std::size_t batch = x.dim(0), steps = x.dim(1), d = x.dim(2);
  const std::size_t units = p.u_z->dim(0);
  for (const Tensor<T>* w : {p.w_z, p.w_r, p.w_h}) {
    require(w->rank() == 2 && w->dim(0) == units && w->dim(1) == d, "gru: W shape mismatch");
  }
  for (const Tensor<T>* u : {p.u_z, p.u_r, p.u_h}) {
    require(u->rank() == 2 && u->dim(0) == units && u->dim(1) == units, "gru: U shape mismatch");
  }
  for (const Tensor<T>* b : {p.b_z, p.b_r, p.b_h}) {
    require(b->size() == units, "gru: bias shape mismatch");
  }
  const auto bt = static_cast<Eigen::Index>(batch * steps);
  const auto ei_d = static_cast<Eigen::Index>(d);
  const auto ei_u = static_cast<Eigen::Index>(units);
  const auto ei_b = static_cast<Eigen::Index>(batch);
  const auto stride = static_cast<Eigen::Index>(steps * units);

  CMapRM<T> xm(x.data(), bt, ei_d);
  auto project = [&](const Tensor<T>* w, const Tensor<T>* b) {
    Tensor<T> out({batch, steps, units});
    MapRM<T> om(out.data(), bt, ei_u);
    om.noalias() = xm * CMapRM<T>(w->data(), ei_u, ei_d).transpose();
    om.rowwise() += CVecMap<T>(b->data(), ei_u);
    return out;
  };
  Tensor<T> z = project(p.w_z, p.b_z);
  Tensor<T> r = project(p.w_r, p.b_r);
  Tensor<T> c = project(p.w_h, p.b_h);
  Tensor<T> h({batch, steps, units});

  CMapRM<T> uz(p.u_z->data(), ei_u, ei_u), ur(p.u_r->data(), ei_u, ei_u), uh(p.u_h->data(), ei_u, ei_u);
  MatRM<T> hprev = MatRM<T>::Zero(ei_b, ei_u);
  MatRM<T> tmp(ei_b, ei_u), rh(ei_b, ei_u);
  for (std::size_t t = 0; t < steps; ++t) {
    const std::size_t off = t * units;
    StridedMap<T> zt(z.data() + off, ei_b, ei_u, Eigen::OuterStride<>(stride));
    StridedMap<T> rt(r.data() + off, ei_b, ei_u, Eigen::OuterStride<>(stride));
    StridedMap<T> ct(c.data() + off, ei_b, ei_u, Eigen::OuterStride<>(stride));
    StridedMap<T> ht(h.data() + off, ei_b, ei_u, Eigen::OuterStride<>(stride));
    tmp.noalias() = hprev * uz.transpose();
    zt = (zt + tmp).unaryExpr([](T v) { return sigmoid(v); });
    tmp.noalias() = hprev * ur.transpose();
    rt = (rt + tmp).unaryExpr([](T v) { return sigmoid(v); });
    rh = rt.cwiseProduct(hprev);
    tmp.noalias() = rh * uh.transpose();
    ct = (ct + tmp).unaryExpr([](T v) { return std::tanh(v); });
    ht = hprev + zt.cwiseProduct(ct - hprev);
    hprev = ht;
  }
  if (cache) {
    cache->input = x;
    cache->z = std::move(z);
    cache->r = std::move(r);
    cache->cand = std::move(c);
    cache->h = h;
  }
  return h;
}

template <typename T>
Tensor<T> gru_backward(const Tensor<T>& grad_h, const GruParams<T>& p, const GruCache<T>& cache,
                       GruGrads<T>& grads, bool need_input_grad) {
  const Tensor<T>& x = cache.input;
  const std::size_t batch = x.dim(0), steps = x.dim(1), d = x.dim(2);
  const std::size_t units = p.u_z->dim(0);
  require(grad_h.size() == batch * steps * units, "gru backward: gradient shape");
  const auto ei_b = static_cast<Eigen::Index>(batch);
  const auto ei_u = static_cast<Eigen::Index>(units);
  const auto ei_d = static_cast<Eigen::Index>(d);
  const auto bt = static_cast<Eigen::Index>(batch * steps);
  const auto stride = static_cast<Eigen::Index>(steps * units);

  CMapRM<T> uz(p.u_z->data(), ei_u, ei_u), ur(p.u_r->data(), ei_u, ei_u), uh(p.u_h->data(), ei_u, ei_u);
  Tensor<T> daz({batch, steps, units}), dar({batch, steps, units}), dah({batch, steps, units});
  grads.u_z = Tensor<T>({units, units});
  grads.u_r = Tensor<T>({units, units});
  grads.u_h = Tensor<T>({units, units});
  MapRM<T> duz(grads.u_z.data(), ei_u, ei_u), dur(grads.u_r.data(), ei_u, ei_u),
      duh(grads.u_h.data(), ei_u, ei_u);

  MatRM<T> dh_next = MatRM<T>::Zero(ei_b, ei_u);
  MatRM<T> dh(ei_b, ei_u), drh(ei_b, ei_u), hprev(ei_b, ei_u), rh(ei_b, ei_u);
  for (std::size_t ti = steps; ti-- > 0;) {
    const std::size_t off = ti * units;
    auto strided = [&](const Tensor<T>& t) {
      return CStridedMap<T>(t.data() + off, ei_b, ei_u, Eigen::OuterStride<>(stride));
    };
    auto zt = strided(cache.z);
    auto rt = strided(cache.r);
    auto ct = strided(cache.cand);
    if (ti > 0) {
      hprev = CStridedMap<T>(cache.h.data() + off - units, ei_b, ei_u, Eigen::OuterStride<>(stride));
    } else {
      hprev.setZero();
    }
    dh = strided(grad_h) + dh_next;

    StridedMap<T> dazt(daz.data() + off, ei_b, ei_u, Eigen::OuterStride<>(stride));
    StridedMap<T> dart(dar.data() + off, ei_b, ei_u, Eigen::OuterStride<>(stride));
    StridedMap<T> daht(dah.data() + off, ei_b, ei_u, Eigen::OuterStride<>(stride));

    daht = dh.cwiseProduct(zt).cwiseProduct((T(1) - ct.array().square()).matrix());
    dazt = dh.cwiseProduct(ct - hprev)
               .cwiseProduct(zt.cwiseProduct((T(1) - zt.array()).matrix()));
    drh.noalias() = daht * uh;
    dart = drh.cwiseProduct(hprev).cwiseProduct(rt.cwiseProduct((T(1) - rt.array()).matrix()));

    rh = rt.cwiseProduct(hprev);
    duh.noalias() += daht.transpose() * rh;
    duz.noalias() += dazt.transpose() * hprev;
    dur.noalias() += dart.transpose() * hprev;

    dh_next = dh.cwiseProduct((T(1) - zt.array()).matrix()) + drh.cwiseProduct(rt);
    dh_next.noalias() += dazt * uz;
    dh_next.noalias() += dart * ur;
  }

  CMapRM<T> xm(x.data(), bt, ei_d);
  auto finish = [&](const Tensor<T>& da, Tensor<T>& gw, Tensor<T>& gb) {
    CMapRM<T> dam(da.data(), bt, ei_u);
    gw = Tensor<T>({units, d});
    MapRM<T>(gw.data(), ei_u, ei_d).noalias() = dam.transpose() * xm;
    gb = Tensor<T>({units});
    Eigen::Map<RowVec<T>>(gb.data(), ei_u) = dam.colwise().sum();
  };
  finish(daz, grads.w_z, grads.b_z);
  finish(dar, grads.w_r, grads.b_r);
  finish(dah, grads.w_h, grads.b_h);

  Tensor<T> dx;
  if (need_input_grad) {
    dx = Tensor<T>(x.shape());
    MapRM<T> dxm(dx.data(), bt, ei_d);
    dxm.noalias() = CMapRM<T>(daz.data(), bt, ei_u) * CMapRM<T>(p.w_z->data(), ei_u, ei_d);
    dxm.noalias() += CMapRM<T>(dar.data(), bt, ei_u) * CMapRM<T>(p.w_r->data(), ei_u, ei_d);
    dxm.noalias() += CMapRM<T>(dah.data(), bt, ei_u) * CMapRM<T>(p.w_h->data(), ei_u, ei_d);
  }
  return dx;
}

template <typename T>
AttentionOutput<T> attention_forward(const Tensor<T>& h, const AttentionParams<T>& p,
                                     AttentionCache<T>* cache) {
  require(h.rank() == 3, "attention: input must be [B, T, D]");
  require(p.w && p.b && p.u, "attention: missing parameter");
  const std::size_t batch = h.dim(0), steps = h.dim(1), d = h.dim(2);
  require(steps >= 1, "attention: need at least one time step");
  const std::size_t a = p.w->dim(0);
  require(p.w->rank() == 2 && p.w->dim(1) == d && p.b->size() == a && p.u->size() == a,
          "attention: parameter shape mismatch");
  const auto bt = static_cast<Eigen::Index>(batch * steps);

  Tensor<T> hidden({batch, steps, a});
  MapRM<T> hm(hidden.data(), bt, static_cast<Eigen::Index>(a));
  hm.noalias() = CMapRM<T>(h.data(), bt, static_cast<Eigen::Index>(d)) *
                 CMapRM<T>(p.w->data(), static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(d)).transpose();
  hm.rowwise() += CVecMap<T>(p.b->data(), static_cast<Eigen::Index>(a));
  hm = hm.unaryExpr([](T v) { return std::tanh(v); });

  AttentionOutput<T> out{Tensor<T>({batch, d}), Tensor<T>({batch, steps})};
  for (std::size_t b = 0; b < batch; ++b) {
    T* alpha = out.alphas.data() + b * steps;
    T max_score = -std::numeric_limits<T>::infinity();
    for (std::size_t t = 0; t < steps; ++t) {
      const T* ut = hidden.data() + (b * steps + t) * a;
      T s = T(0);
      for (std::size_t i = 0; i < a; ++i) s += ut[i] * (*p.u)[i];
      alpha[t] = s;
      max_score = std::max(max_score, s);
    }
    T total = T(0);
    for (std::size_t t = 0; t < steps; ++t) {
      alpha[t] = std::exp(alpha[t] - max_score);
      total += alpha[t];
    }
    T* v = out.context.data() + b * d;
    for (std::size_t t = 0; t < steps; ++t) {
      alpha[t] /= total;
      const T* ht = h.data() + (b * steps + t) * d;
      for (std::size_t i = 0; i < d; ++i) v[i] += alpha[t] * ht[i];
    }
  }
  if (cache) {
    cache->input = h;
    cache->hidden = std::move(hidden);
    cache->alphas = out.alphas;
  }
  return out;
}

template <typename T>
Tensor<T> attention_backward(const Tensor<T>& grad_context, const AttentionParams<T>& p,
                             const AttentionCache<T>& cache, AttentionGrads<T>& grads) {
  const Tensor<T>& h = cache.input;
  const std::size_t batch = h.dim(0), steps = h.dim(1), d = h.dim(2);
  const std::size_t a = p.w->dim(0);
  require(grad_context.size() == batch * d, "attention backward: gradient shape");
  Tensor<T> dh(h.shape());
  Tensor<T> dpre({batch, steps, a});
  grads.u = Tensor<T>({a});
  for (std::size_t b = 0; b < batch; ++b) {
    const T* dv = grad_context.data() + b * d;
    const T* alpha = cache.alphas.data() + b * steps;
    std::vector<T> dalpha(steps);
    T weighted = T(0);
    for (std::size_t t = 0; t < steps; ++t) {
      const T* ht = h.data() + (b * steps + t) * d;
      T* dht = dh.data() + (b * steps + t) * d;
      T s = T(0);
      for (std::size_t i = 0; i < d; ++i) {
        dht[i] += alpha[t] * dv[i];
        s += dv[i] * ht[i];
      }
      dalpha[t] = s;
      weighted += alpha[t] * s;
    }
    for (std::size_t t = 0; t < steps; ++t) {
      const T ds = alpha[t] * (dalpha[t] - weighted);
      const T* ut = cache.hidden.data() + (b * steps + t) * a;
      T* dp = dpre.data() + (b * steps + t) * a;
      for (std::size_t i = 0; i < a; ++i) {
        grads.u[i] += ds * ut[i];
        dp[i] = ds * (*p.u)[i] * (T(1) - ut[i] * ut[i]);
      }
    }
  }
  const auto bt = static_cast<Eigen::Index>(batch * steps);
  const auto ea = static_cast<Eigen::Index>(a), ed = static_cast<Eigen::Index>(d);
  CMapRM<T> dpm(dpre.data(), bt, ea);
  grads.w = Tensor<T>({a, d});
  MapRM<T>(grads.w.data(), ea, ed).noalias() = dpm.transpose() * CMapRM<T>(h.data(), bt, ed);
  grads.b = Tensor<T>({a});
  Eigen::Map<RowVec<T>>(grads.b.data(), ea) = dpm.colwise().sum();
  MapRM<T>(dh.data(), bt, ed).noalias() += dpm * CMapRM<T>(p.w->data(), ea, ed);
  return dh;
}

template <typename T>
Tensor<T> dense_forward(const Tensor<T>& x, const Tensor<T>& w, const Tensor<T>& b, bool relu) {
  require(x.rank() == 2 || x.rank() == 3, "dense: input must be rank 2 or 3");
  const std::size_t d = x.shape().back();
  require(w.rank() == 2 && w.dim(1) == d && b.size() == w.dim(0), "dense: parameter shape mismatch");
  const std::size_t o = w.dim(0);
  const std::size_t rows = x.size() / d;
  Shape shape = x.shape();
  shape.back() = o;
  Tensor<T> y(shape);
  MapRM<T> ym(y.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(o));
  ym.noalias() = CMapRM<T>(x.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(d)) *
                 CMapRM<T>(w.data(), static_cast<Eigen::Index>(o), static_cast<Eigen::Index>(d)).transpose();
  ym.rowwise() += CVecMap<T>(b.data(), static_cast<Eigen::Index>(o));
  if (relu) {
    for (T& v : y.values()) v = v > T(0) ? v : T(0);
  }
  return y;
}

template <typename T>
Tensor<T> dense_backward(const Tensor<T>& grad_out, const Tensor<T>& x, const Tensor<T>& output,
                         const Tensor<T>& w, bool relu, Tensor<T>& grad_w, Tensor<T>& grad_b) {
  const std::size_t d = x.shape().back(), o = w.dim(0);
  const std::size_t rows = x.size() / d;
  require(grad_out.size() == rows * o, "dense backward: gradient shape");
  Tensor<T> dz = grad_out;
  if (relu) {
    for (std::size_t i = 0; i < dz.size(); ++i) {
      if (!(output[i] > T(0))) dz[i] = T(0);
    }
  }
  const auto er = static_cast<Eigen::Index>(rows), ed = static_cast<Eigen::Index>(d),
             eo = static_cast<Eigen::Index>(o);
  CMapRM<T> dzm(dz.data(), er, eo);
  grad_w = Tensor<T>({o, d});
  MapRM<T>(grad_w.data(), eo, ed).noalias() = dzm.transpose() * CMapRM<T>(x.data(), er, ed);
  grad_b = Tensor<T>({o});
  Eigen::Map<RowVec<T>>(grad_b.data(), eo) = dzm.colwise().sum();
  Tensor<T> dx(x.shape());
  MapRM<T>(dx.data(), er, ed).noalias() = dzm * CMapRM<T>(w.data(), eo, ed);
  return dx;
}

template <typename T>
Tensor<T> softmax_rows(const Tensor<T>& logits) {
  require(logits.rank() == 2, "softmax: logits must be [B, K]");
  const std::size_t rows = logits.dim(0), k = logits.dim(1);
  Tensor<T> out(logits.shape());
  for (std::size_t r = 0; r < rows; ++r) {
    const T* in = logits.data() + r * k;
    T* o = out.data() + r * k;
    const T m = *std::max_element(in, in + k);
    T total = T(0);
    for (std::size_t i = 0; i < k; ++i) {
      o[i] = std::exp(in[i] - m);
      total += o[i];
    }
    for (std::size_t i = 0; i < k; ++i) o[i] /= total;
  }
  return out;
}

#define DUSQ_INSTANTIATE_LAYERS(T)                                                              \
  template Tensor<T> conv2d_same(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);        \
  template Tensor<T> conv_block_forward(const Tensor<T>&, const ConvBlockParams<T>&,           \
                                        ForwardMode, Rng*, const DropoutMask*,                 \
                                        ConvBlockCache<T>*);                                   \
  template Tensor<T> conv_block_backward(const Tensor<T>&, const ConvBlockParams<T>&,          \
                                         const ConvBlockCache<T>&, ConvBlockGrads<T>&, bool);  \
  template Tensor<T> gru_forward(const Tensor<T>&, const GruParams<T>&, GruCache<T>*);         \
  template Tensor<T> gru_backward(const Tensor<T>&, const GruParams<T>&, const GruCache<T>&,   \
                                  GruGrads<T>&, bool);                                         \
  template AttentionOutput<T> attention_forward(const Tensor<T>&, const AttentionParams<T>&,   \
                                                AttentionCache<T>*);                           \
  template Tensor<T> attention_backward(const Tensor<T>&, const AttentionParams<T>&,           \
                                        const AttentionCache<T>&, AttentionGrads<T>&);         \
  template Tensor<T> dense_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&, bool); \
  template Tensor<T> dense_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,      \
                                    const Tensor<T>&, bool, Tensor<T>&, Tensor<T>&);           \
  template Tensor<T> softmax_rows(const Tensor<T>&);

DUSQ_INSTANTIATE_LAYERS(float)
DUSQ_INSTANTIATE_LAYERS(double)

#undef DUSQ_INSTANTIATE_LAYERS

}  // namespace dusq::nn
