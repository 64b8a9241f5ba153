#include "dsf/ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dsf/errors.hpp"

namespace dsf {
namespace {

void require_same(const Shape& a, const Shape& b, const char* what) {
  if (a != b) throw ShapeError(std::string(what) + ": shape " + a.str() + " vs " + b.str());
}

void check_index_map(const Tensor& y, const PoolIndexMap& idx, const char* what) {
  if (y.shape() != idx.shape) {
    throw ShapeError(std::string(what) + ": values " + y.shape().str() + " vs index map " + idx.shape.str());
  }
  if (idx.src_h != 2 * idx.shape.h || idx.src_w != 2 * idx.shape.w || idx.index.size() != idx.shape.numel()) {
    throw ShapeError(std::string(what) + ": inconsistent index map geometry");
  }
}

// Validated source offset within the plane for pooled cell (oy, ox).
std::size_t window_source(const PoolIndexMap& idx, std::size_t flat, std::size_t oy, std::size_t ox) {
  const std::uint32_t s = idx.index[flat];
  const std::size_t sy = s / idx.src_w;
  const std::size_t sx = s % idx.src_w;
  if (sy / 2 != oy || sx / 2 != ox || sy >= idx.src_h) {
    throw ShapeError("maxunpool2x2: corrupt index map, index " + std::to_string(s) +
                     " lies outside window (" + std::to_string(oy) + "," + std::to_string(ox) + ")");
  }
  return s;
}

// Per-axis bilinear taps: out[d] = (1 - frac) * in[lo] + frac * in[hi].
struct Taps {
  std::vector<std::size_t> lo, hi;
  std::vector<double> frac;
};

Taps make_taps(std::size_t in, std::size_t out, double src_per_dst, bool integer_factor, std::size_t factor) {
  Taps t;
  t.lo.resize(out);
  t.hi.resize(out);
  t.frac.resize(out);
  const double max_src = static_cast<double>(in - 1);
  for (std::size_t d = 0; d < out; ++d) {
    double src = integer_factor ? (static_cast<double>(d) + 0.5) / static_cast<double>(factor) - 0.5
                                : (static_cast<double>(d) + 0.5) * src_per_dst - 0.5;
    src = std::clamp(src, 0.0, max_src);
    const auto lo = static_cast<std::size_t>(std::floor(src));
    t.lo[d] = lo;
    t.hi[d] = std::min(lo + 1, in - 1);
    t.frac[d] = src - static_cast<double>(lo);
  }
  return t;
}

Tensor apply_taps(const Tensor& x, const Taps& ty, const Taps& tx) {
  const Shape& s = x.shape();
  const std::size_t oh = ty.lo.size();
  const std::size_t ow = tx.lo.size();
  Tensor y(Shape{s.n, s.c, oh, ow});
  for (std::size_t b = 0; b < s.n; ++b) {
    for (std::size_t c = 0; c < s.c; ++c) {
      const double* in = x.plane(b, c);
      double* out = y.plane(b, c);
      for (std::size_t oy = 0; oy < oh; ++oy) {
        const double fy = ty.frac[oy];
        const double* r0 = in + ty.lo[oy] * s.w;
        const double* r1 = in + ty.hi[oy] * s.w;
        for (std::size_t ox = 0; ox < ow; ++ox) {
          const double fx = tx.frac[ox];
          const double top = (1.0 - fx) * r0[tx.lo[ox]] + fx * r0[tx.hi[ox]];
          const double bot = (1.0 - fx) * r1[tx.lo[ox]] + fx * r1[tx.hi[ox]];
          out[oy * ow + ox] = (1.0 - fy) * top + fy * bot;
        }
      }
    }
  }
  return y;
}

Tensor apply_taps_transposed(const Tensor& gy, const Shape& in_shape, const Taps& ty, const Taps& tx) {
  const std::size_t oh = ty.lo.size();
  const std::size_t ow = tx.lo.size();
  if (gy.shape() != Shape{in_shape.n, in_shape.c, oh, ow}) {
    throw ShapeError("bilinear backward: gradient shape " + gy.shape().str());
  }
  Tensor dx(in_shape);
  for (std::size_t b = 0; b < in_shape.n; ++b) {
    for (std::size_t c = 0; c < in_shape.c; ++c) {
      const double* g = gy.plane(b, c);
      double* d = dx.plane(b, c);
      for (std::size_t oy = 0; oy < oh; ++oy) {
        const double fy = ty.frac[oy];
        double* r0 = d + ty.lo[oy] * in_shape.w;
        double* r1 = d + ty.hi[oy] * in_shape.w;
        for (std::size_t ox = 0; ox < ow; ++ox) {
          const double fx = tx.frac[ox];
          const double v = g[oy * ow + ox];
          r0[tx.lo[ox]] += (1.0 - fy) * (1.0 - fx) * v;
          r0[tx.hi[ox]] += (1.0 - fy) * fx * v;
          r1[tx.lo[ox]] += fy * (1.0 - fx) * v;
          r1[tx.hi[ox]] += fy * fx * v;
        }
      }
    }
  }
  return dx;
}

}  // namespace

PoolResult maxpool2x2(const Tensor& x) {
  const Shape& s = x.shape();
  if (s.h % 2 != 0 || s.w % 2 != 0) {
    throw ShapeError("maxpool2x2: spatial dims must be even, got " + std::to_string(s.h) + "x" + std::to_string(s.w));
  }
  const Shape ps{s.n, s.c, s.h / 2, s.w / 2};
  PoolResult r{Tensor(ps), PoolIndexMap{ps, s.h, s.w, std::vector<std::uint32_t>(ps.numel())}};
  std::size_t flat = 0;
  for (std::size_t b = 0; b < s.n; ++b) {
    for (std::size_t c = 0; c < s.c; ++c) {
      const double* in = x.plane(b, c);
      double* out = r.y.plane(b, c);
      for (std::size_t oy = 0; oy < ps.h; ++oy) {
        for (std::size_t ox = 0; ox < ps.w; ++ox, ++flat) {
          std::size_t best = (2 * oy) * s.w + 2 * ox;
          const std::size_t candidates[3] = {best + 1, best + s.w, best + s.w + 1};
          for (std::size_t cand : candidates) {
            if (in[cand] > in[best]) best = cand;
          }
          out[oy * ps.w + ox] = in[best];
          r.idx.index[flat] = static_cast<std::uint32_t>(best);
        }
      }
    }
  }
  return r;
}

Tensor maxpool2x2_backward(const Tensor& gy, const PoolIndexMap& idx) { return maxunpool2x2(gy, idx); }

Tensor maxunpool2x2(const Tensor& y, const PoolIndexMap& idx) {
  check_index_map(y, idx, "maxunpool2x2");
  const Shape& ps = idx.shape;
  Tensor out(Shape{ps.n, ps.c, idx.src_h, idx.src_w});
  std::size_t flat = 0;
  for (std::size_t b = 0; b < ps.n; ++b) {
    for (std::size_t c = 0; c < ps.c; ++c) {
      const double* in = y.plane(b, c);
      double* dst = out.plane(b, c);
      for (std::size_t oy = 0; oy < ps.h; ++oy) {
        for (std::size_t ox = 0; ox < ps.w; ++ox, ++flat) {
          dst[window_source(idx, flat, oy, ox)] = in[oy * ps.w + ox];
        }
      }
    }
  }
  return out;
}

Tensor maxunpool2x2_backward(const Tensor& gout, const PoolIndexMap& idx) {
  const Shape& ps = idx.shape;
  if (gout.shape() != Shape{ps.n, ps.c, idx.src_h, idx.src_w}) {
    throw ShapeError("maxunpool2x2_backward: gradient shape " + gout.shape().str());
  }
  Tensor gy(ps);
  std::size_t flat = 0;
  for (std::size_t b = 0; b < ps.n; ++b) {
    for (std::size_t c = 0; c < ps.c; ++c) {
      const double* src = gout.plane(b, c);
      double* dst = gy.plane(b, c);
      for (std::size_t oy = 0; oy < ps.h; ++oy) {
        for (std::size_t ox = 0; ox < ps.w; ++ox, ++flat) {
          dst[oy * ps.w + ox] = src[window_source(idx, flat, oy, ox)];
        }
      }
    }
  }
  return gy;
}

Tensor global_avg_pool(const Tensor& x) {
  const Shape& s = x.shape();
  if (s.plane() == 0) throw ShapeError("global_avg_pool: empty spatial plane");
  Tensor y(Shape{s.n, s.c, 1, 1});
  const double inv = 1.0 / static_cast<double>(s.plane());
  for (std::size_t b = 0; b < s.n; ++b) {
    for (std::size_t c = 0; c < s.c; ++c) {
      const double* p = x.plane(b, c);
      double sum = 0.0;
      for (std::size_t i = 0; i < s.plane(); ++i) sum += p[i];
      y.at(b, c, 0, 0) = sum * inv;
    }
  }
  return y;
}

Tensor global_avg_pool_backward(const Tensor& gy, const Shape& in_shape) {
  Tensor dx = broadcast_spatial(gy, in_shape.h, in_shape.w);
  require_same(dx.shape(), in_shape, "global_avg_pool_backward");
  dx *= 1.0 / static_cast<double>(in_shape.plane());
  return dx;
}

Tensor broadcast_spatial(const Tensor& x, std::size_t h, std::size_t w) {
  const Shape& s = x.shape();
  if (s.h != 1 || s.w != 1) throw ShapeError("broadcast_spatial: expects 1x1 planes, got " + s.str());
  Tensor y(Shape{s.n, s.c, h, w});
  for (std::size_t b = 0; b < s.n; ++b) {
    for (std::size_t c = 0; c < s.c; ++c) {
      std::fill_n(y.plane(b, c), h * w, x.at(b, c, 0, 0));
    }
  }
  return y;
}

Tensor broadcast_spatial_backward(const Tensor& gy) {
  const Shape& s = gy.shape();
  Tensor dx(Shape{s.n, s.c, 1, 1});
  for (std::size_t b = 0; b < s.n; ++b) {
    for (std::size_t c = 0; c < s.c; ++c) {
      const double* p = gy.plane(b, c);
      double sum = 0.0;
      for (std::size_t i = 0; i < s.plane(); ++i) sum += p[i];
      dx.at(b, c, 0, 0) = sum;
    }
  }
  return dx;
}

Tensor bilinear_upsample(const Tensor& x, std::size_t factor) {
  if (factor < 2) throw ShapeError("bilinear_upsample: factor must be >= 2");
  const Shape& s = x.shape();
  return apply_taps(x, make_taps(s.h, s.h * factor, 0.0, true, factor),
                    make_taps(s.w, s.w * factor, 0.0, true, factor));
}

Tensor bilinear_upsample_backward(const Tensor& gy, const Shape& in_shape, std::size_t factor) {
  if (factor < 2) throw ShapeError("bilinear_upsample: factor must be >= 2");
  return apply_taps_transposed(gy, in_shape, make_taps(in_shape.h, in_shape.h * factor, 0.0, true, factor),
                               make_taps(in_shape.w, in_shape.w * factor, 0.0, true, factor));
}

Tensor resize_bilinear(const Tensor& x, std::size_t out_h, std::size_t out_w) {
  const Shape& s = x.shape();
  if (s.h == 0 || s.w == 0 || out_h == 0 || out_w == 0) throw ShapeError("resize_bilinear: empty plane");
  const double ry = static_cast<double>(s.h) / static_cast<double>(out_h);
  const double rx = static_cast<double>(s.w) / static_cast<double>(out_w);
  return apply_taps(x, make_taps(s.h, out_h, ry, false, 0), make_taps(s.w, out_w, rx, false, 0));
}

Tensor resize_bilinear_backward(const Tensor& gy, const Shape& in_shape) {
  const std::size_t out_h = gy.h();
  const std::size_t out_w = gy.w();
  const double ry = static_cast<double>(in_shape.h) / static_cast<double>(out_h);
  const double rx = static_cast<double>(in_shape.w) / static_cast<double>(out_w);
  return apply_taps_transposed(gy, in_shape, make_taps(in_shape.h, out_h, ry, false, 0),
                               make_taps(in_shape.w, out_w, rx, false, 0));
}

Tensor relu(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.values()) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& gy) {
  require_same(x.shape(), gy.shape(), "relu_backward");
  Tensor dx(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) dx[i] = x[i] > 0.0 ? gy[i] : 0.0;
  return dx;
}

Tensor sigmoid(const Tensor& x) {
  Tensor y = x;
  for (double& v : y.values()) {
    // Branch keeps exp() from overflowing for large |v|.
    if (v >= 0.0) {
      v = 1.0 / (1.0 + std::exp(-v));
    } else {
      const double e = std::exp(v);
      v = e / (1.0 + e);
    }
  }
  return y;
}

Tensor sigmoid_backward(const Tensor& y, const Tensor& gy) {
  require_same(y.shape(), gy.shape(), "sigmoid_backward");
  Tensor dx(y.shape());
  for (std::size_t i = 0; i < y.size(); ++i) dx[i] = gy[i] * y[i] * (1.0 - y[i]);
  return dx;
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  if (sa.n != sb.n) throw ShapeError("concat_channels: batch " + std::to_string(sa.n) + " vs " + std::to_string(sb.n));
  if (sa.h != sb.h) throw ShapeError("concat_channels: height " + std::to_string(sa.h) + " vs " + std::to_string(sb.h));
  if (sa.w != sb.w) throw ShapeError("concat_channels: width " + std::to_string(sa.w) + " vs " + std::to_string(sb.w));
  Tensor y(Shape{sa.n, sa.c + sb.c, sa.h, sa.w});
  const std::size_t pa = sa.c * sa.plane();
  const std::size_t pb = sb.c * sb.plane();
  for (std::size_t i = 0; i < sa.n; ++i) {
    std::copy_n(a.data() + i * pa, pa, y.plane(i, 0));
    std::copy_n(b.data() + i * pb, pb, y.plane(i, sa.c));
  }
  return y;
}

std::pair<Tensor, Tensor> split_channels(const Tensor& t, std::size_t first_channels) {
  const Shape& s = t.shape();
  if (first_channels > s.c) throw ShapeError("split_channels: split point beyond channel count");
  Tensor a(Shape{s.n, first_channels, s.h, s.w});
  Tensor b(Shape{s.n, s.c - first_channels, s.h, s.w});
  const std::size_t pa = first_channels * s.plane();
  const std::size_t pb = (s.c - first_channels) * s.plane();
  for (std::size_t i = 0; i < s.n; ++i) {
    std::copy_n(t.plane(i, 0), pa, a.data() + i * pa);
    std::copy_n(t.plane(i, 0) + pa, pb, b.data() + i * pb);
  }
  return {std::move(a), std::move(b)};
}

Tensor scale_channels(const Tensor& x, const Tensor& s) {
  const Shape& xs = x.shape();
  require_same(s.shape(), Shape{xs.n, xs.c, 1, 1}, "scale_channels");
  Tensor y = x;
  for (std::size_t b = 0; b < xs.n; ++b) {
    for (std::size_t c = 0; c < xs.c; ++c) {
      const double k = s.at(b, c, 0, 0);
      double* p = y.plane(b, c);
      for (std::size_t i = 0; i < xs.plane(); ++i) p[i] *= k;
    }
  }
  return y;
}

ScaleChannelsGrads scale_channels_backward(const Tensor& x, const Tensor& s, const Tensor& gy) {
  require_same(x.shape(), gy.shape(), "scale_channels_backward");
  ScaleChannelsGrads g{scale_channels(gy, s), Tensor(s.shape())};
  const Shape& xs = x.shape();
  for (std::size_t b = 0; b < xs.n; ++b) {
    for (std::size_t c = 0; c < xs.c; ++c) {
      const double* px = x.plane(b, c);
      const double* pg = gy.plane(b, c);
      double sum = 0.0;
      for (std::size_t i = 0; i < xs.plane(); ++i) sum += px[i] * pg[i];
      g.ds.at(b, c, 0, 0) = sum;
    }
  }
  return g;
}

}  // namespace dsf
