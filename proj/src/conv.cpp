#include <Eigen/Core>

#include <algorithm>
#include <string>

#include "dsf/errors.hpp"
#include "dsf/ops.hpp"

namespace dsf {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatMap = Eigen::Map<RowMatrix>;
using ConstMatMap = Eigen::Map<const RowMatrix>;

struct ConvGeometry {
  std::size_t cin, h, w, cout, kh, kw, oh, ow;
  Conv2dOptions opt;

  std::size_t rows() const { return cin * kh * kw; }
  std::size_t cols() const { return oh * ow; }
};

ConvGeometry check_conv(const Tensor& x, const Tensor& w, const Tensor& b, const Conv2dOptions& opt) {
  const Shape& xs = x.shape();
  const Shape& ws = w.shape();
  if (opt.stride < 1) throw ShapeError("conv2d: stride must be >= 1");
  if (opt.dilation < 1) throw ShapeError("conv2d: dilation must be >= 1");
  if (xs.c != ws.c) {
    throw ShapeError("conv2d: input channels " + std::to_string(xs.c) +
                     " do not match weight in-channels " + std::to_string(ws.c));
  }
  if (ws.h % 2 == 0 || ws.w % 2 == 0) {
    throw ShapeError("conv2d: kernel height/width must be odd, got " + std::to_string(ws.h) + "x" +
                     std::to_string(ws.w));
  }
  if (b.size() != 0 && b.size() != ws.n) {
    throw ShapeError("conv2d: bias length " + std::to_string(b.size()) +
                     " does not match output channels " + std::to_string(ws.n));
  }
  const std::size_t oh = conv_output_size(xs.h, ws.h, opt);
  const std::size_t ow = conv_output_size(xs.w, ws.w, opt);
  if (oh == 0) throw ShapeError("conv2d: dilated kernel height exceeds padded input height " + std::to_string(xs.h));
  if (ow == 0) throw ShapeError("conv2d: dilated kernel width exceeds padded input width " + std::to_string(xs.w));
  return {xs.c, xs.h, xs.w, ws.n, ws.h, ws.w, oh, ow, opt};
}

// Lowers one batch item to a (cin*kh*kw) x (oh*ow) row-major matrix.
void im2col(const double* src, const ConvGeometry& g, double* cols) {
  const auto pad = static_cast<std::ptrdiff_t>(g.opt.padding);
  const auto h = static_cast<std::ptrdiff_t>(g.h);
  const auto w = static_cast<std::ptrdiff_t>(g.w);
  const std::size_t ncols = g.cols();
  for (std::size_t ci = 0; ci < g.cin; ++ci) {
    const double* plane = src + ci * g.h * g.w;
    for (std::size_t ky = 0; ky < g.kh; ++ky) {
      for (std::size_t kx = 0; kx < g.kw; ++kx) {
        double* row = cols + ((ci * g.kh + ky) * g.kw + kx) * ncols;
        const auto dy = static_cast<std::ptrdiff_t>(ky * g.opt.dilation) - pad;
        const auto dx = static_cast<std::ptrdiff_t>(kx * g.opt.dilation) - pad;
        for (std::size_t oy = 0; oy < g.oh; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.opt.stride) + dy;
          double* out = row + oy * g.ow;
          if (iy < 0 || iy >= h) {
            std::fill(out, out + g.ow, 0.0);
            continue;
          }
          const double* in_row = plane + iy * w;
          for (std::size_t ox = 0; ox < g.ow; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.opt.stride) + dx;
            out[ox] = (ix >= 0 && ix < w) ? in_row[ix] : 0.0;
          }
        }
      }
    }
  }
}

void col2im_add(const double* cols, const ConvGeometry& g, double* dst) {
  const auto pad = static_cast<std::ptrdiff_t>(g.opt.padding);
  const auto h = static_cast<std::ptrdiff_t>(g.h);
  const auto w = static_cast<std::ptrdiff_t>(g.w);
  const std::size_t ncols = g.cols();
  for (std::size_t ci = 0; ci < g.cin; ++ci) {
    double* plane = dst + ci * g.h * g.w;
    for (std::size_t ky = 0; ky < g.kh; ++ky) {
      for (std::size_t kx = 0; kx < g.kw; ++kx) {
        const double* row = cols + ((ci * g.kh + ky) * g.kw + kx) * ncols;
        const auto dy = static_cast<std::ptrdiff_t>(ky * g.opt.dilation) - pad;
        const auto dx = static_cast<std::ptrdiff_t>(kx * g.opt.dilation) - pad;
        for (std::size_t oy = 0; oy < g.oh; ++oy) {
          const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * g.opt.stride) + dy;
          if (iy < 0 || iy >= h) continue;
          double* out_row = plane + iy * w;
          const double* in = row + oy * g.ow;
          for (std::size_t ox = 0; ox < g.ow; ++ox) {
            const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * g.opt.stride) + dx;
            if (ix >= 0 && ix < w) out_row[ix] += in[ox];
          }
        }
      }
    }
  }
}

}  // namespace

std::size_t conv_output_size(std::size_t in, std::size_t k, const Conv2dOptions& opt) {
  const std::size_t span = opt.dilation * (k - 1) + 1;
  const std::size_t padded = in + 2 * opt.padding;
  if (span > padded || opt.stride == 0) return 0;
  return (padded - span) / opt.stride + 1;
}

Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, const Conv2dOptions& opt) {
  const ConvGeometry g = check_conv(x, w, b, opt);
  const std::size_t n = x.n();
  Tensor y(Shape{n, g.cout, g.oh, g.ow});
  std::vector<double> cols(g.rows() * g.cols());
  const ConstMatMap wm(w.data(), static_cast<Eigen::Index>(g.cout), static_cast<Eigen::Index>(g.rows()));
  for (std::size_t bi = 0; bi < n; ++bi) {
    im2col(x.plane(bi, 0), g, cols.data());
    const ConstMatMap cm(cols.data(), static_cast<Eigen::Index>(g.rows()), static_cast<Eigen::Index>(g.cols()));
    MatMap ym(y.plane(bi, 0), static_cast<Eigen::Index>(g.cout), static_cast<Eigen::Index>(g.cols()));
    ym.noalias() = wm * cm;
    if (b.size() != 0) {
      for (std::size_t co = 0; co < g.cout; ++co) ym.row(static_cast<Eigen::Index>(co)).array() += b[co];
    }
  }
  return y;
}

Conv2dGrads conv2d_backward(const Tensor& x, const Tensor& w, const Tensor& b, const Tensor& gy,
                            const Conv2dOptions& opt, bool need_dx) {
  const ConvGeometry g = check_conv(x, w, b, opt);
  const std::size_t n = x.n();
  if (gy.shape() != Shape{n, g.cout, g.oh, g.ow}) {
    throw ShapeError("conv2d_backward: output gradient shape " + gy.shape().str() +
                     " does not match forward output " + Shape{n, g.cout, g.oh, g.ow}.str());
  }
  Conv2dGrads grads;
  grads.dw = Tensor(w.shape());
  grads.db = Tensor(b.shape());
  if (need_dx) grads.dx = Tensor(x.shape());

  std::vector<double> cols(g.rows() * g.cols());
  const ConstMatMap wm(w.data(), static_cast<Eigen::Index>(g.cout), static_cast<Eigen::Index>(g.rows()));
  MatMap dwm(grads.dw.data(), static_cast<Eigen::Index>(g.cout), static_cast<Eigen::Index>(g.rows()));
  for (std::size_t bi = 0; bi < n; ++bi) {
    const ConstMatMap gym(gy.plane(bi, 0), static_cast<Eigen::Index>(g.cout), static_cast<Eigen::Index>(g.cols()));
    im2col(x.plane(bi, 0), g, cols.data());
    MatMap cm(cols.data(), static_cast<Eigen::Index>(g.rows()), static_cast<Eigen::Index>(g.cols()));
    dwm.noalias() += gym * cm.transpose();
    if (b.size() != 0) {
      for (std::size_t co = 0; co < g.cout; ++co) grads.db[co] += gym.row(static_cast<Eigen::Index>(co)).sum();
    }
    if (need_dx) {
      cm.noalias() = wm.transpose() * gym;
      col2im_add(cols.data(), g, grads.dx.plane(bi, 0));
    }
  }
#ifdef DSF_MUTATE_CONV_GRAD
  // Deliberate defect for the gradient-check mutation build.
  if (need_dx) grads.dx *= -1.0;
#endif
  return grads;
}

}  // namespace dsf
