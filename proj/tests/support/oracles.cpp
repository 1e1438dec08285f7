#include "oracles.hpp"

#include <algorithm>
#include <cmath>

namespace oracle {

Volume conv(const Volume& in, const std::vector<double>& k, int out_c, int ksize, int stride,
            int pad) {
  Volume out{out_c, (in.h + 2 * pad - ksize) / stride + 1, (in.w + 2 * pad - ksize) / stride + 1, {}};
  out.v.assign(static_cast<std::size_t>(out.c) * out.h * out.w, 0.0);
  for (int n = 0; n < out_c; ++n)
    for (int y = 0; y < out.h; ++y)
      for (int x = 0; x < out.w; ++x) {
        double s = 0.0;
        for (int m = 0; m < in.c; ++m)
          for (int i = 0; i < ksize; ++i)
            for (int j = 0; j < ksize; ++j) {
              const int sy = y * stride + i - pad;
              const int sx = x * stride + j - pad;
              if (sy < 0 || sx < 0 || sy >= in.h || sx >= in.w) continue;
              s += k[((static_cast<std::size_t>(n) * in.c + m) * ksize + i) * ksize + j] *
                   in.at(m, sy, sx);
            }
        out.at(n, y, x) = s;
      }
  return out;
}

Volume depthwise(const Volume& in, const std::vector<double>& k, int ksize, int stride, int pad) {
  Volume out{in.c, (in.h + 2 * pad - ksize) / stride + 1, (in.w + 2 * pad - ksize) / stride + 1, {}};
  out.v.assign(static_cast<std::size_t>(out.c) * out.h * out.w, 0.0);
  for (int m = 0; m < in.c; ++m)
    for (int y = 0; y < out.h; ++y)
      for (int x = 0; x < out.w; ++x) {
        double s = 0.0;
        for (int i = 0; i < ksize; ++i)
          for (int j = 0; j < ksize; ++j) {
            const int sy = y * stride + i - pad;
            const int sx = x * stride + j - pad;
            if (sy < 0 || sx < 0 || sy >= in.h || sx >= in.w) continue;
            s += k[(static_cast<std::size_t>(m) * ksize + i) * ksize + j] * in.at(m, sy, sx);
          }
        out.at(m, y, x) = s;
      }
  return out;
}

Volume pointwise(const Volume& in, const std::vector<double>& k, int out_c) {
  Volume out{out_c, in.h, in.w, {}};
  out.v.assign(static_cast<std::size_t>(out.c) * out.h * out.w, 0.0);
  for (int y = 0; y < in.h; ++y)
    for (int x = 0; x < in.w; ++x) {
      std::vector<double> px(in.c);
      for (int m = 0; m < in.c; ++m) px[m] = in.at(m, y, x);
      for (int n = 0; n < out_c; ++n) {
        double s = 0.0;
        for (int m = 0; m < in.c; ++m) s += k[static_cast<std::size_t>(n) * in.c + m] * px[m];
        out.at(n, y, x) = s;
      }
    }
  return out;
}

double pixel_sum(const edgedet::Image& img, int x, int y, int w, int h) {
  double s = 0.0;
  for (int yy = y; yy < y + h; ++yy)
    for (int xx = x; xx < x + w; ++xx) s += img.at(xx, yy);
  return s;
}

Gradients gradients(const edgedet::Image& img) {
  Gradients g{img.width(), img.height(), {}, {}};
  g.mag.assign(static_cast<std::size_t>(g.w) * g.h, 0.0);
  g.ang.assign(g.mag.size(), 0.0);
  auto px = [&](int x, int y, int c) {
    x = std::clamp(x, 0, g.w - 1);
    y = std::clamp(y, 0, g.h - 1);
    return static_cast<double>(img.at(x, y, c));
  };
  for (int y = 0; y < g.h; ++y)
    for (int x = 0; x < g.w; ++x) {
      double best = -1.0, bx = 0.0, by = 0.0;
      for (int c = 0; c < img.channels(); ++c) {
        const double gx = px(x + 1, y, c) - px(x - 1, y, c);
        const double gy = px(x, y + 1, c) - px(x, y - 1, c);
        const double m = std::hypot(gx, gy);
        if (m > best) {
          best = m;
          bx = gx;
          by = gy;
        }
      }
      double a = std::atan2(by, bx) * 180.0 / M_PI;
      while (a < 0.0) a += 180.0;
      while (a >= 180.0) a -= 180.0;
      g.mag[static_cast<std::size_t>(y) * g.w + x] = best;
      g.ang[static_cast<std::size_t>(y) * g.w + x] = a;
    }
  return g;
}

std::vector<double> cell_votes(const Gradients& g, int x0, int y0, int cw, int ch) {
  std::vector<double> bins(9, 0.0);
  for (int y = y0; y < y0 + ch; ++y)
    for (int x = x0; x < x0 + cw; ++x) {
      const double m = g.mag[static_cast<std::size_t>(y) * g.w + x];
      const double a = g.ang[static_cast<std::size_t>(y) * g.w + x];
      // Find the two bin centres bracketing the angle, walking the circle.
      for (int b = 0; b < 9; ++b) {
        const double lo = 10.0 + 20.0 * b;
        double d = a - lo;
        if (d < 0.0) d += 180.0;
        if (d < 20.0) {
          bins[b] += m * (1.0 - d / 20.0);
          bins[(b + 1) % 9] += m * (d / 20.0);
          break;
        }
      }
    }
  return bins;
}

std::vector<double> hog(const edgedet::Image& window, int cell) {
  const auto g = gradients(window);
  const int cx = g.w / cell;
  const int cy = g.h / cell;
  std::vector<std::vector<double>> cells;
  for (int j = 0; j < cy; ++j)
    for (int i = 0; i < cx; ++i) cells.push_back(cell_votes(g, i * cell, j * cell, cell, cell));
  std::vector<double> out;
  for (int by = 0; by + 1 < cy; ++by)
    for (int bx = 0; bx + 1 < cx; ++bx) {
      std::vector<double> block;
      for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx) {
          const auto& h = cells[(by + dy) * cx + bx + dx];
          block.insert(block.end(), h.begin(), h.end());
        }
      auto normalise = [&] {
        double ss = 0.0;
        for (double v : block) ss += v * v;
        const double n = std::sqrt(ss + 1e-5 * 1e-5);
        for (double& v : block) v /= n;
      };
      normalise();
      for (double& v : block) v = std::min(v, 0.2);
      normalise();
      out.insert(out.end(), block.begin(), block.end());
    }
  return out;
}

double iou(const edgedet::BoundingBox& a, const edgedet::BoundingBox& b) {
  const double ix = std::max(0.0, std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x));
  const double iy = std::max(0.0, std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y));
  const double inter = ix * iy;
  const double uni = a.w * a.h + b.w * b.h - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

Counts match(const std::vector<edgedet::Detection>& preds,
             const std::vector<edgedet::BoundingBox>& gt, double thr) {
  std::vector<bool> used_pred(preds.size(), false);
  std::vector<bool> used_gt(gt.size(), false);
  Counts c;
  for (std::size_t round = 0; round < preds.size(); ++round) {
    std::size_t p = preds.size();
    for (std::size_t i = 0; i < preds.size(); ++i)
      if (!used_pred[i] && (p == preds.size() || preds[i].score > preds[p].score)) p = i;
    used_pred[p] = true;
    std::size_t g = gt.size();
    double best = -1.0;
    for (std::size_t j = 0; j < gt.size(); ++j) {
      if (used_gt[j]) continue;
      const double o = oracle::iou(preds[p].box, gt[j]);
      if (o > best) {
        best = o;
        g = j;
      }
    }
    if (g < gt.size() && best >= thr) {
      used_gt[g] = true;
      ++c.tp;
    } else {
      ++c.fp;
    }
  }
  for (bool u : used_gt) c.fn += !u;
  return c;
}

std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                     std::vector<double> x, double h) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + h;
    const double up = f(x);
    x[i] = keep - h;
    const double down = f(x);
    x[i] = keep;
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

double max_rel_error(const std::vector<double>& a, const std::vector<double>& b, double floor) {
  double scale = floor;
  for (double v : b) scale = std::max(scale, std::abs(v));
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]) / scale);
  return worst;
}

}  // namespace oracle
