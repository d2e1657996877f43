// Copyright 2026 The DynEval Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "dyneval/local_backends.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "dyneval/error.hpp"

namespace dyneval::backends {

RgbFrame HoldInterpolator::interpolate(const InterpolationRequest& request) {
  return request.previous;
}

std::string ShiftBlendInterpolator::id() const {
  return "shift-blend-r" + std::to_string(radius_);
}

std::pair<int, int> ShiftBlendInterpolator::estimate_shift(const RgbFrame& previous,
                                                           const RgbFrame& next,
                                                           int radius) {
  if (!previous.same_shape(next)) {
    throw InvalidInput("estimate_shift: frames differ in shape");
  }
  const int w = previous.width();
  const int h = previous.height();
  const int c = previous.channels();
  double best = std::numeric_limits<double>::infinity();
  std::pair<int, int> best_shift{0, 0};
  // next(p) ~ previous(p - s). Ties resolve to the smallest |s|, then scan order.
  for (int sy = -radius; sy <= radius; ++sy) {
    for (int sx = -radius; sx <= radius; ++sx) {
      const int x0 = std::max(0, sx);
      const int x1 = std::min(w, w + sx);
      const int y0 = std::max(0, sy);
      const int y1 = std::min(h, h + sy);
      if (x1 - x0 < w / 2 || y1 - y0 < h / 2) continue;
      double sad = 0.0;
      for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
          for (int ch = 0; ch < c; ++ch) {
            sad += std::abs(int(next(y, x, ch)) - int(previous(y - sy, x - sx, ch)));
          }
        }
      }
      const double mean = sad / (double(x1 - x0) * (y1 - y0) * c);
      const bool better = mean < best - 1e-12 ||
                          (std::abs(mean - best) <= 1e-12 &&
                           std::abs(sx) + std::abs(sy) <
                               std::abs(best_shift.first) + std::abs(best_shift.second));
      if (better) {
        best = mean;
        best_shift = {sx, sy};
      }
    }
  }
  return best_shift;
}

namespace {

double sample(const RgbFrame& f, double x, double y, int ch) {
  const int w = f.width();
  const int h = f.height();
  x = std::clamp(x, 0.0, double(w - 1));
  y = std::clamp(y, 0.0, double(h - 1));
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, w - 1);
  const int y1 = std::min(y0 + 1, h - 1);
  const double ax = x - x0;
  const double ay = y - y0;
  return (1 - ay) * ((1 - ax) * f(y0, x0, ch) + ax * f(y0, x1, ch)) +
         ay * ((1 - ax) * f(y1, x0, ch) + ax * f(y1, x1, ch));
}

}  // namespace

RgbFrame ShiftBlendInterpolator::interpolate(const InterpolationRequest& request) {
  const RgbFrame& prev = request.previous;
  const RgbFrame& next = request.next;
  const auto [sx, sy] = estimate_shift(prev, next, radius_);
  RgbFrame out(prev.width(), prev.height(), prev.channels());
  const double hx = sx / 2.0;
  const double hy = sy / 2.0;
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      for (int ch = 0; ch < out.channels(); ++ch) {
        const double v = 0.5 * sample(prev, x - hx, y - hy, ch) +
                         0.5 * sample(next, x + hx, y + hy, ch);
        out(y, x, ch) = static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
      }
    }
  }
  return out;
}

std::string ThumbnailEmbedder::id() const {
  return "thumbnail-g" + std::to_string(grid_) + (centered_ ? "c" : "");
}

std::vector<Embedding> ThumbnailEmbedder::embed(std::string_view,
                                                const FrameSequence& frames) {
  if (grid_ < 1) throw InvalidInput("thumbnail embedder: grid must be >= 1");
  std::vector<Embedding> out;
  out.reserve(frames.frames.size());
  for (const RgbFrame& f : frames.frames) {
    const int c = f.channels();
    std::vector<double> v(static_cast<std::size_t>(grid_) * grid_ * c, 0.0);
    std::vector<int> counts(static_cast<std::size_t>(grid_) * grid_, 0);
    for (int y = 0; y < f.height(); ++y) {
      const int gy = y * grid_ / f.height();
      for (int x = 0; x < f.width(); ++x) {
        const int cell = gy * grid_ + x * grid_ / f.width();
        ++counts[cell];
        for (int ch = 0; ch < c; ++ch) v[cell * c + ch] += f(y, x, ch);
      }
    }
    for (std::size_t cell = 0; cell < counts.size(); ++cell) {
      for (int ch = 0; ch < c; ++ch) {
        v[cell * c + ch] /= std::max(1, counts[cell]) * 255.0;
      }
    }
    if (centered_) {
      double mean = 0;
      for (double x : v) mean += x;
      mean /= v.size();
      for (double& x : v) x -= mean;
    }
    double norm = 0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    Embedding e(v.size(), 0.0f);
    if (norm < 1e-9) {
      e[0] = 1.0f;
    } else {
      for (std::size_t i = 0; i < v.size(); ++i) e[i] = static_cast<float>(v[i] / norm);
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace dyneval::backends
