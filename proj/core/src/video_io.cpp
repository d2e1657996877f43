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

#include "dyneval/video_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>
#include <opencv2/videoio.hpp>

#include "dyneval/error.hpp"

namespace dyneval {

namespace {

enum class Chroma { c444, c420 };

struct Y4mHeader {
  int width = 0;
  int height = 0;
  Chroma chroma = Chroma::c420;
  bool full_range = false;
};

std::uint8_t clamp_u8(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

Y4mHeader parse_header(const std::string& line, const std::string& where) {
  std::istringstream is(line);
  std::string token;
  is >> token;
  if (token != "YUV4MPEG2") throw IoError(where + ": not a YUV4MPEG2 stream");
  Y4mHeader h;
  while (is >> token) {
    switch (token[0]) {
      case 'W': h.width = std::stoi(token.substr(1)); break;
      case 'H': h.height = std::stoi(token.substr(1)); break;
      case 'C': {
        const std::string c = token.substr(1);
        if (c.rfind("444", 0) == 0) {
          h.chroma = Chroma::c444;
        } else if (c.rfind("420", 0) == 0) {
          h.chroma = Chroma::c420;
        } else {
          throw IoError(where + ": unsupported chroma '" + c + "'");
        }
        break;
      }
      case 'X':
        if (token == "XCOLORRANGE=FULL") h.full_range = true;
        break;
      default: break;
    }
  }
  if (h.width <= 0 || h.height <= 0) throw IoError(where + ": missing W/H");
  return h;
}

RgbFrame yuv_to_rgb(const std::uint8_t* data, const Y4mHeader& h) {
  const int w = h.width;
  const int hh = h.height;
  const int cw = h.chroma == Chroma::c444 ? w : (w + 1) / 2;
  const int ch = h.chroma == Chroma::c444 ? hh : (hh + 1) / 2;
  const std::uint8_t* yp = data;
  const std::uint8_t* up = yp + static_cast<std::size_t>(w) * hh;
  const std::uint8_t* vp = up + static_cast<std::size_t>(cw) * ch;
  RgbFrame out = make_frame(w, hh);
  for (int y = 0; y < hh; ++y) {
    for (int x = 0; x < w; ++x) {
      const int cx = h.chroma == Chroma::c444 ? x : x / 2;
      const int cy = h.chroma == Chroma::c444 ? y : y / 2;
      double Y = yp[static_cast<std::size_t>(y) * w + x];
      double Cb = up[static_cast<std::size_t>(cy) * cw + cx] - 128.0;
      double Cr = vp[static_cast<std::size_t>(cy) * cw + cx] - 128.0;
      if (!h.full_range) {
        Y = (Y - 16.0) * 255.0 / 219.0;
        Cb *= 255.0 / 224.0;
        Cr *= 255.0 / 224.0;
      }
      out(y, x, 0) = clamp_u8(Y + 1.402 * Cr);
      out(y, x, 1) = clamp_u8(Y - 0.344136 * Cb - 0.714136 * Cr);
      out(y, x, 2) = clamp_u8(Y + 1.772 * Cb);
    }
  }
  return out;
}

FrameSequence decode_with_opencv(const std::filesystem::path& path) {
  cv::VideoCapture cap(path.string());
  if (!cap.isOpened()) throw IoError("cannot open video " + path.string());
  FrameSequence seq;
  cv::Mat bgr;
  cv::Mat rgb;
  while (cap.read(bgr)) {
    if (bgr.empty()) break;
    cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);
    RgbFrame frame = make_frame(rgb.cols, rgb.rows);
    for (int y = 0; y < rgb.rows; ++y) {
      const auto* row = rgb.ptr<std::uint8_t>(y);
      std::copy(row, row + rgb.cols * 3, frame.data() + static_cast<std::size_t>(y) * rgb.cols * 3);
    }
    seq.frames.push_back(std::move(frame));
  }
  if (seq.frames.empty()) throw IoError("no decodable frames in " + path.string());
  return seq;
}

}  // namespace

FrameSequence read_y4m(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  const std::string where = path.string();
  std::string line;
  if (!std::getline(in, line)) throw IoError(where + ": empty file");
  const Y4mHeader h = parse_header(line, where);

  const std::size_t luma = static_cast<std::size_t>(h.width) * h.height;
  const std::size_t chroma =
      h.chroma == Chroma::c444
          ? luma
          : static_cast<std::size_t>((h.width + 1) / 2) * ((h.height + 1) / 2);
  const std::size_t frame_bytes = luma + 2 * chroma;

  FrameSequence seq;
  std::vector<std::uint8_t> buffer(frame_bytes);
  while (std::getline(in, line)) {
    if (line.rfind("FRAME", 0) != 0) throw IoError(where + ": corrupt frame marker");
    in.read(reinterpret_cast<char*>(buffer.data()),
            static_cast<std::streamsize>(frame_bytes));
    if (static_cast<std::size_t>(in.gcount()) != frame_bytes) {
      throw IoError(where + ": truncated frame " + std::to_string(seq.size()));
    }
    seq.frames.push_back(yuv_to_rgb(buffer.data(), h));
  }
  if (!in.eof()) throw IoError(where + ": read error");
  if (seq.frames.empty()) throw IoError(where + ": stream holds no frames");
  return seq;
}

void write_y4m(const std::filesystem::path& path, const FrameSequence& frames,
               double fps) {
  if (frames.frames.empty()) throw InvalidInput("write_y4m: no frames");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  const int w = frames.width();
  const int h = frames.height();
  const long num = std::lround(fps * 1000.0);
  out << "YUV4MPEG2 W" << w << " H" << h << " F" << num << ":1000 Ip A1:1 C444"
      << " XCOLORRANGE=FULL\n";
  const std::size_t plane = static_cast<std::size_t>(w) * h;
  std::vector<std::uint8_t> buf(plane * 3);
  for (const auto& f : frames.frames) {
    if (f.width() != w || f.height() != h || f.channels() != 3) {
      throw InvalidInput("write_y4m: frames differ in extent");
    }
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double r = f(y, x, 0);
        const double g = f(y, x, 1);
        const double b = f(y, x, 2);
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        buf[i] = clamp_u8(0.299 * r + 0.587 * g + 0.114 * b);
        buf[plane + i] = clamp_u8(128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b);
        buf[2 * plane + i] = clamp_u8(128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b);
      }
    }
    out << "FRAME\n";
    out.write(reinterpret_cast<const char*>(buf.data()),
              static_cast<std::streamsize>(buf.size()));
  }
  if (!out) throw IoError("short write on " + path.string());
}

FrameSequence decode_video(const VideoRecord& record,
                           const std::filesystem::path& resolved_uri) {
  if (!std::filesystem::exists(resolved_uri)) {
    throw IoError("video '" + record.video_id + "': file not found " +
                  resolved_uri.string());
  }
  FrameSequence seq = resolved_uri.extension() == ".y4m"
                          ? read_y4m(resolved_uri)
                          : decode_with_opencv(resolved_uri);
  if (seq.size() != record.frame_count) {
    throw InvalidInput("video '" + record.video_id + "': decoded " +
                       std::to_string(seq.size()) + " frames, manifest says " +
                       std::to_string(record.frame_count) + " (stale manifest?)");
  }
  if (seq.width() != record.width || seq.height() != record.height) {
    throw InvalidInput("video '" + record.video_id + "': decoded extent " +
                       std::to_string(seq.width()) + "x" + std::to_string(seq.height()) +
                       " disagrees with manifest");
  }
  return seq;
}

void write_heatmap_png(const std::filesystem::path& path, const Plane& values,
                       float max_value) {
  cv::Mat gray(values.height(), values.width(), CV_8UC1);
  const float scale = max_value > 0.0f ? 255.0f / max_value : 0.0f;
  for (int y = 0; y < values.height(); ++y) {
    auto* row = gray.ptr<std::uint8_t>(y);
    for (int x = 0; x < values.width(); ++x) {
      row[x] = clamp_u8(values(y, x) * scale);
    }
  }
  cv::Mat colour;
  cv::applyColorMap(gray, colour, cv::COLORMAP_INFERNO);
  if (!cv::imwrite(path.string(), colour)) {
    throw IoError("cannot write heatmap " + path.string());
  }
}

}  // namespace dyneval
