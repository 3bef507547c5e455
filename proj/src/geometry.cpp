#include "vista/geometry.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <numeric>

#include "vista/error.hpp"

namespace vista {
namespace {

std::vector<uint32_t> canonical_counts(const std::vector<uint32_t>& in) {
  std::vector<uint32_t> out;
  out.reserve(in.size());
  for (size_t i = 0; i < in.size(); ++i) {
    const uint32_t c = in[i];
    if (c == 0) continue;
    const bool fg = (i % 2) == 1;
    if (out.empty()) {
      if (fg) out.push_back(0);
      out.push_back(c);
      continue;
    }
    const bool last_fg = ((out.size() - 1) % 2) == 1;
    if (last_fg == fg) {
      out.back() += c;
    } else {
      out.push_back(c);
    }
  }
  if (out.empty()) out.push_back(0);
  return out;
}

// Walks the runs of a mask one maximal run at a time, skipping zero-length runs.
class RunCursor {
 public:
  explicit RunCursor(const std::vector<uint32_t>& counts) : counts_(counts) {
    if (!counts_.empty()) remaining_ = counts_[0];
    skip_empty();
  }

  bool done() const { return index_ >= counts_.size(); }
  bool foreground() const { return (index_ % 2) == 1; }
  uint64_t remaining() const { return remaining_; }

  void consume(uint64_t n) {
    remaining_ -= n;
    skip_empty();
  }

 private:
  void skip_empty() {
    while (index_ < counts_.size() && remaining_ == 0) {
      ++index_;
      if (index_ < counts_.size()) remaining_ = counts_[index_];
    }
  }

  const std::vector<uint32_t>& counts_;
  size_t index_ = 0;
  uint64_t remaining_ = 0;
};

void require_same_dims(const BinaryMask& a, const BinaryMask& b) {
  if (a.height() != b.height() || a.width() != b.width()) {
    throw DimensionError("mask dimensions differ: " + std::to_string(a.height()) + "x" +
                         std::to_string(a.width()) + " vs " + std::to_string(b.height()) + "x" +
                         std::to_string(b.width()));
  }
}

bool parse_uncompressed(std::string_view text, std::vector<uint32_t>& out) {
  out.clear();
  size_t i = 0;
  while (i < text.size()) {
    if (std::isspace(static_cast<unsigned char>(text[i]))) {
      ++i;
      continue;
    }
    if (!std::isdigit(static_cast<unsigned char>(text[i]))) return false;
    uint64_t v = 0;
    while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) {
      v = v * 10 + static_cast<uint64_t>(text[i] - '0');
      if (v > std::numeric_limits<uint32_t>::max()) return false;
      ++i;
    }
    out.push_back(static_cast<uint32_t>(v));
  }
  return true;
}

bool parse_compressed(std::string_view text, std::vector<uint32_t>& out) {
  out.clear();
  size_t p = 0;
  while (p < text.size()) {
    int64_t x = 0;
    int k = 0;
    bool more = true;
    while (more) {
      if (p >= text.size() || k > 12) return false;
      const int c = static_cast<int>(text[p]) - 48;
      if (c < 0 || c > 63) return false;
      x |= static_cast<int64_t>(c & 0x1f) << (5 * k);
      more = (c & 0x20) != 0;
      ++p;
      ++k;
      if (!more && (c & 0x10)) x |= static_cast<int64_t>(-1) * (int64_t{1} << (5 * k));
    }
    if (out.size() > 2) x += static_cast<int64_t>(out[out.size() - 2]);
    if (x < 0 || x > std::numeric_limits<uint32_t>::max()) return false;
    out.push_back(static_cast<uint32_t>(x));
  }
  return true;
}

uint64_t total(const std::vector<uint32_t>& counts) {
  return std::accumulate(counts.begin(), counts.end(), uint64_t{0});
}

}  // namespace

BinaryMask::BinaryMask(int height, int width, std::vector<uint32_t> counts)
    : height_(height), width_(width) {
  if (height < 0 || width < 0) throw DimensionError("negative mask dimensions");
  const uint64_t expected = static_cast<uint64_t>(height) * static_cast<uint64_t>(width);
  if (total(counts) != expected) {
    throw DimensionError("run lengths sum to " + std::to_string(total(counts)) + ", expected " +
                         std::to_string(expected));
  }
  counts_ = canonical_counts(counts);
  if (expected == 0) counts_.clear();
}

BinaryMask BinaryMask::empty(int height, int width) {
  return BinaryMask(height, width,
                    {static_cast<uint32_t>(static_cast<uint64_t>(height) * width)});
}

BinaryMask BinaryMask::from_raster(int height, int width, std::span<const uint8_t> row_major) {
  if (row_major.size() != static_cast<size_t>(height) * static_cast<size_t>(width)) {
    throw DimensionError("raster size does not match mask dimensions");
  }
  std::vector<uint32_t> counts;
  uint32_t run = 0;
  bool value = false;
  for (int x = 0; x < width; ++x) {
    for (int y = 0; y < height; ++y) {
      const bool px = row_major[static_cast<size_t>(y) * width + x] != 0;
      if (px != value) {
        counts.push_back(run);
        run = 0;
        value = px;
      }
      ++run;
    }
  }
  counts.push_back(run);
  return BinaryMask(height, width, std::move(counts));
}

std::vector<uint8_t> BinaryMask::to_raster() const {
  std::vector<uint8_t> raster(static_cast<size_t>(height_) * width_, 0);
  uint64_t pos = 0;
  for (size_t i = 0; i < counts_.size(); ++i) {
    if (i % 2 == 1) {
      for (uint64_t k = pos; k < pos + counts_[i]; ++k) {
        const uint64_t x = k / height_;
        const uint64_t y = k % height_;
        raster[y * width_ + x] = 1;
      }
    }
    pos += counts_[i];
  }
  return raster;
}

uint64_t BinaryMask::area() const {
  uint64_t a = 0;
  for (size_t i = 1; i < counts_.size(); i += 2) a += counts_[i];
  return a;
}

std::string encode_counts(const BinaryMask& mask) {
  std::string out;
  for (size_t i = 0; i < mask.counts().size(); ++i) {
    if (i) out.push_back(' ');
    out += std::to_string(mask.counts()[i]);
  }
  return out;
}

std::string encode_counts_compressed(const BinaryMask& mask) {
  const auto& cnts = mask.counts();
  std::string s;
  for (size_t i = 0; i < cnts.size(); ++i) {
    int64_t x = cnts[i];
    if (i > 2) x -= static_cast<int64_t>(cnts[i - 2]);
    bool more = true;
    while (more) {
      char c = static_cast<char>(x & 0x1f);
      x >>= 5;
      more = (c & 0x10) ? x != -1 : x != 0;
      if (more) c |= 0x20;
      s.push_back(static_cast<char>(c + 48));
    }
  }
  return s;
}

namespace {

BinaryMask checked_mask(int height, int width, std::vector<uint32_t> counts, bool parsed) {
  if (height < 0 || width < 0) throw ParseError("negative RLE size");
  const uint64_t expected = static_cast<uint64_t>(height) * static_cast<uint64_t>(width);
  if (!parsed || total(counts) != expected) {
    throw ParseError("RLE counts do not describe a " + std::to_string(height) + "x" +
                     std::to_string(width) + " mask");
  }
  return BinaryMask(height, width, std::move(counts));
}

}  // namespace

BinaryMask decode_counts(int height, int width, std::string_view text) {
  std::vector<uint32_t> counts;
  const bool ok = parse_uncompressed(text, counts);
  return checked_mask(height, width, std::move(counts), ok);
}

BinaryMask decode_counts_compressed(int height, int width, std::string_view text) {
  std::vector<uint32_t> counts;
  const bool ok = parse_compressed(text, counts);
  return checked_mask(height, width, std::move(counts), ok);
}

double box_iou(const Box& a, const Box& b) {
  const double iw = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
  const double ih = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

uint64_t intersection_area(const BinaryMask& a, const BinaryMask& b) {
  require_same_dims(a, b);
  RunCursor ca(a.counts());
  RunCursor cb(b.counts());
  uint64_t inter = 0;
  while (!ca.done() && !cb.done()) {
    const uint64_t c = std::min(ca.remaining(), cb.remaining());
    if (ca.foreground() && cb.foreground()) inter += c;
    ca.consume(c);
    cb.consume(c);
  }
  return inter;
}

double mask_iou(const BinaryMask& a, const BinaryMask& b) {
  const uint64_t inter = intersection_area(a, b);
  const uint64_t uni = a.area() + b.area() - inter;
  if (uni == 0) return 0.0;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

Box mask_to_box(const BinaryMask& mask) {
  const uint64_t h = static_cast<uint64_t>(mask.height());
  uint64_t xmin = std::numeric_limits<uint64_t>::max(), xmax = 0;
  uint64_t ymin = std::numeric_limits<uint64_t>::max(), ymax = 0;
  bool any = false;
  uint64_t pos = 0;
  const auto& cnts = mask.counts();
  for (size_t i = 0; i < cnts.size(); ++i) {
    if (i % 2 == 1 && cnts[i] > 0) {
      const uint64_t s = pos;
      const uint64_t e = pos + cnts[i] - 1;
      const uint64_t xs = s / h, xe = e / h;
      any = true;
      xmin = std::min(xmin, xs);
      xmax = std::max(xmax, xe);
      if (xs == xe) {
        ymin = std::min(ymin, s % h);
        ymax = std::max(ymax, e % h);
      } else {
        // The run wraps a column, so it touches both the last and first row.
        ymin = 0;
        ymax = h - 1;
      }
    }
    pos += cnts[i];
  }
  if (!any) throw MetricError("cannot derive a box from an empty mask");
  return Box{static_cast<double>(xmin), static_cast<double>(ymin),
             static_cast<double>(xmax - xmin + 1), static_cast<double>(ymax - ymin + 1)};
}

PixelSpan pixel_span(double start, double length, int limit) {
  if (!(length > 0.0) || limit <= 0) return {};
  const double lo = std::clamp(std::ceil(start - 0.5), 0.0, static_cast<double>(limit));
  const double hi = std::clamp(std::ceil(start + length - 0.5), 0.0, static_cast<double>(limit));
  return PixelSpan{static_cast<int>(lo), static_cast<int>(hi)};
}

BinaryMask box_fill_mask(const Box& box, int height, int width) {
  const PixelSpan xs = pixel_span(box.x, box.w, width);
  const PixelSpan ys = pixel_span(box.y, box.h, height);
  if (xs.size() == 0 || ys.size() == 0) return BinaryMask::empty(height, width);
  std::vector<uint32_t> counts;
  const uint32_t h = static_cast<uint32_t>(height);
  const uint32_t fg = static_cast<uint32_t>(ys.size());
  counts.push_back(static_cast<uint32_t>(xs.begin) * h + static_cast<uint32_t>(ys.begin));
  for (int x = xs.begin; x < xs.end; ++x) {
    counts.push_back(fg);
    if (x + 1 < xs.end) counts.push_back(h - fg);
  }
  const uint64_t used = std::accumulate(counts.begin(), counts.end(), uint64_t{0});
  counts.push_back(static_cast<uint32_t>(static_cast<uint64_t>(height) * width - used));
  return BinaryMask(height, width, std::move(counts));
}

Point barycenter(const BinaryMask& mask) {
  const uint64_t h = static_cast<uint64_t>(mask.height());
  double sx = 0.0, sy = 0.0;
  uint64_t n_total = 0;
  uint64_t pos = 0;
  const auto& cnts = mask.counts();
  for (size_t i = 0; i < cnts.size(); ++i) {
    if (i % 2 == 1) {
      uint64_t s = pos;
      const uint64_t e = pos + cnts[i];
      while (s < e) {
        const uint64_t col = s / h;
        const uint64_t row = s % h;
        const uint64_t seg_end = std::min(e, (col + 1) * h);
        const uint64_t n = seg_end - s;
        sx += static_cast<double>(col) * static_cast<double>(n);
        sy += static_cast<double>(n) * static_cast<double>(row) +
              static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
        n_total += n;
        s = seg_end;
      }
    }
    pos += cnts[i];
  }
  if (n_total == 0) throw MetricError("barycenter of an empty mask");
  return Point{sx / static_cast<double>(n_total), sy / static_cast<double>(n_total)};
}

Point box_barycenter(const Box& box) {
  return Point{box.x + box.w / 2.0 - 0.5, box.y + box.h / 2.0 - 0.5};
}

CenterDistanceBin center_distance_bin(Point p, double frame_width, double frame_height) {
  const double d = std::hypot(p.x - frame_width / 2.0, p.y - frame_height / 2.0);
  if (d <= 0.25 * frame_width) return CenterDistanceBin::within_25;
  if (d <= 0.50 * frame_width) return CenterDistanceBin::within_50;
  if (d <= 0.75 * frame_width) return CenterDistanceBin::within_75;
  return CenterDistanceBin::beyond_75;
}

const char* center_distance_bin_name(CenterDistanceBin bin) {
  switch (bin) {
    case CenterDistanceBin::within_25: return "0-25%";
    case CenterDistanceBin::within_50: return "25-50%";
    case CenterDistanceBin::within_75: return "50-75%";
    case CenterDistanceBin::beyond_75: return "75-100%";
  }
  return "?";
}

BinaryMask boundary_pixels(const BinaryMask& mask) {
  const int h = mask.height(), w = mask.width();
  const std::vector<uint8_t> in = mask.to_raster();
  std::vector<uint8_t> out(in.size(), 0);
  auto at = [&](int x, int y) -> uint8_t {
    if (x < 0 || y < 0 || x >= w || y >= h) return 0;
    return in[static_cast<size_t>(y) * w + x];
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!at(x, y)) continue;
      if (!at(x - 1, y) || !at(x + 1, y) || !at(x, y - 1) || !at(x, y + 1)) {
        out[static_cast<size_t>(y) * w + x] = 1;
      }
    }
  }
  return BinaryMask::from_raster(h, w, out);
}

BinaryMask dilate(const BinaryMask& mask, int radius) {
  if (radius <= 0) return mask;
  const int h = mask.height(), w = mask.width();
  const std::vector<uint8_t> in = mask.to_raster();
  std::vector<uint8_t> rows(in.size(), 0);
  std::vector<int> prefix(static_cast<size_t>(std::max(h, w)) + 1, 0);
  for (int y = 0; y < h; ++y) {
    const uint8_t* src = in.data() + static_cast<size_t>(y) * w;
    for (int x = 0; x < w; ++x) prefix[x + 1] = prefix[x] + src[x];
    for (int x = 0; x < w; ++x) {
      const int lo = std::max(0, x - radius), hi = std::min(w, x + radius + 1);
      rows[static_cast<size_t>(y) * w + x] = prefix[hi] - prefix[lo] > 0;
    }
  }
  std::vector<uint8_t> out(in.size(), 0);
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) prefix[y + 1] = prefix[y] + rows[static_cast<size_t>(y) * w + x];
    for (int y = 0; y < h; ++y) {
      const int lo = std::max(0, y - radius), hi = std::min(h, y + radius + 1);
      out[static_cast<size_t>(y) * w + x] = prefix[hi] - prefix[lo] > 0;
    }
  }
  return BinaryMask::from_raster(h, w, out);
}

namespace {

// Dense column-major copy of the window [x0, x0 + cols) x [y0, y0 + rows),
// indexed cx * rows + cy.
std::vector<uint8_t> window_columns(const BinaryMask& m, int x0, int y0, int cols, int rows) {
  std::vector<uint8_t> out(static_cast<size_t>(cols) * rows, 0);
  const uint64_t h = static_cast<uint64_t>(m.height());
  const auto& cnts = m.counts();
  uint64_t pos = 0;
  for (size_t i = 0; i < cnts.size(); pos += cnts[i], ++i) {
    if (i % 2 == 0) continue;
    const uint64_t end = pos + cnts[i];
    for (uint64_t k = pos; k < end;) {
      const uint64_t x = k / h;
      const uint64_t stop = std::min(end, (x + 1) * h);
      const int cx = static_cast<int>(x) - x0;
      if (cx >= 0 && cx < cols) {
        const int ya = std::max(static_cast<int>(k % h), y0);
        const int yb = std::min(static_cast<int>(k % h + (stop - k)), y0 + rows);
        uint8_t* col = out.data() + static_cast<size_t>(cx) * rows - y0;
        for (int y = ya; y < yb; ++y) col[y] = 1;
      }
      k = stop;
    }
  }
  return out;
}

std::vector<uint8_t> window_boundary(const std::vector<uint8_t>& in, int cols, int rows) {
  std::vector<uint8_t> out(in.size(), 0);
  auto at = [&](int cx, int cy) -> uint8_t {
    if (cx < 0 || cy < 0 || cx >= cols || cy >= rows) return 0;
    return in[static_cast<size_t>(cx) * rows + cy];
  };
  for (int cx = 0; cx < cols; ++cx) {
    for (int cy = 0; cy < rows; ++cy) {
      if (at(cx, cy) && (!at(cx - 1, cy) || !at(cx + 1, cy) || !at(cx, cy - 1) || !at(cx, cy + 1))) {
        out[static_cast<size_t>(cx) * rows + cy] = 1;
      }
    }
  }
  return out;
}

std::vector<uint8_t> window_dilate(const std::vector<uint8_t>& in, int cols, int rows, int radius) {
  if (radius <= 0) return in;
  std::vector<uint8_t> along(in.size(), 0), out(in.size(), 0);
  std::vector<int> prefix(static_cast<size_t>(std::max(cols, rows)) + 1, 0);
  for (int cx = 0; cx < cols; ++cx) {
    const uint8_t* src = in.data() + static_cast<size_t>(cx) * rows;
    for (int cy = 0; cy < rows; ++cy) prefix[cy + 1] = prefix[cy] + src[cy];
    for (int cy = 0; cy < rows; ++cy) {
      const int lo = std::max(0, cy - radius), hi = std::min(rows, cy + radius + 1);
      along[static_cast<size_t>(cx) * rows + cy] = prefix[hi] > prefix[lo];
    }
  }
  for (int cy = 0; cy < rows; ++cy) {
    for (int cx = 0; cx < cols; ++cx) prefix[cx + 1] = prefix[cx] + along[static_cast<size_t>(cx) * rows + cy];
    for (int cx = 0; cx < cols; ++cx) {
      const int lo = std::max(0, cx - radius), hi = std::min(cols, cx + radius + 1);
      out[static_cast<size_t>(cx) * rows + cy] = prefix[hi] > prefix[lo];
    }
  }
  return out;
}

}  // namespace

BoundaryMatch match_boundaries(const BinaryMask& pred, const BinaryMask& gt, int tolerance) {
  require_same_dims(pred, gt);
  BoundaryMatch out;
  int x0 = pred.width(), y0 = pred.height(), x1 = 0, y1 = 0;
  for (const BinaryMask* m : {&pred, &gt}) {
    if (m->is_empty()) continue;
    const Box b = mask_to_box(*m);
    x0 = std::min(x0, static_cast<int>(b.x));
    y0 = std::min(y0, static_cast<int>(b.y));
    x1 = std::max(x1, static_cast<int>(b.x + b.w));
    y1 = std::max(y1, static_cast<int>(b.y + b.h));
  }
  if (x1 <= x0 || y1 <= y0) return out;
  // One pixel of margin keeps background neighbours of the masks inside.
  x0 = std::max(0, x0 - 1);
  y0 = std::max(0, y0 - 1);
  x1 = std::min(pred.width(), x1 + 1);
  y1 = std::min(pred.height(), y1 + 1);
  const int cols = x1 - x0, rows = y1 - y0;

  const std::vector<uint8_t> pb = window_boundary(window_columns(pred, x0, y0, cols, rows), cols, rows);
  const std::vector<uint8_t> gb = window_boundary(window_columns(gt, x0, y0, cols, rows), cols, rows);
  const std::vector<uint8_t> pd = window_dilate(pb, cols, rows, tolerance);
  const std::vector<uint8_t> gd = window_dilate(gb, cols, rows, tolerance);
  for (size_t i = 0; i < pb.size(); ++i) {
    out.pred += pb[i];
    out.gt += gb[i];
    out.pred_matched += pb[i] & gd[i];
    out.gt_matched += gb[i] & pd[i];
  }
  return out;
}

}  // namespace vista
