#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace vista {

/// Axis-aligned box in continuous pixel coordinates, top-left origin.
struct Box {
  double x = 0.0;
  double y = 0.0;
  double w = 0.0;
  double h = 0.0;

  double area() const { return (w > 0.0 && h > 0.0) ? w * h : 0.0; }
  double center_x() const { return x + w / 2.0; }
  double center_y() const { return y + h / 2.0; }
  bool degenerate() const { return !(w > 0.0 && h > 0.0); }

  bool operator==(const Box&) const = default;
};

struct Point {
  double x = 0.0;
  double y = 0.0;
};

/// Binary raster stored as a COCO-style run-length encoding.
///
/// Runs are column-major (pixel (x, y) has linear index x * height + y) and
/// alternate background/foreground starting with background. The stored
/// counts are canonical: only the first run may be zero-length and there is
/// no trailing zero run, so two masks with the same pixels compare equal.
class BinaryMask {
 public:
  BinaryMask() = default;

  /// Throws DimensionError unless the counts sum to height * width.
  BinaryMask(int height, int width, std::vector<uint32_t> counts);

  static BinaryMask empty(int height, int width);

  /// `row_major[y * width + x]` nonzero means foreground.
  static BinaryMask from_raster(int height, int width, std::span<const uint8_t> row_major);

  /// Row-major raster of 0/1 bytes.
  std::vector<uint8_t> to_raster() const;

  int height() const { return height_; }
  int width() const { return width_; }
  const std::vector<uint32_t>& counts() const { return counts_; }

  /// Number of foreground pixels.
  uint64_t area() const;
  bool is_empty() const { return area() == 0; }

  bool operator==(const BinaryMask&) const = default;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<uint32_t> counts_;
};

/// Space-separated uncompressed counts, e.g. "3 4 2".
std::string encode_counts(const BinaryMask& mask);

/// Compressed COCO counts string (the pycocotools "counts" bytes).
std::string encode_counts_compressed(const BinaryMask& mask);

/// Parses uncompressed counts. Throws ParseError on malformed text or a wrong
/// pixel total.
BinaryMask decode_counts(int height, int width, std::string_view counts);

/// Same for the compressed COCO form. The two forms cannot be told apart from
/// the text alone, so callers pick one.
BinaryMask decode_counts_compressed(int height, int width, std::string_view counts);

double box_iou(const Box& a, const Box& b);

/// Throws DimensionError when the rasters differ in size.
double mask_iou(const BinaryMask& a, const BinaryMask& b);

/// Tightest box around the foreground. Throws MetricError on an empty mask.
Box mask_to_box(const BinaryMask& mask);

/// Pixels whose centers fall inside the box (clamped to the frame) are set.
BinaryMask box_fill_mask(const Box& box, int height, int width);

/// Half-open integer pixel span [begin, end) covered by a continuous
/// interval under the pixel-center rule, clamped to [0, limit].
struct PixelSpan {
  int begin = 0;
  int end = 0;
  int size() const { return end > begin ? end - begin : 0; }
};
PixelSpan pixel_span(double start, double length, int limit);

/// Mean foreground pixel coordinate. Throws MetricError on an empty mask.
Point barycenter(const BinaryMask& mask);

/// Box center expressed in the same pixel-index convention as barycenter().
Point box_barycenter(const Box& box);

enum class CenterDistanceBin : int { within_25 = 0, within_50 = 1, within_75 = 2, beyond_75 = 3 };
inline constexpr int kCenterDistanceBins = 4;

/// Distance from the frame center, binned at 25/50/75 % of the frame width.
/// Ties fall into the lower bin.
CenterDistanceBin center_distance_bin(Point p, double frame_width, double frame_height);

const char* center_distance_bin_name(CenterDistanceBin bin);

/// Foreground pixels with at least one background or out-of-frame
/// 4-neighbour.
BinaryMask boundary_pixels(const BinaryMask& mask);

/// Dilation with a (2 * radius + 1) square structuring element.
BinaryMask dilate(const BinaryMask& mask, int radius);

/// Pixels set in both masks. Throws DimensionError on size mismatch.
uint64_t intersection_area(const BinaryMask& a, const BinaryMask& b);

struct BoundaryMatch {
  uint64_t pred = 0;
  uint64_t gt = 0;
  /// Boundary pixels within the tolerance square of the other boundary.
  uint64_t pred_matched = 0;
  uint64_t gt_matched = 0;
};

/// Same counts as boundary_pixels / dilate / intersection_area, computed on
/// the region around the two masks only.
BoundaryMatch match_boundaries(const BinaryMask& pred, const BinaryMask& gt, int tolerance);

}  // namespace vista
