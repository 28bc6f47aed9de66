#include "patchnet/kitti_io.hpp"

#include <png.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include <fmt/core.h>

#include "patchnet/error.hpp"

namespace patchnet {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

template <typename Fn>
void for_each_line(std::string_view text, Fn fn) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::size_t end = nl == std::string_view::npos ? text.size() : nl;
    std::string_view line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    ++line_no;
    fn(line_no, line);
    if (nl == std::string_view::npos) break;
    pos = nl + 1;
  }
}

double parse_double(std::string_view tok, std::size_t line_no, const char* what) {
  double v = 0.0;
  const char* first = tok.data();
  if (!tok.empty() && tok.front() == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size() || !std::isfinite(v)) {
    throw Error(ErrorKind::Parse, fmt::format("line {}: {} '{}' is not a number",
                                              line_no, what, tok));
  }
  return v;
}

int parse_int(std::string_view tok, std::size_t line_no, const char* what) {
  // KITTI occlusion is written as an integer but tolerate "1.0".
  const double v = parse_double(tok, line_no, what);
  if (v != std::floor(v)) {
    throw Error(ErrorKind::Parse, fmt::format("line {}: {} '{}' is not an integer",
                                              line_no, what, tok));
  }
  return static_cast<int>(v);
}

}  // namespace

std::vector<LabelRecord> parse_label_file(std::string_view text) {
  std::vector<LabelRecord> out;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    const auto f = split_ws(line);
    if (f.empty()) return;
    if (f.size() != 15 && f.size() != 16) {
      throw Error(ErrorKind::Parse,
                  fmt::format("line {}: expected 15 or 16 fields, got {}",
                              line_no, f.size()));
    }
    LabelRecord r;
    r.type = std::string(f[0]);
    r.truncated = parse_double(f[1], line_no, "truncation");
    r.occluded = parse_int(f[2], line_no, "occlusion");
    r.alpha = parse_double(f[3], line_no, "alpha");
    r.bbox = {parse_double(f[4], line_no, "bbox left"),
              parse_double(f[5], line_no, "bbox top"),
              parse_double(f[6], line_no, "bbox right"),
              parse_double(f[7], line_no, "bbox bottom")};
    r.h = parse_double(f[8], line_no, "height");
    r.w = parse_double(f[9], line_no, "width");
    r.l = parse_double(f[10], line_no, "length");
    r.x = parse_double(f[11], line_no, "x");
    r.y = parse_double(f[12], line_no, "y");
    r.z = parse_double(f[13], line_no, "z");
    r.rotation_y = parse_double(f[14], line_no, "rotation_y");
    if (f.size() == 16) r.score = parse_double(f[15], line_no, "score");
    out.push_back(std::move(r));
  });
  return out;
}

std::string write_predictions(const std::vector<LabelRecord>& records) {
  std::string out;
  for (const LabelRecord& r : records) {
    out += fmt::format(
        "{} {:.2f} {} {:.2f} {:.2f} {:.2f} {:.2f} {:.2f} {:.2f} {:.2f} {:.2f} "
        "{:.2f} {:.2f} {:.2f} {:.2f} {:.4f}\n",
        r.type, r.truncated, r.occluded, r.alpha, r.bbox.left, r.bbox.top,
        r.bbox.right, r.bbox.bottom, r.h, r.w, r.l, r.x, r.y, r.z, r.rotation_y,
        r.score.value_or(1.0));
  }
  return out;
}

Box3D to_box(const LabelRecord& r) {
  return {r.x, r.y, r.z, r.h, r.w, r.l, r.rotation_y};
}

GtObject to_gt_object(const LabelRecord& r) {
  GtObject g;
  g.label = r.type;
  g.box3d = to_box(r);
  g.bbox2d = r.bbox;
  g.truncation = r.truncated;
  g.occlusion = r.occluded;
  g.dont_care = r.type == "DontCare";
  return g;
}

Detection to_detection(const LabelRecord& r) {
  return {r.type, to_box(r), r.score.value_or(1.0)};
}

CameraIntrinsics CalibFile::intrinsics(const std::string& key) const {
  const auto it = matrices.find(key);
  if (it == matrices.end()) {
    throw Error(ErrorKind::MalformedCalibration,
                fmt::format("calibration has no '{}' matrix", key));
  }
  return intrinsics_from_projection_matrix(it->second);
}

CalibFile parse_calib_file(std::string_view text) {
  CalibFile out;
  for_each_line(text, [&](std::size_t line_no, std::string_view line) {
    if (split_ws(line).empty()) return;
    const std::size_t colon = line.find(':');
    if (colon == std::string_view::npos) {
      throw Error(ErrorKind::Parse,
                  fmt::format("line {}: expected 'KEY: values'", line_no));
    }
    const auto key_parts = split_ws(line.substr(0, colon));
    if (key_parts.size() != 1) {
      throw Error(ErrorKind::Parse, fmt::format("line {}: bad key", line_no));
    }
    const std::string key(key_parts.front());
    const auto vals = split_ws(line.substr(colon + 1));
    if (vals.size() == 9 && (key == "R0_rect" || key == "R_rect")) return;
    if (vals.size() != 12) {
      throw Error(ErrorKind::Parse,
                  fmt::format("line {}: '{}' has {} values, expected 12",
                              line_no, key, vals.size()));
    }
    ProjectionMatrix m{};
    for (std::size_t i = 0; i < 12; ++i) {
      m[i / 4][i % 4] = parse_double(vals[i], line_no, "matrix entry");
    }
    if (out.matrices.count(key)) {
      out.warnings.push_back(fmt::format(
          "line {}: duplicate key '{}', keeping the last occurrence", line_no, key));
    }
    out.matrices[key] = m;
  });
  return out;
}

DepthMap decode_depth(const RawDepthImage& img) {
  DepthMap m;
  m.width = img.width;
  m.height = img.height;
  m.values.resize(img.raw.size());
  std::transform(img.raw.begin(), img.raw.end(), m.values.begin(),
                 [](std::uint16_t r) { return static_cast<double>(r) / kDepthScale; });
  return m;
}

RawDepthImage encode_depth(const DepthMap& map) {
  RawDepthImage img;
  img.width = map.width;
  img.height = map.height;
  img.raw.resize(map.values.size());
  std::transform(map.values.begin(), map.values.end(), img.raw.begin(),
                 [](double d) {
                   const double r = std::round(d * kDepthScale);
                   return static_cast<std::uint16_t>(std::clamp(r, 0.0, 65535.0));
                 });
  return img;
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const noexcept {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

// libpng reports errors by longjmp; the helpers below that call setjmp hold
// only trivially destructible locals.
struct PngErrorSink {
  char message[256] = {};
};

void png_error_to_sink(png_structp png, png_const_charp msg) {
  auto* sink = static_cast<PngErrorSink*>(png_get_error_ptr(png));
  std::snprintf(sink->message, sizeof(sink->message), "%s", msg);
  png_longjmp(png, 1);
}

void png_ignore_warning(png_structp, png_const_charp) {}

bool png_read_header(png_structp png, png_infop info, std::FILE* file) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_init_io(png, file);
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  return true;
}

bool png_read_pixels(png_structp png, png_infop info, png_bytepp rows) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_set_swap(png);  // samples are big-endian on disk
  if (png_get_interlace_type(png, info) != PNG_INTERLACE_NONE) {
    png_set_interlace_handling(png);
  }
  png_read_update_info(png, info);
  png_read_image(png, rows);
  png_read_end(png, nullptr);
  return true;
}

bool png_write_all(png_structp png, png_infop info, std::FILE* file,
                   png_uint_32 width, png_uint_32 height, png_bytepp rows) {
  if (setjmp(png_jmpbuf(png))) return false;
  png_init_io(png, file);
  png_set_IHDR(png, info, width, height, 16, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_set_swap(png);
  png_write_image(png, rows);
  png_write_end(png, nullptr);
  return true;
}

}  // namespace

RawDepthImage read_depth_png(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) {
    throw Error(ErrorKind::Io, fmt::format("cannot open '{}'", path.string()));
  }
  png_byte sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw Error(ErrorKind::Format, fmt::format("'{}' is not a PNG", path.string()));
  }
  PngErrorSink sink;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &sink,
                                           png_error_to_sink, png_ignore_warning);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_read_struct(p, i, nullptr); }
  } guard{&png, &info};
  if (!png || !info) throw Error(ErrorKind::Io, "png: out of memory");

  auto fail = [&] {
    return Error(ErrorKind::Format,
                 fmt::format("'{}': {}", path.string(), sink.message));
  };
  if (!png_read_header(png, info, file.get())) throw fail();

  const auto width = png_get_image_width(png, info);
  const auto height = png_get_image_height(png, info);
  const int depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);
  if (color != PNG_COLOR_TYPE_GRAY || depth != 16) {
    throw Error(ErrorKind::Format,
                fmt::format("'{}': depth maps must be 16-bit single-channel "
                            "(bit depth {}, color type {})",
                            path.string(), depth, color));
  }

  RawDepthImage img;
  img.width = width;
  img.height = height;
  img.raw.resize(static_cast<std::size_t>(width) * height);
  std::vector<png_bytep> rows(height);
  for (std::size_t r = 0; r < height; ++r) {
    rows[r] = reinterpret_cast<png_bytep>(img.raw.data() + r * width);
  }
  if (!png_read_pixels(png, info, rows.data())) throw fail();
  return img;
}

void write_depth_png(const std::filesystem::path& path, const RawDepthImage& img) {
  if (img.raw.size() != img.width * img.height || img.width == 0 || img.height == 0) {
    throw Error(ErrorKind::Shape, "depth image buffer disagrees with its size");
  }
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) {
    throw Error(ErrorKind::Io, fmt::format("cannot create '{}'", path.string()));
  }
  PngErrorSink sink;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &sink,
                                            png_error_to_sink, png_ignore_warning);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  struct Guard {
    png_structp* p;
    png_infop* i;
    ~Guard() { png_destroy_write_struct(p, i); }
  } guard{&png, &info};
  if (!png || !info) throw Error(ErrorKind::Io, "png: out of memory");

  // png_set_swap works in place on the row buffers, so hand libpng a copy.
  std::vector<std::uint16_t> pixels = img.raw;
  std::vector<png_bytep> rows(img.height);
  for (std::size_t r = 0; r < img.height; ++r) {
    rows[r] = reinterpret_cast<png_bytep>(pixels.data() + r * img.width);
  }
  if (!png_write_all(png, info, file.get(), static_cast<png_uint_32>(img.width),
                     static_cast<png_uint_32>(img.height), rows.data())) {
    throw Error(ErrorKind::Io,
                fmt::format("'{}': {}", path.string(), sink.message));
  }
}

DepthMap read_depth_map(const std::filesystem::path& path) {
  return decode_depth(read_depth_png(path));
}

DepthPatch crop_roi(const DepthMap& map, const BBox2D& bbox) {
  const double w = static_cast<double>(map.width);
  const double h = static_cast<double>(map.height);
  const double left = std::clamp(std::floor(bbox.left), 0.0, w);
  const double top = std::clamp(std::floor(bbox.top), 0.0, h);
  const double right = std::clamp(std::ceil(bbox.right), 0.0, w);
  const double bottom = std::clamp(std::ceil(bbox.bottom), 0.0, h);
  if (!(right > left) || !(bottom > top)) {
    throw Error(ErrorKind::EmptyRoi,
                fmt::format("roi ({}, {}, {}, {}) does not intersect the {}x{} "
                            "image",
                            bbox.left, bbox.top, bbox.right, bbox.bottom,
                            map.width, map.height));
  }
  const auto c0 = static_cast<std::size_t>(left);
  const auto r0 = static_cast<std::size_t>(top);
  const auto cw = static_cast<std::size_t>(right) - c0;
  const auto ch = static_cast<std::size_t>(bottom) - r0;
  std::vector<double> values;
  values.reserve(cw * ch);
  for (std::size_t r = r0; r < r0 + ch; ++r) {
    const auto begin = map.values.begin() + static_cast<std::ptrdiff_t>(r * map.width + c0);
    values.insert(values.end(), begin, begin + static_cast<std::ptrdiff_t>(cw));
  }
  return DepthPatch::from_values(cw, ch, static_cast<int>(c0),
                                 static_cast<int>(r0), std::move(values));
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::Io, fmt::format("cannot open '{}'", path.string()));
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorKind::Io, fmt::format("cannot create '{}'", path.string()));
  }
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

}  // namespace patchnet
