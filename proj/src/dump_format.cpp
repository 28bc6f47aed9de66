#include "patchnet/dump_format.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

#include <fmt/core.h>

#include "patchnet/error.hpp"

namespace patchnet {

namespace {

// Whitespace tokenizer with a line counter for error messages.
class Tokens {
 public:
  explicit Tokens(std::string_view text) : text_(text) {}

  std::string_view next(const char* what) {
    skip_space();
    if (pos_ >= text_.size()) {
      throw Error(ErrorKind::Parse,
                  fmt::format("line {}: unexpected end of input reading {}",
                              line_, what));
    }
    const std::size_t start = pos_;
    while (pos_ < text_.size() && !is_space(text_[pos_])) ++pos_;
    return text_.substr(start, pos_ - start);
  }

  void expect(std::string_view word) {
    const auto tok = next(std::string(word).c_str());
    if (tok != word) {
      throw Error(ErrorKind::Parse,
                  fmt::format("line {}: expected '{}', got '{}'", line_, word, tok));
    }
  }

  double number(const char* what) {
    const auto tok = next(what);
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
      throw Error(ErrorKind::Parse,
                  fmt::format("line {}: {} '{}' is not a number", line_, what, tok));
    }
    return v;
  }

  std::uint64_t count(const char* what) {
    const auto tok = next(what);
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (ec != std::errc() || ptr != tok.data() + tok.size()) {
      throw Error(ErrorKind::Parse,
                  fmt::format("line {}: {} '{}' is not a count", line_, what, tok));
    }
    return v;
  }

  void finish() {
    skip_space();
    if (pos_ < text_.size()) {
      throw Error(ErrorKind::Parse,
                  fmt::format("line {}: trailing data after dump", line_));
    }
  }

 private:
  static bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r';
  }
  void skip_space() {
    while (pos_ < text_.size() && is_space(text_[pos_])) {
      if (text_[pos_] == '\n') ++line_;
      ++pos_;
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1;
};

void append_row(std::string& out, const double* values, std::size_t count) {
  for (std::size_t i = 0; i < count; ++i) {
    if (i) out += ' ';
    out += fmt::format("{}", values[i]);
  }
  out += '\n';
}

void check_version(Tokens& t) {
  const auto v = t.count("format version");
  if (v != 1) {
    throw Error(ErrorKind::Format, fmt::format("unsupported dump version {}", v));
  }
}

}  // namespace

std::string write_patch_dump(const PatchTensor& t) {
  const std::size_t ch = t.channels();
  std::string out = fmt::format("PATCH 1 {} {} {}\n", t.n, ch, to_string(t.config));
  for (std::size_t p = 0; p < t.pixels(); ++p) {
    append_row(out, t.values.data() + p * ch, ch);
  }
  return out;
}

PatchTensor read_patch_dump(std::string_view text) {
  Tokens tok(text);
  tok.expect("PATCH");
  check_version(tok);
  PatchTensor t;
  t.n = tok.count("side");
  const auto ch = tok.count("channels");
  t.config = parse_channel_config(tok.next("config"));
  if (ch != t.channels()) {
    throw Error(ErrorKind::Format,
                fmt::format("config '{}' has {} channels, header says {}",
                            to_string(t.config), t.channels(), ch));
  }
  t.values.resize(t.n * t.n * ch);
  for (double& v : t.values) v = tok.number("patch value");
  tok.finish();
  return t;
}

std::string write_pointset_dump(const PointSet& s, ChannelConfig cfg) {
  if (s.dim != channel_count(cfg)) {
    throw Error(ErrorKind::Shape, "point dimension does not match config");
  }
  std::string out =
      fmt::format("POINTS 1 {} {} {}\n", s.size(), s.dim, to_string(cfg));
  for (std::size_t i = 0; i < s.size(); ++i) {
    append_row(out, s.values.data() + i * s.dim, s.dim);
  }
  return out;
}

PointSet read_pointset_dump(std::string_view text, ChannelConfig* cfg) {
  Tokens tok(text);
  tok.expect("POINTS");
  check_version(tok);
  const auto count = tok.count("point count");
  PointSet s;
  s.dim = tok.count("dimension");
  const ChannelConfig c = parse_channel_config(tok.next("config"));
  if (s.dim != channel_count(c)) {
    throw Error(ErrorKind::Format, "point dimension does not match config");
  }
  if (cfg) *cfg = c;
  s.values.resize(count * s.dim);
  for (double& v : s.values) v = tok.number("point value");
  tok.finish();
  return s;
}

std::string write_mask_dump(const BinaryMask& m) {
  std::string out = fmt::format("MASK 1 {} {}\n", m.width, m.height);
  for (std::size_t r = 0; r < m.height; ++r) {
    for (std::size_t c = 0; c < m.width; ++c) {
      if (c) out += ' ';
      out += m.values[r * m.width + c] ? '1' : '0';
    }
    out += '\n';
  }
  return out;
}

BinaryMask read_mask_dump(std::string_view text) {
  Tokens tok(text);
  tok.expect("MASK");
  check_version(tok);
  BinaryMask m;
  m.width = tok.count("width");
  m.height = tok.count("height");
  m.values.resize(m.width * m.height);
  for (auto& v : m.values) {
    const auto bit = tok.count("mask bit");
    if (bit > 1) throw Error(ErrorKind::Parse, "mask values must be 0 or 1");
    v = static_cast<std::uint8_t>(bit);
  }
  tok.finish();
  return m;
}

std::string write_mlp_fixture(const MlpParams& p, std::uint64_t seed) {
  p.validate();
  std::string out = fmt::format("MLP 1 {} {}\n", seed, p.layers.size());
  for (const DenseLayer& l : p.layers) {
    out += fmt::format("LAYER {} {} {}\n", l.weight.rows(), l.weight.cols(),
                       l.activation == Activation::Relu ? "relu" : "identity");
    std::vector<double> row(static_cast<std::size_t>(l.weight.cols()));
    for (Eigen::Index r = 0; r < l.weight.rows(); ++r) {
      for (Eigen::Index c = 0; c < l.weight.cols(); ++c) {
        row[static_cast<std::size_t>(c)] = l.weight(r, c);
      }
      append_row(out, row.data(), row.size());
    }
    append_row(out, l.bias.data(), static_cast<std::size_t>(l.bias.size()));
  }
  return out;
}

MlpParams read_mlp_fixture(std::string_view text, std::uint64_t* seed) {
  Tokens tok(text);
  tok.expect("MLP");
  check_version(tok);
  const auto s = tok.count("seed");
  if (seed) *seed = s;
  const auto layers = tok.count("layer count");
  MlpParams p;
  for (std::uint64_t i = 0; i < layers; ++i) {
    tok.expect("LAYER");
    const auto out = static_cast<Eigen::Index>(tok.count("out"));
    const auto in = static_cast<Eigen::Index>(tok.count("in"));
    const auto act = tok.next("activation");
    DenseLayer l;
    if (act == "relu") {
      l.activation = Activation::Relu;
    } else if (act == "identity") {
      l.activation = Activation::Identity;
    } else {
      throw Error(ErrorKind::Parse, fmt::format("unknown activation '{}'", act));
    }
    l.weight.resize(out, in);
    l.bias.resize(out);
    for (Eigen::Index r = 0; r < out; ++r) {
      for (Eigen::Index c = 0; c < in; ++c) l.weight(r, c) = tok.number("weight");
    }
    for (Eigen::Index r = 0; r < out; ++r) l.bias(r) = tok.number("bias");
    p.layers.push_back(std::move(l));
  }
  tok.finish();
  p.validate();
  return p;
}

}  // namespace patchnet
