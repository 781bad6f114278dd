#include "linpred/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

namespace linpred {

namespace fs = std::filesystem;

const char* to_string(IoErrorCode code) {
  switch (code) {
    case IoErrorCode::open_failed: return "open_failed";
    case IoErrorCode::write_failed: return "write_failed";
    case IoErrorCode::bad_magic: return "bad_magic";
    case IoErrorCode::unsupported_version: return "unsupported_version";
    case IoErrorCode::bad_dtype: return "bad_dtype";
    case IoErrorCode::truncated_payload: return "truncated_payload";
    case IoErrorCode::dim_overflow: return "dim_overflow";
    case IoErrorCode::trailing_bytes: return "trailing_bytes";
    case IoErrorCode::shape_mismatch: return "shape_mismatch";
    case IoErrorCode::bad_pgm: return "bad_pgm";
  }
  return "unknown";
}

namespace {

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  static_assert(std::is_unsigned_v<T>);
  for (std::size_t b = 0; b < sizeof(T); ++b) out.push_back(static_cast<std::uint8_t>(value >> (8 * b)));
}

template <typename T>
T get_le(const std::uint8_t* p) {
  T value = 0;
  for (std::size_t b = 0; b < sizeof(T); ++b) value |= static_cast<T>(p[b]) << (8 * b);
  return value;
}

std::size_t scalar_size(DType dtype) { return dtype == DType::complex64 ? 4 : 8; }

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(IoErrorCode::open_failed, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_atomic(const fs::path& path, const void* bytes, std::size_t size) {
  fs::path tmp = path;
  tmp += ".partial";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(IoErrorCode::open_failed, "cannot create " + tmp.string());
    out.write(static_cast<const char*>(bytes), static_cast<std::streamsize>(size));
    out.flush();
    if (!out) {
      out.close();
      std::error_code ec;
      fs::remove(tmp, ec);
      throw IoError(IoErrorCode::write_failed, "write failed for " + path.string());
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError(IoErrorCode::write_failed, "cannot rename onto " + path.string());
  }
}

std::uint64_t checked_product(const std::vector<std::uint64_t>& dims) {
  std::uint64_t n = 1;
  for (auto d : dims) {
    if (d != 0 && n > std::numeric_limits<std::uint64_t>::max() / d) {
      throw IoError(IoErrorCode::dim_overflow, "tensor dimensions overflow");
    }
    n *= d;
  }
  return n;
}

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.dims.size() != rank) {
    throw IoError(IoErrorCode::shape_mismatch, std::string(what) + ": expected rank " + std::to_string(rank) +
                                                   ", got " + std::to_string(t.dims.size()));
  }
}

}  // namespace

std::uint64_t Tensor::element_count() const { return checked_product(dims); }

std::vector<std::uint8_t> encode_tensor(const Tensor& tensor) {
  if (tensor.dims.size() > std::numeric_limits<std::uint16_t>::max()) {
    throw IoError(IoErrorCode::dim_overflow, "tensor rank too large");
  }
  if (tensor.element_count() != tensor.data.size()) {
    throw IoError(IoErrorCode::shape_mismatch, "tensor data does not match its dimensions");
  }
  const std::size_t width = scalar_size(tensor.dtype);
  std::vector<std::uint8_t> out;
  out.reserve(13 + 8 * tensor.dims.size() + tensor.data.size() * 2 * width);
  for (char c : kTensorMagic) out.push_back(static_cast<std::uint8_t>(c));
  put_le<std::uint16_t>(out, kTensorVersion);
  put_le<std::uint16_t>(out, static_cast<std::uint16_t>(tensor.dims.size()));
  for (auto d : tensor.dims) put_le<std::uint64_t>(out, d);
  out.push_back(static_cast<std::uint8_t>(tensor.dtype));
  for (const auto& z : tensor.data) {
    if (tensor.dtype == DType::complex64) {
      for (float f : {static_cast<float>(z.real()), static_cast<float>(z.imag())}) {
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        put_le(out, bits);
      }
    } else {
      for (double f : {z.real(), z.imag()}) {
        std::uint64_t bits;
        std::memcpy(&bits, &f, 8);
        put_le(out, bits);
      }
    }
  }
  return out;
}

Tensor decode_tensor(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8 || !std::equal(std::begin(kTensorMagic), std::end(kTensorMagic), bytes.begin())) {
    throw IoError(IoErrorCode::bad_magic, "not a tensor container");
  }
  if (bytes.size() < 12) throw IoError(IoErrorCode::truncated_payload, "truncated header");
  const auto version = get_le<std::uint16_t>(bytes.data() + 8);
  if (version != kTensorVersion) {
    throw IoError(IoErrorCode::unsupported_version, "unsupported container version " + std::to_string(version));
  }
  const auto rank = get_le<std::uint16_t>(bytes.data() + 10);
  const std::size_t header = 12 + 8 * static_cast<std::size_t>(rank) + 1;
  if (bytes.size() < header) throw IoError(IoErrorCode::truncated_payload, "truncated header");

  Tensor t;
  t.dims.resize(rank);
  for (std::size_t r = 0; r < rank; ++r) t.dims[r] = get_le<std::uint64_t>(bytes.data() + 12 + 8 * r);
  const auto code = bytes[header - 1];
  if (code > 1) throw IoError(IoErrorCode::bad_dtype, "unknown dtype " + std::to_string(code));
  t.dtype = static_cast<DType>(code);

  const std::uint64_t count = checked_product(t.dims);
  const std::size_t width = scalar_size(t.dtype);
  if (count > (std::numeric_limits<std::uint64_t>::max() - header) / (2 * width)) {
    throw IoError(IoErrorCode::dim_overflow, "payload size overflows");
  }
  const std::uint64_t expected = header + count * 2 * width;
  if (bytes.size() < expected) throw IoError(IoErrorCode::truncated_payload, "payload shorter than declared");
  if (bytes.size() > expected) throw IoError(IoErrorCode::trailing_bytes, "bytes after payload");

  t.data.resize(static_cast<std::size_t>(count));
  const std::uint8_t* p = bytes.data() + header;
  for (auto& z : t.data) {
    if (t.dtype == DType::complex64) {
      float re, im;
      const auto a = get_le<std::uint32_t>(p), b = get_le<std::uint32_t>(p + 4);
      std::memcpy(&re, &a, 4);
      std::memcpy(&im, &b, 4);
      z = {re, im};
      p += 8;
    } else {
      double re, im;
      const auto a = get_le<std::uint64_t>(p), b = get_le<std::uint64_t>(p + 8);
      std::memcpy(&re, &a, 8);
      std::memcpy(&im, &b, 8);
      z = {re, im};
      p += 16;
    }
  }
  return t;
}

void write_tensor(const fs::path& path, const Tensor& tensor) {
  const auto bytes = encode_tensor(tensor);
  write_atomic(path, bytes.data(), bytes.size());
}

Tensor read_tensor(const fs::path& path) { return decode_tensor(read_file(path)); }

Tensor stack_to_tensor(const CoilStack& stack, DType dtype) {
  if (stack.empty()) throw IoError(IoErrorCode::shape_mismatch, "empty coil stack");
  const Index nx = stack.front().rows(), ny = stack.front().cols();
  Tensor t;
  t.dtype = dtype;
  t.dims = {stack.size(), static_cast<std::uint64_t>(nx), static_cast<std::uint64_t>(ny)};
  t.data.reserve(stack.size() * static_cast<std::size_t>(nx * ny));
  for (const auto& c : stack) {
    if (c.rows() != nx || c.cols() != ny) throw IoError(IoErrorCode::shape_mismatch, "coil shapes differ");
    for (Index i = 0; i < nx; ++i)
      for (Index j = 0; j < ny; ++j) t.data.push_back(c(i, j));
  }
  return t;
}

CoilStack tensor_to_stack(const Tensor& t) {
  require_rank(t, 3, "coil stack");
  const auto nx = static_cast<Index>(t.dims[1]), ny = static_cast<Index>(t.dims[2]);
  CoilStack stack(static_cast<std::size_t>(t.dims[0]), CMatrix(nx, ny));
  std::size_t p = 0;
  for (auto& c : stack)
    for (Index i = 0; i < nx; ++i)
      for (Index j = 0; j < ny; ++j) c(i, j) = t.data[p++];
  return stack;
}

Tensor matrix_to_tensor(const CMatrix& m, DType dtype) {
  Tensor t = stack_to_tensor({m}, dtype);
  t.dims.erase(t.dims.begin());
  return t;
}

CMatrix tensor_to_matrix(const Tensor& t) {
  require_rank(t, 2, "matrix");
  Tensor wrapped = t;
  wrapped.dims.insert(wrapped.dims.begin(), 1);
  return tensor_to_stack(wrapped).front();
}

namespace {

Index window_tap(Offset d, Threshold th) { return (d.u + th.tx) + (d.v + th.ty) * (2 * th.tx + 1); }

}  // namespace

Tensor grappa_weights_to_tensor(const std::vector<CalibrationWeights>& weights, Threshold threshold, Index coils) {
  const Index taps = (2 * threshold.tx + 1) * (2 * threshold.ty + 1);
  Tensor t;
  t.dims = {weights.size(), static_cast<std::uint64_t>(taps), static_cast<std::uint64_t>(coils),
            static_cast<std::uint64_t>(coils)};
  t.data.assign(static_cast<std::size_t>(t.element_count()), Complex{});
  for (std::size_t k = 0; k < weights.size(); ++k) {
    const auto& w = weights[k];
    if (w.weights.size() == 0) continue;
    for (Index d = 0; d < w.kernel.size(); ++d) {
      const auto off = w.kernel.displacements[static_cast<std::size_t>(d)];
      if (std::abs(off.u) > threshold.tx || std::abs(off.v) > threshold.ty) {
        throw IoError(IoErrorCode::shape_mismatch, "displacement outside the threshold window");
      }
      const Index tap = window_tap(off, threshold);
      for (Index s = 0; s < coils; ++s)
        for (Index c = 0; c < coils; ++c)
          t.data[static_cast<std::size_t>(((static_cast<Index>(k) * taps + tap) * coils + s) * coils + c)] =
              w.weights(d * coils + s, c);
    }
  }
  return t;
}

std::vector<CalibrationWeights> tensor_to_grappa_weights(const Tensor& t, const std::vector<KernelPattern>& kernels,
                                                        Threshold threshold) {
  require_rank(t, 4, "GRAPPA weights");
  const Index taps = (2 * threshold.tx + 1) * (2 * threshold.ty + 1);
  const auto coils = static_cast<Index>(t.dims[2]);
  if (t.dims[0] != kernels.size() || static_cast<Index>(t.dims[1]) != taps || t.dims[3] != t.dims[2]) {
    throw IoError(IoErrorCode::shape_mismatch, "weights do not match the kernel set");
  }
  std::vector<CalibrationWeights> out(kernels.size());
  for (std::size_t k = 0; k < kernels.size(); ++k) {
    out[k].kernel = kernels[k];
    if (!kernels[k].interpolatable()) continue;
    out[k].weights = CMatrix::Zero(kernels[k].size() * coils, coils);
    for (Index d = 0; d < kernels[k].size(); ++d) {
      const Index tap = window_tap(kernels[k].displacements[static_cast<std::size_t>(d)], threshold);
      for (Index s = 0; s < coils; ++s)
        for (Index c = 0; c < coils; ++c)
          out[k].weights(d * coils + s, c) =
              t.data[static_cast<std::size_t>(((static_cast<Index>(k) * taps + tap) * coils + s) * coils + c)];
    }
  }
  return out;
}

Tensor spirit_kernel_to_tensor(const SpiritKernel& kernel) {
  const Index j = kernel.coils(), kw = kernel.width(), kh = kernel.height();
  const int rw = static_cast<int>(kernel.half_width()), rh = static_cast<int>(kernel.half_height());
  Tensor t;
  t.dims = {static_cast<std::uint64_t>(j), static_cast<std::uint64_t>(j), static_cast<std::uint64_t>(kw),
            static_cast<std::uint64_t>(kh)};
  t.data.reserve(static_cast<std::size_t>(j * j * kw * kh));
  for (Index a = 0; a < j; ++a)
    for (Index b = 0; b < j; ++b)
      for (int du = -rw; du <= rw; ++du)
        for (int dv = -rh; dv <= rh; ++dv) t.data.push_back(kernel.weight(a, b, du, dv));
  return t;
}

SpiritKernel tensor_to_spirit_kernel(const Tensor& t) {
  require_rank(t, 4, "SPIRiT kernel");
  if (t.dims[0] != t.dims[1] || t.dims[2] % 2 == 0 || t.dims[3] % 2 == 0) {
    throw IoError(IoErrorCode::shape_mismatch, "SPIRiT kernel must be [J, J, odd, odd]");
  }
  SpiritKernel kernel(static_cast<Index>(t.dims[0]), static_cast<Index>(t.dims[2]), static_cast<Index>(t.dims[3]));
  const int rw = static_cast<int>(kernel.half_width()), rh = static_cast<int>(kernel.half_height());
  std::size_t p = 0;
  for (Index a = 0; a < kernel.coils(); ++a)
    for (Index b = 0; b < kernel.coils(); ++b)
      for (int du = -rw; du <= rw; ++du)
        for (int dv = -rh; dv <= rh; ++dv) kernel.weight(a, b, du, dv) = t.data[p++];
  for (Index a = 0; a < kernel.coils(); ++a) kernel.weight(a, a, 0, 0) = Complex{};
  return kernel;
}

bool write_pgm(const fs::path& path, const RMatrix& image, std::optional<Window> window) {
  if (image.size() == 0) throw std::invalid_argument("write_pgm: empty image");
  if (!image.allFinite()) throw std::invalid_argument("write_pgm: image has non-finite values");
  const Window w = window.value_or(Window{image.minCoeff(), image.maxCoeff()});
  const bool degenerate = !(w.hi != w.lo);
  const Index width = image.rows(), height = image.cols();
  std::string bytes = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  const std::size_t start = bytes.size();
  bytes.resize(start + static_cast<std::size_t>(width * height));
  for (Index y = 0; y < height; ++y) {
    for (Index x = 0; x < width; ++x) {
      std::uint8_t level = 128;
      if (!degenerate) {
        const double s = std::clamp((image(x, y) - w.lo) / (w.hi - w.lo), 0.0, 1.0);
        level = static_cast<std::uint8_t>(std::lround(255.0 * s));
      }
      bytes[start + static_cast<std::size_t>(y * width + x)] = static_cast<char>(level);
    }
  }
  write_atomic(path, bytes.data(), bytes.size());
  return !degenerate;
}

PgmImage read_pgm(const fs::path& path) {
  const auto bytes = read_file(path);
  std::size_t p = 0;
  auto skip_space = [&] {
    while (p < bytes.size()) {
      if (bytes[p] == '#') {
        while (p < bytes.size() && bytes[p] != '\n') ++p;
      } else if (std::isspace(bytes[p])) {
        ++p;
      } else {
        break;
      }
    }
  };
  auto number = [&] {
    skip_space();
    long v = 0;
    bool any = false;
    while (p < bytes.size() && std::isdigit(bytes[p])) {
      v = v * 10 + (bytes[p++] - '0');
      any = true;
      if (v > 1 << 20) throw IoError(IoErrorCode::bad_pgm, "PGM header value too large");
    }
    if (!any) throw IoError(IoErrorCode::bad_pgm, "malformed PGM header");
    return v;
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') throw IoError(IoErrorCode::bad_pgm, "not a binary PGM");
  p = 2;
  PgmImage img;
  img.width = number();
  img.height = number();
  if (number() != 255) throw IoError(IoErrorCode::bad_pgm, "only 8-bit PGM is supported");
  if (p >= bytes.size() || !std::isspace(bytes[p])) throw IoError(IoErrorCode::bad_pgm, "malformed PGM header");
  ++p;
  const auto n = static_cast<std::size_t>(img.width * img.height);
  if (bytes.size() - p != n) throw IoError(IoErrorCode::bad_pgm, "PGM pixel count mismatch");
  img.pixels.assign(bytes.begin() + static_cast<std::ptrdiff_t>(p), bytes.end());
  return img;
}

void write_mask_pgm(const fs::path& path, const SamplingMask& mask) {
  write_pgm(path, mask.acquired().cast<double>().matrix(), Window{0.0, 1.0});
}

std::string format_number(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%#.6g", value);
  return buf;
}

std::string format_report_row(const ReportRow& row) {
  auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string(); };
  std::ostringstream s;
  s << row.dataset << ',' << row.kernel << ',' << format_number(row.err_vertical) << ','
    << format_number(row.err_horizontal) << ',' << row.label_v << ',' << row.label_h << ',' << opt(row.nrmse_v) << ','
    << opt(row.nrmse_h);
  return s.str();
}

void append_report(const fs::path& path, const ReportRow& row) {
  std::error_code ec;
  const bool fresh = !fs::exists(path, ec) || fs::file_size(path, ec) == 0;
  std::string text = fresh ? std::string(kReportHeader) + "\n" : std::string();
  text += format_report_row(row) + "\n";
  std::FILE* f = std::fopen(path.c_str(), "ab");
  if (!f) throw IoError(IoErrorCode::open_failed, "cannot open " + path.string());
  const bool ok = std::fwrite(text.data(), 1, text.size(), f) == text.size();
  if (std::fclose(f) != 0 || !ok) throw IoError(IoErrorCode::write_failed, "append failed for " + path.string());
}

void write_objective_csv(const fs::path& path, const std::vector<double>& trace) {
  std::string text = "iteration,objective\n";
  char buf[64];
  for (std::size_t i = 0; i < trace.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g\n", i, trace[i]);
    text += buf;
  }
  write_atomic(path, text.data(), text.size());
}

}  // namespace linpred
