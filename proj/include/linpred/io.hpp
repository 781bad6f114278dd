#pragma once

#include "linpred/calibration.hpp"
#include "linpred/sampling.hpp"
#include "linpred/types.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace linpred {

enum class IoErrorCode {
  open_failed,
  write_failed,
  bad_magic,
  unsupported_version,
  bad_dtype,
  truncated_payload,
  dim_overflow,
  trailing_bytes,
  shape_mismatch,
  bad_pgm,
};

const char* to_string(IoErrorCode code);

class IoError : public std::runtime_error {
 public:
  IoError(IoErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  IoErrorCode code() const { return code_; }

 private:
  IoErrorCode code_;
};

enum class DType : std::uint8_t { complex64 = 0, complex128 = 1 };

inline constexpr char kTensorMagic[8] = {'P', 'I', 'L', 'P', 'T', 'N', 'S', 'R'};
inline constexpr std::uint16_t kTensorVersion = 1;

/// Row-major complex tensor. Values are held in double precision; `dtype`
/// selects the on-disk width.
struct Tensor {
  std::vector<std::uint64_t> dims;
  std::vector<Complex> data;
  DType dtype = DType::complex128;

  std::uint64_t element_count() const;
};

std::vector<std::uint8_t> encode_tensor(const Tensor& tensor);
Tensor decode_tensor(const std::vector<std::uint8_t>& bytes);

/// Writes through a temporary file and renames, so readers never see a
/// partial container.
void write_tensor(const std::filesystem::path& path, const Tensor& tensor);
Tensor read_tensor(const std::filesystem::path& path);

/// [J, n_kx, n_ky] with the last index fastest.
Tensor stack_to_tensor(const CoilStack& stack, DType dtype = DType::complex128);
CoilStack tensor_to_stack(const Tensor& tensor);

/// [n_x, n_y].
Tensor matrix_to_tensor(const CMatrix& m, DType dtype = DType::complex128);
CMatrix tensor_to_matrix(const Tensor& tensor);

/// Dense GRAPPA weight set [K, W, J, J]: class k, tap w of the
/// (2 t_x + 1) x (2 t_y + 1) window (u fastest), source coil, target coil.
/// Absent taps and uninterpolatable classes are zero.
Tensor grappa_weights_to_tensor(const std::vector<CalibrationWeights>& weights, Threshold threshold, Index coils);

/// Reattaches weights to kernels enumerated from the same mask and threshold.
std::vector<CalibrationWeights> tensor_to_grappa_weights(const Tensor& tensor, const std::vector<KernelPattern>& kernels,
                                                        Threshold threshold);

/// [J target, J source, k_w, k_h].
Tensor spirit_kernel_to_tensor(const SpiritKernel& kernel);
SpiritKernel tensor_to_spirit_kernel(const Tensor& tensor);

struct Window {
  double lo = 0.0;
  double hi = 1.0;
};

struct PgmImage {
  Index width = 0;   ///< columns = x
  Index height = 0;  ///< rows = y
  std::vector<std::uint8_t> pixels;  ///< row-major

  std::uint8_t at(Index x, Index y) const { return pixels[static_cast<std::size_t>(y * width + x)]; }
};

/// Returns false when the window collapsed and a uniform mid-gray image was
/// written instead. Without a window the image range is used.
bool write_pgm(const std::filesystem::path& path, const RMatrix& image, std::optional<Window> window = std::nullopt);
PgmImage read_pgm(const std::filesystem::path& path);

/// Acquired samples white, skipped samples black.
void write_mask_pgm(const std::filesystem::path& path, const SamplingMask& mask);

struct ReportRow {
  std::string dataset;
  std::string kernel;
  double err_vertical = 0.0;
  double err_horizontal = 0.0;
  std::string label_v;
  std::string label_h;
  std::optional<double> nrmse_v;
  std::optional<double> nrmse_h;
};

inline constexpr const char* kReportHeader = "dataset,kernel,err_vertical,err_horizontal,label_v,label_h,nrmse_v,nrmse_h";

std::string format_number(double value);
std::string format_report_row(const ReportRow& row);

/// Adds the header when the file is missing or empty, then the row, in one
/// write.
void append_report(const std::filesystem::path& path, const ReportRow& row);

/// Objective trace as "iteration,objective" lines.
void write_objective_csv(const std::filesystem::path& path, const std::vector<double>& trace);

}  // namespace linpred
