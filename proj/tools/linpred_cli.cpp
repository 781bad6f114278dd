#include "linpred/calibration.hpp"
#include "linpred/fourier.hpp"
#include "linpred/io.hpp"
#include "linpred/kspace.hpp"
#include "linpred/metric.hpp"
#include "linpred/reconstruction.hpp"
#include "linpred/sampling.hpp"
#include "linpred/simulation.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace linpred;

namespace {

enum ExitCode { kOk = 0, kUsage = 2, kData = 3, kNumerical = 4 };

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void warn(const std::string& msg) { std::cerr << "warning: " << msg << "\n"; }

void require_odd_kernel(int k) {
  if (k < 3 || k % 2 == 0) throw UsageError("--kernel must be odd and >= 3, got " + std::to_string(k));
}

void require_factor(int r, const char* flag) {
  if (r < 1) throw UsageError(std::string(flag) + " must be >= 1");
}

// Outputs may not alias inputs or each other.
void require_distinct(const std::vector<std::string>& inputs, const std::vector<std::string>& outputs) {
  std::vector<fs::path> seen;
  auto norm = [](const std::string& p) { return fs::weakly_canonical(fs::absolute(p)); };
  for (const auto& p : inputs)
    if (!p.empty()) seen.push_back(norm(p));
  for (const auto& p : outputs) {
    if (p.empty()) continue;
    const auto n = norm(p);
    for (const auto& s : seen)
      if (s == n) throw UsageError("path used more than once: " + p);
    seen.push_back(n);
  }
}

void require_finite(const CoilStack& stack, const char* what) {
  for (const auto& c : stack)
    if (!c.allFinite()) throw NumericalError(std::string(what) + " contains non-finite values");
}

CoilStack load_stack(const std::string& path) {
  auto stack = tensor_to_stack(read_tensor(path));
  if (stack.empty()) throw DataError(path + ": no coils");
  return stack;
}

Boundary parse_boundary(const std::string& s) { return s == "zero" ? Boundary::zero : Boundary::periodic; }

void print_line_conditions(const CoilSensitivities& sens) {
  const double h = line_condition_number(sens, LineOrientation::horizontal, sens.ny() / 2);
  const double v = line_condition_number(sens, LineOrientation::vertical, sens.nx() / 2);
  std::printf("condition horizontal %.6g\ncondition vertical %.6g\n", h, v);
}

// --- simulate ---------------------------------------------------------------

struct SimulateArgs {
  std::string coils = "birdcage";
  std::string plane = "axial";
  int elements = 8;
  int grid = 128;
  std::string modes;
  std::uint64_t seed = 0;
  std::string out;
  std::string phantom_out;
  std::string dtype = "c128";
};

int run_simulate(const SimulateArgs& a, const CLI::App& cmd) {
  if (a.grid < 16) throw UsageError("--grid must be >= 16");
  require_distinct({}, {a.out, a.phantom_out});
  const DType dtype = a.dtype == "c64" ? DType::complex64 : DType::complex128;

  CoilSensitivities sens = [&] {
    if (a.coils == "birdcage") {
      if (cmd.count("--modes")) throw UsageError("--modes applies to designed coils only");
      if (a.elements < 1) throw UsageError("--elements must be >= 1");
      if (a.elements == 1) warn("a single element cannot support parallel imaging (J = 1)");
      BirdcageSpec spec;
      spec.elements = a.elements;
      spec.plane = a.plane == "sagittal" ? Plane::sagittal : Plane::axial;
      spec.nx = spec.ny = a.grid;
      return birdcage_sensitivities(spec);
    }
    if (cmd.count("--plane") || cmd.count("--elements")) {
      throw UsageError("--plane and --elements apply to birdcage coils only");
    }
    int side = 3;
    const std::string m = a.modes.empty() ? "3x3" : a.modes;
    int w = 0, h = 0;
    char x = 0;
    std::istringstream in(m);
    if (!(in >> w >> x >> h) || x != 'x' || w != h || w < 1 || w % 2 == 0 || !in.eof()) {
      throw UsageError("--modes must be NxN with N odd, got " + m);
    }
    side = w;
    return designed_sensitivities(DesignedCoilSpec::square_grid(side / 2, a.seed), a.grid, a.grid);
  }();

  const auto rho = shepp_logan(a.grid, a.grid);
  std::printf("coils %ld grid %dx%d\n", static_cast<long>(sens.coil_count()), a.grid, a.grid);
  print_line_conditions(sens);

  if (a.coils == "designed") {
    const auto full = forward_signal(rho, sens);
    const auto data = KSpaceData::retrospective(full.samples(), uniform_mask(a.grid, a.grid, 2, 1, AcrSize{31, 31}));
    GrappaOptions opt;
    opt.lambda = 0.0;
    const auto rec = grappa(data, opt);
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < full.samples().size(); ++j) {
      num += (rec.kspace_full[j] - full.samples()[j]).squaredNorm();
      den += full.samples()[j].squaredNorm();
    }
    const double err = std::sqrt(num / den);
    std::printf("exactness self-test %s (relative k-space error %.3g)\n", err < 1e-8 ? "passed" : "FAILED", err);
    if (!(err < 1e-8)) throw NumericalError("designed coils are not exactly predictable");
  }

  if (!a.out.empty()) write_tensor(a.out, stack_to_tensor(sens.maps(), dtype));
  if (!a.phantom_out.empty()) write_tensor(a.phantom_out, matrix_to_tensor(rho.data(), dtype));
  return kOk;
}

// --- forward ----------------------------------------------------------------

struct ForwardArgs {
  std::string sens;
  std::string phantom;
  std::string out;
  double noise = 0.0;
  std::uint64_t seed = 0;
};

int run_forward(const ForwardArgs& a) {
  require_distinct({a.sens, a.phantom}, {a.out});
  if (a.noise < 0.0) throw UsageError("--noise must be >= 0");
  const CoilSensitivities sens(load_stack(a.sens));
  const ComplexImage rho(tensor_to_matrix(read_tensor(a.phantom)));
  if (rho.nx() != sens.nx() || rho.ny() != sens.ny()) throw DataError("phantom and sensitivity shapes differ");
  auto k = forward_signal(rho, sens);
  if (a.noise > 0.0) k = add_noise(k, a.noise, a.seed);
  require_finite(k.samples(), "k-space");
  write_tensor(a.out, stack_to_tensor(k.samples()));
  return kOk;
}

// --- mask -------------------------------------------------------------------

struct MaskArgs {
  std::string like;
  int nx = 0;
  int ny = 0;
  int rx = 1;
  int ry = 1;
  int acr = 31;
  std::string out;
};

int run_mask(const MaskArgs& a) {
  require_factor(a.rx, "--rx");
  require_factor(a.ry, "--ry");
  require_distinct({a.like}, {a.out});
  Index nx = a.nx, ny = a.ny;
  if (!a.like.empty()) {
    const auto t = read_tensor(a.like);
    if (t.dims.size() != 3) throw DataError(a.like + ": expected a [J, nx, ny] container");
    nx = static_cast<Index>(t.dims[1]);
    ny = static_cast<Index>(t.dims[2]);
  }
  if (nx < 1 || ny < 1) throw UsageError("grid size required (--nx/--ny or --like)");
  std::optional<AcrSize> acr;
  if (a.acr > 0) {
    if (a.acr > nx || a.acr > ny) throw UsageError("--acr larger than the grid");
    acr = AcrSize{a.acr, a.acr};
  }
  const auto mask = uniform_mask(nx, ny, a.rx, a.ry, acr);
  std::printf("acquired %ld of %ld\n", static_cast<long>(mask.count()), static_cast<long>(nx * ny));
  write_mask_pgm(a.out, mask);
  return kOk;
}

// --- calibrate / recon ------------------------------------------------------

struct ReconArgs {
  std::string method = "grappa";
  std::string in;
  std::string out;
  std::string png;
  std::string reference;
  std::string weights;
  std::string dump_objective;
  std::string boundary = "periodic";
  int rx = 1;
  int ry = 1;
  int acr = 31;
  int kernel = 3;
  std::optional<double> lambda;
  double epsilon = 0.0;
  int max_iter = 0;
};

KSpaceData masked_input(const CoilStack& full, const ReconArgs& a) {
  const Index nx = full.front().rows(), ny = full.front().cols();
  if (a.acr > nx || a.acr > ny) throw DataError("ACR larger than the k-space grid");
  if (a.acr < a.kernel) throw DataError("ACR too small for the kernel");
  // AUTO-SMASH calibrates on whole k_y lines.
  const AcrSize acr = a.method == "autosmash" ? AcrSize{nx, a.acr} : AcrSize{a.acr, a.acr};
  return KSpaceData::retrospective(full, uniform_mask(nx, ny, a.rx, a.ry, acr));
}

void validate_recon_flags(const ReconArgs& a) {
  require_odd_kernel(a.kernel);
  require_factor(a.rx, "--rx");
  require_factor(a.ry, "--ry");
  if (a.acr < 1) throw UsageError("--acr must be >= 1");
  if (a.lambda && *a.lambda < 0.0) throw UsageError("--lambda must be >= 0");
  if (a.epsilon < 0.0) throw UsageError("--epsilon must be >= 0");
  if (a.method == "autosmash" && a.rx != 1) throw UsageError("autosmash undersamples k_y only (--rx 1)");
  if (!a.dump_objective.empty() && a.method != "spirit") throw UsageError("--dump-objective requires --method spirit");
}

int run_calibrate(const ReconArgs& a) {
  validate_recon_flags(a);
  if (a.method == "autosmash") throw UsageError("calibrate supports grappa and spirit");
  require_distinct({a.in}, {a.out});
  const auto full = load_stack(a.in);
  const auto data = masked_input(full, a);
  const auto acr = acr_extract(data.samples(), data.mask(), AcrSize{a.acr, a.acr});
  if (a.method == "spirit") {
    const auto kernel = spirit_calibrate(acr, a.kernel, a.kernel, a.lambda);
    write_tensor(a.out, spirit_kernel_to_tensor(kernel));
    return kOk;
  }
  const Threshold th{a.kernel / 2, a.kernel / 2};
  const auto kernels = enumerate_kernels(data.mask(), th, parse_boundary(a.boundary));
  const auto weights = calibrate_grappa(acr, kernels, a.lambda);
  Index missing = 0;
  for (const auto& k : kernels)
    if (!k.interpolatable()) missing += static_cast<Index>(k.targets.size());
  std::printf("kernel classes %zu\n", kernels.size());
  if (missing > 0) warn(std::to_string(missing) + " locations have no collected neighbours");
  write_tensor(a.out, grappa_weights_to_tensor(weights, th, data.coil_count()));
  return kOk;
}

int run_recon(const ReconArgs& a) {
  validate_recon_flags(a);
  require_distinct({a.in, a.reference, a.weights}, {a.out, a.png, a.dump_objective});
  const auto full = load_stack(a.in);
  const auto data = masked_input(full, a);
  const auto acr_size = AcrSize{a.acr, a.acr};
  std::optional<CoilStack> reference;
  if (!a.reference.empty()) {
    reference = load_stack(a.reference);
    require_shape(*reference, data.n_kx(), data.n_ky(), "reference");
    if (static_cast<Index>(reference->size()) != data.coil_count()) throw DataError("reference coil count differs");
  }

  CoilStack out_kspace;
  RMatrix image;
  std::optional<double> error;
  std::vector<double> trace;

  if (a.method == "autosmash") {
    const auto w = autosmash_calibrate(data, a.ry);
    const CMatrix composite = autosmash_reconstruct(data, w);
    out_kspace = {composite};
    image = idft2_matrix(composite).cwiseAbs();
    if (reference) {
      CMatrix ref = CMatrix::Zero(data.n_kx(), data.n_ky());
      for (Index j = 0; j < data.coil_count(); ++j) ref += w.n0(j) * (*reference)[static_cast<std::size_t>(j)];
      error = nrmse(image, idft2_matrix(ref).cwiseAbs());
    }
  } else {
    ReconResult r;
    const Boundary boundary = parse_boundary(a.boundary);
    if (a.method == "grappa") {
      const Threshold th{a.kernel / 2, a.kernel / 2};
      if (!a.weights.empty()) {
        const auto kernels = enumerate_kernels(data.mask(), th, boundary);
        r = grappa_reconstruct(data, tensor_to_grappa_weights(read_tensor(a.weights), kernels, th), boundary);
      } else {
        GrappaOptions opt;
        opt.acr = acr_size;
        opt.threshold = th;
        opt.lambda = a.lambda;
        opt.boundary = boundary;
        r = grappa(data, opt);
      }
      if (r.uninterpolatable > 0) {
        warn(std::to_string(r.uninterpolatable) + " uninterpolatable locations left at zero");
      }
    } else {
      SpiritOptions opt;
      opt.epsilon = a.epsilon;
      opt.max_iter = a.max_iter;
      opt.boundary = boundary;
      if (!a.weights.empty()) {
        const auto kernel = tensor_to_spirit_kernel(read_tensor(a.weights));
        if (kernel.coils() != data.coil_count()) throw DataError("kernel coil count differs from data");
        r = spirit_reconstruct(data, kernel, opt);
      } else {
        SpiritSetup setup;
        setup.acr = acr_size;
        setup.kernel_width = setup.kernel_height = a.kernel;
        setup.lambda = a.lambda;
        r = spirit(data, setup, opt);
      }
      std::printf("iterations %d%s\n", r.iterations, r.converged ? "" : " (not converged)");
      if (!r.warning.empty()) warn(r.warning);
      trace = r.objective_trace;
    }
    out_kspace = std::move(r.kspace_full);
    image = std::move(r.image);
    if (reference) error = nrmse(image, rsos_combine(coil_images(*reference)));
  }

  require_finite(out_kspace, "reconstruction");
  if (error) std::printf("nrmse %.6g\n", *error);
  if (!a.out.empty()) write_tensor(a.out, stack_to_tensor(out_kspace));
  if (!a.png.empty() && !write_pgm(a.png, image)) warn("constant image written as mid-gray");
  if (!a.dump_objective.empty()) write_objective_csv(a.dump_objective, trace);
  return kOk;
}

// --- metric / report --------------------------------------------------------

struct MetricArgs {
  std::string in;
  std::string report;
  std::string dataset;
  int acr = 31;
  int kernel = 3;
  double threshold = kDefaultErrorThreshold;
  int quality = 0;
};

int run_metric(const MetricArgs& a) {
  require_odd_kernel(a.kernel);
  if (!(a.threshold > 0.0)) throw UsageError("--threshold must be positive");
  if (a.acr < 1) throw UsageError("--acr must be >= 1");
  if (a.quality == 1) throw UsageError("--quality takes a reduction factor >= 2");
  require_distinct({a.in}, {a.report});
  const auto full = load_stack(a.in);
  const Index nx = full.front().rows(), ny = full.front().cols();
  if (a.acr > nx || a.acr > ny) throw DataError("ACR larger than the k-space grid");
  if (a.acr < a.kernel) throw DataError("ACR too small for the kernel");

  ReportRow row;
  row.dataset = a.dataset.empty() ? fs::path(a.in).stem().string() : a.dataset;
  row.kernel = std::to_string(a.kernel) + "x" + std::to_string(a.kernel);
  AccuracyReport rep;
  if (a.quality >= 2) {
    QualityCheckOptions opt;
    opt.kernel_width = opt.kernel_height = a.kernel;
    opt.reduction = a.quality;
    opt.acr = AcrSize{a.acr, a.acr};
    opt.threshold = a.threshold;
    const auto rec = metric_predicts_quality(full, opt);
    rep = rec.report;
    row.nrmse_v = rec.nrmse_vertical;
    row.nrmse_h = rec.nrmse_horizontal;
    std::printf("nrmse vertical %.6g\nnrmse horizontal %.6g\nconsistent %s\n", rec.nrmse_vertical,
                rec.nrmse_horizontal, rec.consistent ? "yes" : "no");
  } else {
    rep = directional_metric(acr_extract(full, AcrSize{a.acr, a.acr}), a.kernel, a.kernel, a.threshold);
  }
  if (!std::isfinite(rep.err_vertical) || !std::isfinite(rep.err_horizontal)) {
    throw NumericalError("metric is not finite");
  }
  row.err_vertical = rep.err_vertical;
  row.err_horizontal = rep.err_horizontal;
  row.label_v = to_string(rep.label_vertical);
  row.label_h = to_string(rep.label_horizontal);
  std::printf("kernel %s\nerror vertical %s (%s)\nerror horizontal %s (%s)\n", row.kernel.c_str(),
              format_number(rep.err_vertical).c_str(), row.label_v.c_str(), format_number(rep.err_horizontal).c_str(),
              row.label_h.c_str());
  if (!a.report.empty()) append_report(a.report, row);
  return kOk;
}

int run_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError(IoErrorCode::open_failed, "cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != kReportHeader) throw DataError(path + ": not a metric report");
  std::printf("%-20s %-7s %12s %12s %-7s %-7s\n", "dataset", "kernel", "vertical", "horizontal", "label_v", "label_h");
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream s(line);
    for (std::string cell; std::getline(s, cell, ',');) f.push_back(cell);
    if (f.size() < 6) throw DataError(path + ": malformed row " + std::to_string(rows + 1));
    std::printf("%-20s %-7s %12s %12s %-7s %-7s\n", f[0].c_str(), f[1].c_str(), f[2].c_str(), f[3].c_str(),
                f[4].c_str(), f[5].c_str());
    ++rows;
  }
  std::printf("%zu rows\n", rows);
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linear-predictability tools for parallel MRI"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Coil sensitivities and phantom");
  simulate->add_option("--coils", sim.coils)->check(CLI::IsMember({"birdcage", "designed"}));
  simulate->add_option("--plane", sim.plane)->check(CLI::IsMember({"axial", "sagittal"}));
  simulate->add_option("--elements", sim.elements);
  simulate->add_option("--grid", sim.grid);
  simulate->add_option("--modes", sim.modes, "designed mode grid, e.g. 3x3");
  simulate->add_option("--seed", sim.seed, "designed amplitude seed (0 = unit amplitudes)");
  simulate->add_option("--dtype", sim.dtype)->check(CLI::IsMember({"c64", "c128"}));
  simulate->add_option("--out", sim.out);
  simulate->add_option("--phantom-out", sim.phantom_out);

  ForwardArgs fwd;
  auto* forward = app.add_subcommand("forward", "Multi-coil k-space from sensitivities and phantom");
  forward->add_option("--sens", fwd.sens)->required();
  forward->add_option("--phantom", fwd.phantom)->required();
  forward->add_option("--out", fwd.out)->required();
  forward->add_option("--noise", fwd.noise, "complex noise standard deviation");
  forward->add_option("--seed", fwd.seed);

  MaskArgs msk;
  auto* mask = app.add_subcommand("mask", "Uniform undersampling mask as PGM");
  mask->add_option("--like", msk.like, "take the grid from a k-space container");
  mask->add_option("--nx", msk.nx);
  mask->add_option("--ny", msk.ny);
  mask->add_option("--rx,--mask-rx", msk.rx);
  mask->add_option("--ry,--mask-ry", msk.ry);
  mask->add_option("--acr", msk.acr, "ACR side, 0 for none");
  mask->add_option("--out", msk.out)->required();

  ReconArgs cal;
  auto* calibrate = app.add_subcommand("calibrate", "Fit GRAPPA weights or a SPIRiT kernel");
  ReconArgs rec;
  auto* recon = app.add_subcommand("recon", "Retrospectively undersample and reconstruct");
  for (auto [cmd, args] : {std::pair{calibrate, &cal}, std::pair{recon, &rec}}) {
    cmd->add_option("--method", args->method)->check(CLI::IsMember({"grappa", "spirit", "autosmash"}));
    cmd->add_option("--in", args->in)->required();
    cmd->add_option("--rx,--mask-rx", args->rx);
    cmd->add_option("--ry,--mask-ry", args->ry);
    cmd->add_option("--acr", args->acr);
    cmd->add_option("--kernel", args->kernel);
    cmd->add_option("--lambda", args->lambda);
    cmd->add_option("--boundary", args->boundary)->check(CLI::IsMember({"periodic", "zero"}));
  }
  calibrate->add_option("--out", cal.out)->required();
  recon->add_option("--out", rec.out);
  recon->add_option("--png", rec.png);
  recon->add_option("--reference", rec.reference, "fully sampled k-space for NRMSE");
  recon->add_option("--weights", rec.weights, "weights from calibrate");
  recon->add_option("--epsilon", rec.epsilon);
  recon->add_option("--max-iter", rec.max_iter);
  recon->add_option("--dump-objective", rec.dump_objective, "SPIRiT objective trace CSV");

  MetricArgs met;
  auto* metric = app.add_subcommand("metric", "Directional predictability errors");
  metric->add_option("--in", met.in)->required();
  metric->add_option("--acr", met.acr);
  metric->add_option("--kernel", met.kernel);
  metric->add_option("--threshold", met.threshold);
  metric->add_option("--report", met.report);
  metric->add_option("--dataset", met.dataset);
  metric->add_option("--quality", met.quality, "also reconstruct at this reduction factor");

  std::string report_path;
  auto* report = app.add_subcommand("report", "Print a metric report");
  report->add_option("--in", report_path)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*simulate) return run_simulate(sim, *simulate);
    if (*forward) return run_forward(fwd);
    if (*mask) return run_mask(msk);
    if (*calibrate) return run_calibrate(cal);
    if (*recon) {
      if (rec.in.empty()) throw UsageError("--in required");
      return run_recon(rec);
    }
    if (*metric) return run_metric(met);
    if (*report) return run_report(report_path);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kData;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumerical;
  }
  return kUsage;
}
